#pragma once
// Reporting-channel bit budgets and quantization of the local statistic.

#include <optional>
#include <stdexcept>
#include <string>

#include "qfusion/rng.hpp"

namespace qfusion {

enum class QuantMode {
  additive_noise,      ///< T + v, v uniform with the step's variance
  explicit_quantizer,  ///< nearest codeword of a mid-rise uniform codebook
};

std::string to_string(QuantMode mode);
QuantMode parse_quant_mode(const std::string& name);

/// Raised when a quantity that only exists for transmitting sensors is requested
/// for a sensor with a zero-bit budget.
class CensoredSensor : public std::logic_error {
 public:
  CensoredSensor() : std::logic_error("sensor is censored (zero-bit budget)") {}
};

struct QuantizerSpec {
  double half_range = 0.5;  ///< B
  int bits = 0;             ///< L; 0 means censored
  double center = 0.0;      ///< codebook center (explicit mode)
  QuantMode mode = QuantMode::additive_noise;

  [[nodiscard]] bool censored() const noexcept { return bits <= 0; }
  /// Step 2B / 2^L.
  [[nodiscard]] double step() const;
};

/// Largest integer L with L <= (1/2) log2(1 + p h^2 / zeta).
/// Capacities within 1e-9 bit below an integer are counted as reaching it, so
/// power_for_bits(L) always buys L bits despite rounding.
int bits_for_power(double tx_power, double channel_gain, double comm_noise_var);

/// Smallest power whose capacity reaches `bits`: (4^L - 1) zeta / h^2.
/// Infinite when the gain is zero and bits > 0.
double power_for_bits(int bits, double channel_gain, double comm_noise_var);

/// B^2 / (3 * 2^(2L)). Throws CensoredSensor when bits == 0.
double quant_noise_variance(const QuantizerSpec& spec);

/// Quantized statistic, or nullopt for a censored sensor. Additive mode draws
/// one uniform from `rng`; explicit mode leaves `rng` untouched.
std::optional<double> quantize(double statistic, const QuantizerSpec& spec, RngStream& rng);

}  // namespace qfusion

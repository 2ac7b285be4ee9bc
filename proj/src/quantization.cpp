#include "qfusion/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qfusion {

namespace {
constexpr int kMaxBits = 60;
constexpr double kCapacitySlack = 1e-9;
}  // namespace

std::string to_string(QuantMode mode) {
  return mode == QuantMode::additive_noise ? "additive" : "explicit";
}

QuantMode parse_quant_mode(const std::string& name) {
  if (name == "additive" || name == "additive-noise") return QuantMode::additive_noise;
  if (name == "explicit" || name == "explicit-quantizer") return QuantMode::explicit_quantizer;
  throw std::invalid_argument("unknown quantizer mode '" + name + "'");
}

double QuantizerSpec::step() const {
  if (censored()) throw CensoredSensor();
  return std::ldexp(2.0 * half_range, -std::min(bits, kMaxBits));
}

int bits_for_power(double tx_power, double channel_gain, double comm_noise_var) {
  if (!(comm_noise_var > 0.0)) throw std::invalid_argument("bits_for_power: comm_noise_var must be positive");
  if (tx_power < 0.0 || channel_gain < 0.0) throw std::invalid_argument("bits_for_power: negative power or gain");
  const double snr = tx_power * channel_gain * channel_gain / comm_noise_var;
  const double capacity = 0.5 * std::log2(1.0 + snr);
  if (!std::isfinite(capacity)) return kMaxBits;
  return static_cast<int>(std::min<double>(std::floor(capacity + kCapacitySlack), kMaxBits));
}

double power_for_bits(int bits, double channel_gain, double comm_noise_var) {
  if (bits <= 0) return 0.0;
  const double g = channel_gain * channel_gain / comm_noise_var;
  if (g <= 0.0) return std::numeric_limits<double>::infinity();
  return (std::ldexp(1.0, 2 * std::min(bits, kMaxBits)) - 1.0) / g;
}

double quant_noise_variance(const QuantizerSpec& spec) {
  if (spec.censored()) throw CensoredSensor();
  const int l = std::min(spec.bits, kMaxBits);
  return spec.half_range * spec.half_range / (3.0 * std::ldexp(1.0, 2 * l));
}

std::optional<double> quantize(double statistic, const QuantizerSpec& spec, RngStream& rng) {
  if (spec.censored()) return std::nullopt;
  const double delta = spec.step();
  if (spec.mode == QuantMode::additive_noise) {
    return statistic + (rng.uniform01() - 0.5) * delta;
  }
  const double levels = std::ldexp(1.0, std::min(spec.bits, kMaxBits));
  const double low = spec.center - spec.half_range;
  const double index = std::clamp(std::floor((statistic - low) / delta), 0.0, levels - 1.0);
  return low + (index + 0.5) * delta;
}

}  // namespace qfusion

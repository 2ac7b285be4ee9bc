#pragma once
// Network scenario, measurement generation and the per-sensor energy statistic.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qfusion/quantization.hpp"
#include "qfusion/rng.hpp"

namespace qfusion {

enum class Hypothesis { h0, h1 };

std::string to_string(Hypothesis h);

/// One sensor's local parameters.
struct SensorSite {
  double noise_var = 1.0;       ///< measurement noise variance sigma_i^2
  double signal_energy = 0.0;   ///< sum over the window of s_i(n)^2
  double channel_gain = 1.0;    ///< flat-fading amplitude h_i
  double comm_noise_var = 0.1;  ///< reporting-channel noise variance zeta_i
  double tx_power = 0.0;        ///< p_i
  int bits = 0;                 ///< L_i; 0 means censored

  [[nodiscard]] bool censored() const noexcept { return bits <= 0; }
  /// h_i^2 / zeta_i, the reporting channel's quality.
  [[nodiscard]] double channel_quality() const noexcept {
    return channel_gain * channel_gain / comm_noise_var;
  }
};

/// signal_energy / (N * noise_var).
double site_snr(const SensorSite& site, int n_samples);

/// The whole network. Immutable once built; share freely across threads.
struct Scenario {
  std::vector<SensorSite> sites;
  int n_samples = 10;                 ///< N
  double amplitude = 0.1;             ///< A, constant signature level
  double quant_half_range = 0.5;      ///< B
  QuantMode quant_mode = QuantMode::additive_noise;
  std::optional<double> quant_center;  ///< overrides the per-sensor N*sigma_i^2 center
  std::uint64_t rng_seed = 1;

  [[nodiscard]] std::size_t size() const noexcept { return sites.size(); }
  [[nodiscard]] double snr(std::size_t i) const { return site_snr(sites.at(i), n_samples); }
  /// 10 log10 of the mean per-sensor SNR; -inf when no sensor sees the signal.
  [[nodiscard]] double avg_snr_db() const;

  /// Quantizer of sensor i (bits from the site, center N*sigma_i^2 unless overridden).
  [[nodiscard]] QuantizerSpec quantizer(std::size_t i) const;
  /// Quantization-noise variance of sensor i, or nullopt when it is censored.
  [[nodiscard]] std::optional<double> quant_variance(std::size_t i) const;

  /// Copy with new transmit powers; bits follow from channel capacity.
  [[nodiscard]] Scenario with_powers(std::span<const double> powers) const;
  /// Copy with explicit bit budgets (powers untouched).
  [[nodiscard]] Scenario with_bits(std::span<const int> bits) const;
};

/// How channel gains are produced.
struct GainModel {
  enum class Kind { rayleigh, constant, explicit_list };
  Kind kind = Kind::rayleigh;
  double value = 1.0;  ///< constant gain, or E[h^2] for Rayleigh

  [[nodiscard]] std::string to_string() const;
  static GainModel parse(const std::string& text);
};

/// Everything needed to build a Scenario reproducibly.
struct ScenarioConfig {
  int m = 10;
  int n = 10;
  double amplitude = 0.1;
  double target_avg_snr_db = -8.5;
  std::pair<double, double> noise_var_range{0.2, 1.0};
  GainModel gain_model{};
  double comm_noise_var = 0.1;
  std::uint64_t seed = 1;
  double quant_half_range = 0.5;
  double tx_power = 2.0;               ///< uniform per-sensor power
  std::optional<int> bits;             ///< uniform bit budget overriding capacity
  QuantMode quant_mode = QuantMode::additive_noise;
  std::optional<double> quant_center;
  std::vector<double> noise_var;       ///< explicit per-site variances (replace the uniform draw)
  std::vector<double> channel_gain;    ///< explicit per-site gains (with gain_model = explicit)
};

/// Draws sigma_i^2 uniformly on the range (or takes the explicit list), then
/// rescales all of them by one factor so the average SNR hits the target.
/// With amplitude 0 no rescaling happens and the target is ignored.
Scenario generate_scenario(const ScenarioConfig& config);

Scenario generate_scenario(int m, int n, double amplitude, double target_avg_snr_db,
                           std::pair<double, double> noise_var_range, const GainModel& gain_model,
                           double comm_noise_var, std::uint64_t seed);

/// N draws of x_i(n): zero-mean Gaussian noise of variance sigma_i^2, plus the
/// constant signature level sqrt(E_s / N) under H1.
std::vector<double> sample_measurements(const Scenario& scenario, std::size_t site_index,
                                        Hypothesis hypothesis, RngStream& rng);

/// Same, writing into `out` (size N) and using `scratch` (size N) for the raw normals.
void sample_measurements_into(const Scenario& scenario, std::size_t site_index, Hypothesis hypothesis,
                              RngStream& rng, std::span<double> scratch, std::span<double> out);

/// T = sum |x(n)|^2. Throws std::invalid_argument on an empty window.
double energy_statistic(std::span<const double> samples);

}  // namespace qfusion

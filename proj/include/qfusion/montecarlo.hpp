#pragma once
// End-to-end trial simulation: sample -> energy -> quantize -> fuse -> threshold.
//
// Trial t of sensor i under hypothesis h draws its measurement noise from the
// stream keyed (seed, measurement, h, t, i) and its quantization noise from
// (seed, quantization, h, t, i). Trials are split across workers by index
// and written back by index, so results never depend on the worker count.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qfusion/analytics.hpp"
#include "qfusion/fusion.hpp"
#include "qfusion/scenario.hpp"

namespace qfusion {

struct TrialBatch {
  const Scenario* scenario = nullptr;
  const FusionRule* rule = nullptr;
  std::size_t n_trials = 0;
  Hypothesis hypothesis = Hypothesis::h0;
  std::uint64_t seed = 0;
  unsigned workers = 0;  ///< 0 picks the hardware concurrency
};

/// Fused statistic of every trial, in trial order.
std::vector<double> run_trials(const TrialBatch& batch);

/// Per-sensor local statistics of every trial (row-major, n_trials x M).
/// With `quantized`, each entry is T^_i (NaN for censored sensors); otherwise T_i.
std::vector<double> simulate_local_statistics(const Scenario& scenario, std::size_t n_trials,
                                              Hypothesis hypothesis, std::uint64_t seed, bool quantized,
                                              unsigned workers = 0);

/// Proportion with a Wilson score interval.
struct RateEstimate {
  std::size_t hits = 0;
  std::size_t trials = 0;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

RateEstimate wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

struct EmpiricalRates {
  RateEstimate p_fa;
  RateEstimate p_d;
};

/// Fractions of each sample set at or above the threshold.
EmpiricalRates empirical_rates(std::span<const double> h0_values, std::span<const double> h1_values,
                               double threshold);

/// Threshold whose exceedance fraction over the H0 sample is p_fa (the
/// ceil(p_fa * n)-th largest value); -inf for p_fa >= 1.
double empirical_threshold(std::span<const double> h0_values, double p_fa);

struct EmpiricalRoc {
  DetectionCurve curve;               ///< provenance empirical, p_fa from the grid
  std::vector<double> thresholds;     ///< per grid point
  std::vector<RateEstimate> p_fa_hat;  ///< realized false-alarm rate
  std::vector<RateEstimate> p_d_hat;
};

EmpiricalRoc empirical_roc(const Scenario& scenario, const FusionRule& rule, std::size_t n_trials,
                           std::span<const double> p_fa_grid, std::uint64_t seed, unsigned workers = 0);

/// Same, from already simulated fused statistics.
EmpiricalRoc empirical_roc(const std::string& rule_name, std::span<const double> h0_values,
                           std::span<const double> h1_values, std::span<const double> p_fa_grid);

/// Fuses every row of a simulate_local_statistics() array.
std::vector<double> fuse_rows(const FusionRule& rule, std::span<const double> local_statistics);

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per worker.
void parallel_chunks(std::size_t n, unsigned workers, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace qfusion

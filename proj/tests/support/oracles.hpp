#pragma once
// Test-only reference computations, written independently of the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qfusion/experiments.hpp"
#include "qfusion/scenario.hpp"

namespace qfusion::testing {

/// Streaming mean, variance and fourth central moment.
class SampleMoments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    const double dn = d / static_cast<double>(n_);
    const double dn2 = dn * dn;
    const double t = d * dn * static_cast<double>(n_ - 1);
    m4_ += t * dn2 * (static_cast<double>(n_ * n_) - 3.0 * static_cast<double>(n_) + 3.0) + 6.0 * dn2 * m2_ -
           4.0 * dn * m3_;
    m3_ += t * dn * (static_cast<double>(n_) - 2.0) - 3.0 * dn * m2_;
    m2_ += t;
    mean_ += dn;
  }

  [[nodiscard]] std::size_t count() const { return n_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double variance() const { return m2_ / static_cast<double>(n_ - 1); }
  [[nodiscard]] double se_mean() const { return std::sqrt(variance() / static_cast<double>(n_)); }
  /// Standard error of the sample variance: sqrt((mu4 - sigma^4) / n).
  [[nodiscard]] double se_variance() const {
    const double n = static_cast<double>(n_);
    const double mu4 = m4_ / n;
    const double s2 = m2_ / n;
    return std::sqrt(std::max(0.0, mu4 - s2 * s2) / n);
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Q^-1 by bisection on erfc, no shared code with the library.
inline double q_inverse_bisect(double p) {
  double lo = -40.0, hi = 40.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Reference network: M=10, N=10, average SNR -8.5 dB, B=0.5.
inline Scenario reference_scenario(std::uint64_t seed = 1) {
  ScenarioConfig cfg = default_spec(ExperimentId::roc).scenario;
  cfg.seed = seed;
  return generate_scenario(cfg);
}

}  // namespace qfusion::testing

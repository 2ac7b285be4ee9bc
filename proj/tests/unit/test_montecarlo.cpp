#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "../support/oracles.hpp"
#include "qfusion/analytics.hpp"
#include "qfusion/montecarlo.hpp"

using namespace qfusion;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("trials are reproducible and independent of the worker count") {
  const Scenario sc = testing::reference_scenario();
  const FusionRule r = quantized_weights(RuleFamily::optimal, sc);
  TrialBatch b{&sc, &r, 1, Hypothesis::h1, 9, 1};
  CHECK(run_trials(b) == run_trials(b));
  b.n_trials = 5000;
  const auto one = run_trials(b);
  for (unsigned w : {2u, 3u, 8u}) {
    b.workers = w;
    CHECK(run_trials(b) == one);
  }
  b.seed = 10;
  CHECK(run_trials(b) != one);
  const auto l1 = simulate_local_statistics(sc, 777, Hypothesis::h0, 3, true, 1);
  const auto l5 = simulate_local_statistics(sc, 777, Hypothesis::h0, 3, true, 5);
  CHECK(l1.size() == 777 * sc.size());
  CHECK(std::equal(l1.begin(), l1.end(), l5.begin(), [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); }));
}

TEST_CASE("no signal means H1 and H0 trials share a distribution") {
  ScenarioConfig cfg = default_spec(ExperimentId::roc).scenario;
  cfg.amplitude = 0.0;
  const Scenario sc = generate_scenario(cfg);
  const FusionRule r = quantized_weights(RuleFamily::equal, sc);
  const std::size_t n = 20000;
  const auto h0 = run_trials({&sc, &r, n, Hypothesis::h0, 1, 0});
  const auto h1 = run_trials({&sc, &r, n, Hypothesis::h1, 1, 0});
  // 1.63 sqrt(2 / n) is the 1% critical value.
  CHECK(ks_statistic(h0, h1) < 1.63 * std::sqrt(2.0 / n));
}

TEST_CASE("simulated moments agree with the analytic ones") {
  const Scenario sc = testing::reference_scenario(2);
  const std::size_t n = 100000;
  for (Hypothesis h : {Hypothesis::h0, Hypothesis::h1}) {
    const bool one = h == Hypothesis::h1;
    const auto raw = simulate_local_statistics(sc, n, h, 4, false);
    const auto quant = simulate_local_statistics(sc, n, h, 4, true);
    for (std::size_t i = 0; i < sc.size(); ++i) {
      testing::SampleMoments t, tq;
      for (std::size_t k = 0; k < n; ++k) {
        t.add(raw[k * sc.size() + i]);
        if (!sc.sites[i].censored()) tq.add(quant[k * sc.size() + i]);
      }
      const MomentSet a = ti_moments(sc.sites[i], sc.n_samples);
      CHECK(std::fabs(t.mean() - (one ? a.mean_h1 : a.mean_h0)) < 3.5 * t.se_mean());
      CHECK(std::fabs(t.variance() - (one ? a.var_h1 : a.var_h0)) < 3.5 * t.se_variance());
      if (sc.sites[i].censored()) continue;
      const MomentSet q = that_moments(sc.sites[i], sc.n_samples, *sc.quant_variance(i));
      CHECK(std::fabs(tq.mean() - (one ? q.mean_h1 : q.mean_h0)) < 3.5 * tq.se_mean());
      CHECK(std::fabs(tq.variance() - (one ? q.var_h1 : q.var_h0)) < 3.5 * tq.se_variance());
    }
    const FusionRule r = optimal_weights(sc);
    testing::SampleMoments f;
    for (double v : fuse_rows(r, raw)) f.add(v);
    const MomentSet m = fusion_moments(r, sc);
    CHECK(std::fabs(f.mean() - (one ? m.mean_h1 : m.mean_h0)) < 3.5 * f.se_mean());
  }
}

TEST_CASE("fuse_rows matches run_trials") {
  const Scenario sc = testing::reference_scenario();
  const FusionRule r = quantized_weights(RuleFamily::weighted, sc);
  const auto rows = simulate_local_statistics(sc, 300, Hypothesis::h1, 6, true);
  const auto fused = run_trials({&sc, &r, 300, Hypothesis::h1, 6, 2});
  const auto again = fuse_rows(r, rows);
  REQUIRE(again.size() == fused.size());
  for (std::size_t k = 0; k < fused.size(); ++k) CHECK(again[k] == doctest::Approx(fused[k]).epsilon(1e-13));
}

TEST_CASE("empirical rates") {
  const std::vector<double> h0 = {1, 2, 3, 4};
  const std::vector<double> h1 = {2, 3, 4, 5};
  auto r = empirical_rates(h0, h1, -1e9);
  CHECK(r.p_fa.value == 1.0);
  CHECK(r.p_d.value == 1.0);
  r = empirical_rates(h0, h1, 1e9);
  CHECK(r.p_fa.value == 0.0);
  CHECK(r.p_d.value == 0.0);
  r = empirical_rates(h0, h1, 4.0);
  CHECK(r.p_fa.hits == 1);
  CHECK(r.p_d.hits == 2);
}

TEST_CASE("Wilson interval") {
  const RateEstimate w = wilson_interval(50, 100);
  CHECK(w.value == 0.5);
  CHECK(w.lower == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(w.upper == doctest::Approx(0.5962).epsilon(1e-3));
  const RateEstimate z = wilson_interval(0, 10);
  CHECK(z.lower == 0.0);
  CHECK(z.upper > 0.0);
  const RateEstimate f = wilson_interval(10, 10);
  CHECK(f.upper == doctest::Approx(1.0));
  CHECK(f.lower < 1.0);
}

TEST_CASE("empirical threshold hits the requested false-alarm fraction") {
  std::vector<double> h0(1000);
  for (std::size_t k = 0; k < h0.size(); ++k) h0[k] = static_cast<double>((k * 7919) % 1000);
  for (double p : {0.001, 0.01, 0.1, 0.25, 0.5}) {
    const double t = empirical_threshold(h0, p);
    const auto hits = std::count_if(h0.begin(), h0.end(), [&](double v) { return v >= t; });
    CHECK(hits == static_cast<long>(std::ceil(p * 1000 - 1e-9)));
  }
  CHECK(empirical_threshold(h0, 1.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("empirical ROC") {
  const Scenario sc = testing::reference_scenario();
  const FusionRule r = quantized_weights(RuleFamily::optimal, sc);
  const std::vector<double> top = {1.0};
  CHECK(empirical_roc(sc, r, 1000, top, 1).curve.points[0].p_d == 1.0);

  ScenarioConfig cfg = default_spec(ExperimentId::roc).scenario;
  cfg.amplitude = 0.0;
  const Scenario quiet = generate_scenario(cfg);
  const std::vector<double> grid = {0.05, 0.1, 0.3, 0.6};
  const EmpiricalRoc e = empirical_roc(quiet, quantized_weights(RuleFamily::equal, quiet), 20000, grid, 2);
  CHECK(e.curve.provenance == Provenance::empirical);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Diagonal within the interval, widened for the estimated threshold.
    const double slack = e.p_d_hat[k].upper - e.p_d_hat[k].lower;
    CHECK(e.p_d_hat[k].lower - slack <= grid[k]);
    CHECK(e.p_d_hat[k].upper + slack >= grid[k]);
  }
}

TEST_CASE("optimal rule beats equal weighting") {
  const Scenario sc = testing::reference_scenario();
  const std::vector<double> grid = {0.1};
  const auto opt = empirical_roc(sc, quantized_weights(RuleFamily::optimal, sc), 50000, grid, 3);
  const auto eq = empirical_roc(sc, quantized_weights(RuleFamily::equal, sc), 50000, grid, 3);
  CHECK(opt.p_d_hat[0].upper >= eq.p_d_hat[0].lower);
}

TEST_CASE("parallel_chunks covers every index once") {
  for (unsigned w : {1u, 3u, 16u}) {
    std::vector<int> seen(101, 0);
    parallel_chunks(seen.size(), w, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) ++seen[k];
    });
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  }
}

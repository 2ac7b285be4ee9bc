#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "../support/oracles.hpp"
#include "qfusion/analytics.hpp"
#include "qfusion/special.hpp"

using namespace qfusion;

namespace {

SensorSite site(double noise_var, double xi, int n) {
  SensorSite s;
  s.noise_var = noise_var;
  s.signal_energy = xi * n * noise_var;
  s.bits = 1;
  return s;
}

double q_ref(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("energy statistic moments") {
  const MomentSet m = ti_moments(site(1.0, 1.0, 10), 10);
  CHECK(m.mean_h0 == 10.0);
  CHECK(m.var_h0 == 20.0);
  CHECK(m.mean_h1 == doctest::Approx(20.0));
  CHECK(m.var_h1 == doctest::Approx(60.0));
  const MomentSet z = ti_moments(site(0.7, 0.0, 10), 10);
  CHECK(z.mean_h1 == z.mean_h0);
  CHECK(z.var_h1 == z.var_h0);
}

TEST_CASE("quantization adds its variance and nothing else") {
  const MomentSet m = that_moments(site(1.0, 1.0, 10), 10, 2.0);
  CHECK(m.var_h0 == doctest::Approx(22.0));
  CHECK(m.var_h1 == doctest::Approx(62.0));
  CHECK(m.mean_h1 == doctest::Approx(20.0));
  const MomentSet a = that_moments(site(0.4, 2.0, 7), 7, 0.0);
  const MomentSet b = ti_moments(site(0.4, 2.0, 7), 7);
  CHECK(a.mean_h0 == b.mean_h0);
  CHECK(a.var_h0 == b.var_h0);
  CHECK(a.mean_h1 == b.mean_h1);
  CHECK(a.var_h1 == b.var_h1);
}

TEST_CASE("moments of the squared offset statistic") {
  const MomentSet u0 = ui_moments(site(1.0, 1.0, 10), 10, 0.0, 0.0);
  CHECK(u0.mean_h0 == doctest::Approx(2 * 10 + 100));
  const MomentSet u = ui_moments(site(1.0, 1.0, 10), 10, 0.0, 5.0);
  CHECK(u.mean_h0 == doctest::Approx(45.0));
  CHECK(u.var_h0 == doctest::Approx(2800.0));
}

TEST_CASE("squared offset moments against Gaussian draws") {
  const int n = 10;
  const double qv = 0.3, b = 4.0;
  const SensorSite s = site(0.8, 1.5, n);
  const MomentSet u = ui_moments(s, n, qv, b);
  const MomentSet t = that_moments(s, n, qv);
  std::mt19937_64 gen(42);
  for (Hypothesis h : {Hypothesis::h0, Hypothesis::h1}) {
    const bool one = h == Hypothesis::h1;
    std::normal_distribution<double> g(one ? t.mean_h1 : t.mean_h0, std::sqrt(one ? t.var_h1 : t.var_h0));
    testing::SampleMoments m;
    for (int k = 0; k < 1000000; ++k) {
      const double d = g(gen) - b;
      m.add(d * d);
    }
    CHECK(m.mean() == doctest::Approx(one ? u.mean_h1 : u.mean_h0).epsilon(0.02));
    CHECK(m.variance() == doctest::Approx(one ? u.var_h1 : u.var_h0).epsilon(0.02));
  }
}

TEST_CASE("Q and its inverse") {
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    CHECK(q_function(x) == doctest::Approx(q_ref(x)).epsilon(1e-12));
  }
  for (double e = -12; e <= -0.31; e += 0.25) {
    const double p = std::pow(10.0, e);
    CHECK(q_inverse(p) == doctest::Approx(testing::q_inverse_bisect(p)).epsilon(1e-12));
    // Upper tail through symmetry: 1 - (1 - p) is exact, while bisecting near 1 is ill-conditioned.
    const double upper = 1 - p;
    CHECK(q_inverse(upper) == doctest::Approx(-testing::q_inverse_bisect(1 - upper)).epsilon(1e-12));
  }
  for (double p = 1e-6; p < 1.0; p += 0.0137) CHECK(std::fabs(q_function(q_inverse(p)) - p) <= 1e-10 * p);
  CHECK(q_inverse(0.5) == 0.0);
  CHECK_THROWS_AS(q_inverse(0.0), std::domain_error);
  CHECK_THROWS_AS(q_inverse(1.0), std::domain_error);
}

TEST_CASE("thresholds and detection probability") {
  MomentSet m{3.0, 4.0, 5.0, 4.0};
  CHECK(threshold_for_pfa(m, 0.5) == 3.0);
  MomentSet unit{0.0, 1.0, 2.0, 1.0};
  CHECK(threshold_for_pfa(unit, 0.1) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
  CHECK(pd_closed_form(unit, 0.1) == doctest::Approx(q_ref(1.2815515655446004 - 2.0)).epsilon(1e-12));
  CHECK(pd_closed_form(unit, 0.1) == doctest::Approx(0.76375).epsilon(1e-4));
  MomentSet null{1.0, 2.0, 1.0, 2.0};
  for (double p : {0.01, 0.1, 0.5, 0.9}) CHECK(pd_closed_form(null, p) == doctest::Approx(p).epsilon(1e-12));
  MomentSet strong{0.0, 1.0, 1e3, 1.0};
  CHECK(pd_closed_form(strong, 0.01) == 1.0);
  MomentSet empty{};
  CHECK(std::isinf(detection_argument(empty, 0.1)));
  CHECK(pd_closed_form(empty, 0.1) == 0.1);
}

TEST_CASE("closed form equals the Gaussian tail above the calibrated threshold") {
  const Scenario sc = testing::reference_scenario(3);
  for (RuleFamily f : {RuleFamily::optimal, RuleFamily::weighted, RuleFamily::equal, RuleFamily::linear}) {
    const FusionRule r = quantized_weights(f, sc);
    const MomentSet m = fusion_moments(r, sc);
    for (double p : {0.01, 0.1, 0.4}) {
      const double thr = threshold_for_pfa(m, p);
      const double direct = q_ref((thr - m.mean_h1) / std::sqrt(m.var_h1));
      CHECK(pd_closed_form(m, p) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("fusion moments add over sensors") {
  Scenario one;
  one.n_samples = 10;
  one.sites = {site(1.0, 1.0, 10)};
  one.sites[0].bits = 2;
  FusionRule r = quantized_weights(RuleFamily::optimal, one);
  const MomentSet f1 = fusion_moments(r, one);
  const MomentSet u = ui_moments(one.sites[0], 10, *one.quant_variance(0), r.offsets[0]);
  const double a = r.weights[0];
  CHECK(f1.mean_h0 == doctest::Approx(a * u.mean_h0).epsilon(1e-14));
  CHECK(f1.var_h1 == doctest::Approx(a * a * u.var_h1).epsilon(1e-14));
  Scenario two = one;
  two.sites.push_back(one.sites[0]);
  const MomentSet f2 = fusion_moments(quantized_weights(RuleFamily::optimal, two), two);
  CHECK(f2.mean_h0 == doctest::Approx(2 * f1.mean_h0).epsilon(1e-14));
  CHECK(f2.var_h0 == doctest::Approx(2 * f1.var_h0).epsilon(1e-14));
  CHECK(f2.mean_h1 == doctest::Approx(2 * f1.mean_h1).epsilon(1e-14));
  CHECK(f2.var_h1 == doctest::Approx(2 * f1.var_h1).epsilon(1e-14));
}

TEST_CASE("optimal detection improves with SNR, N and M") {
  const auto pd = [](int m, int n, double snr_db) {
    ScenarioConfig cfg;
    cfg.m = m;
    cfg.n = n;
    cfg.target_avg_snr_db = snr_db;
    cfg.bits = 4;
    const Scenario sc = generate_scenario(cfg);
    return pd_closed_form(fusion_moments(optimal_weights(sc), sc), 0.1);
  };
  double prev = 0.0;
  for (double snr = -15; snr <= -2; snr += 1.0) {
    const double v = pd(10, 10, snr);
    CHECK(v >= prev);
    prev = v;
  }
  prev = 0.0;
  for (int n : {5, 10, 20, 50, 100}) {
    const double v = pd(10, n, -8.5);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("roc curves") {
  const Scenario sc = testing::reference_scenario();
  const std::vector<double> grid = {0.001, 0.01, 0.1, 0.5, 0.9, 1.0};
  const DetectionCurve c = roc_curve(quantized_weights(RuleFamily::optimal, sc), sc, grid);
  CHECK(c.rule == "optimal-q");
  REQUIRE(c.points.size() == grid.size());
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(c.points[k].p_d >= c.points[k - 1].p_d);
  CHECK(c.points.back().p_d == 1.0);

  Scenario quiet = sc;
  for (auto& s : quiet.sites) s.signal_energy = 0.0;
  const DetectionCurve d = roc_curve(quantized_weights(RuleFamily::equal, quiet), quiet, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(d.points[k].p_d == doctest::Approx(grid[k]).epsilon(1e-12));

  CHECK_THROWS(check_pfa_grid(std::vector<double>{}));
  CHECK_THROWS(check_pfa_grid(std::vector<double>{0.2, 0.1}));
  CHECK_THROWS(check_pfa_grid(std::vector<double>{0.0, 0.1}));
  CHECK_THROWS(check_pfa_grid(std::vector<double>{0.1, 1.1}));
}

TEST_CASE("curves CSV round trip") {
  const Scenario sc = testing::reference_scenario();
  const std::vector<double> grid = {0.01, 0.1, 0.3};
  std::vector<DetectionCurve> curves = {roc_curve(optimal_weights(sc), sc, grid),
                                        roc_curve(quantized_weights(RuleFamily::linear, sc), sc, grid)};
  curves[1].rule = "odd, \"name\"";
  curves[1].provenance = Provenance::empirical;
  std::stringstream ss;
  write_curves_csv(ss, curves);
  const auto back = read_curves_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].rule == curves[1].rule);
  CHECK(back[1].provenance == Provenance::empirical);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(back[c].points[k].p_d == doctest::Approx(curves[c].points[k].p_d).epsilon(1e-9));
      CHECK(back[c].points[k].p_fa == curves[c].points[k].p_fa);
    }
  }
  std::stringstream bad("rule,provenance,p_fa\nx,analytic,0.1\n");
  CHECK_THROWS(read_curves_csv(bad));
  std::stringstream bad2("rule,provenance,p_fa,p_d\nx,guessed,0.1,0.2\n");
  CHECK_THROWS(read_curves_csv(bad2));
}

#include "qfusion/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "qfusion/kernels.hpp"

namespace qfusion {

void parallel_chunks(std::size_t n, unsigned workers, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

constexpr std::uint64_t hyp_index(Hypothesis h) { return h == Hypothesis::h0 ? 0 : 1; }

// Local statistics of one trial into `row` (size M).
void local_statistics(const Scenario& sc, std::size_t trial, Hypothesis h, std::uint64_t seed, bool quantized,
                      std::span<double> scratch, std::span<double> samples, std::span<double> row) {
  const std::uint64_t hi = hyp_index(h);
  for (std::size_t i = 0; i < sc.size(); ++i) {
    RngStream noise(seed, StreamKind::measurement, {hi, trial, i});
    sample_measurements_into(sc, i, h, noise, scratch, samples);
    const double t = energy_statistic(samples);
    if (!quantized) {
      row[i] = t;
      continue;
    }
    RngStream qrng(seed, StreamKind::quantization, {hi, trial, i});
    row[i] = quantize(t, sc.quantizer(i), qrng).value_or(std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace

std::vector<double> simulate_local_statistics(const Scenario& sc, std::size_t n_trials, Hypothesis hypothesis,
                                              std::uint64_t seed, bool quantized, unsigned workers) {
  const std::size_t m = sc.size();
  const auto n = static_cast<std::size_t>(sc.n_samples);
  std::vector<double> out(n_trials * m);
  parallel_chunks(n_trials, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch(n), samples(n);
    for (std::size_t t = begin; t < end; ++t) {
      local_statistics(sc, t, hypothesis, seed, quantized, scratch, samples, std::span(out).subspan(t * m, m));
    }
  });
  return out;
}

std::vector<double> run_trials(const TrialBatch& batch) {
  if (batch.scenario == nullptr || batch.rule == nullptr) throw std::invalid_argument("run_trials: missing scenario or rule");
  if (batch.n_trials == 0) throw std::invalid_argument("run_trials: n_trials must be positive");
  const Scenario& sc = *batch.scenario;
  const FusionRule& rule = *batch.rule;
  if (rule.size() != sc.size()) throw std::invalid_argument("run_trials: rule and scenario sizes differ");
  const std::size_t m = sc.size();
  const auto n = static_cast<std::size_t>(sc.n_samples);
  std::vector<double> out(batch.n_trials);
  parallel_chunks(batch.n_trials, batch.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch(n), samples(n), row(m);
    for (std::size_t t = begin; t < end; ++t) {
      local_statistics(sc, t, batch.hypothesis, batch.seed, rule.quantized, scratch, samples, row);
      out[t] = fuse(rule, row).value;
    }
  });
  return out;
}

RateEstimate wilson_interval(std::size_t hits, std::size_t trials, double z) {
  RateEstimate r;
  r.hits = hits;
  r.trials = trials;
  if (trials == 0) return r;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  r.value = p;
  r.lower = std::max(0.0, center - half);
  r.upper = std::min(1.0, center + half);
  return r;
}

EmpiricalRates empirical_rates(std::span<const double> h0_values, std::span<const double> h1_values,
                               double threshold) {
  EmpiricalRates r;
  r.p_fa = wilson_interval(kernels::count_at_least(h0_values, threshold), h0_values.size());
  r.p_d = wilson_interval(kernels::count_at_least(h1_values, threshold), h1_values.size());
  return r;
}

double empirical_threshold(std::span<const double> h0_values, double p_fa) {
  if (h0_values.empty()) throw std::invalid_argument("empirical_threshold: empty sample");
  if (!(p_fa > 0.0)) throw std::invalid_argument("empirical_threshold: p_fa must be positive");
  if (p_fa >= 1.0) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(h0_values.size());
  const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(p_fa * n - 1e-9)));
  std::vector<double> sorted(h0_values.begin(), h0_values.end());
  const auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(sorted.begin(), nth, sorted.end(), std::greater<>());
  return *nth;
}

EmpiricalRoc empirical_roc(const std::string& rule_name, std::span<const double> h0_values,
                           std::span<const double> h1_values, std::span<const double> p_fa_grid) {
  check_pfa_grid(p_fa_grid);
  EmpiricalRoc roc;
  roc.curve.rule = rule_name;
  roc.curve.provenance = Provenance::empirical;
  for (double p : p_fa_grid) {
    const double th = empirical_threshold(h0_values, p);
    const EmpiricalRates rates = empirical_rates(h0_values, h1_values, th);
    roc.thresholds.push_back(th);
    roc.p_fa_hat.push_back(rates.p_fa);
    roc.p_d_hat.push_back(rates.p_d);
    roc.curve.points.push_back({p, rates.p_d.value});
  }
  return roc;
}

EmpiricalRoc empirical_roc(const Scenario& sc, const FusionRule& rule, std::size_t n_trials,
                           std::span<const double> p_fa_grid, std::uint64_t seed, unsigned workers) {
  check_pfa_grid(p_fa_grid);
  TrialBatch batch{&sc, &rule, n_trials, Hypothesis::h0, seed, workers};
  const std::vector<double> h0 = run_trials(batch);
  batch.hypothesis = Hypothesis::h1;
  const std::vector<double> h1 = run_trials(batch);
  return empirical_roc(rule.id().name(), h0, h1, p_fa_grid);
}

std::vector<double> fuse_rows(const FusionRule& rule, std::span<const double> local_statistics) {
  const std::size_t m = rule.size();
  if (m == 0 || local_statistics.size() % m != 0) throw std::invalid_argument("fuse_rows: ragged statistic array");
  std::vector<double> out(local_statistics.size() / m);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = fuse(rule, local_statistics.subspan(t * m, m)).value;
  return out;
}

}  // namespace qfusion

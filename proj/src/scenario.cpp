#include "qfusion/scenario.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qfusion/csv.hpp"
#include "qfusion/kernels.hpp"

namespace qfusion {

std::string to_string(Hypothesis h) { return h == Hypothesis::h0 ? "H0" : "H1"; }

double site_snr(const SensorSite& site, int n_samples) {
  if (!(site.noise_var > 0.0)) throw std::invalid_argument("site_snr: noise_var must be positive");
  if (n_samples <= 0) throw std::invalid_argument("site_snr: n_samples must be positive");
  return site.signal_energy / (static_cast<double>(n_samples) * site.noise_var);
}

double Scenario::avg_snr_db() const {
  if (sites.empty()) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& s : sites) total += site_snr(s, n_samples);
  return 10.0 * std::log10(total / static_cast<double>(sites.size()));
}

QuantizerSpec Scenario::quantizer(std::size_t i) const {
  const SensorSite& s = sites.at(i);
  QuantizerSpec spec;
  spec.half_range = quant_half_range;
  spec.bits = s.bits;
  spec.center = quant_center.value_or(static_cast<double>(n_samples) * s.noise_var);
  spec.mode = quant_mode;
  return spec;
}

std::optional<double> Scenario::quant_variance(std::size_t i) const {
  const QuantizerSpec spec = quantizer(i);
  if (spec.censored()) return std::nullopt;
  return quant_noise_variance(spec);
}

Scenario Scenario::with_powers(std::span<const double> powers) const {
  if (powers.size() != sites.size()) throw std::invalid_argument("with_powers: one power per sensor required");
  Scenario out = *this;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (powers[i] < 0.0) throw std::invalid_argument("with_powers: negative power");
    SensorSite& s = out.sites[i];
    s.tx_power = powers[i];
    s.bits = bits_for_power(s.tx_power, s.channel_gain, s.comm_noise_var);
  }
  return out;
}

Scenario Scenario::with_bits(std::span<const int> bits) const {
  if (bits.size() != sites.size()) throw std::invalid_argument("with_bits: one budget per sensor required");
  Scenario out = *this;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (bits[i] < 0) throw std::invalid_argument("with_bits: negative bit budget");
    out.sites[i].bits = bits[i];
  }
  return out;
}

std::string GainModel::to_string() const {
  switch (kind) {
    case Kind::rayleigh:
      return value == 1.0 ? "rayleigh" : "rayleigh:" + csv::format_double(value);
    case Kind::constant:
      return "constant:" + csv::format_double(value);
    case Kind::explicit_list:
      return "explicit";
  }
  return "rayleigh";
}

GainModel GainModel::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  GainModel g;
  if (head == "rayleigh") {
    g.kind = Kind::rayleigh;
  } else if (head == "constant") {
    g.kind = Kind::constant;
  } else if (head == "explicit") {
    g.kind = Kind::explicit_list;
    return g;
  } else {
    throw std::invalid_argument("unknown gain model '" + text + "'");
  }
  if (colon != std::string::npos) {
    std::size_t used = 0;
    const std::string tail = text.substr(colon + 1);
    g.value = std::stod(tail, &used);
    if (used != tail.size() || !(g.value > 0.0)) throw std::invalid_argument("bad gain model parameter in '" + text + "'");
  } else if (g.kind == Kind::constant) {
    throw std::invalid_argument("constant gain model needs a value, e.g. constant:1.0");
  }
  return g;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  if (cfg.m <= 0) throw std::invalid_argument("generate_scenario: m must be positive");
  if (cfg.n <= 0) throw std::invalid_argument("generate_scenario: n must be positive");
  const auto [lo, hi] = cfg.noise_var_range;
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("generate_scenario: need 0 < noise_var_range lower <= upper");
  if (!(cfg.comm_noise_var > 0.0)) throw std::invalid_argument("generate_scenario: comm_noise_var must be positive");
  if (!(cfg.quant_half_range > 0.0)) throw std::invalid_argument("generate_scenario: quant_half_range must be positive");
  if (cfg.tx_power < 0.0) throw std::invalid_argument("generate_scenario: tx_power must be nonnegative");
  if (cfg.bits && *cfg.bits < 0) throw std::invalid_argument("generate_scenario: bits must be nonnegative");
  const auto m = static_cast<std::size_t>(cfg.m);
  if (!cfg.noise_var.empty() && cfg.noise_var.size() != m) {
    throw std::invalid_argument("generate_scenario: noise_var list must have m entries");
  }
  if (cfg.gain_model.kind == GainModel::Kind::explicit_list && cfg.channel_gain.size() != m) {
    throw std::invalid_argument("generate_scenario: explicit gain model needs m channel_gain entries");
  }

  Scenario sc;
  sc.n_samples = cfg.n;
  sc.amplitude = cfg.amplitude;
  sc.quant_half_range = cfg.quant_half_range;
  sc.quant_mode = cfg.quant_mode;
  sc.quant_center = cfg.quant_center;
  sc.rng_seed = cfg.seed;
  sc.sites.resize(m);

  const double energy = static_cast<double>(cfg.n) * cfg.amplitude * cfg.amplitude;
  for (std::size_t i = 0; i < m; ++i) {
    SensorSite& s = sc.sites[i];
    if (!cfg.noise_var.empty()) {
      if (!(cfg.noise_var[i] > 0.0)) throw std::invalid_argument("generate_scenario: noise_var entries must be positive");
      s.noise_var = cfg.noise_var[i];
    } else {
      RngStream rng(cfg.seed, StreamKind::scenario_noise_var, {i});
      s.noise_var = lo + (hi - lo) * rng.uniform01();
    }
    s.signal_energy = energy;
    s.comm_noise_var = cfg.comm_noise_var;
    switch (cfg.gain_model.kind) {
      case GainModel::Kind::rayleigh: {
        // |h|^2 exponential with mean E[h^2].
        RngStream rng(cfg.seed, StreamKind::scenario_gain, {i});
        std::exponential_distribution<double> exp_dist(1.0 / cfg.gain_model.value);
        s.channel_gain = std::sqrt(exp_dist(rng));
        break;
      }
      case GainModel::Kind::constant:
        s.channel_gain = cfg.gain_model.value;
        break;
      case GainModel::Kind::explicit_list:
        if (cfg.channel_gain[i] < 0.0) throw std::invalid_argument("generate_scenario: channel gains must be nonnegative");
        s.channel_gain = cfg.channel_gain[i];
        break;
    }
    s.tx_power = cfg.tx_power;
    s.bits = cfg.bits ? *cfg.bits : bits_for_power(s.tx_power, s.channel_gain, s.comm_noise_var);
  }

  if (energy > 0.0) {
    if (!std::isfinite(cfg.target_avg_snr_db)) throw std::invalid_argument("generate_scenario: target SNR must be finite");
    double mean_snr = 0.0;
    for (const auto& s : sc.sites) mean_snr += site_snr(s, cfg.n);
    mean_snr /= static_cast<double>(m);
    const double target = std::pow(10.0, cfg.target_avg_snr_db / 10.0);
    const double scale = mean_snr / target;
    for (auto& s : sc.sites) s.noise_var *= scale;
  }
  return sc;
}

Scenario generate_scenario(int m, int n, double amplitude, double target_avg_snr_db,
                           std::pair<double, double> noise_var_range, const GainModel& gain_model,
                           double comm_noise_var, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.m = m;
  cfg.n = n;
  cfg.amplitude = amplitude;
  cfg.target_avg_snr_db = target_avg_snr_db;
  cfg.noise_var_range = noise_var_range;
  cfg.gain_model = gain_model;
  cfg.comm_noise_var = comm_noise_var;
  cfg.seed = seed;
  return generate_scenario(cfg);
}

void sample_measurements_into(const Scenario& scenario, std::size_t site_index, Hypothesis hypothesis,
                              RngStream& rng, std::span<double> scratch, std::span<double> out) {
  const SensorSite& s = scenario.sites.at(site_index);
  const auto n = static_cast<std::size_t>(scenario.n_samples);
  if (scratch.size() < n || out.size() < n) throw std::invalid_argument("sample_measurements: buffers too small");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) scratch[k] = normal(rng);
  const double level =
      hypothesis == Hypothesis::h1 ? std::sqrt(s.signal_energy / static_cast<double>(scenario.n_samples)) : 0.0;
  kernels::affine(scratch.first(n), std::sqrt(s.noise_var), level, out.first(n));
}

std::vector<double> sample_measurements(const Scenario& scenario, std::size_t site_index,
                                        Hypothesis hypothesis, RngStream& rng) {
  const auto n = static_cast<std::size_t>(scenario.n_samples);
  std::vector<double> scratch(n);
  std::vector<double> out(n);
  sample_measurements_into(scenario, site_index, hypothesis, rng, scratch, out);
  return out;
}

double energy_statistic(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("energy_statistic: empty sample window");
  return kernels::sum_of_squares(samples);
}

}  // namespace qfusion

#include "qfusion/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "qfusion/allocation.hpp"
#include "qfusion/analytics.hpp"
#include "qfusion/csv.hpp"
#include "qfusion/kernels.hpp"
#include "qfusion/montecarlo.hpp"
#include "qfusion/special.hpp"

namespace qfusion {

namespace {

const std::vector<std::pair<ExperimentId, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentId, std::string>> names = {
      {ExperimentId::roc, "roc"},
      {ExperimentId::pd_vs_n, "pd-vs-n"},
      {ExperimentId::pd_vs_m, "pd-vs-m"},
      {ExperimentId::pd_vs_snr, "pd-vs-snr"},
      {ExperimentId::pd_vs_n_power, "pd-vs-n-power"},
      {ExperimentId::power_alloc, "power-alloc"},
  };
  return names;
}

const std::vector<std::pair<SweepAxis, std::string>>& axis_names() {
  static const std::vector<std::pair<SweepAxis, std::string>> names = {
      {SweepAxis::none, "none"},         {SweepAxis::n, "n"},
      {SweepAxis::m, "m"},               {SweepAxis::snr_db, "snr_db"},
      {SweepAxis::tx_power, "tx_power"}, {SweepAxis::bits, "bits"},
      {SweepAxis::quant_half_range, "quant_half_range"},
  };
  return names;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k > 0) out += ", ";
    out += items[k];
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(csv::format_double(v));
  return join(items);
}

std::vector<RuleId> six_rules() {
  return {
      {RuleFamily::optimal, false},     {RuleFamily::optimal, true}, {RuleFamily::weighted, true},
      {RuleFamily::equal, true},        {RuleFamily::linear, true},  {RuleFamily::equal_linear, true},
  };
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] > v[k - 1])) return false;
  }
  return true;
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

bool integral_axis(SweepAxis a) { return a == SweepAxis::n || a == SweepAxis::m || a == SweepAxis::bits; }

void check_axis_values(SweepAxis axis, const std::vector<double>& values, const std::string& key) {
  require(!values.empty(), key, "must not be empty");
  require(strictly_increasing(values), key, "must be strictly increasing");
  for (double v : values) {
    require(std::isfinite(v), key, "values must be finite");
    if (integral_axis(axis)) require(v == std::floor(v), key, "values must be integers for this axis");
    switch (axis) {
      case SweepAxis::n:
      case SweepAxis::m:
        require(v >= 1.0, key, "values must be at least 1");
        break;
      case SweepAxis::bits:
      case SweepAxis::tx_power:
        require(v >= 0.0, key, "values must be nonnegative");
        break;
      case SweepAxis::quant_half_range:
        require(v > 0.0, key, "values must be positive");
        break;
      default:
        break;
    }
  }
}

// Setters for every recognized key. Each throws ConfigError naming the key.
using Setter = std::function<void(ExperimentSpec&, const ConfigEntry&)>;

const std::map<std::string, Setter>& setters() {
  using config::to_double;
  using config::to_doubles;
  using config::to_int;
  static const std::map<std::string, Setter> table = {
      {"m", [](ExperimentSpec& s, const ConfigEntry& e) {
         const long long v = to_int(e);
         require(v >= 1 && v <= 100000, e.key, "must lie in [1, 100000]");
         s.scenario.m = static_cast<int>(v);
       }},
      {"n", [](ExperimentSpec& s, const ConfigEntry& e) {
         const long long v = to_int(e);
         require(v >= 1 && v <= 100000000, e.key, "must lie in [1, 1e8]");
         s.scenario.n = static_cast<int>(v);
       }},
      {"amplitude", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v >= 0.0 && std::isfinite(v), e.key, "must be finite and nonnegative");
         s.scenario.amplitude = v;
       }},
      {"target_avg_snr_db", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(std::isfinite(v), e.key, "must be finite");
         s.scenario.target_avg_snr_db = v;
       }},
      {"noise_var_range", [](ExperimentSpec& s, const ConfigEntry& e) {
         const auto v = to_doubles(e);
         require(v.size() == 2, e.key, "expects two values 'lower, upper'");
         require(v[0] > 0.0 && v[1] >= v[0] && std::isfinite(v[1]), e.key, "needs 0 < lower <= upper");
         s.scenario.noise_var_range = {v[0], v[1]};
       }},
      {"gain_model", [](ExperimentSpec& s, const ConfigEntry& e) {
         try {
           s.scenario.gain_model = GainModel::parse(e.value);
         } catch (const std::exception& ex) {
           throw ConfigError(e.key, ex.what());
         }
       }},
      {"comm_noise_var", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v > 0.0 && std::isfinite(v), e.key, "must be positive");
         s.scenario.comm_noise_var = v;
       }},
      {"seed", [](ExperimentSpec& s, const ConfigEntry& e) { s.scenario.seed = config::to_u64(e); }},
      {"noise_var", [](ExperimentSpec& s, const ConfigEntry& e) {
         const auto v = to_doubles(e);
         for (double x : v) require(x > 0.0 && std::isfinite(x), e.key, "entries must be positive");
         s.scenario.noise_var = v;
       }},
      {"channel_gain", [](ExperimentSpec& s, const ConfigEntry& e) {
         const auto v = to_doubles(e);
         for (double x : v) require(x >= 0.0 && std::isfinite(x), e.key, "entries must be nonnegative");
         s.scenario.channel_gain = v;
       }},
      {"quant_half_range", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v > 0.0 && std::isfinite(v), e.key, "must be positive");
         s.scenario.quant_half_range = v;
       }},
      {"tx_power", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v >= 0.0 && std::isfinite(v), e.key, "must be nonnegative");
         s.scenario.tx_power = v;
       }},
      {"bits", [](ExperimentSpec& s, const ConfigEntry& e) {
         if (e.value == "capacity") {
           s.scenario.bits.reset();
           return;
         }
         const long long v = to_int(e);
         require(v >= 0 && v <= 60, e.key, "must be 'capacity' or an integer in [0, 60]");
         s.scenario.bits = static_cast<int>(v);
       }},
      {"quant_mode", [](ExperimentSpec& s, const ConfigEntry& e) {
         try {
           s.scenario.quant_mode = parse_quant_mode(e.value);
         } catch (const std::exception& ex) {
           throw ConfigError(e.key, ex.what());
         }
       }},
      {"quant_center", [](ExperimentSpec& s, const ConfigEntry& e) {
         if (e.value == "auto") {
           s.scenario.quant_center.reset();
           return;
         }
         const double v = to_double(e);
         require(std::isfinite(v), e.key, "must be 'auto' or a finite number");
         s.scenario.quant_center = v;
       }},
      {"rules", [](ExperimentSpec& s, const ConfigEntry& e) {
         s.rules.clear();
         for (const auto& item : config::split_list(e.value)) {
           try {
             s.rules.push_back(RuleId::parse(item));
           } catch (const std::exception& ex) {
             throw ConfigError(e.key, ex.what());
           }
         }
         require(!s.rules.empty(), e.key, "must name at least one rule");
       }},
      {"p_fa", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v > 0.0 && v < 1.0, e.key, "must lie in (0, 1), got " + e.value);
         s.p_fa = v;
       }},
      {"p_fa_grid", [](ExperimentSpec& s, const ConfigEntry& e) {
         const auto v = to_doubles(e);
         try {
           check_pfa_grid(v);
         } catch (const std::exception& ex) {
           throw ConfigError(e.key, ex.what());
         }
         s.p_fa_grid = v;
       }},
      {"sweep_axis", [](ExperimentSpec& s, const ConfigEntry& e) {
         try {
           s.sweep_axis = parse_sweep_axis(e.value);
         } catch (const std::exception& ex) {
           throw ConfigError(e.key, ex.what());
         }
       }},
      {"sweep_values", [](ExperimentSpec& s, const ConfigEntry& e) { s.sweep_values = to_doubles(e); }},
      {"series_axis", [](ExperimentSpec& s, const ConfigEntry& e) {
         try {
           s.series_axis = parse_sweep_axis(e.value);
         } catch (const std::exception& ex) {
           throw ConfigError(e.key, ex.what());
         }
       }},
      {"series_values", [](ExperimentSpec& s, const ConfigEntry& e) { s.series_values = to_doubles(e); }},
      {"trials", [](ExperimentSpec& s, const ConfigEntry& e) {
         const long long v = to_int(e);
         require(v >= 0 && v <= 100000000, e.key, "must lie in [0, 1e8]");
         s.trials = static_cast<std::size_t>(v);
       }},
      {"budget", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v > 0.0 && std::isfinite(v), e.key, "must be positive");
         s.budget = v;
       }},
      {"tolerance", [](ExperimentSpec& s, const ConfigEntry& e) {
         const double v = to_double(e);
         require(v > 0.0 && std::isfinite(v), e.key, "must be positive");
         s.tolerance = v;
       }},
      {"node_budget", [](ExperimentSpec& s, const ConfigEntry& e) {
         const long long v = to_int(e);
         require(v >= 1, e.key, "must be at least 1");
         s.node_budget = static_cast<std::size_t>(v);
       }},
      {"workers", [](ExperimentSpec& s, const ConfigEntry& e) {
         const long long v = to_int(e);
         require(v >= 0 && v <= 4096, e.key, "must lie in [0, 4096]");
         s.workers = static_cast<unsigned>(v);
       }},
  };
  return table;
}

}  // namespace

std::string to_string(ExperimentId id) {
  for (const auto& [k, name] : experiment_names()) {
    if (k == id) return name;
  }
  return "roc";
}

ExperimentId parse_experiment_id(const std::string& text) {
  for (const auto& [k, name] : experiment_names()) {
    if (name == text) return k;
  }
  throw std::invalid_argument("unknown experiment '" + text + "'");
}

std::string to_string(SweepAxis axis) {
  for (const auto& [k, name] : axis_names()) {
    if (k == axis) return name;
  }
  return "none";
}

SweepAxis parse_sweep_axis(const std::string& text) {
  for (const auto& [k, name] : axis_names()) {
    if (name == text) return k;
  }
  throw std::invalid_argument("unknown sweep axis '" + text + "'");
}

ExperimentSpec default_spec(ExperimentId id) {
  ExperimentSpec s;
  s.experiment = id;
  s.rules = six_rules();
  s.p_fa_grid = {0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0};
  switch (id) {
    case ExperimentId::roc:
      break;
    case ExperimentId::pd_vs_n:
      s.scenario.m = 20;
      s.sweep_axis = SweepAxis::n;
      s.sweep_values = {10, 20, 50, 100};
      s.trials = 20000;
      break;
    case ExperimentId::pd_vs_m:
      s.sweep_axis = SweepAxis::m;
      s.sweep_values = {5, 10, 15, 20, 25, 30};
      s.trials = 20000;
      break;
    case ExperimentId::pd_vs_snr:
      s.scenario.m = 20;
      s.sweep_axis = SweepAxis::snr_db;
      s.sweep_values = {-14, -12, -10, -8.5, -7, -5, -3};
      s.trials = 20000;
      break;
    case ExperimentId::pd_vs_n_power:
      s.scenario.quant_half_range = 1.0;
      s.scenario.gain_model = GainModel{GainModel::Kind::constant, 1.0};
      s.sweep_axis = SweepAxis::n;
      s.sweep_values = {10, 20, 50, 100};
      // With h = 1 and zeta = 0.1 these powers buy 1, 2, 3, 4 and 8 bits.
      s.series_axis = SweepAxis::tx_power;
      s.series_values = {0.3, 1.5, 6.3, 25.5, 6553.5};
      s.trials = 20000;
      break;
    case ExperimentId::power_alloc:
      s.scenario.m = 20;
      s.rules = {{RuleFamily::optimal, true}};
      s.trials = 20000;
      break;
  }
  return s;
}

ExperimentSpec resolve_spec(const KeyValues& entries, std::optional<ExperimentId> experiment) {
  const auto& table = setters();
  std::optional<ExperimentId> named;
  for (const auto& e : entries) {
    if (e.key == "experiment") {
      try {
        named = parse_experiment_id(e.value);
      } catch (const std::exception& ex) {
        throw ConfigError(e.key, ex.what());
      }
    } else if (e.key.rfind("run.", 0) != 0 && !table.contains(e.key)) {
      throw ConfigError(e.key, "unknown key");
    }
  }
  if (experiment && named && *experiment != *named) {
    throw ConfigError("experiment", "config names '" + to_string(*named) + "' but '" + to_string(*experiment) +
                                        "' was requested");
  }
  ExperimentSpec spec = default_spec(experiment.value_or(named.value_or(ExperimentId::roc)));
  for (const auto& e : entries) {
    if (e.key == "experiment" || e.key.rfind("run.", 0) == 0) continue;
    table.at(e.key)(spec, e);
  }
  check_spec(spec);
  return spec;
}

ExperimentSpec validate_config(const std::filesystem::path& path, std::optional<ExperimentId> experiment) {
  return resolve_spec(load_config(path), experiment);
}

void check_spec(const ExperimentSpec& s) {
  require(!s.rules.empty(), "rules", "must name at least one rule");
  require(s.p_fa > 0.0 && s.p_fa < 1.0, "p_fa", "must lie in (0, 1)");
  try {
    check_pfa_grid(s.p_fa_grid);
  } catch (const std::exception& ex) {
    throw ConfigError("p_fa_grid", ex.what());
  }
  const ScenarioConfig& c = s.scenario;
  if (!c.noise_var.empty()) {
    require(c.noise_var.size() == static_cast<std::size_t>(c.m), "noise_var", "needs exactly m entries");
  }
  if (c.gain_model.kind == GainModel::Kind::explicit_list) {
    require(c.channel_gain.size() == static_cast<std::size_t>(c.m), "channel_gain",
            "needs exactly m entries with gain_model = explicit");
  }
  if (is_sweep(s.experiment)) {
    require(s.sweep_axis != SweepAxis::none, "sweep_axis", "a sweep needs an axis");
    check_axis_values(s.sweep_axis, s.sweep_values, "sweep_values");
    if (s.series_axis != SweepAxis::none) {
      require(s.series_axis != s.sweep_axis, "series_axis", "must differ from sweep_axis");
      check_axis_values(s.series_axis, s.series_values, "series_values");
    }
    const bool varies_m = s.sweep_axis == SweepAxis::m || s.series_axis == SweepAxis::m;
    if (varies_m) {
      require(c.noise_var.empty(), "noise_var", "cannot be combined with a sweep over m");
      require(c.gain_model.kind != GainModel::Kind::explicit_list, "gain_model",
              "explicit gains cannot be combined with a sweep over m");
    }
  }
  if (s.experiment == ExperimentId::power_alloc) {
    require(s.budget > 0.0, "budget", "must be positive");
  }
}

KeyValues describe(const ExperimentSpec& s) {
  const ScenarioConfig& c = s.scenario;
  std::vector<std::string> rules;
  for (const auto& r : s.rules) rules.push_back(r.name());
  auto fmt = [](double v) { return csv::format_double(v); };
  KeyValues out = {
      {"experiment", to_string(s.experiment)},
      {"m", std::to_string(c.m)},
      {"n", std::to_string(c.n)},
      {"amplitude", fmt(c.amplitude)},
      {"target_avg_snr_db", fmt(c.target_avg_snr_db)},
      {"noise_var_range", fmt(c.noise_var_range.first) + ", " + fmt(c.noise_var_range.second)},
      {"gain_model", c.gain_model.to_string()},
      {"comm_noise_var", fmt(c.comm_noise_var)},
      {"seed", std::to_string(c.seed)},
      {"noise_var", join_doubles(c.noise_var)},
      {"channel_gain", join_doubles(c.channel_gain)},
      {"quant_half_range", fmt(c.quant_half_range)},
      {"tx_power", fmt(c.tx_power)},
      {"bits", c.bits ? std::to_string(*c.bits) : "capacity"},
      {"quant_mode", to_string(c.quant_mode)},
      {"quant_center", c.quant_center ? fmt(*c.quant_center) : "auto"},
      {"rules", join(rules)},
      {"p_fa", fmt(s.p_fa)},
      {"p_fa_grid", join_doubles(s.p_fa_grid)},
      {"sweep_axis", to_string(s.sweep_axis)},
      {"sweep_values", join_doubles(s.sweep_values)},
      {"series_axis", to_string(s.series_axis)},
      {"series_values", join_doubles(s.series_values)},
      {"trials", std::to_string(s.trials)},
      {"budget", fmt(s.budget)},
      {"tolerance", fmt(s.tolerance)},
      {"node_budget", std::to_string(s.node_budget)},
      {"workers", std::to_string(s.workers)},
  };
  return out;
}

ScenarioConfig apply_axis(ScenarioConfig c, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::none:
      break;
    case SweepAxis::n:
      c.n = static_cast<int>(value);
      break;
    case SweepAxis::m:
      c.m = static_cast<int>(value);
      break;
    case SweepAxis::snr_db:
      c.target_avg_snr_db = value;
      break;
    case SweepAxis::tx_power:
      c.tx_power = value;
      break;
    case SweepAxis::bits:
      c.bits = static_cast<int>(value);
      break;
    case SweepAxis::quant_half_range:
      c.quant_half_range = value;
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

// Local statistics of both hypotheses, raw and quantized, simulated once per
// scenario and shared by every rule.
class LocalSamples {
 public:
  LocalSamples(const Scenario& sc, const ExperimentSpec& spec) : sc_(sc), spec_(spec) {}

  std::vector<double> fused(const FusionRule& rule, Hypothesis h) {
    return fuse_rows(rule, rows(rule.quantized, h));
  }

 private:
  const std::vector<double>& rows(bool quantized, Hypothesis h) {
    auto& slot = cache_[(quantized ? 2 : 0) + (h == Hypothesis::h1 ? 1 : 0)];
    if (slot.empty()) {
      slot = simulate_local_statistics(sc_, spec_.trials, h, spec_.scenario.seed, quantized, spec_.workers);
    }
    return slot;
  }

  const Scenario& sc_;
  const ExperimentSpec& spec_;
  std::vector<double> cache_[4];
};

std::string fmt(double v) { return csv::format_double(v); }

void write_manifest(const std::filesystem::path& path, const ExperimentSpec& spec, const std::string& status,
                    const std::vector<std::filesystem::path>& files, double wall, const std::string& error) {
  KeyValues meta = {
      {"run.status", status},
      {"run.schema_version", std::to_string(kCsvSchemaVersion)},
      {"run.toolkit_version", QFUSION_VERSION},
      {"run.simd", std::string(kernels::isa_name(kernels::active_isa()))},
  };
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  meta.push_back({"run.outputs", join(names)});
  if (status != "incomplete") meta.push_back({"run.wall_seconds", fmt(wall)});
  if (!error.empty()) meta.push_back({"run.error", error});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
  out << "# qfusion run manifest; usable as a config to reproduce the run\n";
  write_config(out, meta);
  write_config(out, describe(spec));
  if (!out) throw std::runtime_error("failed writing manifest '" + path.string() + "'");
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void run_roc(const ExperimentSpec& spec, const std::filesystem::path& dir, std::vector<std::filesystem::path>& files,
             std::ostream* log) {
  const Scenario sc = generate_scenario(spec.scenario);
  std::vector<DetectionCurve> curves;
  std::vector<EmpiricalRoc> empirical;
  LocalSamples samples(sc, spec);
  for (const RuleId& id : spec.rules) {
    const FusionRule rule = make_rule(id, sc);
    curves.push_back(roc_curve(rule, sc, spec.p_fa_grid));
    if (spec.trials > 0) {
      const auto h0 = samples.fused(rule, Hypothesis::h0);
      const auto h1 = samples.fused(rule, Hypothesis::h1);
      empirical.push_back(empirical_roc(id.name(), h0, h1, spec.p_fa_grid));
      curves.push_back(empirical.back().curve);
    }
  }

  const auto roc_path = dir / "roc.csv";
  {
    auto out = open_csv(roc_path);
    write_curves_csv(out, curves);
  }
  files.push_back(roc_path);

  if (!empirical.empty()) {
    const auto detail_path = dir / "roc-empirical.csv";
    auto out = open_csv(detail_path);
    csv::write_row(out, {"rule", "p_fa", "threshold", "p_fa_hat", "p_d_hat", "p_d_lower", "p_d_upper", "trials"});
    for (const auto& roc : empirical) {
      for (std::size_t k = 0; k < spec.p_fa_grid.size(); ++k) {
        const RateEstimate& pd = roc.p_d_hat[k];
        csv::write_row(out, {roc.curve.rule, fmt(spec.p_fa_grid[k]), fmt(roc.thresholds[k]),
                             fmt(roc.p_fa_hat[k].value), fmt(pd.value), fmt(pd.lower), fmt(pd.upper),
                             std::to_string(pd.trials)});
      }
    }
    files.push_back(detail_path);
  }

  if (log != nullptr) {
    *log << "roc: M=" << sc.size() << " N=" << sc.n_samples << " avg SNR " << fmt(sc.avg_snr_db()) << " dB, "
         << spec.trials << " trials per hypothesis\n";
    for (const auto& c : curves) {
      if (c.provenance != Provenance::analytic) continue;
      for (const auto& pt : c.points) {
        if (pt.p_fa == spec.p_fa) *log << "  " << c.rule << ": P_d(" << fmt(spec.p_fa) << ") = " << fmt(pt.p_d) << '\n';
      }
    }
  }
}

void run_sweep(const ExperimentSpec& spec, const std::filesystem::path& dir,
               std::vector<std::filesystem::path>& files, std::ostream* log) {
  const auto path = dir / (to_string(spec.experiment) + ".csv");
  auto out = open_csv(path);
  csv::write_row(out, {"series_axis", "series_value", "sweep_axis", "sweep_value", "rule", "p_fa", "p_d_analytic",
                       "p_d_empirical", "p_d_lower", "p_d_upper", "trials", "avg_snr_db", "censored"});
  const std::vector<double> no_series = {std::nan("")};
  const auto& series = spec.series_axis == SweepAxis::none ? no_series : spec.series_values;
  for (double sv : series) {
    const ScenarioConfig base = apply_axis(spec.scenario, spec.series_axis, sv);
    for (double x : spec.sweep_values) {
      const Scenario sc = generate_scenario(apply_axis(base, spec.sweep_axis, x));
      std::size_t censored = 0;
      for (const auto& site : sc.sites) censored += site.censored() ? 1 : 0;
      LocalSamples samples(sc, spec);
      for (const RuleId& id : spec.rules) {
        const FusionRule rule = make_rule(id, sc);
        const double pd = pd_closed_form(fusion_moments(rule, sc), spec.p_fa);
        std::vector<std::string> row = {to_string(spec.series_axis),
                                        spec.series_axis == SweepAxis::none ? "" : fmt(sv),
                                        to_string(spec.sweep_axis),
                                        fmt(x),
                                        id.name(),
                                        fmt(spec.p_fa),
                                        fmt(pd)};
        if (spec.trials > 0) {
          const auto h0 = samples.fused(rule, Hypothesis::h0);
          const auto h1 = samples.fused(rule, Hypothesis::h1);
          const EmpiricalRates r = empirical_rates(h0, h1, empirical_threshold(h0, spec.p_fa));
          row.insert(row.end(), {fmt(r.p_d.value), fmt(r.p_d.lower), fmt(r.p_d.upper), std::to_string(spec.trials)});
        } else {
          row.insert(row.end(), {"", "", "", "0"});
        }
        row.push_back(fmt(sc.avg_snr_db()));
        row.push_back(std::to_string(censored));
        csv::write_row(out, row);
        if (log != nullptr) {
          *log << "  ";
          if (spec.series_axis != SweepAxis::none) *log << to_string(spec.series_axis) << '=' << fmt(sv) << ' ';
          *log << to_string(spec.sweep_axis) << '=' << fmt(x) << ' ' << id.name() << ": P_d = " << fmt(pd) << '\n';
        }
      }
    }
  }
  files.push_back(path);
}

void run_alloc(const ExperimentSpec& spec, const std::filesystem::path& dir,
               std::vector<std::filesystem::path>& files, std::ostream* log) {
  const Scenario sc = generate_scenario(spec.scenario);
  BnbOptions opt;
  opt.tolerance = spec.tolerance;
  opt.node_budget = spec.node_budget;
  const PowerAllocation alloc = branch_and_bound(sc, spec.budget, spec.p_fa, opt);
  const Scenario allocated = sc.with_powers(alloc.powers);
  const FusionRule rule = quantized_weights(RuleFamily::optimal, allocated);

  const auto path = dir / "power-alloc.csv";
  {
    auto out = open_csv(path);
    csv::write_row(out, {"sensor", "h", "channel_quality", "noise_var", "xi", "p", "L", "weight"});
    for (std::size_t i = 0; i < sc.size(); ++i) {
      const SensorSite& s = allocated.sites[i];
      csv::write_row(out, {std::to_string(i), fmt(s.channel_gain), fmt(s.channel_quality()), fmt(s.noise_var),
                           fmt(allocated.snr(i)), fmt(alloc.powers[i]), std::to_string(alloc.bits[i]),
                           fmt(rule.weights[i])});
    }
  }
  files.push_back(path);

  RateEstimate pd_hat;
  if (spec.trials > 0) {
    LocalSamples samples(allocated, spec);
    const auto h0 = samples.fused(rule, Hypothesis::h0);
    const auto h1 = samples.fused(rule, Hypothesis::h1);
    pd_hat = empirical_rates(h0, h1, empirical_threshold(h0, spec.p_fa)).p_d;
  }
  double used = 0.0;
  for (double p : alloc.powers) used += p;
  const auto summary = dir / "power-alloc-summary.csv";
  {
    auto out = open_csv(summary);
    csv::write_row(out, {"budget", "power_used", "p_fa", "objective", "p_d_analytic", "p_d_empirical", "p_d_lower",
                         "p_d_upper", "trials", "gap", "nodes", "converged"});
    const bool emp = spec.trials > 0;
    csv::write_row(out, {fmt(spec.budget), fmt(used), fmt(spec.p_fa), fmt(alloc.objective), fmt(alloc.p_d),
                         emp ? fmt(pd_hat.value) : "", emp ? fmt(pd_hat.lower) : "", emp ? fmt(pd_hat.upper) : "",
                         std::to_string(spec.trials), fmt(alloc.gap), std::to_string(alloc.nodes),
                         alloc.converged ? "true" : "false"});
  }
  files.push_back(summary);

  if (log != nullptr) {
    std::size_t censored = 0;
    for (int b : alloc.bits) censored += b == 0 ? 1 : 0;
    *log << "power-alloc: M=" << sc.size() << " P_t=" << fmt(spec.budget) << " -> P_d = " << fmt(alloc.p_d)
         << ", " << censored << " sensors censored, " << alloc.nodes << " nodes"
         << (alloc.converged ? "" : ", NOT converged (gap " + fmt(alloc.gap) + ")") << '\n';
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir, std::ostream* log) {
  check_spec(spec);
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  result.manifest = out_dir / "manifest.txt";
  write_manifest(result.manifest, spec, "incomplete", {}, 0.0, "");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    switch (spec.experiment) {
      case ExperimentId::roc:
        run_roc(spec, out_dir, result.files, log);
        break;
      case ExperimentId::power_alloc:
        run_alloc(spec, out_dir, result.files, log);
        break;
      default:
        if (log != nullptr) *log << to_string(spec.experiment) << ":\n";
        run_sweep(spec, out_dir, result.files, log);
        break;
    }
  } catch (const std::exception& ex) {
    write_manifest(result.manifest, spec, "failed", result.files, elapsed(), ex.what());
    throw;
  }
  result.wall_seconds = elapsed();
  write_manifest(result.manifest, spec, "complete", result.files, result.wall_seconds, "");
  return result;
}

}  // namespace qfusion

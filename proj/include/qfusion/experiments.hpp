#pragma once
// Experiment definitions and the runner that turns them into CSV files.
//
// Every run writes manifest.txt into its output directory before anything
// else (status = incomplete) and rewrites it once all files are in place
// (status = complete). The manifest lists the fully resolved configuration,
// so it can be fed back as a config to reproduce the run bit for bit; its
// bookkeeping entries use the "run." prefix, which configs ignore.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qfusion/config.hpp"
#include "qfusion/fusion.hpp"
#include "qfusion/scenario.hpp"

namespace qfusion {

inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentId { roc, pd_vs_n, pd_vs_m, pd_vs_snr, pd_vs_n_power, power_alloc };

std::string to_string(ExperimentId id);
ExperimentId parse_experiment_id(const std::string& text);
[[nodiscard]] constexpr bool is_sweep(ExperimentId id) noexcept {
  return id != ExperimentId::roc && id != ExperimentId::power_alloc;
}

/// Scenario parameter a sweep varies.
enum class SweepAxis { none, n, m, snr_db, tx_power, bits, quant_half_range };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& text);

struct ExperimentSpec {
  ExperimentId experiment = ExperimentId::roc;
  ScenarioConfig scenario;
  std::vector<RuleId> rules;
  double p_fa = 0.1;                 ///< operating point of sweeps and allocation
  std::vector<double> p_fa_grid;     ///< ROC abscissae
  SweepAxis sweep_axis = SweepAxis::none;
  std::vector<double> sweep_values;
  SweepAxis series_axis = SweepAxis::none;
  std::vector<double> series_values;
  std::size_t trials = 100000;       ///< Monte Carlo trials per hypothesis; 0 skips the empirical columns
  double budget = 20.0;              ///< P_t
  double tolerance = 1e-4;
  std::size_t node_budget = 100000;
  unsigned workers = 0;              ///< 0 = hardware concurrency; never affects results
};

/// Documented defaults of an experiment.
ExperimentSpec default_spec(ExperimentId id);

/// Applies config entries over the defaults of the experiment named by the
/// `experiment` key (or `experiment`, when given, which must not conflict).
/// Unknown keys and out-of-range values raise ConfigError naming the key.
ExperimentSpec resolve_spec(const KeyValues& entries, std::optional<ExperimentId> experiment = std::nullopt);

ExperimentSpec validate_config(const std::filesystem::path& path,
                               std::optional<ExperimentId> experiment = std::nullopt);

/// Checks cross-field invariants (grids nonempty and sorted, ranges).
void check_spec(const ExperimentSpec& spec);

/// The spec as config entries, in a fixed order; resolving them gives back the same spec.
KeyValues describe(const ExperimentSpec& spec);

/// Scenario of one sweep point.
ScenarioConfig apply_axis(ScenarioConfig config, SweepAxis axis, double value);

struct ExperimentResult {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
  double wall_seconds = 0.0;
};

/// Runs the experiment into `out_dir` (created if missing). A short
/// human-readable summary goes to `log` when given.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

}  // namespace qfusion

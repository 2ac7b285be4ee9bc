// qfusion: command-line front end for the experiments.
//
//   qfusion roc      [--config f] [--out dir] [--seed s] [--trials n] [--workers w]
//   qfusion sweep    [--experiment pd-vs-n|pd-vs-m|pd-vs-snr|pd-vs-n-power] ...
//   qfusion alloc    ...
//   qfusion validate [--config f] [--experiment id]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "qfusion/experiments.hpp"
#include "qfusion/kernels.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, Options& o, bool runs) {
  cmd->add_option("--config", o.config, "flat key = value config file (a previous manifest works too)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--experiment", o.experiment, "experiment id");
  if (!runs) return;
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "scenario and Monte Carlo seed (overrides the config)");
  cmd->add_option("--trials", o.trials, "Monte Carlo trials per hypothesis; 0 skips the empirical columns");
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores); results do not depend on it");
}

qfusion::ExperimentSpec resolve(const Options& o, std::optional<qfusion::ExperimentId> forced) {
  qfusion::KeyValues entries;
  if (!o.config.empty()) entries = qfusion::load_config(o.config);
  std::optional<qfusion::ExperimentId> id = forced;
  if (!o.experiment.empty()) {
    const auto named = qfusion::parse_experiment_id(o.experiment);
    if (forced && *forced != named) throw qfusion::ConfigError("experiment", "does not match the verb");
    id = named;
  }
  qfusion::ExperimentSpec spec = qfusion::resolve_spec(entries, id);
  if (o.seed) spec.scenario.seed = *o.seed;
  if (o.trials) spec.trials = *o.trials;
  if (o.workers) spec.workers = *o.workers;
  qfusion::check_spec(spec);
  return spec;
}

int run(const Options& o, std::optional<qfusion::ExperimentId> forced, bool sweep_only) {
  qfusion::ExperimentSpec spec = resolve(o, forced);
  if (sweep_only && !qfusion::is_sweep(spec.experiment)) {
    throw qfusion::ConfigError("experiment", "'" + qfusion::to_string(spec.experiment) + "' is not a sweep");
  }
  const auto result = qfusion::run_experiment(spec, o.out, &std::cout);
  for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
  std::cout << "manifest " << result.manifest.string() << " (" << result.wall_seconds << " s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-decision fusion of quantized energy detectors: experiments and analysis"};
  app.set_version_flag("--version", std::string(QFUSION_VERSION));
  app.require_subcommand(1);

  Options roc_opts, sweep_opts, alloc_opts, validate_opts;
  auto* roc = app.add_subcommand("roc", "ROC curves of every configured rule, analytic and empirical");
  add_common(roc, roc_opts, true);
  auto* sweep = app.add_subcommand("sweep", "P_d along a scenario parameter (default experiment pd-vs-n)");
  add_common(sweep, sweep_opts, true);
  auto* alloc = app.add_subcommand("alloc", "power allocation under an aggregate budget");
  add_common(alloc, alloc_opts, true);
  auto* validate = app.add_subcommand("validate", "resolve a config and print it with all defaults filled in");
  add_common(validate, validate_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*roc) return run(roc_opts, qfusion::ExperimentId::roc, false);
    if (*alloc) return run(alloc_opts, qfusion::ExperimentId::power_alloc, false);
    if (*sweep) {
      std::optional<qfusion::ExperimentId> id;
      if (sweep_opts.experiment.empty() && sweep_opts.config.empty()) id = qfusion::ExperimentId::pd_vs_n;
      if (sweep_opts.experiment.empty() && !sweep_opts.config.empty()) {
        // Experiment comes from the config; fall back to pd-vs-n when it names none.
        bool named = false;
        for (const auto& e : qfusion::load_config(sweep_opts.config)) named = named || e.key == "experiment";
        if (!named) id = qfusion::ExperimentId::pd_vs_n;
      }
      return run(sweep_opts, id, true);
    }
    if (*validate) {
      const auto spec = resolve(validate_opts, std::nullopt);
      qfusion::write_config(std::cout, qfusion::describe(spec));
      return 0;
    }
  } catch (const qfusion::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

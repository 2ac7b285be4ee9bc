#include "qfusion/fusion.hpp"

#include <stdexcept>

#include "qfusion/kernels.hpp"

namespace qfusion {

std::string to_string(RuleFamily family) {
  switch (family) {
    case RuleFamily::optimal:
      return "optimal";
    case RuleFamily::weighted:
      return "weighted";
    case RuleFamily::equal:
      return "equal";
    case RuleFamily::linear:
      return "linear";
    case RuleFamily::equal_linear:
      return "equal-linear";
  }
  return "optimal";
}

RuleFamily parse_rule_family(const std::string& name) {
  if (name == "optimal") return RuleFamily::optimal;
  if (name == "weighted") return RuleFamily::weighted;
  if (name == "equal") return RuleFamily::equal;
  if (name == "linear") return RuleFamily::linear;
  if (name == "equal-linear") return RuleFamily::equal_linear;
  throw std::invalid_argument("unknown fusion rule '" + name + "'");
}

std::string RuleId::name() const { return to_string(family) + (quantized ? "-q" : ""); }

RuleId RuleId::parse(const std::string& text) {
  RuleId id;
  std::string base = text;
  if (base.size() > 2 && base.ends_with("-q")) {
    id.quantized = true;
    base.resize(base.size() - 2);
  }
  id.family = parse_rule_family(base);
  return id;
}

namespace {

struct SiteTerms {
  double n;
  double var;  // sigma^2
  double var2;  // sigma^4
  double xi;
};

SiteTerms terms(const Scenario& sc, std::size_t i) {
  const SensorSite& s = sc.sites[i];
  const double n = static_cast<double>(sc.n_samples);
  return {n, s.noise_var, s.noise_var * s.noise_var, site_snr(s, sc.n_samples)};
}

FusionRule build(const Scenario& sc, RuleFamily family, bool quantized, std::span<const double> qv) {
  FusionRule rule;
  rule.family = family;
  rule.quantized = quantized;
  const std::size_t m = sc.size();
  rule.weights.resize(m);
  if (!is_linear(family)) rule.offsets.resize(m);

  for (std::size_t i = 0; i < m; ++i) {
    const SiteTerms t = terms(sc, i);
    const bool censored = quantized && qv[i] < 0.0;
    const double sv = quantized && !censored ? qv[i] : 0.0;
    const double k = sv / (2.0 * t.n * t.var2);
    double w = 0.0;
    switch (family) {
      case RuleFamily::optimal:
        w = t.xi / (t.n * t.var2 * (1.0 + 2.0 * t.xi + k) * (1.0 + k));
        break;
      case RuleFamily::weighted:
        w = 1.0 / (2.0 * t.n * t.var2 * (1.0 + k) * (1.0 + k));
        break;
      case RuleFamily::equal:
      case RuleFamily::equal_linear:
        w = 1.0;
        break;
      case RuleFamily::linear:
        w = t.xi / (t.n * t.var * (1.0 + 2.0 * t.xi + sv / (t.n * t.var)));
        break;
    }
    rule.weights[i] = censored ? 0.0 : w;
    if (!is_linear(family)) rule.offsets[i] = t.n * t.var / 2.0 - sv / (4.0 * t.var);
  }
  return rule;
}

}  // namespace

FusionRule optimal_weights(const Scenario& sc) { return build(sc, RuleFamily::optimal, false, {}); }
FusionRule weighted_weights(const Scenario& sc) { return build(sc, RuleFamily::weighted, false, {}); }
FusionRule equal_weights(const Scenario& sc) { return build(sc, RuleFamily::equal, false, {}); }
FusionRule linear_weights(const Scenario& sc) { return build(sc, RuleFamily::linear, false, {}); }
FusionRule equal_linear_weights(const Scenario& sc) { return build(sc, RuleFamily::equal_linear, false, {}); }

FusionRule quantized_weights(RuleFamily family, const Scenario& sc, std::span<const double> quant_vars) {
  if (quant_vars.size() != sc.size()) throw std::invalid_argument("quantized_weights: one variance per sensor required");
  return build(sc, family, true, quant_vars);
}

FusionRule quantized_weights(RuleFamily family, const Scenario& sc) {
  std::vector<double> qv(sc.size());
  for (std::size_t i = 0; i < sc.size(); ++i) qv[i] = sc.quant_variance(i).value_or(-1.0);
  return build(sc, family, true, qv);
}

FusionRule make_rule(RuleId id, const Scenario& sc) {
  if (id.quantized) return quantized_weights(id.family, sc);
  return build(sc, id.family, false, {});
}

FusedStatistic fuse(const FusionRule& rule, std::span<const double> statistics) {
  if (statistics.size() != rule.weights.size()) {
    throw std::invalid_argument("fuse: expected " + std::to_string(rule.weights.size()) + " statistics, got " +
                                std::to_string(statistics.size()));
  }
  FusedStatistic out;
  out.rule = rule.id();
  out.value = rule.linear() ? kernels::weighted_sum(rule.weights, statistics)
                            : kernels::weighted_sq_dev_sum(rule.weights, rule.offsets, statistics);
  return out;
}

}  // namespace qfusion

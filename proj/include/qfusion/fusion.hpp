#pragma once
// Soft-decision fusion rules: per-sensor weights/offsets and the fused statistic.
//
// Quadratic families fuse as sum a_i (T_i - b_i)^2, linear ones as sum a_i T_i.
// Quantized rules fold each sensor's quantization-noise variance into its
// weight and offset; censored sensors get weight 0 and are skipped by fuse().

#include <span>
#include <string>
#include <vector>

#include "qfusion/scenario.hpp"

namespace qfusion {

enum class RuleFamily {
  optimal,       ///< LRT-derived quadratic rule, needs xi_i
  weighted,      ///< quadratic, weights from noise power only
  equal,         ///< quadratic, unit weights
  linear,        ///< deflection-optimal linear combiner, needs xi_i
  equal_linear,  ///< linear, unit weights
};

std::string to_string(RuleFamily family);
RuleFamily parse_rule_family(const std::string& name);
[[nodiscard]] constexpr bool is_linear(RuleFamily f) noexcept {
  return f == RuleFamily::linear || f == RuleFamily::equal_linear;
}

/// Family plus quantized flag. Text form: "optimal", "optimal-q", "equal-linear-q", ...
struct RuleId {
  RuleFamily family = RuleFamily::optimal;
  bool quantized = false;

  [[nodiscard]] std::string name() const;
  static RuleId parse(const std::string& text);
  friend bool operator==(const RuleId&, const RuleId&) = default;
};

struct FusionRule {
  RuleFamily family = RuleFamily::optimal;
  bool quantized = false;
  std::vector<double> weights;
  std::vector<double> offsets;  ///< empty for linear families

  [[nodiscard]] RuleId id() const noexcept { return {family, quantized}; }
  [[nodiscard]] bool linear() const noexcept { return is_linear(family); }
  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
};

struct FusedStatistic {
  double value = 0.0;
  RuleId rule;
};

/// a_i = xi_i / (N sigma_i^4 (1 + 2 xi_i)), b_i = N sigma_i^2 / 2.
FusionRule optimal_weights(const Scenario& scenario);
/// a_i = 1 / (2 N sigma_i^4), b_i as optimal.
FusionRule weighted_weights(const Scenario& scenario);
/// a_i = 1, b_i as optimal.
FusionRule equal_weights(const Scenario& scenario);
/// alpha_i = xi_i / (N sigma_i^2 (1 + 2 xi_i)).
FusionRule linear_weights(const Scenario& scenario);
/// alpha_i = 1.
FusionRule equal_linear_weights(const Scenario& scenario);

/// Quantized counterpart of a family, using each sensor's bit budget and the
/// scenario's B. With k_i = sigma_v^2 / (2 N sigma_i^4):
///   optimal   a = xi / (N sigma^4 (1 + 2 xi + k)(1 + k)),  b = N sigma^2/2 - sigma_v^2/(4 sigma^2)
///   weighted  a = 1 / (2 N sigma^4 (1 + k)^2)
///   equal     a = 1
///   linear    alpha = xi / (N sigma^2 (1 + 2 xi + sigma_v^2 / (N sigma^2)))
///   equal_linear alpha = 1
/// The weighted and linear forms are normalized so that sigma_v^2 = 0 gives
/// the unquantized weights exactly; the normalization is one constant for all
/// sensors (1/2 and 2/N), so decisions at a calibrated threshold are unchanged.
FusionRule quantized_weights(RuleFamily family, const Scenario& scenario);

/// Same as quantized_weights but with explicit per-sensor sigma_v^2 values
/// (negative entries mark censored sensors).
FusionRule quantized_weights(RuleFamily family, const Scenario& scenario, std::span<const double> quant_vars);

/// Dispatches to the right builder.
FusionRule make_rule(RuleId id, const Scenario& scenario);

/// Fused statistic of one trial. Entries whose weight is 0 are ignored (they
/// may be NaN). Throws std::invalid_argument on a length mismatch.
FusedStatistic fuse(const FusionRule& rule, std::span<const double> statistics);

}  // namespace qfusion

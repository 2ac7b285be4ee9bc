#pragma once
// Gaussian-approximation analysis of local and fused statistics.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qfusion/fusion.hpp"
#include "qfusion/scenario.hpp"

namespace qfusion {

/// Mean/variance of a statistic under both hypotheses.
struct MomentSet {
  double mean_h0 = 0.0;
  double var_h0 = 0.0;
  double mean_h1 = 0.0;
  double var_h1 = 0.0;

  /// Psi: mean separation between hypotheses.
  [[nodiscard]] double separation() const noexcept { return mean_h1 - mean_h0; }
};

enum class Provenance { analytic, empirical };
std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& text);

struct CurvePoint {
  double p_fa = 0.0;
  double p_d = 0.0;
};

struct DetectionCurve {
  std::string rule;  ///< RuleId::name()
  Provenance provenance = Provenance::analytic;
  std::vector<CurvePoint> points;
};

/// Energy statistic T_i: (N s2, 2 N s2^2) under H0, (N s2 (1+xi), 2 N s2^2 (1+2xi)) under H1.
MomentSet ti_moments(const SensorSite& site, int n_samples);

/// Quantized statistic T_i + v_i: same means, both variances increased by quant_var.
MomentSet that_moments(const SensorSite& site, int n_samples, double quant_var);

/// U_i = (T^_i - b)^2 with T^_i Gaussian:
///   E{U}   = Var{T^} + E{T^}^2 - 2 b E{T^} + b^2
///   Var{U} = 4 E{T^}^2 Var + 2 Var^2 + 4 b^2 Var - 8 b E{T^} Var
/// under each hypothesis.
MomentSet ui_moments(const SensorSite& site, int n_samples, double quant_var, double offset);

/// Moments of the fused statistic. Quadratic families: sum a_i E{U_i} and
/// sum a_i^2 Var{U_i}; linear families: the same sums over T^_i. Quantized
/// rules use each sensor's quantization variance, censored (zero-weight)
/// sensors contribute nothing.
MomentSet fusion_moments(const FusionRule& rule, const Scenario& scenario);

/// mean_h0 + Q^-1(p_fa) sqrt(var_h0). Declare H1 iff statistic >= threshold.
double threshold_for_pfa(const MomentSet& moments, double p_fa);

/// Q((Q^-1(p_fa) sqrt(var_h0) - Psi) / sqrt(var_h1)).
/// A statistic with zero variance and zero separation carries no information;
/// then the best achievable detection probability is p_fa itself.
double pd_closed_form(const MomentSet& moments, double p_fa);

/// The argument of Q in pd_closed_form (beta). +inf for an uninformative statistic.
double detection_argument(const MomentSet& moments, double p_fa);

DetectionCurve roc_curve(const FusionRule& rule, const Scenario& scenario, std::span<const double> p_fa_grid);

/// Validates a p_fa grid: nonempty, strictly increasing, each in (0, 1].
void check_pfa_grid(std::span<const double> grid);

/// CSV with header rule,provenance,p_fa,p_d (RFC 4180 quoting).
void write_curves_csv(std::ostream& os, std::span<const DetectionCurve> curves);
std::vector<DetectionCurve> read_curves_csv(std::istream& is);

}  // namespace qfusion

#include "qfusion/analytics.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "qfusion/csv.hpp"
#include "qfusion/special.hpp"

namespace qfusion {

std::string to_string(Provenance p) { return p == Provenance::analytic ? "analytic" : "empirical"; }

Provenance parse_provenance(const std::string& text) {
  if (text == "analytic") return Provenance::analytic;
  if (text == "empirical") return Provenance::empirical;
  throw std::invalid_argument("unknown provenance '" + text + "'");
}

MomentSet ti_moments(const SensorSite& site, int n_samples) { return that_moments(site, n_samples, 0.0); }

MomentSet that_moments(const SensorSite& site, int n_samples, double quant_var) {
  if (quant_var < 0.0) throw std::invalid_argument("that_moments: negative quantization variance");
  const double n = static_cast<double>(n_samples);
  const double s2 = site.noise_var;
  const double xi = site_snr(site, n_samples);
  MomentSet m;
  m.mean_h0 = n * s2;
  m.var_h0 = 2.0 * n * s2 * s2 + quant_var;
  m.mean_h1 = n * s2 * (1.0 + xi);
  m.var_h1 = 2.0 * n * s2 * s2 * (1.0 + 2.0 * xi) + quant_var;
  return m;
}

MomentSet ui_moments(const SensorSite& site, int n_samples, double quant_var, double offset) {
  const MomentSet t = that_moments(site, n_samples, quant_var);
  const double n = static_cast<double>(n_samples);
  const double s2 = site.noise_var;
  const double xi = site_snr(site, n_samples);
  const double b = offset;
  MomentSet u;
  u.mean_h0 = 2.0 * n * s2 * s2 + n * n * s2 * s2 + quant_var - 2.0 * b * n * s2 + b * b;
  u.var_h0 = t.var_h0 * (4.0 * n * n * s2 * s2 + 2.0 * t.var_h0 + 4.0 * b * b - 8.0 * n * b * s2);
  u.mean_h1 = t.mean_h1 * t.mean_h1 + t.var_h1 - 2.0 * b * (n * s2 + n * s2 * xi) + b * b;
  u.var_h1 = 4.0 * t.mean_h1 * t.mean_h1 * t.var_h1 + 2.0 * t.var_h1 * t.var_h1 + 4.0 * b * b * t.var_h1 -
             8.0 * b * t.mean_h1 * t.var_h1;
  return u;
}

namespace {

MomentSet accumulate(const FusionRule& rule, const Scenario& sc, const std::vector<double>& qv) {
  MomentSet f;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const double a = rule.weights[i];
    if (a == 0.0) continue;
    const double v = qv[i];
    const MomentSet s = rule.linear() ? that_moments(sc.sites[i], sc.n_samples, v)
                                      : ui_moments(sc.sites[i], sc.n_samples, v, rule.offsets[i]);
    f.mean_h0 += a * s.mean_h0;
    f.var_h0 += a * a * s.var_h0;
    f.mean_h1 += a * s.mean_h1;
    f.var_h1 += a * a * s.var_h1;
  }
  return f;
}

}  // namespace

MomentSet fusion_moments(const FusionRule& rule, const Scenario& sc) {
  if (rule.size() != sc.size()) throw std::invalid_argument("fusion_moments: rule and scenario sizes differ");
  std::vector<double> qv(sc.size(), 0.0);
  if (rule.quantized) {
    for (std::size_t i = 0; i < sc.size(); ++i) {
      const auto v = sc.quant_variance(i);
      if (v) {
        qv[i] = *v;
      } else if (rule.weights[i] != 0.0) {
        throw std::invalid_argument("fusion_moments: censored sensor carries nonzero weight");
      }
    }
  }
  return accumulate(rule, sc, qv);
}

double threshold_for_pfa(const MomentSet& m, double p_fa) {
  if (!(p_fa > 0.0 && p_fa < 1.0)) throw std::domain_error("threshold_for_pfa: p_fa must lie in (0, 1)");
  if (!(m.var_h0 > 0.0)) throw std::domain_error("threshold_for_pfa: H0 variance must be positive");
  return m.mean_h0 + q_inverse(p_fa) * std::sqrt(m.var_h0);
}

double detection_argument(const MomentSet& m, double p_fa) {
  if (!(p_fa > 0.0 && p_fa <= 1.0)) throw std::domain_error("detection probability: p_fa must lie in (0, 1]");
  if (m.var_h0 == 0.0 && m.var_h1 == 0.0 && m.separation() == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  if (p_fa == 1.0) return -std::numeric_limits<double>::infinity();
  return (q_inverse(p_fa) * std::sqrt(m.var_h0) - m.separation()) / std::sqrt(m.var_h1);
}

double pd_closed_form(const MomentSet& m, double p_fa) {
  const double beta = detection_argument(m, p_fa);
  if (beta == std::numeric_limits<double>::infinity() && m.var_h0 == 0.0 && m.var_h1 == 0.0) return p_fa;
  return q_function(beta);
}

void check_pfa_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("p_fa grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0 && grid[k] <= 1.0)) throw std::invalid_argument("p_fa grid values must lie in (0, 1]");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw std::invalid_argument("p_fa grid must be strictly increasing");
  }
}

DetectionCurve roc_curve(const FusionRule& rule, const Scenario& sc, std::span<const double> p_fa_grid) {
  check_pfa_grid(p_fa_grid);
  const MomentSet m = fusion_moments(rule, sc);
  DetectionCurve curve;
  curve.rule = rule.id().name();
  curve.provenance = Provenance::analytic;
  curve.points.reserve(p_fa_grid.size());
  for (double p : p_fa_grid) curve.points.push_back({p, pd_closed_form(m, p)});
  return curve;
}

void write_curves_csv(std::ostream& os, std::span<const DetectionCurve> curves) {
  csv::write_row(os, {"rule", "provenance", "p_fa", "p_d"});
  for (const auto& c : curves) {
    for (const auto& pt : c.points) {
      csv::write_row(os, {c.rule, to_string(c.provenance), csv::format_double(pt.p_fa), csv::format_double(pt.p_d)});
    }
  }
}

std::vector<DetectionCurve> read_curves_csv(std::istream& is) {
  std::vector<std::string> row;
  if (!csv::read_row(is, row) || row != std::vector<std::string>{"rule", "provenance", "p_fa", "p_d"}) {
    throw std::runtime_error("curve csv: unexpected header");
  }
  std::vector<DetectionCurve> out;
  while (csv::read_row(is, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 4) throw std::runtime_error("curve csv: expected 4 fields");
    const Provenance prov = parse_provenance(row[1]);
    if (out.empty() || out.back().rule != row[0] || out.back().provenance != prov) {
      out.push_back({row[0], prov, {}});
    }
    out.back().points.push_back({csv::parse_double(row[2]), csv::parse_double(row[3])});
  }
  return out;
}

}  // namespace qfusion

#include "qfusion/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "qfusion/analytics.hpp"
#include "qfusion/fusion.hpp"
#include "qfusion/special.hpp"

namespace qfusion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Budget slack absorbing rounding in sums of minimal powers.
constexpr double kBudgetSlack = 1e-10;

bool ties(double a, double b) noexcept {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a));
}

}  // namespace

double beta_objective(std::span<const double> powers, const Scenario& scenario, double p_fa) {
  const Scenario sc = scenario.with_powers(powers);
  const FusionRule rule = quantized_weights(RuleFamily::optimal, sc);
  return detection_argument(fusion_moments(rule, sc), p_fa);
}

// ---------------------------------------------------------------------------
// AllocationModel

AllocationModel::AllocationModel(const Scenario& scenario, double budget, double p_fa)
    : scenario_(scenario), budget_(budget), p_fa_(p_fa), z_(q_inverse(p_fa)) {
  if (!(budget > 0.0)) throw std::invalid_argument("power allocation: budget must be positive");
  const std::size_t m = scenario.size();
  sensors_.resize(m);
  int max_cap = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const SensorSite& s = scenario.sites[i];
    const int cap = bits_for_power(budget, s.channel_gain, s.comm_noise_var);
    max_cap = std::max(max_cap, cap);
    sensors_[i].pmin.resize(static_cast<std::size_t>(cap) + 1);
    sensors_[i].contrib.resize(static_cast<std::size_t>(cap) + 1);
    for (int l = 0; l <= cap; ++l) sensors_[i].pmin[static_cast<std::size_t>(l)] = power_for_bits(l, s.channel_gain, s.comm_noise_var);
  }
  // Contribution of every sensor at a common bit level, using the same weight
  // and moment formulas as the fused-statistic analysis.
  for (int l = 1; l <= max_cap; ++l) {
    const std::vector<int> bits(m, l);
    const Scenario at_l = scenario.with_bits(bits);
    const FusionRule rule = quantized_weights(RuleFamily::optimal, at_l);
    for (std::size_t i = 0; i < m; ++i) {
      if (l > cap(i)) continue;
      const double a = rule.weights[i];
      const MomentSet u = ui_moments(at_l.sites[i], at_l.n_samples, *at_l.quant_variance(i), rule.offsets[i]);
      Contribution& c = sensors_[i].contrib[static_cast<std::size_t>(l)];
      if (a == 0.0) continue;
      c.c0 = a * a * u.var_h0;
      c.psi = a * u.mean_h1 - a * u.mean_h0;
      c.c1 = a * a * u.var_h1;
    }
  }
}

double AllocationModel::total_power(std::span<const int> bits) const {
  double total = 0.0;
  for (std::size_t i = 0; i < sensors_.size(); ++i) total += min_power(i, bits[i]);
  return total;
}

bool AllocationModel::feasible(std::span<const int> bits) const {
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (bits[i] < 0 || bits[i] > cap(i)) return false;
  }
  return total_power(bits) <= budget_ + kBudgetSlack;
}

double AllocationModel::beta_from_sums(double v0, double psi, double v1) const {
  if (v0 == 0.0 && v1 == 0.0 && psi == 0.0) return kInf;
  return (z_ * std::sqrt(v0) - psi) / std::sqrt(v1);
}

double AllocationModel::beta(std::span<const int> bits) const {
  double v0 = 0.0, psi = 0.0, v1 = 0.0;
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    const Contribution& c = sensors_[i].contrib[static_cast<std::size_t>(bits[i])];
    v0 += c.c0;
    psi += c.psi;
    v1 += c.c1;
  }
  return beta_from_sums(v0, psi, v1);
}

BitBox AllocationModel::root() const {
  BitBox box;
  box.lo.assign(sensors_.size(), 0);
  box.hi.resize(sensors_.size());
  for (std::size_t i = 0; i < sensors_.size(); ++i) box.hi[i] = cap(i);
  return box;
}

BoxBounds AllocationModel::bound(BitBox& box) const {
  BoxBounds out;
  const std::size_t m = sensors_.size();
  const double base = total_power(box.lo);
  if (base > budget_ + kBudgetSlack) return out;
  out.feasible = true;

  // Bound tightening: sensor i can at most spend its own floor plus the slack.
  for (std::size_t i = 0; i < m; ++i) {
    const double affordable = budget_ + kBudgetSlack - (base - min_power(i, box.lo[i]));
    while (box.hi[i] > box.lo[i] && min_power(i, box.hi[i]) > affordable) --box.hi[i];
  }

  out.upper = beta(box.lo);

  // Interval bound on each aggregate, then on beta.
  double v0_lo = 0.0, v0_hi = 0.0, psi_hi = 0.0, v1_lo = 0.0, v1_hi = 0.0;
  // Deflection bound: beta >= z sqrt(min or max c0/c1) - sqrt(sum max psi^2/c1).
  double ratio_min = kInf, ratio_max = 0.0, r_sum = 0.0;
  bool informative = false;
  for (std::size_t i = 0; i < m; ++i) {
    double c0_min = kInf, c0_max = -kInf, psi_max = -kInf, c1_min = kInf, c1_max = -kInf, r_max = 0.0;
    for (int l = box.lo[i]; l <= box.hi[i]; ++l) {
      const Contribution& c = sensors_[i].contrib[static_cast<std::size_t>(l)];
      c0_min = std::min(c0_min, c.c0);
      c0_max = std::max(c0_max, c.c0);
      psi_max = std::max(psi_max, c.psi);
      c1_min = std::min(c1_min, c.c1);
      c1_max = std::max(c1_max, c.c1);
      if (c.c1 > 0.0) {
        informative = true;
        ratio_min = std::min(ratio_min, c.c0 / c.c1);
        ratio_max = std::max(ratio_max, c.c0 / c.c1);
        r_max = std::max(r_max, c.psi * c.psi / c.c1);
      }
    }
    v0_lo += c0_min;
    v0_hi += c0_max;
    psi_hi += psi_max;
    v1_lo += c1_min;
    v1_hi += c1_max;
    r_sum += r_max;
  }
  if (!informative) {
    // Every point of the box transmits nothing useful.
    out.lower = kInf;
    out.upper = kInf;
    return out;
  }
  const double num_lo = (z_ >= 0.0 ? z_ * std::sqrt(v0_lo) : z_ * std::sqrt(v0_hi)) - psi_hi;
  double interval_lb;
  if (num_lo >= 0.0) {
    interval_lb = num_lo / std::sqrt(v1_hi);
  } else {
    interval_lb = v1_lo > 0.0 ? num_lo / std::sqrt(v1_lo) : -kInf;
  }
  const double deflection_lb = z_ * std::sqrt(z_ >= 0.0 ? ratio_min : ratio_max) - std::sqrt(r_sum);
  out.lower = std::max(interval_lb, deflection_lb);

  // Budget-coupled refinement: bisect on the largest t the knapsack test can exclude.
  double lo_t = out.lower;
  double hi_t = out.upper;
  if (std::isfinite(lo_t) && std::isfinite(hi_t) && lo_t < hi_t) {
    for (int it = 0; it < 40 && hi_t - lo_t > 1e-9 * std::max(1.0, std::fabs(hi_t)); ++it) {
      const double mid = 0.5 * (lo_t + hi_t);
      if (excludes(box, mid, v0_lo, v0_hi, v1_lo, v1_hi)) {
        lo_t = mid;
      } else {
        hi_t = mid;
      }
    }
    out.lower = lo_t;
  }
  return out;
}

bool AllocationModel::excludes(const BitBox& box, double t) const {
  double v0_lo = 0.0, v0_hi = 0.0, v1_lo = 0.0, v1_hi = 0.0;
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    double c0_min = kInf, c0_max = 0.0, c1_min = kInf, c1_max = 0.0;
    for (int l = box.lo[i]; l <= box.hi[i]; ++l) {
      const Contribution& c = sensors_[i].contrib[static_cast<std::size_t>(l)];
      c0_min = std::min(c0_min, c.c0);
      c0_max = std::max(c0_max, c.c0);
      c1_min = std::min(c1_min, c.c1);
      c1_max = std::max(c1_max, c.c1);
    }
    v0_lo += c0_min;
    v0_hi += c0_max;
    v1_lo += c1_min;
    v1_hi += c1_max;
  }
  return excludes(box, t, v0_lo, v0_hi, v1_lo, v1_hi);
}

namespace {

// sqrt(V) >= lin.first + lin.second * V on [a, b] (chord).
std::pair<double, double> sqrt_below(double a, double b) {
  if (!(b > a)) return {std::sqrt(b), 0.0};
  const double s = (std::sqrt(b) - std::sqrt(a)) / (b - a);
  return {std::sqrt(a) - s * a, s};
}

// sqrt(V) <= lin.first + lin.second * V everywhere (tangent at the midpoint).
std::pair<double, double> sqrt_above(double a, double b) {
  if (!(b > a)) return {std::sqrt(b), 0.0};
  const double m = 0.5 * (a + b);
  const double r = std::sqrt(m);
  return {0.5 * r, 0.5 / r};
}

}  // namespace

bool AllocationModel::excludes(const BitBox& box, double t, double v0_lo, double v0_hi, double v1_lo,
                               double v1_hi) const {
  // beta < t at x  <=>  F(x) = Psi - z sqrt(V0) + t sqrt(V1) > 0. Bounding each
  // sqrt by an affine function of V makes F separable, so its maximum over the
  // box and budget is at most the LP value of a multiple-choice knapsack.
  const auto [k0, s0] = z_ >= 0.0 ? sqrt_below(v0_lo, v0_hi) : sqrt_above(v0_lo, v0_hi);
  const auto [k1, s1] = t <= 0.0 ? sqrt_below(v1_lo, v1_hi) : sqrt_above(v1_lo, v1_hi);
  double total = -z_ * k0 + t * k1;
  const double w0 = -z_ * s0;
  const double w1 = t * s1;

  const std::size_t m = sensors_.size();
  const double capacity = budget_ + kBudgetSlack - total_power(box.lo);
  if (capacity < 0.0) return true;

  struct Segment {
    double slope;
    double cost;
  };
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& tab = sensors_[i].contrib;
    auto value = [&](int l) {
      const Contribution& c = tab[static_cast<std::size_t>(l)];
      return c.psi + w0 * c.c0 + w1 * c.c1;
    };
    const int lo = box.lo[i];
    const double base_cost = min_power(i, lo);
    const double base_value = value(lo);
    total += base_value;
    // Upper concave hull of (cost, value) from the base point, increasing part only.
    double px = 0.0, py = 0.0;
    int l = lo;
    while (l < box.hi[i]) {
      double best_slope = 0.0;
      int best_l = -1;
      for (int k = l + 1; k <= box.hi[i]; ++k) {
        const double cost = min_power(i, k) - base_cost;
        if (cost > capacity) break;
        const double gain = value(k) - base_value - py;
        const double slope = gain / (cost - px);
        if (slope > best_slope || (best_l >= 0 && slope == best_slope)) {
          best_slope = slope;
          best_l = k;
        }
      }
      if (best_l < 0) break;
      const double cost = min_power(i, best_l) - base_cost;
      segments.push_back({best_slope, cost - px});
      px = cost;
      py = value(best_l) - base_value;
      l = best_l;
    }
  }
  std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.slope > b.slope; });
  double left = capacity;
  for (const Segment& seg : segments) {
    if (left <= 0.0) break;
    const double take = std::min(left, seg.cost);
    total += seg.slope * take;
    left -= take;
  }
  return total <= 0.0;
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct Candidate {
  std::vector<int> bits;
  double beta = kInf;
  double power = kInf;
};

// Strict preference: lower beta; among ties less total power, then the
// lexicographically smaller minimal-power vector.
bool better(const AllocationModel& model, const Candidate& a, const Candidate& b) {
  if (!ties(a.beta, b.beta)) return a.beta < b.beta;
  if (a.power != b.power) return a.power < b.power;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const double pa = model.min_power(i, a.bits[i]);
    const double pb = model.min_power(i, b.bits[i]);
    if (pa != pb) return pa < pb;
  }
  return false;
}

Candidate evaluate(const AllocationModel& model, std::vector<int> bits) {
  Candidate c;
  c.beta = model.beta(bits);
  c.power = model.total_power(bits);
  c.bits = std::move(bits);
  return c;
}

// Coordinate moves on the bit lattice projected onto the budget: raise one
// budget, trade one bit level between two sensors, or swap two budgets.
// Takes the best improving move until none is left.
Candidate refine(const AllocationModel& model, Candidate cur) {
  const std::size_t m = model.size();
  for (int iter = 0; iter < 10000; ++iter) {
    Candidate best = cur;
    std::vector<int> trial = cur.bits;
    auto consider = [&] {
      if (!model.feasible(trial)) return;
      Candidate c = evaluate(model, trial);
      if (better(model, c, best)) best = std::move(c);
    };
    for (std::size_t i = 0; i < m; ++i) {
      if (trial[i] < model.cap(i)) {
        ++trial[i];
        consider();
        for (std::size_t j = 0; j < m; ++j) {
          if (j == i || trial[j] == 0) continue;
          --trial[j];
          consider();
          ++trial[j];
        }
        --trial[i];
      }
      for (std::size_t j = i + 1; j < m; ++j) {
        if (trial[i] == trial[j]) continue;
        std::swap(trial[i], trial[j]);
        if (trial[i] <= model.cap(i) && trial[j] <= model.cap(j)) consider();
        std::swap(trial[i], trial[j]);
      }
    }
    if (!better(model, best, cur)) break;
    cur = std::move(best);
  }
  return cur;
}

std::vector<int> bits_of(const AllocationModel& model, std::span<const double> powers) {
  std::vector<int> bits(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const SensorSite& s = model.scenario().sites[i];
    bits[i] = std::min(model.cap(i), bits_for_power(powers[i], s.channel_gain, s.comm_noise_var));
  }
  return bits;
}

// Local optimum from several starting allocations.
Candidate multistart(const AllocationModel& model) {
  const std::size_t m = model.size();
  const double budget = model.budget();
  std::vector<std::vector<double>> starts;
  starts.emplace_back(m, 0.0);
  starts.emplace_back(m, budget / static_cast<double>(m));
  {
    std::vector<double> p(m);
    double q_total = 0.0;
    for (const auto& s : model.scenario().sites) q_total += s.channel_quality();
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = q_total > 0.0 ? budget * model.scenario().sites[i].channel_quality() / q_total : 0.0;
    }
    starts.push_back(std::move(p));
  }
  {
    std::vector<double> p(m, 0.0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (model.scenario().sites[i].channel_quality() > model.scenario().sites[best].channel_quality()) best = i;
    }
    p[best] = budget;
    starts.push_back(std::move(p));
  }
  Candidate incumbent;
  for (const auto& p : starts) {
    std::vector<int> bits = bits_of(model, p);
    if (!model.feasible(bits)) continue;
    Candidate c = refine(model, evaluate(model, std::move(bits)));
    if (incumbent.bits.empty() || better(model, c, incumbent)) incumbent = std::move(c);
  }
  return incumbent;
}

struct Node {
  BitBox box;
  double lower;
  std::size_t seq;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.lower != b.lower) return a.lower > b.lower;
    return a.seq > b.seq;
  }
};

// Spend what the chosen budgets leave over, pro rata to their minimal powers
// (evenly when nothing was bought), keeping it only if beta does not worsen.
PowerAllocation finalize(const AllocationModel& model, const Candidate& best) {
  const std::size_t m = model.size();
  const double budget = model.budget();
  const Scenario& sc = model.scenario();
  std::vector<double> floor_powers(m);
  for (std::size_t i = 0; i < m; ++i) floor_powers[i] = model.min_power(i, best.bits[i]);
  double spent = 0.0;
  for (double p : floor_powers) spent += p;

  std::vector<double> spread(m);
  if (spent > 0.0) {
    const double scale = budget / spent;
    for (std::size_t i = 0; i < m; ++i) spread[i] = std::max(floor_powers[i], floor_powers[i] * scale);
  } else {
    std::fill(spread.begin(), spread.end(), budget / static_cast<double>(m));
  }
  double total = 0.0;
  for (double p : spread) total += p;
  for (std::size_t i = 0; total > budget && i < m; ++i) {
    // Rounding overshoot only; pull the largest entries down by an ulp.
    const auto it = std::max_element(spread.begin(), spread.end());
    *it = std::nextafter(*it, 0.0);
    total = 0.0;
    for (double p : spread) total += p;
  }

  const double p_fa = model.p_fa();
  const double beta_floor = beta_objective(floor_powers, sc, p_fa);
  const double beta_spread = beta_objective(spread, sc, p_fa);
  PowerAllocation out;
  out.budget = budget;
  const bool use_spread = beta_spread <= beta_floor || ties(beta_spread, beta_floor);
  out.powers = use_spread ? spread : floor_powers;
  out.objective = use_spread ? beta_spread : beta_floor;
  out.bits.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.bits[i] = bits_for_power(out.powers[i], sc.sites[i].channel_gain, sc.sites[i].comm_noise_var);
  }
  out.p_d = std::isinf(out.objective) && out.objective > 0.0 ? p_fa : q_function(out.objective);
  return out;
}

}  // namespace

PowerAllocation branch_and_bound(const Scenario& scenario, double budget, double p_fa, double tolerance) {
  BnbOptions opt;
  opt.tolerance = tolerance;
  return branch_and_bound(scenario, budget, p_fa, opt);
}

PowerAllocation branch_and_bound(const Scenario& scenario, double budget, double p_fa, const BnbOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("branch_and_bound: tolerance must be positive");
  if (scenario.size() == 0) throw std::invalid_argument("branch_and_bound: empty scenario");
  const AllocationModel model(scenario, budget, p_fa);
  const double eps = options.tolerance;

  Candidate incumbent = multistart(model);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::size_t seq = 0;
  {
    BitBox root = model.root();
    const BoxBounds b = model.bound(root);
    open.push({std::move(root), b.lower, seq++});
  }

  std::size_t explored = 0;
  while (!open.empty() && explored < options.node_budget) {
    Node node = open.top();
    open.pop();
    if (node.lower >= incumbent.beta - eps) continue;
    ++explored;

    const BoxBounds b = model.bound(node.box);
    if (options.on_node) options.on_node(node.box, b);
    if (!b.feasible || b.lower >= incumbent.beta - eps) continue;

    Candidate corner = evaluate(model, node.box.lo);
    if (better(model, corner, incumbent)) incumbent = refine(model, std::move(corner));

    // Branch on the sensor with the widest bit range; split it at its middle level.
    std::size_t pick = 0;
    int width = -1;
    for (std::size_t i = 0; i < model.size(); ++i) {
      const int w = node.box.hi[i] - node.box.lo[i];
      if (w > width) {
        width = w;
        pick = i;
      }
    }
    if (width <= 0) continue;  // single bit vector, fully evaluated above
    const int mid = node.box.lo[pick] + (width + 1) / 2;
    Node left{node.box, b.lower, seq++};
    left.box.hi[pick] = mid - 1;
    Node right{node.box, b.lower, seq++};
    right.box.lo[pick] = mid;
    for (Node* child : {&left, &right}) {
      const BoxBounds cb = model.bound(child->box);
      if (!cb.feasible) continue;
      child->lower = std::max(cb.lower, b.lower);
      if (child->lower >= incumbent.beta - eps) continue;
      open.push(std::move(*child));
    }
  }

  double best_open = kInf;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> rest = open;
  while (!rest.empty()) {
    if (rest.top().lower < incumbent.beta - eps) {
      best_open = rest.top().lower;
      break;
    }
    rest.pop();
  }

  PowerAllocation out = finalize(model, incumbent);
  out.nodes = explored;
  out.converged = std::isinf(best_open);
  out.gap = out.converged ? 0.0 : std::max(0.0, incumbent.beta - best_open);
  return out;
}

PowerAllocation exhaustive_grid_oracle(const Scenario& scenario, double budget, double p_fa, int grid_steps) {
  const std::size_t m = scenario.size();
  if (m == 0 || m > 4) throw std::invalid_argument("exhaustive_grid_oracle: requires 1 <= M <= 4");
  if (grid_steps <= 0) throw std::invalid_argument("exhaustive_grid_oracle: grid_steps must be positive");
  const AllocationModel model(scenario, budget, p_fa);
  const double step = budget / grid_steps;

  // bits_at[i][k]: bit budget of sensor i at power k * step.
  std::vector<std::vector<int>> bits_at(m, std::vector<int>(static_cast<std::size_t>(grid_steps) + 1));
  for (std::size_t i = 0; i < m; ++i) {
    const SensorSite& s = scenario.sites[i];
    for (int k = 0; k <= grid_steps; ++k) {
      bits_at[i][static_cast<std::size_t>(k)] =
          std::min(model.cap(i), bits_for_power(k * step, s.channel_gain, s.comm_noise_var));
    }
  }

  std::vector<int> k(m, 0), bits(m, 0), best_k(m, 0);
  double best = kInf;
  bool have = false;
  // Odometer over {k : sum k <= grid_steps} in lexicographic order.
  auto visit = [&](auto&& self, std::size_t i, int remaining) -> void {
    if (i == m) {
      const double beta = model.beta(bits);
      if (!have || beta < best) {
        best = beta;
        best_k = k;
        have = true;
      }
      return;
    }
    for (int ki = 0; ki <= remaining; ++ki) {
      k[i] = ki;
      bits[i] = bits_at[i][static_cast<std::size_t>(ki)];
      self(self, i + 1, remaining - ki);
    }
    k[i] = 0;
  };
  visit(visit, 0, grid_steps);

  PowerAllocation out;
  out.budget = budget;
  out.powers.resize(m);
  out.bits.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.powers[i] = best_k[i] * step;
    out.bits[i] = bits_for_power(out.powers[i], scenario.sites[i].channel_gain, scenario.sites[i].comm_noise_var);
  }
  out.objective = beta_objective(out.powers, scenario, p_fa);
  out.p_d = std::isinf(out.objective) && out.objective > 0.0 ? p_fa : q_function(out.objective);
  out.nodes = 0;
  return out;
}

}  // namespace qfusion

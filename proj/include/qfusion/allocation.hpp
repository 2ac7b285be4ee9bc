#pragma once
// Transmit-power allocation maximizing the closed-form detection probability
// of the quantized optimal rule under an aggregate power budget.
//
// The objective is beta(p), the argument of Q in the detection probability
// (P_d = Q(beta)), so the search minimizes beta. beta depends on p only through
// the bit vector L_i = bits_for_power(p_i, h_i, zeta_i), a staircase in each
// coordinate. The branch-and-bound therefore works on power boxes whose faces
// sit on bit boundaries: a box is a per-sensor range of bit budgets
// [lo_i, hi_i], i.e. powers in [P_i(lo_i), P_i(hi_i + 1)) with P_i the minimal
// power of a budget.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qfusion/scenario.hpp"

namespace qfusion {

struct PowerAllocation {
  std::vector<double> powers;  ///< p_i
  std::vector<int> bits;       ///< bits_for_power(p_i, h_i, zeta_i)
  double budget = 0.0;         ///< P_t
  double objective = 0.0;      ///< beta at `powers` (+inf when every sensor is censored)
  double p_d = 0.0;            ///< Q(objective), or p_fa when nothing is transmitted
  double gap = 0.0;            ///< objective minus the best open lower bound (0 when proven)
  std::size_t nodes = 0;       ///< nodes explored
  bool converged = true;       ///< false when the node budget ran out
};

/// beta(p) for the quantized optimal rule; +inf when no sensor is informative.
double beta_objective(std::span<const double> powers, const Scenario& scenario, double p_fa);

/// A box of bit budgets (inclusive on both ends).
struct BitBox {
  std::vector<int> lo;
  std::vector<int> hi;
};

struct BoxBounds {
  bool feasible = false;  ///< box intersects the budget simplex
  double lower = 0.0;     ///< F_lb: no point of box and simplex has smaller beta
  double upper = 0.0;     ///< F_ub: beta at the box's cheapest corner
};

/// Precomputed per-sensor contributions of every reachable bit budget.
/// Shared by the search and the grid oracle.
class AllocationModel {
 public:
  AllocationModel(const Scenario& scenario, double budget, double p_fa);

  [[nodiscard]] std::size_t size() const noexcept { return sensors_.size(); }
  [[nodiscard]] double budget() const noexcept { return budget_; }
  [[nodiscard]] double p_fa() const noexcept { return p_fa_; }
  [[nodiscard]] const Scenario& scenario() const noexcept { return scenario_; }
  /// Most bits sensor i can reach with the whole budget.
  [[nodiscard]] int cap(std::size_t i) const noexcept { return static_cast<int>(sensors_[i].pmin.size()) - 1; }
  /// Minimal power buying `bits` on sensor i.
  [[nodiscard]] double min_power(std::size_t i, int bits) const { return sensors_[i].pmin.at(static_cast<std::size_t>(bits)); }
  [[nodiscard]] double total_power(std::span<const int> bits) const;
  [[nodiscard]] bool feasible(std::span<const int> bits) const;

  /// beta of a bit vector from the tables.
  [[nodiscard]] double beta(std::span<const int> bits) const;

  /// Tightens `box` against the budget (in place) and bounds beta over it.
  BoxBounds bound(BitBox& box) const;

  [[nodiscard]] BitBox root() const;

  /// True when no budget-feasible bit vector in `box` has beta < t.
  [[nodiscard]] bool excludes(const BitBox& box, double t) const;

 private:
  struct Contribution {
    double c0 = 0.0;   // a^2 Var{U|H0}
    double psi = 0.0;  // a (E{U|H1} - E{U|H0})
    double c1 = 0.0;   // a^2 Var{U|H1}
  };
  struct Sensor {
    std::vector<double> pmin;          // indexed by bits
    std::vector<Contribution> contrib;  // indexed by bits
  };

  [[nodiscard]] double beta_from_sums(double v0, double psi, double v1) const;
  [[nodiscard]] bool excludes(const BitBox& box, double t, double v0_lo, double v0_hi, double v1_lo,
                              double v1_hi) const;

  Scenario scenario_;
  double budget_;
  double p_fa_;
  double z_;
  std::vector<Sensor> sensors_;
};

struct BnbOptions {
  double tolerance = 1e-4;            ///< epsilon on beta
  std::size_t node_budget = 100000;
  /// Called with every explored box (after tightening) and its bounds.
  std::function<void(const BitBox&, const BoxBounds&)> on_node;
};

/// Spatial branch-and-bound over bit-aligned power boxes. The returned
/// objective is within `tolerance` of the global minimum of beta over
/// {p >= 0, sum p <= P_t} unless `converged` is false, in which case `gap`
/// reports the remaining optimality gap.
PowerAllocation branch_and_bound(const Scenario& scenario, double budget, double p_fa, double tolerance = 1e-4);
PowerAllocation branch_and_bound(const Scenario& scenario, double budget, double p_fa, const BnbOptions& options);

/// Brute-force minimum of beta over p = k * P_t / grid_steps with k integer,
/// sum k <= grid_steps. Ties go to the lexicographically smallest power
/// vector. Requires M <= 4.
PowerAllocation exhaustive_grid_oracle(const Scenario& scenario, double budget, double p_fa, int grid_steps);

}  // namespace qfusion

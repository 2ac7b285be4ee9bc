#pragma once

namespace qfusion {

/// Gaussian tail probability Q(x) = P(Z > x), Z ~ N(0, 1).
double q_function(double x) noexcept;

/// Inverse of q_function on (0, 1). Throws std::domain_error outside (0, 1).
double q_inverse(double p);

}  // namespace qfusion

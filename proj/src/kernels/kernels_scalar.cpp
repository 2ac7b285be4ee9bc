// Scalar reference kernels. The four-lane accumulation order here is the
// contract every SIMD variant reproduces exactly.

#include "qfusion/kernels.hpp"

namespace qfusion::kernels::scalar {

double sum_of_squares(const double* x, std::size_t n) noexcept {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (int l = 0; l < 4; ++l) {
      const double v = x[k + l];
      lane[l] = lane[l] + v * v;
    }
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; k < n; ++k) acc = acc + x[k] * x[k];
  return acc;
}

double weighted_sq_dev_sum(const double* w, const double* c, const double* x, std::size_t n) noexcept {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (int l = 0; l < 4; ++l) {
      if (w[k + l] != 0.0) {
        const double d = x[k + l] - c[k + l];
        lane[l] = lane[l] + w[k + l] * (d * d);
      }
    }
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; k < n; ++k) {
    if (w[k] != 0.0) {
      const double d = x[k] - c[k];
      acc = acc + w[k] * (d * d);
    }
  }
  return acc;
}

double weighted_sum(const double* w, const double* x, std::size_t n) noexcept {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (int l = 0; l < 4; ++l) {
      if (w[k + l] != 0.0) lane[l] = lane[l] + w[k + l] * x[k + l];
    }
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; k < n; ++k) {
    if (w[k] != 0.0) acc = acc + w[k] * x[k];
  }
  return acc;
}

std::size_t count_at_least(const double* x, std::size_t n, double threshold) noexcept {
  std::size_t count = 0;
  for (std::size_t k = 0; k < n; ++k) count += (x[k] >= threshold) ? 1 : 0;
  return count;
}

void affine(const double* z, std::size_t n, double scale, double shift, double* out) noexcept {
  for (std::size_t k = 0; k < n; ++k) out[k] = scale * z[k] + shift;
}

}  // namespace qfusion::kernels::scalar

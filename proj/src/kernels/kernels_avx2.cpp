// AVX2 kernels. Compiled with -mavx2 only; the dispatcher guards every call
// with a CPUID check. No FMA is used so that each lane rounds exactly like the
// scalar reference.

#include <immintrin.h>

#include "qfusion/kernels.hpp"

namespace qfusion::kernels::avx2 {
namespace {

// Combine lanes in the reference order (l0 + l1) + (l2 + l3).
inline double reduce_lanes(__m256d v) noexcept {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

double sum_of_squares(const double* x, std::size_t n) noexcept {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d v = _mm256_loadu_pd(x + k);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double total = reduce_lanes(acc);
  for (; k < n; ++k) total = total + x[k] * x[k];
  return total;
}

double weighted_sq_dev_sum(const double* w, const double* c, const double* x, std::size_t n) noexcept {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d wv = _mm256_loadu_pd(w + k);
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
    const __m256d term = _mm256_mul_pd(wv, _mm256_mul_pd(d, d));
    const __m256d live = _mm256_cmp_pd(wv, zero, _CMP_NEQ_UQ);
    acc = _mm256_add_pd(acc, _mm256_blendv_pd(zero, term, live));
  }
  double total = reduce_lanes(acc);
  for (; k < n; ++k) {
    if (w[k] != 0.0) {
      const double d = x[k] - c[k];
      total = total + w[k] * (d * d);
    }
  }
  return total;
}

double weighted_sum(const double* w, const double* x, std::size_t n) noexcept {
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d wv = _mm256_loadu_pd(w + k);
    const __m256d term = _mm256_mul_pd(wv, _mm256_loadu_pd(x + k));
    const __m256d live = _mm256_cmp_pd(wv, zero, _CMP_NEQ_UQ);
    acc = _mm256_add_pd(acc, _mm256_blendv_pd(zero, term, live));
  }
  double total = reduce_lanes(acc);
  for (; k < n; ++k) {
    if (w[k] != 0.0) total = total + w[k] * x[k];
  }
  return total;
}

std::size_t count_at_least(const double* x, std::size_t n, double threshold) noexcept {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t count = 0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d ge = _mm256_cmp_pd(_mm256_loadu_pd(x + k), t, _CMP_GE_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(ge))));
  }
  for (; k < n; ++k) count += (x[k] >= threshold) ? 1 : 0;
  return count;
}

void affine(const double* z, std::size_t n, double scale, double shift, double* out) noexcept {
  const __m256d s = _mm256_set1_pd(scale);
  const __m256d b = _mm256_set1_pd(shift);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_mul_pd(s, _mm256_loadu_pd(z + k)), b));
  }
  for (; k < n; ++k) out[k] = scale * z[k] + shift;
}

}  // namespace qfusion::kernels::avx2

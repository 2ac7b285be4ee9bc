// Runtime selection between kernel variants. No intrinsics in this file.

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "qfusion/kernels.hpp"

namespace qfusion::kernels {

#if !defined(QFUSION_HAVE_AVX2)
// Link-time stubs so the explicit namespace resolves on builds without AVX2.
// They are never reached: isa_available(Isa::avx2) is false there.
namespace avx2 {
double sum_of_squares(const double* x, std::size_t n) noexcept { return scalar::sum_of_squares(x, n); }
double weighted_sq_dev_sum(const double* w, const double* c, const double* x, std::size_t n) noexcept {
  return scalar::weighted_sq_dev_sum(w, c, x, n);
}
double weighted_sum(const double* w, const double* x, std::size_t n) noexcept {
  return scalar::weighted_sum(w, x, n);
}
std::size_t count_at_least(const double* x, std::size_t n, double threshold) noexcept {
  return scalar::count_at_least(x, n, threshold);
}
void affine(const double* z, std::size_t n, double scale, double shift, double* out) noexcept {
  scalar::affine(z, n, scale, shift, out);
}
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(QFUSION_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect_default() noexcept {
  // QFUSION_SIMD=scalar pins the reference path.
  if (const char* env = std::getenv("QFUSION_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& selection() noexcept {
  static std::atomic<Isa> isa{detect_default()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() noexcept { return selection().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept {
  if (!isa_available(isa)) return false;
  selection().store(isa, std::memory_order_relaxed);
  return true;
}

double sum_of_squares(std::span<const double> x) noexcept {
  if (active_isa() == Isa::avx2) return avx2::sum_of_squares(x.data(), x.size());
  return scalar::sum_of_squares(x.data(), x.size());
}

double weighted_sq_dev_sum(std::span<const double> w, std::span<const double> c,
                           std::span<const double> x) noexcept {
  if (active_isa() == Isa::avx2) return avx2::weighted_sq_dev_sum(w.data(), c.data(), x.data(), w.size());
  return scalar::weighted_sq_dev_sum(w.data(), c.data(), x.data(), w.size());
}

double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept {
  if (active_isa() == Isa::avx2) return avx2::weighted_sum(w.data(), x.data(), w.size());
  return scalar::weighted_sum(w.data(), x.data(), w.size());
}

std::size_t count_at_least(std::span<const double> x, double threshold) noexcept {
  if (active_isa() == Isa::avx2) return avx2::count_at_least(x.data(), x.size(), threshold);
  return scalar::count_at_least(x.data(), x.size(), threshold);
}

void affine(std::span<const double> z, double scale, double shift, std::span<double> out) noexcept {
  if (active_isa() == Isa::avx2) return avx2::affine(z.data(), z.size(), scale, shift, out.data());
  scalar::affine(z.data(), z.size(), scale, shift, out.data());
}

}  // namespace qfusion::kernels

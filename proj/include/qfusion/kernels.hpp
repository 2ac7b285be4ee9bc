#pragma once
// Data-parallel inner loops, one scalar reference and one AVX2 variant each.
//
// The dispatcher picks the widest variant the CPU supports at first use.
// Reductions in every variant accumulate in four interleaved lanes and combine
// them as (l0 + l1) + (l2 + l3) before the tail, so scalar and SIMD paths
// return bit-identical results. Results therefore never depend on the host ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace qfusion::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// True when this build contains the variant and the running CPU can execute it.
bool isa_available(Isa isa) noexcept;

/// ISA currently used by the dispatching entry points.
Isa active_isa() noexcept;

/// Forces a variant (tests, benchmarking). Returns false and leaves the
/// selection unchanged when the variant is unavailable.
bool set_active_isa(Isa isa) noexcept;

/// Sum of x[k]^2.
double sum_of_squares(std::span<const double> x) noexcept;

/// Sum of w[k] * (x[k] - c[k])^2 over entries with w[k] != 0. Entries with zero
/// weight are skipped entirely, so x[k] may hold NaN there.
double weighted_sq_dev_sum(std::span<const double> w, std::span<const double> c,
                           std::span<const double> x) noexcept;

/// Sum of w[k] * x[k] over entries with w[k] != 0 (same skipping rule).
double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept;

/// Number of entries with x[k] >= threshold.
std::size_t count_at_least(std::span<const double> x, double threshold) noexcept;

/// out[k] = scale * z[k] + shift.
void affine(std::span<const double> z, double scale, double shift, std::span<double> out) noexcept;

/// Explicit variants, exposed for equivalence tests.
namespace scalar {
double sum_of_squares(const double* x, std::size_t n) noexcept;
double weighted_sq_dev_sum(const double* w, const double* c, const double* x, std::size_t n) noexcept;
double weighted_sum(const double* w, const double* x, std::size_t n) noexcept;
std::size_t count_at_least(const double* x, std::size_t n, double threshold) noexcept;
void affine(const double* z, std::size_t n, double scale, double shift, double* out) noexcept;
}  // namespace scalar

namespace avx2 {
double sum_of_squares(const double* x, std::size_t n) noexcept;
double weighted_sq_dev_sum(const double* w, const double* c, const double* x, std::size_t n) noexcept;
double weighted_sum(const double* w, const double* x, std::size_t n) noexcept;
std::size_t count_at_least(const double* x, std::size_t n, double threshold) noexcept;
void affine(const double* z, std::size_t n, double scale, double shift, double* out) noexcept;
}  // namespace avx2

}  // namespace qfusion::kernels

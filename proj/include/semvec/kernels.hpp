#pragma once

// Dense inner loops used by the autodiff engine and the retrieval scans.
//
// Each kernel has a portable scalar reference and an AVX2/FMA variant. The
// variant is compiled in a separate translation unit with target flags and
// picked at startup from CPUID. SEMVEC_SIMD=scalar|avx2|auto overrides the
// choice; select_backend() does the same programmatically.
//
// Matrices are dense row-major, `rows x cols`.

#include <cstddef>
#include <string_view>

namespace semvec::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend backend) noexcept;

template <typename Real>
struct KernelTable {
  Backend backend;
  Real (*dot)(const Real* a, const Real* b, std::size_t n);
  // y = W x
  void (*gemv)(const Real* w, std::size_t rows, std::size_t cols,
               const Real* x, Real* y);
  // gx += W^T g
  void (*gemv_t_acc)(const Real* w, std::size_t rows, std::size_t cols,
                     const Real* g, Real* gx);
  // gw += g x^T
  void (*ger_acc)(Real* gw, std::size_t rows, std::size_t cols,
                  const Real* g, const Real* x);
  // y += a x
  void (*axpy)(Real a, const Real* x, Real* y, std::size_t n);
};

template <typename Real>
const KernelTable<Real>& scalar_kernels() noexcept;

// Null when the variant was not compiled in or the CPU lacks AVX2/FMA.
template <typename Real>
const KernelTable<Real>* avx2_kernels() noexcept;

template <typename Real>
const KernelTable<Real>& active_kernels() noexcept;

bool avx2_available() noexcept;
Backend active_backend() noexcept;
// Returns false (and leaves the selection unchanged) if unavailable.
bool select_backend(Backend backend) noexcept;

namespace detail {
// Provided by the AVX2 translation unit; null when not compiled in.
const KernelTable<float>* avx2_table_f32() noexcept;
const KernelTable<double>* avx2_table_f64() noexcept;
}  // namespace detail

}  // namespace semvec::kernels

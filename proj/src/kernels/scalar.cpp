#include "semvec/kernels.hpp"

namespace semvec::kernels {

namespace {

template <typename Real>
Real dot_scalar(const Real* a, const Real* b, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Real>
void gemv_scalar(const Real* w, std::size_t rows, std::size_t cols,
                 const Real* x, Real* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(w + r * cols, x, cols);
  }
}

template <typename Real>
void axpy_scalar(Real a, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename Real>
void gemv_t_acc_scalar(const Real* w, std::size_t rows, std::size_t cols,
                       const Real* g, Real* gx) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != Real(0)) axpy_scalar(g[r], w + r * cols, gx, cols);
  }
}

template <typename Real>
void ger_acc_scalar(Real* gw, std::size_t rows, std::size_t cols,
                    const Real* g, const Real* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != Real(0)) axpy_scalar(g[r], x, gw + r * cols, cols);
  }
}

template <typename Real>
constexpr KernelTable<Real> kScalarTable{
    Backend::Scalar,      &dot_scalar<Real>,     &gemv_scalar<Real>,
    &gemv_t_acc_scalar<Real>, &ger_acc_scalar<Real>, &axpy_scalar<Real>,
};

}  // namespace

template <>
const KernelTable<float>& scalar_kernels<float>() noexcept {
  return kScalarTable<float>;
}

template <>
const KernelTable<double>& scalar_kernels<double>() noexcept {
  return kScalarTable<double>;
}

}  // namespace semvec::kernels

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "semvec/kernels.hpp"

namespace semvec::kernels {

#ifndef SEMVEC_HAVE_AVX2
namespace detail {
const KernelTable<float>* avx2_table_f32() noexcept { return nullptr; }
const KernelTable<double>* avx2_table_f64() noexcept { return nullptr; }
}  // namespace detail
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  const bool can = avx2_available();
  if (const char* env = std::getenv("SEMVEC_SIMD")) {
    const std::string_view v(env);
    if (v == "scalar") return Backend::Scalar;
  }
  return can ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& selected() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() noexcept {
  static const bool available =
      cpu_has_avx2() && detail::avx2_table_f32() != nullptr;
  return available;
}

template <>
const KernelTable<float>* avx2_kernels<float>() noexcept {
  return avx2_available() ? detail::avx2_table_f32() : nullptr;
}

template <>
const KernelTable<double>* avx2_kernels<double>() noexcept {
  return avx2_available() ? detail::avx2_table_f64() : nullptr;
}

Backend active_backend() noexcept {
  return selected().load(std::memory_order_relaxed);
}

bool select_backend(Backend backend) noexcept {
  if (backend == Backend::Avx2 && !avx2_available()) return false;
  selected().store(backend, std::memory_order_relaxed);
  return true;
}

template <typename Real>
const KernelTable<Real>& active_kernels() noexcept {
  if (active_backend() == Backend::Avx2) {
    if (const auto* table = avx2_kernels<Real>()) return *table;
  }
  return scalar_kernels<Real>();
}

template const KernelTable<float>& active_kernels<float>() noexcept;
template const KernelTable<double>& active_kernels<double>() noexcept;

}  // namespace semvec::kernels

#include "semvec/ndiff/optim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace semvec::ndiff {

namespace {

void check_rate(double rate, const char* what) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must be in [0, 1)");
  }
}

}  // namespace

template <typename Real>
double clip_global_norm(Gradients<Real>& grads, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip norm must be positive");
  const double norm = grads.global_norm();
  if (norm > c) grads.scale(static_cast<Real>(c / norm));
  return norm;
}

template <typename Real>
void rmsprop_momentum_step(ParamStore<Real>& store, const Gradients<Real>& grads,
                           const RmsPropOptions& options) {
  if (grads.size() != store.size()) {
    throw std::invalid_argument("gradients do not match parameter store");
  }
  const Real rho = static_cast<Real>(options.rho);
  const Real mom = static_cast<Real>(options.momentum);
  const Real lr = static_cast<Real>(options.learning_rate);
  const Real eps = static_cast<Real>(options.epsilon);
  for (std::uint32_t p = 0; p < store.size(); ++p) {
    const ParamId id{p};
    auto& value = store.value(id).values;
    auto& s = store.mean_square(id);
    auto& v = store.velocity(id);
    const auto g = grads[id];
    for (std::size_t i = 0; i < value.size(); ++i) {
      s[i] = rho * s[i] + (Real(1) - rho) * g[i] * g[i];
      v[i] = mom * v[i] + lr * g[i] / std::sqrt(s[i] + eps);
      value[i] -= v[i];
    }
  }
}

template <typename Real>
Tensor<Real> init_gaussian(Shape shape, double stddev, SplitMix64& rng) {
  if (!(stddev > 0.0)) throw std::invalid_argument("init stddev must be positive");
  Tensor<Real> t(std::move(shape));
  for (Real& v : t.values) v = static_cast<Real>(stddev * rng.gaussian());
  return t;
}

template <typename Real>
std::vector<Real> dropout_mask(std::size_t length, double rate, SplitMix64& rng) {
  check_rate(rate, "dropout rate");
  std::vector<Real> mask(length, Real(1));
  if (rate == 0.0) return mask;
  const Real keep = static_cast<Real>(1.0 / (1.0 - rate));
  for (Real& m : mask) m = rng.uniform() < rate ? Real(0) : keep;
  return mask;
}

template <typename Real>
std::vector<Real> binary_noise_mask(std::size_t length, double kappa,
                                    SplitMix64& rng, NoiseMode mode) {
  check_rate(kappa, "noise fraction");
  std::vector<Real> mask(length, Real(1));
  if (kappa == 0.0) return mask;
  if (mode == NoiseMode::Bernoulli) {
    for (Real& m : mask) {
      if (rng.uniform() < kappa) m = Real(0);
    }
    return mask;
  }
  const auto zeros = static_cast<std::size_t>(
      std::floor(kappa * static_cast<double>(length) + 1e-9));
  // Partial Fisher-Yates: the first `zeros` picks are uniform without
  // replacement.
  std::vector<std::size_t> idx(length);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < zeros; ++i) {
    const std::size_t j = i + rng.below(length - i);
    std::swap(idx[i], idx[j]);
    mask[idx[i]] = Real(0);
  }
  return mask;
}

#define SEMVEC_INSTANTIATE(Real)                                              \
  template double clip_global_norm<Real>(Gradients<Real>&, double);           \
  template void rmsprop_momentum_step<Real>(ParamStore<Real>&,                \
                                            const Gradients<Real>&,           \
                                            const RmsPropOptions&);           \
  template Tensor<Real> init_gaussian<Real>(Shape, double, SplitMix64&);      \
  template std::vector<Real> dropout_mask<Real>(std::size_t, double,          \
                                                SplitMix64&);                 \
  template std::vector<Real> binary_noise_mask<Real>(std::size_t, double,     \
                                                     SplitMix64&, NoiseMode);

SEMVEC_INSTANTIATE(float)
SEMVEC_INSTANTIATE(double)

#undef SEMVEC_INSTANTIATE

}  // namespace semvec::ndiff

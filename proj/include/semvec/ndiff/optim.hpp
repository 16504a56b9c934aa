#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semvec/ndiff/tensor.hpp"
#include "semvec/rng.hpp"

namespace semvec::ndiff {

// Scales every gradient by c / ||g|| when the global norm exceeds c.
// Returns the norm before clipping.
template <typename Real>
double clip_global_norm(Gradients<Real>& grads, double c);

struct RmsPropOptions {
  double learning_rate = 0.01;
  double rho = 0.9;
  double momentum = 0.0;
  double epsilon = 1e-6;
};

// s <- rho s + (1 - rho) g^2
// v <- momentum v + lr g / sqrt(s + eps)
// p <- p - v
template <typename Real>
void rmsprop_momentum_step(ParamStore<Real>& store, const Gradients<Real>& grads,
                           const RmsPropOptions& options);

template <typename Real>
Tensor<Real> init_gaussian(Shape shape, double stddev, SplitMix64& rng);
template <typename Real>
Tensor<Real> init_gaussian(Shape shape, double stddev, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return init_gaussian<Real>(std::move(shape), stddev, rng);
}

// Inverted dropout: each entry kept with probability 1 - rate and scaled by
// 1 / (1 - rate).
template <typename Real>
std::vector<Real> dropout_mask(std::size_t length, double rate, SplitMix64& rng);

enum class NoiseMode {
  ExactCount,  // exactly floor(kappa * length) zeros
  Bernoulli,   // each entry zeroed independently with probability kappa
};

template <typename Real>
std::vector<Real> binary_noise_mask(std::size_t length, double kappa,
                                    SplitMix64& rng,
                                    NoiseMode mode = NoiseMode::ExactCount);

}  // namespace semvec::ndiff

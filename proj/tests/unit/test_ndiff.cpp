#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "semvec/error.hpp"
#include "semvec/ndiff/graph.hpp"
#include "semvec/ndiff/optim.hpp"

using namespace semvec;
using namespace semvec::ndiff;

namespace {

ParamStore<double> random_store(SplitMix64& rng) {
  ParamStore<double> s;
  s.add("W", init_gaussian<double>({3, 4}, 0.7, rng));
  s.add("b", init_gaussian<double>({3}, 0.7, rng));
  s.add("x", init_gaussian<double>({4}, 0.7, rng));
  s.add("y", init_gaussian<double>({3}, 0.7, rng));
  s.add("E", init_gaussian<double>({5, 3}, 0.7, rng));
  return s;
}

}  // namespace

TEST_CASE("forward values") {
  ParamStore<double> s;
  const ParamId w = s.add("W", Tensor<double>({2, 3}, {1, 2, 3, 4, 5, 6}));
  const ParamId b = s.add("b", Tensor<double>({2}, {0.5, -0.5}));
  Graph<double> g(s);
  const NodeId x = g.constant({1, 0, -1});
  const NodeId y = g.affine(w, x, b);
  CHECK(g.value(y)[0] == doctest::Approx(-1.5));
  CHECK(g.value(y)[1] == doctest::Approx(-2.5));
  const NodeId n = g.l2_normalize(g.constant({3, 4}));
  CHECK(g.value(n)[0] == doctest::Approx(0.6));
  CHECK(g.value(n)[1] == doctest::Approx(0.8));
  CHECK(g.scalar(g.norm(g.constant({3, 4}))) == doctest::Approx(5.0));
  const NodeId c = g.concat({g.constant({1}), g.constant({2, 3})});
  CHECK(g.length(c) == 3);
  CHECK(g.value(g.slice(c, 1, 2))[1] == 3);
  CHECK(g.value(g.sigmoid(g.constant({0})))[0] == doctest::Approx(0.5));
  CHECK(g.value(g.param_row(w, 1))[2] == 6);
  // Target 0 with logits (1, 3, 2): max other 3, so 3 - 1 + 0.5.
  CHECK(g.scalar(g.margin_loss(g.constant({1, 3, 2}), 0, 0.5)) == doctest::Approx(2.5));
  CHECK(g.scalar(g.margin_loss(g.constant({5, 3, 2}), 0, 0.5)) == 0.0);
}

TEST_CASE("l2_normalize rejects near-zero input") {
  ParamStore<double> s;
  Graph<double> g(s);
  CHECK_THROWS_AS(g.l2_normalize(g.constant({0, 0})), NumericError);
}

TEST_CASE("non-finite detection") {
  ParamStore<double> s;
  Graph<double> g(s);
  g.set_check_finite(true);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(g.scale(g.constant({1.0}), inf), NumericError);
}

TEST_CASE("every op matches finite differences") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    ParamStore<double> s = random_store(rng);
    const ParamId w = s.at("W"), b = s.at("b"), x = s.at("x"), y = s.at("y"), e = s.at("E");
    const std::size_t target = rng.below(5);
    const double err = semvec::testing::max_gradient_error(s, [&](Graph<double>& g) {
      const NodeId xv = g.param(x);
      const NodeId h = g.tanh(g.affine(w, xv, b));
      const NodeId sg = g.sigmoid(g.affine(w, xv));
      const NodeId yv = g.param(y);
      const NodeId mix = g.add(g.mul(h, sg), g.sub(yv, g.scale(h, 0.3)));
      const NodeId cat = g.concat({mix, g.slice(xv, 1, 2)});
      const NodeId unit = g.l2_normalize(cat);
      const NodeId d = g.dot(unit, g.concat({yv, g.slice(g.param_row(e, 2), 1, 2)}));
      const NodeId scaled = g.scale_by(g.param_row(e, 4), d);
      const NodeId logits = g.concat({scaled, g.slice(unit, 0, 2)});
      const NodeId hinge = g.margin_loss(logits, target, 0.7);
      return g.add(g.add(hinge, g.norm(mix)), g.scale(d, 0.5));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradients accumulate with a seed scale") {
  ParamStore<double> s;
  const ParamId p = s.add("p", Tensor<double>({2}, {1, 2}));
  Gradients<double> grads(s);
  for (int i = 0; i < 2; ++i) {
    Graph<double> g(s);
    const NodeId v = g.param(p);
    g.backward(g.dot(v, v), grads, 0.5);
  }
  CHECK(grads[p][0] == doctest::Approx(2.0));
  CHECK(grads[p][1] == doctest::Approx(4.0));
}

TEST_CASE("global norm clipping") {
  ParamStore<double> s;
  const ParamId a = s.add("a", Tensor<double>({2}));
  const ParamId b = s.add("b", Tensor<double>({1}));
  Gradients<double> g(s);
  g[a][0] = 3;
  g[a][1] = 0;
  g[b][0] = 4;
  CHECK(clip_global_norm(g, 10.0) == doctest::Approx(5.0));
  CHECK(g[b][0] == 4);
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[a][0] == doctest::Approx(0.6));
  CHECK(g[b][0] == doctest::Approx(0.8));
  CHECK(g.global_norm() == doctest::Approx(1.0));
}

TEST_CASE("rmsprop with momentum follows the recurrence") {
  ParamStore<double> s;
  const ParamId p = s.add("p", Tensor<double>({1}, {1.0}));
  Gradients<double> g(s);
  RmsPropOptions o{0.1, 0.9, 0.5, 1e-6};
  double ms = 0, vel = 0, val = 1.0;
  for (double grad : {0.5, -0.25, 1.0}) {
    g[p][0] = grad;
    rmsprop_momentum_step(s, g, o);
    ms = 0.9 * ms + 0.1 * grad * grad;
    vel = 0.5 * vel + 0.1 * grad / std::sqrt(ms + 1e-6);
    val -= vel;
    CHECK(s.value(p).values[0] == doctest::Approx(val).epsilon(1e-12));
    CHECK(s.mean_square(p)[0] == doctest::Approx(ms));
    CHECK(s.velocity(p)[0] == doctest::Approx(vel));
  }
  // First step from zero state: s = 0.1 * 0.25, v = 0.1 * 0.5 / sqrt(0.025 + 1e-6).
  ParamStore<double> t;
  const ParamId q = t.add("q", Tensor<double>({1}, {0.0}));
  Gradients<double> h(t);
  h[q][0] = 0.5;
  rmsprop_momentum_step(t, h, o);
  CHECK(t.value(q).values[0] == doctest::Approx(-0.05 / std::sqrt(0.025001)));
}

TEST_CASE("gaussian init statistics") {
  const auto t = init_gaussian<double>({200, 50}, 0.3, 5);
  const double mean = std::accumulate(t.values.begin(), t.values.end(), 0.0) / 10000.0;
  double var = 0;
  for (double v : t.values) var += (v - mean) * (v - mean);
  var /= 10000.0;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::sqrt(var) == doctest::Approx(0.3).epsilon(0.03));
  CHECK(init_gaussian<double>({3}, 1.0, 5).values == init_gaussian<double>({3}, 1.0, 5).values);
}

TEST_CASE("dropout mask is inverted and unbiased") {
  SplitMix64 rng(1);
  const auto m = dropout_mask<double>(20000, 0.25, rng);
  std::size_t zeros = 0;
  double sum = 0;
  for (double v : m) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    zeros += v == 0.0;
    sum += v;
  }
  CHECK(static_cast<double>(zeros) / 20000.0 == doctest::Approx(0.25).epsilon(0.05));
  CHECK(sum / 20000.0 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(dropout_mask<double>(5, 0.0, rng) == std::vector<double>(5, 1.0));
}

TEST_CASE("noise masks") {
  SplitMix64 rng(2);
  for (std::size_t len : {1, 8, 24, 100}) {
    const auto m = binary_noise_mask<float>(len, 0.61, rng);
    const auto zeros = static_cast<std::size_t>(std::count(m.begin(), m.end(), 0.0f));
    CHECK(zeros == static_cast<std::size_t>(std::floor(0.61 * static_cast<double>(len) + 1e-9)));
    CHECK(static_cast<std::size_t>(std::count(m.begin(), m.end(), 1.0f)) == len - zeros);
  }
  // Each position is equally likely to be zeroed.
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto m = binary_noise_mask<double>(10, 0.3, rng);
    for (int j = 0; j < 10; ++j) hits[j] += m[j] == 0.0;
  }
  for (int h : hits) CHECK(static_cast<double>(h) / 5000.0 == doctest::Approx(0.3).epsilon(0.1));
  const auto b = binary_noise_mask<double>(20000, 0.4, rng, NoiseMode::Bernoulli);
  CHECK(static_cast<double>(std::count(b.begin(), b.end(), 0.0)) / 20000.0 ==
        doctest::Approx(0.4).epsilon(0.05));
  CHECK_THROWS(binary_noise_mask<double>(4, 1.5, rng));
}

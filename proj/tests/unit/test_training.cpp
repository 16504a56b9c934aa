#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "semvec/datagen.hpp"
#include "semvec/error.hpp"
#include "semvec/training.hpp"

using namespace semvec;
using namespace semvec::training;
using models::ModelKind;

namespace {

struct Data {
  Dataset dataset;
  std::vector<Expr> exprs;
  DatasetSpec spec;
};

const Data& simp_poly5() {
  static const Data d = [] {
    Data out;
    out.spec.domain = Domain::Polynomial;
    out.spec.ops = {Op::Add, Op::Sub};
    out.spec.vars = VarOrder::first(3);
    out.spec.max_size = 5;
    out.dataset = generate(out.spec);
    out.exprs = parse_records(out.dataset.records, Domain::Polynomial);
    return out;
  }();
  return d;
}

TrainConfig small(ModelKind kind, std::size_t epochs) {
  TrainConfig c = TrainConfig::defaults(kind);
  c.dim = 16;
  c.embedding = 8;
  c.epochs = epochs;
  c.batch_size = 64;
  return c;
}

TrainResult run(const TrainConfig& c) {
  const Data& d = simp_poly5();
  return train(d.exprs, d.dataset.records, d.spec.domain, d.spec.ops, d.spec.vars, c);
}

}  // namespace

TEST_CASE("numeric helpers") {
  const std::vector<double> r{1, 0};
  const std::vector<double> q{1, 0, 0, 1, -1, 0};
  const std::vector<double> b{0, 0.5, 0};
  const auto l = class_logits(r, q, b);
  CHECK(l == std::vector<double>{1, 0.5, -1});
  const auto p = softmax(l);
  double z = std::exp(1.0) + std::exp(0.5) + std::exp(-1.0);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / z));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  CHECK(margin_loss(l, 0, 1.0) == doctest::Approx(0.5));
  CHECK(margin_loss(l, 0, 0.25) == 0.0);
  CHECK(margin_loss(l, 2, 0.5) == doctest::Approx(2.5));
  CHECK(mu_schedule(0, 4.0) == 0.0);
  CHECK(mu_schedule(1, 4.0) == doctest::Approx(1.0 - 1e-4));
  CHECK(mu_schedule(3, 0.5) == doctest::Approx(1.0 - std::pow(10.0, -1.5)));
  CHECK(curriculum_threshold(0, 6.96, 2.72) == 6);
  CHECK(curriculum_threshold(1, 6.96, 2.72) == 9);
  CHECK(curriculum_threshold(2, 2.8, 2.4) == 7);
  const std::vector<std::uint32_t> sizes{5, 3, 9, 3, 7};
  CHECK(curriculum_filter(sizes, 0, 6.0, 1.0) == std::vector<std::size_t>{0, 1, 3});
  CHECK(curriculum_filter(sizes, 0, 1.0, 0.0) == std::vector<std::size_t>{1, 3});
  CHECK(curriculum_filter(sizes, 3, 6.0, 1.0).size() == 5);
}

TEST_CASE("total loss matches finite differences") {
  const Data& d = simp_poly5();
  SplitMix64 pick(3);
  for (int trial = 0; trial < 100; ++trial) {
    models::ModelConfig mc = models::ModelConfig::defaults(ModelKind::EqNet);
    mc.domain = Domain::Polynomial;
    mc.ops = d.spec.ops;
    mc.vars = d.spec.vars;
    mc.dim = 4;
    mc.hidden = 2;
    mc.ae_dim = 2;
    mc.init_std = 0.5;
    models::Model<double> m(mc, {"x", "y", "z", "w"}, static_cast<std::uint64_t>(trial));
    std::size_t i = 0;
    do {
      i = pick.below(d.exprs.size());
    } while (d.exprs[i].is_leaf());
    const Expr& e = d.exprs[i];
    const std::size_t target = pick.below(4);
    const double mu = pick.uniform();
    const std::uint64_t seed = pick.next();
    const double err = semvec::testing::max_gradient_error(m.params(), [&](ndiff::Graph<double>& g) {
      SplitMix64 rng(seed);
      return build_loss(g, m, e, target, mu, 0.5, true, &rng).total;
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("loss decomposes into hinge plus weighted autoencoder term") {
  const Data& d = simp_poly5();
  models::ModelConfig mc = small(ModelKind::EqNet, 1).model_config(
      Domain::Polynomial, d.spec.ops, d.spec.vars);
  const models::Model<double> m(mc, {"x", "y"}, 4);
  const Expr e = parse("((a + b) - c)", Domain::Polynomial);
  ndiff::Graph<double> g(m.params());
  const auto nodes = build_loss(g, m, e, 1, 0.3, 0.5, true, nullptr);
  REQUIRE(nodes.subexpae.has_value());
  CHECK(g.scalar(nodes.total) ==
        doctest::Approx(g.scalar(nodes.hinge) + 0.3 * g.scalar(*nodes.subexpae)));
  CHECK(nodes.semvecs.size() == 5);
  const double ae = g.scalar(*nodes.subexpae);
  CHECK(ae >= -3.0 - 1e-9);
  ndiff::Graph<double> h(m.params());
  CHECK_FALSE(build_loss(h, m, e, 1, 0.0, 0.5, true, nullptr).subexpae.has_value());
}

TEST_CASE("training is deterministic and improves on its data") {
  auto c = small(ModelKind::EqNet, 25);
  const TrainResult a = run(c);
  const TrainResult b = run(c);
  REQUIRE(a.history.size() == 25);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].valid_score5 == b.history[i].valid_score5);
  }
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.max_norm_error < 1e-5);
  for (const auto& s : a.history) CHECK(s.mu == doctest::Approx(mu_schedule(s.epoch, c.nu)));
  c.seed = 1;
  const TrainResult other = run(c);
  CHECK(other.history.front().loss != a.history.front().loss);
}

TEST_CASE("the classification loss falls without the autoencoder term") {
  auto c = small(ModelKind::EqNet, 60);
  c.subexpae = false;
  const TrainResult r = run(c);
  CHECK(r.history.back().hinge < 0.5 * r.history.front().hinge);
  CHECK(r.history.back().subexpae == 0.0);
}

TEST_CASE("worker threads keep results deterministic") {
  auto c = small(ModelKind::TreeNN1, 5);
  c.threads = 2;
  const TrainResult a = run(c);
  const TrainResult b = run(c);
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
  c.threads = 1;
  const TrainResult one = run(c);
  CHECK(one.history.back().loss == doctest::Approx(a.history.back().loss).epsilon(1e-4));
}

TEST_CASE("curriculum admits larger expressions over time") {
  const TrainResult r = run(small(ModelKind::TreeNN1, 3));
  CHECK(r.history[0].threshold == 2);
  CHECK(r.history[1].threshold == 5);
  CHECK(r.history[0].examples < r.history[1].examples);
}

TEST_CASE("every trainable model runs") {
  for (ModelKind k : {ModelKind::TreeNN2, ModelKind::Gru}) {
    const TrainResult r = run(small(k, 3));
    CHECK(r.history.size() == 3);
    CHECK(std::isfinite(r.history.back().loss));
    CHECK(r.model.config().kind == k);
  }
}

TEST_CASE("time budget stops training early") {
  auto c = small(ModelKind::EqNet, 100000);
  c.max_seconds = 0.5;
  const TrainResult r = run(c);
  CHECK(r.history.size() < 100000);
  CHECK(r.history.back().seconds >= 0.5);
}

TEST_CASE("config files and overrides") {
  const auto path = std::filesystem::temp_directory_path() / "semvec_test_config.txt";
  {
    std::ofstream out(path);
    out << "# comment\n\nlearning_rate = 0.5\nsubexpae=false\n  epochs = 12 \n";
  }
  const TrainConfig c = load_config(path, TrainConfig::defaults(ModelKind::EqNet));
  CHECK(c.learning_rate == 0.5);
  CHECK_FALSE(c.subexpae);
  CHECK(c.epochs == 12);
  CHECK(c.rho == 0.88);
  {
    std::ofstream out(path);
    out << "learning_rate = fast\n";
  }
  CHECK_THROWS_AS(load_config(path, TrainConfig{}), DataError);
  {
    std::ofstream out(path);
    out << config_to_text(TrainConfig::defaults(ModelKind::TreeNN2));
  }
  const TrainConfig back = load_config(path, TrainConfig{});
  CHECK(back.to_pairs() == TrainConfig::defaults(ModelKind::TreeNN2).to_pairs());
  std::filesystem::remove(path);

  TrainConfig t;
  CHECK_THROWS_AS(t.set("bogus", "1"), std::invalid_argument);
  CHECK_THROWS_AS(t.set("batch_size", "-3"), std::invalid_argument);
  t.rho = 1.0;
  CHECK_THROWS(t.validate());
}

TEST_CASE("model family defaults") {
  const TrainConfig e = TrainConfig::defaults(ModelKind::EqNet);
  CHECK(e.learning_rate == doctest::Approx(std::pow(10.0, -2.1)));
  CHECK(e.batch_size == 900);
  CHECK(e.noise == 0.61);
  CHECK(e.subexpae);
  const TrainConfig t1 = TrainConfig::defaults(ModelKind::TreeNN1);
  CHECK(t1.margin == 2.41);
  CHECK(t1.batch_size == 650);
  CHECK_FALSE(t1.subexpae);
  const TrainConfig t2 = TrainConfig::defaults(ModelKind::TreeNN2);
  CHECK(t2.hidden == 16);
  CHECK(t2.init_std == 1e-4);
  const TrainConfig g = TrainConfig::defaults(ModelKind::Gru);
  CHECK_FALSE(g.curriculum);
  CHECK(g.batch_size == 100);
}

TEST_CASE("history csv") {
  const auto path = std::filesystem::temp_directory_path() / "semvec_test_history.csv";
  std::vector<EpochStats> h(2);
  h[1].epoch = 1;
  write_history_csv(path, h);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);
  std::filesystem::remove(path);
}

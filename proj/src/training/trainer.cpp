#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "semvec/error.hpp"
#include "semvec/eval.hpp"
#include "semvec/parallel.hpp"
#include "semvec/training.hpp"

namespace semvec::training {

using models::Model;
using models::ModelKind;
using ndiff::Gradients;
using ndiff::Graph;
using ndiff::NodeId;

namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kNoiseStream = 13;

}  // namespace

std::vector<double> class_logits(std::span<const double> r,
                                 std::span<const double> prototypes,
                                 std::span<const double> biases) {
  const std::size_t d = r.size();
  if (d == 0 || prototypes.size() != biases.size() * d) {
    throw std::invalid_argument("class_logits: prototype table does not match");
  }
  std::vector<double> out(biases.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = biases[j];
    for (std::size_t i = 0; i < d; ++i) s += r[i] * prototypes[j * d + i];
    out[j] = s;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) z += (v = std::exp(v - top));
  for (double& v : p) v /= z;
  return p;
}

double margin_loss(std::span<const double> logits, std::size_t target, double margin) {
  if (logits.size() < 2) throw std::invalid_argument("margin_loss needs two classes");
  if (target >= logits.size()) throw std::out_of_range("margin_loss: bad target");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != target) best = std::max(best, logits[j]);
  }
  return std::max(0.0, best - logits[target] + margin);
}

double mu_schedule(std::size_t epoch, double nu) {
  return 1.0 - std::pow(10.0, -nu * static_cast<double>(epoch));
}

std::size_t curriculum_threshold(std::size_t epoch, double start, double step) {
  return static_cast<std::size_t>(
      std::floor(start + static_cast<double>(epoch) * step + 1e-9));
}

std::vector<std::size_t> curriculum_filter(std::span<const std::uint32_t> sizes,
                                           std::size_t epoch, double start,
                                           double step) {
  const std::size_t limit = curriculum_threshold(epoch, start, step);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= limit) keep.push_back(i);
  }
  if (keep.empty() && !sizes.empty()) {
    const std::uint32_t smallest = *std::min_element(sizes.begin(), sizes.end());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] == smallest) keep.push_back(i);
    }
  }
  return keep;
}

template <typename Real>
LossNodes<Real> build_loss(Graph<Real>& g, const Model<Real>& model, const Expr& e,
                           std::size_t target, double mu, double margin,
                           bool subexpae, SplitMix64* rng) {
  LossNodes<Real> out{};
  NodeId root;
  std::vector<models::TreeEncoding::Internal> internal;
  if (models::is_tree_model(model.config().kind)) {
    auto enc = model.encode_tree(g, e, rng);
    root = enc.root;
    out.semvecs = std::move(enc.nodes);
    internal = std::move(enc.internal);
  } else {
    root = model.encode_tokens(g, tokenize(e), rng);
  }
  out.hinge = g.margin_loss(model.logits(g, root), target, static_cast<Real>(margin));
  out.total = out.hinge;
  const bool use_ae = subexpae && model.config().kind == ModelKind::EqNet &&
                      mu > 0.0 && !internal.empty();
  if (use_ae) {
    NodeId sum{};
    for (std::size_t i = 0; i < internal.size(); ++i) {
      const auto& n = internal[i];
      const NodeId term = model.subexp_ae_loss(
          g, n.op, std::span<const NodeId>(n.children.data(), n.arity), n.out, rng);
      sum = i == 0 ? term : g.add(sum, term);
    }
    out.subexpae = g.scale(sum, Real(1) / static_cast<Real>(internal.size()));
    out.total = g.add(out.hinge, g.scale(*out.subexpae, static_cast<Real>(mu)));
  }
  return out;
}

template LossNodes<float> build_loss<float>(Graph<float>&, const Model<float>&,
                                            const Expr&, std::size_t, double, double,
                                            bool, SplitMix64*);
template LossNodes<double> build_loss<double>(Graph<double>&, const Model<double>&,
                                              const Expr&, std::size_t, double, double,
                                              bool, SplitMix64*);

namespace {

struct BatchTotals {
  double loss = 0.0;
  double hinge = 0.0;
  double subexpae = 0.0;
  double max_norm_error = 0.0;
};

struct Worker {
  Graph<float> graph;
  Gradients<float> grads;
  BatchTotals totals;
  Worker(const ndiff::ParamStore<float>& params) : graph(params), grads(params) {}
};

double validation_score5(const Model<float>& model, std::span<const Expr> exprs,
                         std::span<const DatasetRecord> records, std::size_t threads) {
  std::size_t pool = 0, queries = 0;
  for (const auto& r : records) {
    if (r.split == Split::Train || r.split == Split::Valid) ++pool;
    if (r.split == Split::Valid) ++queries;
  }
  if (queries == 0 || pool <= 5) return std::numeric_limits<double>::quiet_NaN();
  const auto res = eval::evaluate_split(eval::model_encoder(model), exprs, records,
                                        Split::Valid, 5, threads);
  if (res.curve.scored == 0) return std::numeric_limits<double>::quiet_NaN();
  return res.curve.mean[4];
}

}  // namespace

TrainResult train(std::span<const Expr> exprs, std::span<const DatasetRecord> records,
                  Domain domain, std::vector<Op> ops, VarOrder vars,
                  const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  if (config.model == ModelKind::TfIdf) {
    throw std::invalid_argument("tf-idf is fitted, not trained");
  }
  if (exprs.size() != records.size()) {
    throw std::invalid_argument("expressions do not match records");
  }

  std::map<std::string, std::size_t> class_index;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == Split::Train) {
      train_idx.push_back(i);
      class_index.emplace(records[i].class_id, 0);
    }
  }
  if (class_index.size() < 2) {
    throw DataError("training split needs at least two equivalence classes");
  }
  std::vector<std::string> class_ids;
  for (auto& [key, idx] : class_index) {
    idx = class_ids.size();
    class_ids.push_back(key);
  }
  std::vector<std::size_t> targets(train_idx.size());
  std::vector<std::uint32_t> sizes(train_idx.size());
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    targets[i] = class_index.at(records[train_idx[i]].class_id);
    sizes[i] = static_cast<std::uint32_t>(exprs[train_idx[i]].size());
  }

  Model<float> model(config.model_config(domain, std::move(ops), std::move(vars)),
                     class_ids, derive_seed(config.seed, kInitStream));
  for (std::size_t i : train_idx) model.check_supported(exprs[i]);

  const bool is_eqnet = config.model == ModelKind::EqNet;
  const bool track_norms = is_eqnet && model.config().normalize;
  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  SplitMix64 shuffle_rng(derive_seed(config.seed, kShuffleStream));

  std::vector<Worker> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) workers.emplace_back(model.params());
  Gradients<float> total(model.params());
  const ndiff::RmsPropOptions opt{config.learning_rate, config.rho, config.momentum,
                                  1e-6};

  TrainResult result{model, {}, 0, -1.0, 0.0};
  bool have_best = false;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order;
    std::size_t threshold = std::numeric_limits<std::uint32_t>::max();
    if (config.curriculum) {
      threshold = curriculum_threshold(epoch, config.curriculum_start,
                                       config.curriculum_step);
      order = curriculum_filter(sizes, epoch, config.curriculum_start,
                                config.curriculum_step);
    } else {
      order.resize(sizes.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
    }
    shuffle(std::span<std::size_t>(order), shuffle_rng);
    const double mu = config.subexpae && is_eqnet ? mu_schedule(epoch, config.nu) : 0.0;
    const std::uint64_t epoch_seed =
        derive_seed(derive_seed(config.seed, kNoiseStream), epoch);

    EpochStats stats;
    stats.epoch = epoch;
    stats.mu = mu;
    stats.examples = order.size();
    stats.threshold = threshold;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      const std::size_t batch = b1 - b0;
      const float inv = 1.0f / static_cast<float>(batch);
      for (auto& w : workers) {
        w.grads.zero();
        w.totals = {};
      }
      parallel_chunks(batch, threads, [&](std::size_t begin, std::size_t end) {
        Worker& w = workers[threads == 1 ? 0 : begin / ((batch + threads - 1) / threads)];
        for (std::size_t j = begin; j < end; ++j) {
          const std::size_t pos = b0 + j;
          const std::size_t ti = order[pos];
          SplitMix64 rng(derive_seed(epoch_seed, pos));
          w.graph.clear();
          const auto nodes = build_loss<float>(w.graph, model, exprs[train_idx[ti]],
                                               targets[ti], mu, config.margin,
                                               config.subexpae, &rng);
          const double loss = w.graph.scalar(nodes.total);
          if (!std::isfinite(loss)) {
            throw NumericError("training loss became non-finite at epoch " +
                               std::to_string(epoch));
          }
          w.totals.loss += loss;
          w.totals.hinge += w.graph.scalar(nodes.hinge);
          if (nodes.subexpae) w.totals.subexpae += w.graph.scalar(*nodes.subexpae);
          if (track_norms) {
            for (NodeId id : nodes.semvecs) {
              double sq = 0.0;
              for (float v : w.graph.value(id)) sq += static_cast<double>(v) * v;
              w.totals.max_norm_error =
                  std::max(w.totals.max_norm_error, std::abs(std::sqrt(sq) - 1.0));
            }
          }
          w.graph.backward(nodes.total, w.grads, inv);
        }
      });
      total.zero();
      for (auto& w : workers) {
        total.add(w.grads);
        stats.loss += w.totals.loss;
        stats.hinge += w.totals.hinge;
        stats.subexpae += w.totals.subexpae;
        stats.max_norm_error = std::max(stats.max_norm_error, w.totals.max_norm_error);
      }
      ndiff::clip_global_norm(total, config.clip);
      ndiff::rmsprop_momentum_step(model.params(), total, opt);
    }
    if (!order.empty()) {
      const double n = static_cast<double>(order.size());
      stats.loss /= n;
      stats.hinge /= n;
      stats.subexpae /= n;
    }
    result.max_norm_error = std::max(result.max_norm_error, stats.max_norm_error);
    stats.valid_score5 = validation_score5(model, exprs, records, threads);
    stats.seconds = elapsed();

    const bool no_valid = std::isnan(stats.valid_score5);
    if (no_valid || !have_best || stats.valid_score5 > result.best_valid_score5) {
      have_best = true;
      result.best_epoch = epoch;
      result.best_valid_score5 = no_valid ? 0.0 : stats.valid_score5;
      result.model = model;
    }
    result.history.push_back(stats);
    if (progress) progress(stats);
    if (config.max_seconds > 0.0 && stats.seconds >= config.max_seconds) break;
  }
  if (!have_best) result.model = model;
  return result;
}

void write_history_csv(const std::filesystem::path& path,
                       std::span<const EpochStats> history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,hinge,subexpae,mu,valid_score5,examples,threshold,max_norm_error,seconds\n";
  out.precision(10);
  for (const auto& s : history) {
    out << s.epoch << ',' << s.loss << ',' << s.hinge << ',' << s.subexpae << ','
        << s.mu << ',' << s.valid_score5 << ',' << s.examples << ',' << s.threshold
        << ',' << s.max_norm_error << ',' << s.seconds << '\n';
  }
}

}  // namespace semvec::training

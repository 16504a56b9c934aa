#pragma once

// Supervised equivalence-class training.
//
// Each expression's root vector r is scored against one prototype per
// training class, logit_j = r . q_j + b_j, and the per-expression objective is
//
//   L = max(0, max_{j != i} logit_j - logit_i + m)
//       + (mu / |Q|) sum_{n in Q} subexp_ae_loss(n)
//
// with Q the non-leaf nodes (the second term only for EqNet). The batch loss
// is the mean over expressions. mu = 1 - 10^(-nu t) for epoch t = 0, 1, ...

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semvec/datagen.hpp"
#include "semvec/models.hpp"

namespace semvec::training {

struct TrainConfig {
  models::ModelKind model = models::ModelKind::EqNet;
  double learning_rate = 0.0079433;
  double rho = 0.88;
  double momentum = 0.88;
  std::size_t batch_size = 900;
  std::size_t dim = 64;
  std::size_t ae_dim = 8;
  std::size_t hidden = 8;
  std::size_t embedding = 128;
  double noise = 0.61;
  ndiff::NoiseMode noise_mode = ndiff::NoiseMode::ExactCount;
  double clip = 1.82;
  double init_std = 0.0089125;
  double dropout = 0.11;
  double nu = 4.0;
  bool subexpae = true;
  models::Activation activation = models::Activation::Sigmoid;
  bool curriculum = true;
  double curriculum_start = 6.96;
  double curriculum_step = 2.72;
  double margin = 0.5;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  // Stop after this many seconds of training (0 = no limit).
  double max_seconds = 0.0;
  std::size_t threads = 1;

  // Hyperparameters of each model family.
  static TrainConfig defaults(models::ModelKind kind);
  void validate() const;

  models::ModelConfig model_config(Domain domain, std::vector<Op> ops,
                                   VarOrder vars) const;

  // Flat `key = value` view, one entry per field, in a fixed order.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  // Unknown keys and malformed values throw std::invalid_argument.
  void set(const std::string& key, const std::string& value);
};

// Parses a `key = value` file. Blank lines and lines starting with '#' are
// ignored. Keys are applied on top of `base`.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base);
std::string config_to_text(const TrainConfig& config);

// Plain-number helpers mirroring the graph objective.
std::vector<double> class_logits(std::span<const double> r,
                                 std::span<const double> prototypes,
                                 std::span<const double> biases);
std::vector<double> softmax(std::span<const double> logits);
double margin_loss(std::span<const double> logits, std::size_t target, double margin);
double mu_schedule(std::size_t epoch, double nu);
std::size_t curriculum_threshold(std::size_t epoch, double start, double step);
// Indices of `sizes` admitted at `epoch`. If none pass, those of the
// smallest size are returned.
std::vector<std::size_t> curriculum_filter(std::span<const std::uint32_t> sizes,
                                           std::size_t epoch, double start,
                                           double step);

template <typename Real>
struct LossNodes {
  ndiff::NodeId total;
  ndiff::NodeId hinge;
  std::optional<ndiff::NodeId> subexpae;  // mean over non-leaf nodes
  std::vector<ndiff::NodeId> semvecs;     // every tree node (tree models)
};

// Builds the per-expression objective on `g`. `rng` non-null enables
// dropout and autoencoder noise.
template <typename Real>
LossNodes<Real> build_loss(ndiff::Graph<Real>& g, const models::Model<Real>& model,
                           const Expr& e, std::size_t target, double mu,
                           double margin, bool subexpae, SplitMix64* rng);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double hinge = 0.0;
  double subexpae = 0.0;
  double mu = 0.0;
  double valid_score5 = 0.0;
  std::size_t examples = 0;
  std::size_t threshold = 0;
  double max_norm_error = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  models::Model<float> model;  // best-validation parameters
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_valid_score5 = 0.0;
  // Largest |norm - 1| of any EqNet node vector seen during training.
  double max_norm_error = 0.0;
};

using ProgressFn = std::function<void(const EpochStats&)>;

// Trains on the train split and selects the epoch with the best validation
// score_5 (valid queries against a train + valid pool). Throws NumericError
// if the loss becomes non-finite.
TrainResult train(std::span<const Expr> exprs, std::span<const DatasetRecord> records,
                  Domain domain, std::vector<Op> ops, VarOrder vars,
                  const TrainConfig& config, const ProgressFn& progress = {});

void write_history_csv(const std::filesystem::path& path,
                       std::span<const EpochStats> history);

}  // namespace semvec::training

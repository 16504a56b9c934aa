#pragma once

// Expression encoders. Tree models (EqNet, 1-/2-layer TreeNN) recurse over
// the parse tree bottom-up; the GRU reads the token sequence; tf-idf is a
// fitted bag-of-tokens baseline with no trainable parameters.
//
// Parameter names
//   leaf.C            V x D     leaf embeddings, one row per variable
//   <op>.Wi           H x kD    EqNet hidden layer
//   <op>.Wo0          D x kD    EqNet linear path
//   <op>.Wo1          D x H     EqNet hidden path
//   <op>.We           M x (k+1)D  subexpression encoder
//   Wd.<k>            kD x M    subexpression decoder, shared by all ops of arity k
//   <op>.W            D x kD    1-layer TreeNN
//   <op>.W1, <op>.W2  H x kD, D x H   2-layer TreeNN
//   tok.E             T x E     GRU token embeddings
//   gru.W{z,r,h}      D x (E+D), gru.b{z,r,h}  D
//   class.q, class.b  J x D, J  class prototypes and biases

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semvec/expr.hpp"
#include "semvec/ndiff/graph.hpp"
#include "semvec/ndiff/optim.hpp"
#include "semvec/semantics.hpp"

namespace semvec::models {

enum class ModelKind : std::uint8_t { EqNet, TreeNN1, TreeNN2, Gru, TfIdf };

std::string_view model_kind_name(ModelKind kind) noexcept;
std::optional<ModelKind> model_kind_from_name(std::string_view name) noexcept;
bool is_tree_model(ModelKind kind) noexcept;

enum class Activation : std::uint8_t { Sigmoid, Tanh };

std::string_view activation_name(Activation a) noexcept;
std::optional<Activation> activation_from_name(std::string_view name) noexcept;

struct ModelConfig {
  ModelKind kind = ModelKind::EqNet;
  Domain domain = Domain::Boolean;
  std::vector<Op> ops;
  VarOrder vars;
  std::size_t dim = 64;        // D
  std::size_t hidden = 8;      // H
  std::size_t ae_dim = 8;      // M
  std::size_t embedding = 128; // GRU token embedding size
  // EqNet switches. Turning both off leaves a plain 2-layer MLP
  // W_o1 act(W_i x).
  bool normalize = true;
  bool residual = true;
  Activation hidden_activation = Activation::Sigmoid;
  double dropout = 0.11;
  double noise = 0.61;
  ndiff::NoiseMode noise_mode = ndiff::NoiseMode::ExactCount;
  double init_std = 0.0089125;

  // Defaults for each model family.
  static ModelConfig defaults(ModelKind kind);
  void validate() const;
};

// "(", ")", variables in order, then operator symbols in `ops` order.
std::vector<std::string> token_vocabulary(std::span<const Op> ops,
                                          const VarOrder& vars);

// Graph nodes produced while encoding one tree.
struct TreeEncoding {
  struct Internal {
    Op op;
    ndiff::NodeId out;
    std::array<ndiff::NodeId, 2> children;
    std::size_t arity;
  };
  ndiff::NodeId root;
  // One entry per tree node in post-order (same order as a post-order walk).
  std::vector<ndiff::NodeId> nodes;
  // Non-leaf nodes in post-order.
  std::vector<Internal> internal;
};

template <typename Real>
class Model {
 public:
  using Graph = ndiff::Graph<Real>;
  using NodeId = ndiff::NodeId;

  // Fresh Gaussian initialization (biases start at zero).
  Model(ModelConfig config, std::vector<std::string> class_ids,
        std::uint64_t seed);
  // Restored parameters; names and shapes are validated.
  Model(ModelConfig config, std::vector<std::string> class_ids,
        ndiff::ParamStore<Real> params);

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& class_ids() const noexcept { return class_ids_; }
  std::size_t num_classes() const noexcept { return class_ids_.size(); }
  ndiff::ParamStore<Real>& params() noexcept { return params_; }
  const ndiff::ParamStore<Real>& params() const noexcept { return params_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }

  template <typename Other>
  Model<Other> convert() const {
    return Model<Other>(config_, class_ids_, params_.template convert<Other>());
  }

  // Throws DataError if the expression uses an operator or variable the
  // model has no parameters for.
  void check_supported(const Expr& e) const;
  bool supports(Op op) const noexcept { return op_index_[static_cast<int>(op)] >= 0; }

  // Building blocks. `rng` non-null means training mode (dropout active).
  NodeId leaf(Graph& g, VarId var) const;
  NodeId combine(Graph& g, Op op, std::span<const NodeId> children,
                 SplitMix64* rng = nullptr) const;
  // -(x~ . x + r~ . r_p) for one non-leaf node. Noise comes from `rng`; a
  // null rng applies no noise.
  NodeId subexp_ae_loss(Graph& g, Op op, std::span<const NodeId> children,
                        NodeId parent, SplitMix64* rng = nullptr) const;
  NodeId gru_step(Graph& g, NodeId x, NodeId h) const;
  NodeId token_embedding(Graph& g, std::string_view token) const;

  TreeEncoding encode_tree(Graph& g, const Expr& e,
                           SplitMix64* rng = nullptr) const;
  NodeId encode_tokens(Graph& g, const TokenSeq& tokens,
                       SplitMix64* rng = nullptr) const;
  // Root representation for any trainable model kind.
  NodeId encode(Graph& g, const Expr& e, SplitMix64* rng = nullptr) const;
  // logit_j = r . q_j + b_j
  NodeId logits(Graph& g, NodeId r) const;

  // Evaluation-mode root vector.
  std::vector<Real> embed(const Expr& e) const;
  // Evaluation-mode vector of every subtree, in post-order.
  std::vector<std::vector<Real>> embed_nodes(const Expr& e) const;

 private:
  struct OpParams {
    ndiff::ParamId a, b, c, enc;
  };

  void build_index();
  void init_params(std::uint64_t seed);
  void validate_params() const;
  std::vector<std::pair<std::string, ndiff::Shape>> expected_params() const;

  ModelConfig config_;
  std::vector<std::string> class_ids_;
  ndiff::ParamStore<Real> params_;
  std::vector<std::string> vocab_;
  std::array<int, kNumOps> op_index_{};
  std::vector<OpParams> op_params_;
  std::array<std::optional<ndiff::ParamId>, 3> decoder_{};
  std::optional<ndiff::ParamId> leaf_, tok_, gru_w_[3], gru_b_[3];
  ndiff::ParamId class_q_{}, class_b_{};
};

extern template class Model<float>;
extern template class Model<double>;

// Bag-of-tokens baseline with smoothed idf = ln((1 + N) / (1 + df)) + 1.
class TfIdfModel {
 public:
  TfIdfModel() = default;
  explicit TfIdfModel(std::vector<std::string> vocabulary);
  TfIdfModel(std::vector<std::string> vocabulary, std::vector<double> idf,
             std::size_t num_docs);

  void fit(std::span<const TokenSeq> docs);
  // Raw term count times idf, one entry per vocabulary token. Tokens outside
  // the vocabulary are ignored.
  std::vector<double> encode(const TokenSeq& tokens) const;
  double idf_of(std::string_view token) const;

  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  std::size_t num_docs() const noexcept { return num_docs_; }

 private:
  std::optional<std::size_t> index_of(std::string_view token) const;
  std::vector<std::string> vocab_;
  std::vector<double> idf_;
  std::size_t num_docs_ = 0;
};

}  // namespace semvec::models

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "semvec/error.hpp"
#include "semvec/models.hpp"

namespace semvec::models {

using ndiff::NodeId;
using ndiff::ParamId;
using ndiff::Shape;

std::string_view model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::EqNet: return "eqnet";
    case ModelKind::TreeNN1: return "treenn1";
    case ModelKind::TreeNN2: return "treenn2";
    case ModelKind::Gru: return "gru";
    case ModelKind::TfIdf: return "tfidf";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) noexcept {
  for (ModelKind k : {ModelKind::EqNet, ModelKind::TreeNN1, ModelKind::TreeNN2,
                      ModelKind::Gru, ModelKind::TfIdf}) {
    if (model_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool is_tree_model(ModelKind kind) noexcept {
  return kind == ModelKind::EqNet || kind == ModelKind::TreeNN1 ||
         kind == ModelKind::TreeNN2;
}

std::string_view activation_name(Activation a) noexcept {
  return a == Activation::Sigmoid ? "sigmoid" : "tanh";
}

std::optional<Activation> activation_from_name(std::string_view name) noexcept {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  return std::nullopt;
}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  switch (kind) {
    case ModelKind::EqNet:
      break;
    case ModelKind::TreeNN1:
      c.dropout = 0.0;
      c.noise = 0.0;
      c.init_std = std::pow(10.0, -1.28);
      break;
    case ModelKind::TreeNN2:
      c.hidden = 16;
      c.dropout = 0.0;
      c.noise = 0.0;
      c.init_std = 1e-4;
      break;
    case ModelKind::Gru:
      c.dropout = 0.26;
      c.noise = 0.0;
      c.init_std = 0.1;
      break;
    case ModelKind::TfIdf:
      c.dropout = 0.0;
      c.noise = 0.0;
      break;
  }
  return c;
}

void ModelConfig::validate() const {
  if (dim == 0 || hidden == 0 || ae_dim == 0 || embedding == 0) {
    throw std::invalid_argument("model sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
  if (!(noise >= 0.0 && noise < 1.0)) {
    throw std::invalid_argument("noise must be in [0, 1)");
  }
  if (!(init_std > 0.0)) throw std::invalid_argument("init_std must be positive");
  if (vars.size() == 0) throw std::invalid_argument("model needs at least one variable");
  if (ops.empty()) throw std::invalid_argument("model needs at least one operator");
  for (Op op : ops) {
    if (!op_in_domain(op, domain)) {
      throw std::invalid_argument("operator '" + std::string(op_name(op)) +
                                  "' is not in the " +
                                  std::string(domain_name(domain)) + " domain");
    }
  }
}

std::vector<std::string> token_vocabulary(std::span<const Op> ops,
                                          const VarOrder& vars) {
  std::vector<std::string> vocab{"(", ")"};
  for (VarId v : vars.vars()) vocab.emplace_back(1, var_char(v));
  for (Op op : ops) vocab.emplace_back(op_symbol(op));
  return vocab;
}

template <typename Real>
Model<Real>::Model(ModelConfig config, std::vector<std::string> class_ids,
                   std::uint64_t seed)
    : config_(std::move(config)), class_ids_(std::move(class_ids)) {
  config_.validate();
  if (config_.kind == ModelKind::TfIdf) {
    throw std::invalid_argument("tf-idf has no trainable parameters");
  }
  init_params(seed);
  build_index();
}

template <typename Real>
Model<Real>::Model(ModelConfig config, std::vector<std::string> class_ids,
                   ndiff::ParamStore<Real> params)
    : config_(std::move(config)),
      class_ids_(std::move(class_ids)),
      params_(std::move(params)) {
  config_.validate();
  validate_params();
  build_index();
}

template <typename Real>
std::vector<std::pair<std::string, Shape>> Model<Real>::expected_params() const {
  const std::size_t d = config_.dim;
  const std::size_t h = config_.hidden;
  const std::size_t m = config_.ae_dim;
  const std::size_t e = config_.embedding;
  std::vector<std::pair<std::string, Shape>> out;
  std::array<bool, 3> arities{};
  if (is_tree_model(config_.kind)) {
    out.push_back({"leaf.C", {config_.vars.size(), d}});
    for (Op op : config_.ops) {
      const std::size_t k = static_cast<std::size_t>(arity(op));
      const std::string p(op_name(op));
      arities[k] = true;
      switch (config_.kind) {
        case ModelKind::EqNet:
          out.push_back({p + ".Wi", {h, k * d}});
          out.push_back({p + ".Wo0", {d, k * d}});
          out.push_back({p + ".Wo1", {d, h}});
          out.push_back({p + ".We", {m, (k + 1) * d}});
          break;
        case ModelKind::TreeNN1:
          out.push_back({p + ".W", {d, k * d}});
          break;
        case ModelKind::TreeNN2:
          out.push_back({p + ".W1", {h, k * d}});
          out.push_back({p + ".W2", {d, h}});
          break;
        default:
          break;
      }
    }
    if (config_.kind == ModelKind::EqNet) {
      for (std::size_t k = 1; k <= 2; ++k) {
        if (arities[k]) out.push_back({"Wd." + std::to_string(k), {k * d, m}});
      }
    }
  } else {
    const std::size_t tokens = token_vocabulary(config_.ops, config_.vars).size();
    out.push_back({"tok.E", {tokens, e}});
    for (const char* gate : {"z", "r", "h"}) {
      out.push_back({std::string("gru.W") + gate, {d, e + d}});
    }
    for (const char* gate : {"z", "r", "h"}) {
      out.push_back({std::string("gru.b") + gate, {d}});
    }
  }
  out.push_back({"class.q", {class_ids_.size(), d}});
  out.push_back({"class.b", {class_ids_.size()}});
  return out;
}

template <typename Real>
void Model<Real>::init_params(std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (auto& [name, shape] : expected_params()) {
    const bool bias = name == "class.b" || name.rfind("gru.b", 0) == 0;
    if (bias) {
      params_.add(name, ndiff::Tensor<Real>(shape));
    } else {
      params_.add(name, ndiff::init_gaussian<Real>(shape, config_.init_std, rng));
    }
  }
}

template <typename Real>
void Model<Real>::validate_params() const {
  const auto expected = expected_params();
  if (expected.size() != params_.size()) {
    throw DataError("checkpoint has " + std::to_string(params_.size()) +
                    " parameters, model expects " +
                    std::to_string(expected.size()));
  }
  for (const auto& [name, shape] : expected) {
    const auto id = params_.find(name);
    if (!id) throw DataError("checkpoint is missing parameter '" + name + "'");
    if (params_.value(*id).shape != shape) {
      throw DataError("checkpoint parameter '" + name + "' has the wrong shape");
    }
  }
}

template <typename Real>
void Model<Real>::build_index() {
  vocab_ = token_vocabulary(config_.ops, config_.vars);
  op_index_.fill(-1);
  op_params_.clear();
  for (Op op : config_.ops) {
    const std::string p(op_name(op));
    OpParams ops{};
    switch (config_.kind) {
      case ModelKind::EqNet:
        ops = {params_.at(p + ".Wi"), params_.at(p + ".Wo0"),
               params_.at(p + ".Wo1"), params_.at(p + ".We")};
        break;
      case ModelKind::TreeNN1:
        ops.a = params_.at(p + ".W");
        break;
      case ModelKind::TreeNN2:
        ops.a = params_.at(p + ".W1");
        ops.b = params_.at(p + ".W2");
        break;
      default:
        break;
    }
    op_index_[static_cast<int>(op)] = static_cast<int>(op_params_.size());
    op_params_.push_back(ops);
  }
  for (std::size_t k = 1; k <= 2; ++k) {
    decoder_[k] = params_.find("Wd." + std::to_string(k));
  }
  leaf_ = params_.find("leaf.C");
  tok_ = params_.find("tok.E");
  const char* gates[] = {"z", "r", "h"};
  for (int i = 0; i < 3; ++i) {
    gru_w_[i] = params_.find(std::string("gru.W") + gates[i]);
    gru_b_[i] = params_.find(std::string("gru.b") + gates[i]);
  }
  class_q_ = params_.at("class.q");
  class_b_ = params_.at("class.b");
}

template <typename Real>
void Model<Real>::check_supported(const Expr& e) const {
  if (e.is_leaf()) {
    if (!config_.vars.index_of(e.var_id())) {
      throw DataError(std::string("variable '") + var_char(e.var_id()) +
                      "' is not known to the model");
    }
    return;
  }
  if (!supports(e.op())) {
    throw DataError("operator '" + std::string(op_name(e.op())) +
                    "' is not known to the model");
  }
  for (const Expr& c : e.children()) check_supported(c);
}

template <typename Real>
NodeId Model<Real>::leaf(Graph& g, VarId var) const {
  const auto row = config_.vars.index_of(var);
  if (!row) {
    throw DataError(std::string("variable '") + var_char(var) +
                    "' is not known to the model");
  }
  const NodeId c = g.param_row(*leaf_, *row);
  return config_.kind == ModelKind::EqNet && config_.normalize ? g.l2_normalize(c)
                                                               : c;
}

template <typename Real>
NodeId Model<Real>::combine(Graph& g, Op op, std::span<const NodeId> children,
                            SplitMix64* rng) const {
  const int idx = op_index_[static_cast<int>(op)];
  if (idx < 0) {
    throw DataError("operator '" + std::string(op_name(op)) +
                    "' is not known to the model");
  }
  if (children.size() != static_cast<std::size_t>(arity(op))) {
    throw std::invalid_argument("combine: wrong number of children for '" +
                                std::string(op_name(op)) + "'");
  }
  const OpParams& p = op_params_[static_cast<std::size_t>(idx)];
  const NodeId x = children.size() == 1 ? children[0] : g.concat(children);
  switch (config_.kind) {
    case ModelKind::EqNet: {
      const NodeId pre = g.affine(p.a, x);
      NodeId l1 = config_.hidden_activation == Activation::Sigmoid ? g.sigmoid(pre)
                                                                   : g.tanh(pre);
      if (rng && config_.dropout > 0.0) {
        const auto mask = ndiff::dropout_mask<Real>(g.length(l1), config_.dropout, *rng);
        l1 = g.mul(l1, g.constant(mask));
      }
      NodeId out = g.affine(p.c, l1);
      if (config_.residual) out = g.add(g.affine(p.b, x), out);
      return config_.normalize ? g.l2_normalize(out) : out;
    }
    case ModelKind::TreeNN1:
      return g.tanh(g.affine(p.a, x));
    case ModelKind::TreeNN2:
      return g.tanh(g.affine(p.b, g.tanh(g.affine(p.a, x))));
    default:
      throw std::logic_error("combine called on a sequence model");
  }
}

template <typename Real>
NodeId Model<Real>::subexp_ae_loss(Graph& g, Op op,
                                   std::span<const NodeId> children,
                                   NodeId parent, SplitMix64* rng) const {
  if (config_.kind != ModelKind::EqNet) {
    throw std::logic_error("subexpression autoencoder is an EqNet component");
  }
  const int idx = op_index_[static_cast<int>(op)];
  if (idx < 0) {
    throw DataError("operator '" + std::string(op_name(op)) +
                    "' is not known to the model");
  }
  const std::size_t k = children.size();
  if (k != static_cast<std::size_t>(arity(op))) {
    throw std::invalid_argument("subexp_ae_loss: wrong number of children");
  }
  const OpParams& p = op_params_[static_cast<std::size_t>(idx)];
  const std::size_t d = config_.dim;

  const NodeId x = k == 1 ? children[0] : g.concat(children);
  NodeId input = g.concat({parent, x});
  if (rng && config_.noise > 0.0) {
    const auto mask = ndiff::binary_noise_mask<Real>(g.length(input), config_.noise,
                                                     *rng, config_.noise_mode);
    input = g.mul(input, g.constant(mask));
  }
  const NodeId code = g.tanh(g.affine(p.enc, input));
  const NodeId decoded = g.tanh(g.affine(*decoder_[k], code));
  // Rescale the reconstruction to the length of the true children.
  const NodeId xt = g.scale_by(g.l2_normalize(decoded), g.norm(x));

  std::array<NodeId, 2> parts{};
  for (std::size_t i = 0; i < k; ++i) parts[i] = g.slice(xt, i * d, d);
  const NodeId rt = combine(g, op, std::span<const NodeId>(parts.data(), k));
  const NodeId agreement = g.add(g.dot(xt, x), g.dot(rt, parent));
  return g.scale(agreement, Real(-1));
}

template <typename Real>
NodeId Model<Real>::gru_step(Graph& g, NodeId x, NodeId h) const {
  if (config_.kind != ModelKind::Gru) throw std::logic_error("not a GRU model");
  const NodeId xh = g.concat({x, h});
  const NodeId z = g.sigmoid(g.affine(*gru_w_[0], xh, *gru_b_[0]));
  const NodeId r = g.sigmoid(g.affine(*gru_w_[1], xh, *gru_b_[1]));
  const NodeId cand =
      g.tanh(g.affine(*gru_w_[2], g.concat({x, g.mul(r, h)}), *gru_b_[2]));
  return g.add(h, g.mul(z, g.sub(cand, h)));
}

template <typename Real>
NodeId Model<Real>::token_embedding(Graph& g, std::string_view token) const {
  if (config_.kind != ModelKind::Gru) throw std::logic_error("not a GRU model");
  const auto it = std::find(vocab_.begin(), vocab_.end(), token);
  if (it == vocab_.end()) {
    throw DataError("token '" + std::string(token) + "' is not in the vocabulary");
  }
  return g.param_row(*tok_, static_cast<std::size_t>(it - vocab_.begin()));
}

template <typename Real>
TreeEncoding Model<Real>::encode_tree(Graph& g, const Expr& e,
                                      SplitMix64* rng) const {
  if (!is_tree_model(config_.kind)) {
    throw std::logic_error("encode_tree needs a tree model");
  }
  TreeEncoding enc;
  enc.nodes.reserve(e.size());
  const auto visit = [&](const auto& self, const Expr& node) -> NodeId {
    if (node.is_leaf()) {
      const NodeId id = leaf(g, node.var_id());
      enc.nodes.push_back(id);
      return id;
    }
    std::array<NodeId, 2> kids{};
    const auto children = node.children();
    for (std::size_t i = 0; i < children.size(); ++i) kids[i] = self(self, children[i]);
    const NodeId id = combine(
        g, node.op(), std::span<const NodeId>(kids.data(), children.size()), rng);
    enc.nodes.push_back(id);
    enc.internal.push_back({node.op(), id, kids, children.size()});
    return id;
  };
  enc.root = visit(visit, e);
  return enc;
}

template <typename Real>
NodeId Model<Real>::encode_tokens(Graph& g, const TokenSeq& tokens,
                                  SplitMix64* rng) const {
  if (tokens.empty()) throw std::invalid_argument("empty token sequence");
  const std::vector<Real> zeros(config_.dim, Real(0));
  NodeId h = g.constant(zeros);
  for (const auto& tok : tokens) {
    NodeId x = token_embedding(g, tok);
    if (rng && config_.dropout > 0.0) {
      x = g.mul(x, g.constant(ndiff::dropout_mask<Real>(g.length(x),
                                                        config_.dropout, *rng)));
    }
    h = gru_step(g, x, h);
  }
  return h;
}

template <typename Real>
NodeId Model<Real>::encode(Graph& g, const Expr& e, SplitMix64* rng) const {
  if (is_tree_model(config_.kind)) return encode_tree(g, e, rng).root;
  return encode_tokens(g, tokenize(e), rng);
}

template <typename Real>
NodeId Model<Real>::logits(Graph& g, NodeId r) const {
  return g.affine(class_q_, r, class_b_);
}

template <typename Real>
std::vector<Real> Model<Real>::embed(const Expr& e) const {
  Graph g(params_);
  const auto v = g.value(encode(g, e));
  return {v.begin(), v.end()};
}

template <typename Real>
std::vector<std::vector<Real>> Model<Real>::embed_nodes(const Expr& e) const {
  std::vector<std::vector<Real>> out;
  if (is_tree_model(config_.kind)) {
    Graph g(params_);
    const TreeEncoding enc = encode_tree(g, e);
    out.reserve(enc.nodes.size());
    for (NodeId id : enc.nodes) {
      const auto v = g.value(id);
      out.emplace_back(v.begin(), v.end());
    }
    return out;
  }
  // Sequence models encode every subtree on its own.
  const auto visit = [&](const auto& self, const Expr& node) -> void {
    for (const Expr& c : node.children()) self(self, c);
    out.push_back(embed(node));
  };
  visit(visit, e);
  return out;
}

template class Model<float>;
template class Model<double>;

}  // namespace semvec::models

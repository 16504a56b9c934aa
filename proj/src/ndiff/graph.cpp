#include "semvec/ndiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "semvec/error.hpp"

namespace semvec::ndiff {

namespace {

constexpr double kMinNorm = 1e-12;

const char* kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Param: return "param";
    case OpKind::ParamRow: return "param_row";
    case OpKind::Affine: return "affine";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Mul: return "mul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Scale: return "scale";
    case OpKind::ScaleBy: return "scale_by";
    case OpKind::L2Normalize: return "l2_normalize";
    case OpKind::Dot: return "dot";
    case OpKind::Norm: return "norm";
    case OpKind::MarginLoss: return "margin_loss";
  }
  return "?";
}

template <typename Real>
Real stable_sigmoid(Real x) {
  if (x >= 0) {
    const Real z = std::exp(-x);
    return Real(1) / (Real(1) + z);
  }
  const Real z = std::exp(x);
  return z / (Real(1) + z);
}

}  // namespace

template <typename Real>
Graph<Real>::Graph(const ParamStore<Real>& params)
    : params_(&params),
      k_(&kernels::active_kernels<Real>()),
#ifdef NDEBUG
      check_finite_(false)
#else
      check_finite_(true)
#endif
{
}

template <typename Real>
void Graph<Real>::clear() {
  nodes_.clear();
  inputs_.clear();
  values_.clear();
  grads_.clear();
}

template <typename Real>
std::span<const std::uint32_t> Graph<Real>::inputs(NodeId id) const {
  const Node& n = nodes_[id.index];
  return {inputs_.data() + n.input_begin, n.input_count};
}

template <typename Real>
NodeId Graph<Real>::push(OpKind kind, std::initializer_list<NodeId> inputs,
                         std::size_t length) {
  return push_span(kind, std::span<const NodeId>(inputs.begin(), inputs.size()),
                   length);
}

template <typename Real>
NodeId Graph<Real>::push_span(OpKind kind, std::span<const NodeId> inputs,
                              std::size_t length) {
  Node n{};
  n.kind = kind;
  n.input_begin = static_cast<std::uint32_t>(inputs_.size());
  n.input_count = static_cast<std::uint32_t>(inputs.size());
  for (NodeId in : inputs) {
    if (in.index >= nodes_.size()) {
      throw std::invalid_argument(std::string(kind_name(kind)) +
                                  ": input node does not exist");
    }
    inputs_.push_back(in.index);
  }
  n.offset = static_cast<std::uint32_t>(values_.size());
  n.length = static_cast<std::uint32_t>(length);
  values_.resize(values_.size() + length, Real(0));
  nodes_.push_back(n);
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
void Graph<Real>::check(NodeId id, const char* what) const {
  if (!check_finite_) return;
  for (Real v : value(id)) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + what);
    }
  }
}

template <typename Real>
void Graph<Real>::require_same_length(NodeId a, NodeId b,
                                      const char* what) const {
  if (length(a) != length(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(length(a)) + " vs " +
                                std::to_string(length(b)) + ")");
  }
}

template <typename Real>
NodeId Graph<Real>::constant(std::span<const Real> values) {
  const NodeId id = push(OpKind::Constant, {}, values.size());
  std::copy(values.begin(), values.end(), out(id));
  check(id, "constant");
  return id;
}

template <typename Real>
NodeId Graph<Real>::param(ParamId p) {
  const auto& t = params_->value(p);
  const NodeId id = push(OpKind::Param, {}, t.size());
  nodes_[id.index].param = p.index;
  std::copy(t.values.begin(), t.values.end(), out(id));
  return id;
}

template <typename Real>
NodeId Graph<Real>::param_row(ParamId p, std::size_t row) {
  const auto& t = params_->value(p);
  if (row >= t.rows()) throw std::out_of_range("param_row: row out of range");
  const std::size_t cols = t.cols();
  const NodeId id = push(OpKind::ParamRow, {}, cols);
  nodes_[id.index].param = p.index;
  nodes_[id.index].extra = static_cast<std::uint32_t>(row);
  const Real* src = t.values.data() + row * cols;
  std::copy(src, src + cols, out(id));
  return id;
}

template <typename Real>
NodeId Graph<Real>::affine(ParamId w, NodeId x) {
  const auto& t = params_->value(w);
  if (t.shape.size() != 2 || t.shape[1] != length(x)) {
    throw std::invalid_argument(
        "affine: weight '" + params_->name(w) + "' has " +
        std::to_string(t.cols()) + " columns but input has length " +
        std::to_string(length(x)));
  }
  const NodeId id = push(OpKind::Affine, {x}, t.rows());
  nodes_[id.index].param = w.index;
  k_->gemv(t.values.data(), t.rows(), t.cols(), in_value(x.index), out(id));
  check(id, "affine");
  return id;
}

template <typename Real>
NodeId Graph<Real>::affine(ParamId w, NodeId x, ParamId b) {
  const NodeId id = affine(w, x);
  const auto& bias = params_->value(b);
  if (bias.size() != length(id)) {
    throw std::invalid_argument("affine: bias '" + params_->name(b) +
                                "' does not match output length");
  }
  nodes_[id.index].extra = b.index + 1;
  Real* y = out(id);
  for (std::size_t i = 0; i < bias.size(); ++i) y[i] += bias.values[i];
  check(id, "affine");
  return id;
}

template <typename Real>
NodeId Graph<Real>::concat(std::span<const NodeId> parts) {
  std::size_t total = 0;
  for (NodeId p : parts) total += length(p);
  const NodeId id = push_span(OpKind::Concat, parts, total);
  Real* y = out(id);
  for (NodeId p : parts) {
    const auto v = value(p);
    y = std::copy(v.begin(), v.end(), y);
  }
  return id;
}

template <typename Real>
NodeId Graph<Real>::slice(NodeId x, std::size_t offset, std::size_t len) {
  if (offset + len > length(x)) {
    throw std::invalid_argument("slice: range exceeds input length");
  }
  const NodeId id = push(OpKind::Slice, {x}, len);
  nodes_[id.index].extra = static_cast<std::uint32_t>(offset);
  const Real* src = in_value(x.index) + offset;
  std::copy(src, src + len, out(id));
  return id;
}

template <typename Real>
NodeId Graph<Real>::tanh(NodeId x) {
  const NodeId id = push(OpKind::Tanh, {x}, length(x));
  const Real* a = in_value(x.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = std::tanh(a[i]);
  return id;
}

template <typename Real>
NodeId Graph<Real>::sigmoid(NodeId x) {
  const NodeId id = push(OpKind::Sigmoid, {x}, length(x));
  const Real* a = in_value(x.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = stable_sigmoid(a[i]);
  return id;
}

template <typename Real>
NodeId Graph<Real>::mul(NodeId a, NodeId b) {
  require_same_length(a, b, "mul");
  const NodeId id = push(OpKind::Mul, {a, b}, length(a));
  const Real* x = in_value(a.index);
  const Real* z = in_value(b.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = x[i] * z[i];
  check(id, "mul");
  return id;
}

template <typename Real>
NodeId Graph<Real>::add(NodeId a, NodeId b) {
  require_same_length(a, b, "add");
  const NodeId id = push(OpKind::Add, {a, b}, length(a));
  const Real* x = in_value(a.index);
  const Real* z = in_value(b.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = x[i] + z[i];
  check(id, "add");
  return id;
}

template <typename Real>
NodeId Graph<Real>::sub(NodeId a, NodeId b) {
  require_same_length(a, b, "sub");
  const NodeId id = push(OpKind::Sub, {a, b}, length(a));
  const Real* x = in_value(a.index);
  const Real* z = in_value(b.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = x[i] - z[i];
  check(id, "sub");
  return id;
}

template <typename Real>
NodeId Graph<Real>::scale(NodeId x, Real c) {
  const NodeId id = push(OpKind::Scale, {x}, length(x));
  nodes_[id.index].aux = c;
  const Real* a = in_value(x.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = c * a[i];
  check(id, "scale");
  return id;
}

template <typename Real>
NodeId Graph<Real>::scale_by(NodeId x, NodeId s) {
  if (length(s) != 1) throw std::invalid_argument("scale_by: scale must be scalar");
  const NodeId id = push(OpKind::ScaleBy, {x, s}, length(x));
  const Real c = scalar(s);
  const Real* a = in_value(x.index);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) y[i] = c * a[i];
  check(id, "scale_by");
  return id;
}

template <typename Real>
NodeId Graph<Real>::l2_normalize(NodeId x) {
  const NodeId id = push(OpKind::L2Normalize, {x}, length(x));
  const Real* a = in_value(x.index);
  double sq = 0.0;
  for (std::size_t i = 0; i < length(id); ++i) {
    sq += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  }
  const double n = std::sqrt(sq);
  if (!(n >= kMinNorm)) {
    throw NumericError("l2_normalize of a near-zero vector (norm " +
                       std::to_string(n) + ")");
  }
  nodes_[id.index].aux = static_cast<Real>(n);
  Real* y = out(id);
  for (std::size_t i = 0; i < length(id); ++i) {
    y[i] = static_cast<Real>(static_cast<double>(a[i]) / n);
  }
  return id;
}

template <typename Real>
NodeId Graph<Real>::dot(NodeId a, NodeId b) {
  require_same_length(a, b, "dot");
  const NodeId id = push(OpKind::Dot, {a, b}, 1);
  *out(id) = k_->dot(in_value(a.index), in_value(b.index), length(a));
  check(id, "dot");
  return id;
}

template <typename Real>
NodeId Graph<Real>::norm(NodeId x) {
  const NodeId id = push(OpKind::Norm, {x}, 1);
  const Real* a = in_value(x.index);
  double sq = 0.0;
  for (std::size_t i = 0; i < length(x); ++i) {
    sq += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  }
  *out(id) = static_cast<Real>(std::sqrt(sq));
  check(id, "norm");
  return id;
}

template <typename Real>
NodeId Graph<Real>::margin_loss(NodeId logits, std::size_t target,
                                Real margin) {
  const std::size_t n = length(logits);
  if (n < 2) throw std::invalid_argument("margin_loss: needs at least 2 classes");
  if (target >= n) throw std::out_of_range("margin_loss: target out of range");
  const NodeId id = push(OpKind::MarginLoss, {logits}, 1);
  const Real* l = in_value(logits.index);
  std::size_t best = target == 0 ? 1 : 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != target && l[j] > l[best]) best = j;
  }
  nodes_[id.index].param = static_cast<std::uint32_t>(target);
  nodes_[id.index].extra = static_cast<std::uint32_t>(best);
  nodes_[id.index].aux = margin;
  *out(id) = std::max(Real(0), l[best] - l[target] + margin);
  check(id, "margin_loss");
  return id;
}

template <typename Real>
void Graph<Real>::backward(NodeId loss, Gradients<Real>& param_grads,
                           Real seed) {
  if (length(loss) != 1) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  if (param_grads.size() != params_->size()) {
    throw std::invalid_argument("backward: gradient store does not match params");
  }
  grads_.assign(values_.size(), Real(0));
  grads_[nodes_[loss.index].offset] = seed;

  for (std::size_t idx = loss.index + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    const Real* g = grads_.data() + n.offset;
    const Real* y = values_.data() + n.offset;
    const std::uint32_t* in = inputs_.data() + n.input_begin;
    const auto gin = [&](std::size_t i) { return grads_.data() + nodes_[in[i]].offset; };
    const auto vin = [&](std::size_t i) { return values_.data() + nodes_[in[i]].offset; };
    const std::size_t len = n.length;

    switch (n.kind) {
      case OpKind::Constant:
        break;
      case OpKind::Param: {
        auto dst = param_grads[ParamId{n.param}];
        for (std::size_t i = 0; i < len; ++i) dst[i] += g[i];
        break;
      }
      case OpKind::ParamRow: {
        auto dst = param_grads[ParamId{n.param}];
        Real* row = dst.data() + static_cast<std::size_t>(n.extra) * len;
        for (std::size_t i = 0; i < len; ++i) row[i] += g[i];
        break;
      }
      case OpKind::Affine: {
        const auto& w = params_->value(ParamId{n.param});
        const std::size_t cols = w.cols();
        k_->ger_acc(param_grads[ParamId{n.param}].data(), len, cols, g, vin(0));
        k_->gemv_t_acc(w.values.data(), len, cols, g, gin(0));
        if (n.extra != 0) {
          auto db = param_grads[ParamId{n.extra - 1}];
          for (std::size_t i = 0; i < len; ++i) db[i] += g[i];
        }
        break;
      }
      case OpKind::Concat: {
        std::size_t pos = 0;
        for (std::size_t p = 0; p < n.input_count; ++p) {
          const std::size_t plen = nodes_[in[p]].length;
          Real* dst = gin(p);
          for (std::size_t i = 0; i < plen; ++i) dst[i] += g[pos + i];
          pos += plen;
        }
        break;
      }
      case OpKind::Slice: {
        Real* dst = gin(0) + n.extra;
        for (std::size_t i = 0; i < len; ++i) dst[i] += g[i];
        break;
      }
      case OpKind::Tanh: {
        Real* dst = gin(0);
        for (std::size_t i = 0; i < len; ++i) dst[i] += g[i] * (Real(1) - y[i] * y[i]);
        break;
      }
      case OpKind::Sigmoid: {
        Real* dst = gin(0);
        for (std::size_t i = 0; i < len; ++i) dst[i] += g[i] * y[i] * (Real(1) - y[i]);
        break;
      }
      case OpKind::Mul: {
        const Real* a = vin(0);
        const Real* b = vin(1);
        Real* da = gin(0);
        Real* db = gin(1);
        for (std::size_t i = 0; i < len; ++i) {
          da[i] += g[i] * b[i];
          db[i] += g[i] * a[i];
        }
        break;
      }
      case OpKind::Add: {
        Real* da = gin(0);
        Real* db = gin(1);
        for (std::size_t i = 0; i < len; ++i) {
          da[i] += g[i];
          db[i] += g[i];
        }
        break;
      }
      case OpKind::Sub: {
        Real* da = gin(0);
        Real* db = gin(1);
        for (std::size_t i = 0; i < len; ++i) {
          da[i] += g[i];
          db[i] -= g[i];
        }
        break;
      }
      case OpKind::Scale: {
        k_->axpy(n.aux, g, gin(0), len);
        break;
      }
      case OpKind::ScaleBy: {
        const Real s = *vin(1);
        k_->axpy(s, g, gin(0), len);
        *gin(1) += k_->dot(g, vin(0), len);
        break;
      }
      case OpKind::L2Normalize: {
        // (g - (y.g) y) / ||x||
        const Real proj = k_->dot(y, g, len);
        const Real inv = Real(1) / n.aux;
        Real* dst = gin(0);
        for (std::size_t i = 0; i < len; ++i) dst[i] += (g[i] - proj * y[i]) * inv;
        break;
      }
      case OpKind::Dot: {
        k_->axpy(*g, vin(1), gin(0), nodes_[in[0]].length);
        k_->axpy(*g, vin(0), gin(1), nodes_[in[1]].length);
        break;
      }
      case OpKind::Norm: {
        const Real v = *y;
        if (v > Real(0)) k_->axpy(*g / v, vin(0), gin(0), nodes_[in[0]].length);
        break;
      }
      case OpKind::MarginLoss: {
        if (*y > Real(0)) {
          Real* dl = gin(0);
          dl[n.extra] += *g;
          dl[n.param] -= *g;
        }
        break;
      }
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace semvec::ndiff

#pragma once

// Tape-based reverse-mode differentiation over dense vectors.
//
// A Graph is rebuilt for every expression (tree shapes vary). Nodes are
// appended in evaluation order so the tape is topological by construction;
// backward() walks it in reverse and accumulates parameter gradients into a
// caller-owned Gradients object. Parameters are read from a ParamStore that
// must outlive the graph and stay unmodified while the graph is in use.

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "semvec/kernels.hpp"
#include "semvec/ndiff/tensor.hpp"

namespace semvec::ndiff {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind : std::uint8_t {
  Constant,
  Param,
  ParamRow,
  Affine,
  Concat,
  Slice,
  Tanh,
  Sigmoid,
  Mul,
  Add,
  Sub,
  Scale,
  ScaleBy,
  L2Normalize,
  Dot,
  Norm,
  MarginLoss,
};

template <typename Real>
class Graph {
 public:
  explicit Graph(const ParamStore<Real>& params);

  // Drops all nodes but keeps allocated capacity.
  void clear();
  std::size_t size() const noexcept { return nodes_.size(); }

  // Raises NumericError when an op produces a non-finite value.
  void set_check_finite(bool enabled) noexcept { check_finite_ = enabled; }

  NodeId constant(std::span<const Real> values);
  NodeId constant(std::initializer_list<Real> values) {
    return constant(std::span<const Real>(values.begin(), values.size()));
  }
  NodeId param(ParamId p);
  NodeId param_row(ParamId p, std::size_t row);

  // W x (+ b). W is rows x cols with cols == |x|.
  NodeId affine(ParamId w, NodeId x);
  NodeId affine(ParamId w, NodeId x, ParamId b);
  NodeId concat(std::span<const NodeId> parts);
  NodeId concat(std::initializer_list<NodeId> parts) {
    return concat(std::span<const NodeId>(parts.begin(), parts.size()));
  }
  NodeId slice(NodeId x, std::size_t offset, std::size_t length);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  // Elementwise.
  NodeId mul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, Real c);
  // s * x for a scalar node s.
  NodeId scale_by(NodeId x, NodeId s);
  // x / ||x||. Raises NumericError when ||x|| < 1e-12.
  NodeId l2_normalize(NodeId x);
  NodeId dot(NodeId a, NodeId b);
  NodeId norm(NodeId x);
  // max(0, max_{j != target} l_j - l_target + margin).
  NodeId margin_loss(NodeId logits, std::size_t target, Real margin);

  std::span<const Real> value(NodeId id) const {
    const Node& n = nodes_[id.index];
    return {values_.data() + n.offset, n.length};
  }
  Real scalar(NodeId id) const { return values_[nodes_[id.index].offset]; }
  std::size_t length(NodeId id) const { return nodes_[id.index].length; }
  OpKind kind(NodeId id) const { return nodes_[id.index].kind; }
  std::span<const std::uint32_t> inputs(NodeId id) const;

  // Gradient of the last backward() loss with respect to a node.
  std::span<const Real> grad(NodeId id) const {
    const Node& n = nodes_[id.index];
    return {grads_.data() + n.offset, n.length};
  }

  // Reverse pass from a scalar node. Parameter gradients, multiplied by
  // `seed`, are added to `param_grads`.
  void backward(NodeId loss, Gradients<Real>& param_grads, Real seed = Real(1));

 private:
  struct Node {
    OpKind kind;
    std::uint32_t input_begin;
    std::uint32_t input_count;
    std::uint32_t offset;
    std::uint32_t length;
    std::uint32_t param;   // ParamId for Param/ParamRow/Affine weight
    std::uint32_t extra;   // row, slice offset, bias id + 1, target, argmax
    Real aux;              // scale, norm, margin
  };

  NodeId push(OpKind kind, std::initializer_list<NodeId> inputs,
              std::size_t length);
  NodeId push_span(OpKind kind, std::span<const NodeId> inputs,
                   std::size_t length);
  Real* out(NodeId id) { return values_.data() + nodes_[id.index].offset; }
  const Real* in_value(std::uint32_t node) const {
    return values_.data() + nodes_[node].offset;
  }
  void check(NodeId id, const char* what) const;
  void require_same_length(NodeId a, NodeId b, const char* what) const;

  const ParamStore<Real>* params_;
  const kernels::KernelTable<Real>* k_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> inputs_;
  std::vector<Real> values_;
  std::vector<Real> grads_;
  bool check_finite_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace semvec::ndiff

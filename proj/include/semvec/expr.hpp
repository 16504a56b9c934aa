#pragma once

// Expression trees for the boolean and polynomial domains.
//
// Surface syntax is fully parenthesized infix over one-letter variables a-j:
//
//   expr  := var | "(" "!" expr ")" | "(" expr binop expr ")"
//   binop := "&" | "|" | "^" | "=>" | "+" | "-" | "*"
//
// The parser additionally accepts one unparenthesized operator at the top
// level, so "(a | c) & a" and "! a" parse as well.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semvec {

enum class Domain : std::uint8_t { Boolean, Polynomial };

enum class Op : std::uint8_t {
  Var,
  And,
  Or,
  Not,
  Xor,
  Implies,
  Add,
  Sub,
  Mul,
};

inline constexpr std::size_t kMaxVariables = 10;
inline constexpr std::size_t kNumOps = 9;

using VarId = std::uint8_t;

int arity(Op op) noexcept;
// Long identifier used on the command line and in checkpoints ("and", "add").
std::string_view op_name(Op op) noexcept;
// Infix symbol ("&", "+"). Empty for Var.
std::string_view op_symbol(Op op) noexcept;
std::optional<Op> op_from_name(std::string_view name) noexcept;
std::optional<Op> op_from_symbol(std::string_view symbol) noexcept;
bool op_in_domain(Op op, Domain domain) noexcept;
std::span<const Op> domain_ops(Domain domain) noexcept;

std::string_view domain_name(Domain domain) noexcept;
std::optional<Domain> domain_from_name(std::string_view name) noexcept;

inline char var_char(VarId v) { return static_cast<char>('a' + v); }

// Immutable parse tree. Copies share structure.
class Expr {
 public:
  static Expr var(VarId id);
  static Expr unary(Op op, Expr child);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const noexcept;
  bool is_leaf() const noexcept;
  VarId var_id() const noexcept;
  std::size_t size() const noexcept;
  std::span<const Expr> children() const noexcept;
  const Expr& child(std::size_t i) const noexcept;

  friend bool operator==(const Expr& a, const Expr& b) noexcept;

  // Identity of the shared node. Structurally equal trees may differ.
  const void* identity() const noexcept { return node_.get(); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op = Op::Var;
  VarId var = 0;
  std::uint8_t num_children = 0;
  std::uint32_t size = 1;
  std::array<Expr, 2> children{Expr{nullptr}, Expr{nullptr}};
};

inline Op Expr::op() const noexcept { return node_->op; }
inline bool Expr::is_leaf() const noexcept { return node_->op == Op::Var; }
inline VarId Expr::var_id() const noexcept { return node_->var; }
inline std::size_t Expr::size() const noexcept { return node_->size; }
inline std::span<const Expr> Expr::children() const noexcept {
  return {node_->children.data(), node_->num_children};
}
inline const Expr& Expr::child(std::size_t i) const noexcept {
  return node_->children[i];
}

using TokenSeq = std::vector<std::string>;

Expr parse(std::string_view text, Domain domain);
std::string print_infix(const Expr& e);

std::size_t size(const Expr& e) noexcept;
std::size_t leaf_count(const Expr& e) noexcept;
// All subtrees with at least one child, in post-order.
std::vector<Expr> nonleaf_nodes(const Expr& e);
TokenSeq tokenize(const Expr& e);

// Bitmask of variables occurring in `e` (bit v set for variable v).
std::uint32_t variable_mask(const Expr& e) noexcept;
// Operators occurring anywhere in `e`, as a bitmask over Op values.
std::uint32_t op_mask(const Expr& e) noexcept;

}  // namespace semvec

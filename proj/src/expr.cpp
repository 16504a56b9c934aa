#include "semvec/expr.hpp"

#include <cctype>

#include "semvec/error.hpp"

namespace semvec {

namespace {

struct OpInfo {
  Op op;
  int arity;
  std::string_view name;
  std::string_view symbol;
};

constexpr std::array<OpInfo, kNumOps> kOpTable{{
    {Op::Var, 0, "var", ""},
    {Op::And, 2, "and", "&"},
    {Op::Or, 2, "or", "|"},
    {Op::Not, 1, "not", "!"},
    {Op::Xor, 2, "xor", "^"},
    {Op::Implies, 2, "implies", "=>"},
    {Op::Add, 2, "add", "+"},
    {Op::Sub, 2, "sub", "-"},
    {Op::Mul, 2, "mul", "*"},
}};

constexpr std::array<Op, 5> kBoolOps{Op::And, Op::Or, Op::Not, Op::Xor,
                                     Op::Implies};
constexpr std::array<Op, 3> kPolyOps{Op::Add, Op::Sub, Op::Mul};

const OpInfo& info(Op op) { return kOpTable[static_cast<std::size_t>(op)]; }

}  // namespace

int arity(Op op) noexcept { return info(op).arity; }
std::string_view op_name(Op op) noexcept { return info(op).name; }
std::string_view op_symbol(Op op) noexcept { return info(op).symbol; }

std::optional<Op> op_from_name(std::string_view name) noexcept {
  for (const auto& entry : kOpTable) {
    if (entry.op != Op::Var && entry.name == name) return entry.op;
  }
  return std::nullopt;
}

std::optional<Op> op_from_symbol(std::string_view symbol) noexcept {
  for (const auto& entry : kOpTable) {
    if (entry.op != Op::Var && entry.symbol == symbol) return entry.op;
  }
  return std::nullopt;
}

bool op_in_domain(Op op, Domain domain) noexcept {
  for (Op candidate : domain_ops(domain)) {
    if (candidate == op) return true;
  }
  return false;
}

std::span<const Op> domain_ops(Domain domain) noexcept {
  if (domain == Domain::Boolean) return kBoolOps;
  return kPolyOps;
}

std::string_view domain_name(Domain domain) noexcept {
  return domain == Domain::Boolean ? "bool" : "poly";
}

std::optional<Domain> domain_from_name(std::string_view name) noexcept {
  if (name == "bool" || name == "boolean") return Domain::Boolean;
  if (name == "poly" || name == "polynomial") return Domain::Polynomial;
  return std::nullopt;
}

Expr Expr::var(VarId id) {
  auto node = std::make_shared<Node>();
  node->op = Op::Var;
  node->var = id;
  return Expr(std::move(node));
}

Expr Expr::unary(Op op, Expr child) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->num_children = 1;
  node->size = 1 + static_cast<std::uint32_t>(child.size());
  node->children[0] = std::move(child);
  return Expr(std::move(node));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->num_children = 2;
  node->size =
      1 + static_cast<std::uint32_t>(lhs.size() + rhs.size());
  node->children[0] = std::move(lhs);
  node->children[1] = std::move(rhs);
  return Expr(std::move(node));
}

bool operator==(const Expr& a, const Expr& b) noexcept {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op() || a.size() != b.size()) return false;
  if (a.is_leaf()) return a.var_id() == b.var_id();
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!(a.child(i) == b.child(i))) return false;
  }
  return true;
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, Domain domain) : text_(text), domain_(domain) {}

  Expr parse_top() {
    skip_space();
    if (at_end()) throw ParseError("empty expression", pos_);
    Expr result = [&] {
      if (peek() == '!') {
        check_not_allowed();
        ++pos_;
        return Expr::unary(Op::Not, parse_expr());
      }
      Expr lhs = parse_expr();
      skip_space();
      if (at_end()) return lhs;
      const Op op = parse_binop();
      Expr rhs = parse_expr();
      return Expr::binary(op, std::move(lhs), std::move(rhs));
    }();
    skip_space();
    if (!at_end()) throw ParseError("unexpected trailing input", pos_);
    return result;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
      ++pos_;
    }
  }

  void check_not_allowed() const {
    if (domain_ != Domain::Boolean) {
      throw ParseError("operator '!' is not valid in the poly domain", pos_);
    }
  }

  void expect(char c) {
    skip_space();
    if (at_end()) {
      throw ParseError(std::string("expected '") + c + "' but input ended",
                       pos_);
    }
    if (peek() != c) {
      throw ParseError(std::string("expected '") + c + "', found '" + peek() +
                           "'",
                       pos_);
    }
    ++pos_;
  }

  Op parse_binop() {
    skip_space();
    if (at_end()) throw ParseError("expected operator but input ended", pos_);
    const std::size_t start = pos_;
    std::string_view symbol;
    if (text_.substr(pos_, 2) == "=>") {
      symbol = text_.substr(pos_, 2);
    } else {
      symbol = text_.substr(pos_, 1);
    }
    const auto op = op_from_symbol(symbol);
    if (!op || *op == Op::Not) {
      throw ParseError("expected binary operator, found '" +
                           std::string(symbol) + "'",
                       start);
    }
    if (!op_in_domain(*op, domain_)) {
      throw ParseError("operator '" + std::string(symbol) +
                           "' is not valid in the " +
                           std::string(domain_name(domain_)) + " domain",
                       start);
    }
    pos_ += symbol.size();
    return *op;
  }

  Expr parse_expr() {
    skip_space();
    if (at_end()) throw ParseError("expected expression but input ended", pos_);
    const char c = peek();
    if (c >= 'a' && c <= 'j') {
      ++pos_;
      return Expr::var(static_cast<VarId>(c - 'a'));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      throw ParseError(std::string("unknown variable '") + c + "'", pos_);
    }
    if (c != '(') {
      throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    ++pos_;
    skip_space();
    if (!at_end() && peek() == '!') {
      check_not_allowed();
      ++pos_;
      Expr child = parse_expr();
      expect(')');
      return Expr::unary(Op::Not, std::move(child));
    }
    Expr lhs = parse_expr();
    const Op op = parse_binop();
    Expr rhs = parse_expr();
    expect(')');
    return Expr::binary(op, std::move(lhs), std::move(rhs));
  }

  std::string_view text_;
  Domain domain_;
  std::size_t pos_ = 0;
};

void print_into(const Expr& e, std::string& out) {
  if (e.is_leaf()) {
    out.push_back(var_char(e.var_id()));
    return;
  }
  out.push_back('(');
  if (e.op() == Op::Not) {
    out += "! ";
    print_into(e.child(0), out);
  } else {
    print_into(e.child(0), out);
    out.push_back(' ');
    out += op_symbol(e.op());
    out.push_back(' ');
    print_into(e.child(1), out);
  }
  out.push_back(')');
}

void collect_nonleaf(const Expr& e, std::vector<Expr>& out) {
  if (e.is_leaf()) return;
  for (const Expr& c : e.children()) collect_nonleaf(c, out);
  out.push_back(e);
}

void tokenize_into(const Expr& e, TokenSeq& out) {
  if (e.is_leaf()) {
    out.emplace_back(1, var_char(e.var_id()));
    return;
  }
  out.emplace_back("(");
  if (e.op() == Op::Not) {
    out.emplace_back("!");
    tokenize_into(e.child(0), out);
  } else {
    tokenize_into(e.child(0), out);
    out.emplace_back(op_symbol(e.op()));
    tokenize_into(e.child(1), out);
  }
  out.emplace_back(")");
}

}  // namespace

Expr parse(std::string_view text, Domain domain) {
  return Parser(text, domain).parse_top();
}

std::string print_infix(const Expr& e) {
  std::string out;
  out.reserve(e.size() * 4);
  print_into(e, out);
  return out;
}

std::size_t size(const Expr& e) noexcept { return e.size(); }

std::size_t leaf_count(const Expr& e) noexcept {
  if (e.is_leaf()) return 1;
  std::size_t n = 0;
  for (const Expr& c : e.children()) n += leaf_count(c);
  return n;
}

std::vector<Expr> nonleaf_nodes(const Expr& e) {
  std::vector<Expr> out;
  collect_nonleaf(e, out);
  return out;
}

TokenSeq tokenize(const Expr& e) {
  TokenSeq out;
  out.reserve(e.size() * 3);
  tokenize_into(e, out);
  return out;
}

std::uint32_t variable_mask(const Expr& e) noexcept {
  if (e.is_leaf()) return 1u << e.var_id();
  std::uint32_t mask = 0;
  for (const Expr& c : e.children()) mask |= variable_mask(c);
  return mask;
}

std::uint32_t op_mask(const Expr& e) noexcept {
  if (e.is_leaf()) return 0;
  std::uint32_t mask = 1u << static_cast<unsigned>(e.op());
  for (const Expr& c : e.children()) mask |= op_mask(c);
  return mask;
}

}  // namespace semvec

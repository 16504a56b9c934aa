#include "semvec/semantics.hpp"

#include <algorithm>
#include <cctype>

#include "semvec/error.hpp"
#include "semvec/rng.hpp"

namespace semvec {

VarOrder::VarOrder(std::vector<VarId> vars) : vars_(std::move(vars)) {
  if (vars_.size() > kMaxVariables) {
    throw DataError("at most 10 variables are supported");
  }
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i] >= kMaxVariables) {
      throw DataError("variable out of range a-j");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (vars_[i] == vars_[j]) {
        throw DataError(std::string("duplicate variable '") +
                        var_char(vars_[i]) + "'");
      }
    }
  }
}

VarOrder VarOrder::first(std::size_t n) {
  std::vector<VarId> vars(n);
  for (std::size_t i = 0; i < n; ++i) vars[i] = static_cast<VarId>(i);
  return VarOrder(std::move(vars));
}

VarOrder VarOrder::parse(std::string_view text) {
  std::vector<VarId> vars;
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) continue;
    if (c < 'a' || c > 'j') {
      throw DataError(std::string("unknown variable '") + c + "'");
    }
    vars.push_back(static_cast<VarId>(c - 'a'));
  }
  if (vars.empty()) throw DataError("variable list is empty");
  return VarOrder(std::move(vars));
}

std::optional<std::size_t> VarOrder::index_of(VarId v) const noexcept {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i] == v) return i;
  }
  return std::nullopt;
}

std::string VarOrder::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (i) out.push_back(',');
    out.push_back(var_char(vars_[i]));
  }
  return out;
}

TruthTable::TruthTable(std::size_t num_vars)
    : num_vars_(num_vars),
      words_(((std::size_t{1} << num_vars) + 63) / 64, 0) {}

void TruthTable::set_bit(std::size_t i, bool value) noexcept {
  const std::uint64_t m = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= m;
  } else {
    words_[i >> 6] &= ~m;
  }
}

std::string TruthTable::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t digits = (num_bits() + 3) / 4;
  std::string out(digits, '0');
  for (std::size_t d = 0; d < digits; ++d) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t i = d * 4 + b;
      if (i < num_bits() && bit(i)) nibble |= 1u << b;
    }
    out[digits - 1 - d] = kDigits[nibble];
  }
  return out;
}

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw NumericError("polynomial coefficient overflow");
  }
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw NumericError("polynomial coefficient overflow");
  }
  return r;
}

std::size_t require_index(const VarOrder& order, VarId v) {
  const auto idx = order.index_of(v);
  if (!idx) {
    throw DataError(std::string("variable '") + var_char(v) +
                    "' is not in the variable order");
  }
  return *idx;
}

// Truth table of variable j over 2^V assignments: bit i = (i >> j) & 1.
void fill_variable(TruthTable& table, std::size_t j) {
  auto words = table.words();
  const std::size_t bits = table.num_bits();
  if (j < 6) {
    static constexpr std::uint64_t kPatterns[6] = {
        0xaaaaaaaaaaaaaaaaULL, 0xccccccccccccccccULL, 0xf0f0f0f0f0f0f0f0ULL,
        0xff00ff00ff00ff00ULL, 0xffff0000ffff0000ULL, 0xffffffff00000000ULL};
    for (auto& w : words) w = kPatterns[j];
  } else {
    for (std::size_t w = 0; w < words.size(); ++w) {
      words[w] = ((w >> (j - 6)) & 1u) ? ~std::uint64_t{0} : 0;
    }
  }
  if (bits < 64) words[0] &= (std::uint64_t{1} << bits) - 1;
}

void bool_into(const Expr& e, const VarOrder& order, TruthTable& out) {
  if (e.is_leaf()) {
    fill_variable(out, require_index(order, e.var_id()));
    return;
  }
  const std::size_t bits = out.num_bits();
  const std::uint64_t tail =
      bits < 64 ? (std::uint64_t{1} << bits) - 1 : ~std::uint64_t{0};
  if (e.op() == Op::Not) {
    bool_into(e.child(0), order, out);
    for (auto& w : out.words()) w = ~w;
    out.words()[0] &= tail;
    return;
  }
  TruthTable rhs(out.num_vars());
  bool_into(e.child(0), order, out);
  bool_into(e.child(1), order, rhs);
  auto lw = out.words();
  auto rw = rhs.words();
  for (std::size_t i = 0; i < lw.size(); ++i) {
    switch (e.op()) {
      case Op::And: lw[i] &= rw[i]; break;
      case Op::Or: lw[i] |= rw[i]; break;
      case Op::Xor: lw[i] ^= rw[i]; break;
      case Op::Implies: lw[i] = ~lw[i] | rw[i]; break;
      default:
        throw DataError("operator '" + std::string(op_name(e.op())) +
                        "' is not a boolean operator");
    }
  }
  lw[0] &= tail;
}

PolyNormalForm poly_rec(const Expr& e, const VarOrder& order) {
  if (e.is_leaf()) {
    return PolyNormalForm::variable(order.size(),
                                    require_index(order, e.var_id()));
  }
  const PolyNormalForm lhs = poly_rec(e.child(0), order);
  const PolyNormalForm rhs = poly_rec(e.child(1), order);
  switch (e.op()) {
    case Op::Add: return lhs + rhs;
    case Op::Sub: return lhs - rhs;
    case Op::Mul: return lhs * rhs;
    default:
      throw DataError("operator '" + std::string(op_name(e.op())) +
                      "' is not a polynomial operator");
  }
}

}  // namespace

PolyNormalForm PolyNormalForm::variable(std::size_t num_vars,
                                        std::size_t index) {
  PolyNormalForm p(num_vars);
  Exponents exps(num_vars, 0);
  exps[index] = 1;
  p.terms_.emplace(std::move(exps), 1);
  return p;
}

void PolyNormalForm::add_term(const Exponents& exps, std::int64_t coeff) {
  if (coeff == 0) return;
  auto [it, inserted] = terms_.try_emplace(exps, coeff);
  if (inserted) return;
  it->second = checked_add(it->second, coeff);
  if (it->second == 0) terms_.erase(it);
}

PolyNormalForm PolyNormalForm::operator+(const PolyNormalForm& other) const {
  PolyNormalForm out = *this;
  for (const auto& [exps, coeff] : other.terms_) out.add_term(exps, coeff);
  return out;
}

PolyNormalForm PolyNormalForm::operator-(const PolyNormalForm& other) const {
  PolyNormalForm out = *this;
  for (const auto& [exps, coeff] : other.terms_) {
    out.add_term(exps, checked_mul(coeff, -1));
  }
  return out;
}

PolyNormalForm PolyNormalForm::operator*(const PolyNormalForm& other) const {
  PolyNormalForm out(num_vars_);
  Exponents exps(num_vars_);
  for (const auto& [le, lc] : terms_) {
    for (const auto& [re, rc] : other.terms_) {
      for (std::size_t v = 0; v < num_vars_; ++v) exps[v] = le[v] + re[v];
      out.add_term(exps, checked_mul(lc, rc));
    }
  }
  return out;
}

std::string PolyNormalForm::serialize() const {
  std::string out = "P:" + std::to_string(num_vars_) + ":";
  bool first = true;
  for (const auto& [exps, coeff] : terms_) {
    if (!first) out.push_back(';');
    first = false;
    for (std::size_t v = 0; v < exps.size(); ++v) {
      if (v) out.push_back(',');
      out += std::to_string(exps[v]);
    }
    out.push_back('=');
    out += std::to_string(coeff);
  }
  return out;
}

TruthTable bool_canonical(const Expr& e, const VarOrder& order) {
  TruthTable table(order.size());
  bool_into(e, order, table);
  return table;
}

PolyNormalForm poly_canonical(const Expr& e, const VarOrder& order) {
  return poly_rec(e, order);
}

EquivKey equiv_key(const Expr& e, const VarOrder& order, Domain domain) {
  if (domain == Domain::Boolean) {
    const TruthTable table = bool_canonical(e, order);
    return {"B:" + std::to_string(order.size()) + ":" + table.hex()};
  }
  return {poly_canonical(e, order).serialize()};
}

bool eval_bool(const Expr& e, const VarOrder& order, std::uint64_t assignment) {
  if (e.is_leaf()) {
    return (assignment >> require_index(order, e.var_id())) & 1u;
  }
  const bool a = eval_bool(e.child(0), order, assignment);
  if (e.op() == Op::Not) return !a;
  const bool b = eval_bool(e.child(1), order, assignment);
  switch (e.op()) {
    case Op::And: return a && b;
    case Op::Or: return a || b;
    case Op::Xor: return a != b;
    case Op::Implies: return !a || b;
    default:
      throw DataError("operator '" + std::string(op_name(e.op())) +
                      "' is not a boolean operator");
  }
}

std::int64_t eval_poly(const Expr& e, const VarOrder& order,
                       std::span<const std::int64_t> point) {
  if (e.is_leaf()) return point[require_index(order, e.var_id())];
  const std::int64_t a = eval_poly(e.child(0), order, point);
  const std::int64_t b = eval_poly(e.child(1), order, point);
  switch (e.op()) {
    case Op::Add: return checked_add(a, b);
    case Op::Sub: return checked_add(a, checked_mul(b, -1));
    case Op::Mul: return checked_mul(a, b);
    default:
      throw DataError("operator '" + std::string(op_name(e.op())) +
                      "' is not a polynomial operator");
  }
}

Verdict random_point_check(const Expr& e1, const Expr& e2, Domain domain,
                           const VarOrder& order,
                           const PointCheckOptions& options) {
  SplitMix64 rng(options.seed);
  if (domain == Domain::Boolean) {
    const std::uint64_t total = std::uint64_t{1} << order.size();
    if (options.trials >= total) {
      for (std::uint64_t a = 0; a < total; ++a) {
        if (eval_bool(e1, order, a) != eval_bool(e2, order, a)) {
          return Verdict::Distinguished;
        }
      }
      return Verdict::Indistinguishable;
    }
    for (std::size_t t = 0; t < options.trials; ++t) {
      const std::uint64_t a = rng.below(total);
      if (eval_bool(e1, order, a) != eval_bool(e2, order, a)) {
        return Verdict::Distinguished;
      }
    }
    return Verdict::Indistinguishable;
  }
  std::vector<std::int64_t> point(order.size());
  const auto width = static_cast<std::uint64_t>(2 * options.range + 1);
  for (std::size_t t = 0; t < options.trials; ++t) {
    for (auto& x : point) {
      x = static_cast<std::int64_t>(rng.below(width)) - options.range;
    }
    if (eval_poly(e1, order, point) != eval_poly(e2, order, point)) {
      return Verdict::Distinguished;
    }
  }
  return Verdict::Indistinguishable;
}

}  // namespace semvec

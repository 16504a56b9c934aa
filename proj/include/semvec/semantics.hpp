#pragma once

// Semantic fingerprints. Boolean expressions canonicalize to their truth
// table, polynomials to their fully expanded monomial normal form. The
// serialized fingerprint is the equivalence-class identifier:
//
//   boolean     "B:<V>:<hex>"    big-endian hex of sum(bit_i * 2^i),
//                                 zero-padded to ceil(2^V / 4) digits
//   polynomial  "P:<V>:<e1,...,eV>=<coeff>;..."  terms in lexicographic
//                                 exponent order, "P:<V>:" for zero

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semvec/expr.hpp"

namespace semvec {

class VarOrder {
 public:
  VarOrder() = default;
  explicit VarOrder(std::vector<VarId> vars);
  // First `n` variables a, b, c, ...
  static VarOrder first(std::size_t n);
  // "a,b,c" or "abc"
  static VarOrder parse(std::string_view text);

  std::size_t size() const noexcept { return vars_.size(); }
  std::span<const VarId> vars() const noexcept { return vars_; }
  VarId operator[](std::size_t i) const noexcept { return vars_[i]; }
  std::optional<std::size_t> index_of(VarId v) const noexcept;
  std::string to_string() const;

  friend bool operator==(const VarOrder&, const VarOrder&) = default;

 private:
  std::vector<VarId> vars_;
};

class TruthTable {
 public:
  explicit TruthTable(std::size_t num_vars);

  std::size_t num_vars() const noexcept { return num_vars_; }
  std::size_t num_bits() const noexcept { return std::size_t{1} << num_vars_; }
  bool bit(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set_bit(std::size_t i, bool value) noexcept;
  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }
  std::string hex() const;

  friend bool operator==(const TruthTable&, const TruthTable&) = default;

 private:
  std::size_t num_vars_;
  std::vector<std::uint64_t> words_;
};

class PolyNormalForm {
 public:
  using Exponents = std::vector<std::uint32_t>;
  using Terms = std::map<Exponents, std::int64_t>;

  explicit PolyNormalForm(std::size_t num_vars) : num_vars_(num_vars) {}

  static PolyNormalForm variable(std::size_t num_vars, std::size_t index);

  std::size_t num_vars() const noexcept { return num_vars_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  // Adds `coeff` to the term, dropping it if it cancels. Throws NumericError
  // on overflow.
  void add_term(const Exponents& exps, std::int64_t coeff);

  PolyNormalForm operator+(const PolyNormalForm& other) const;
  PolyNormalForm operator-(const PolyNormalForm& other) const;
  PolyNormalForm operator*(const PolyNormalForm& other) const;

  std::string serialize() const;

  friend bool operator==(const PolyNormalForm&, const PolyNormalForm&) = default;

 private:
  std::size_t num_vars_;
  Terms terms_;
};

struct EquivKey {
  std::string id;

  friend bool operator==(const EquivKey&, const EquivKey&) = default;
  friend auto operator<=>(const EquivKey&, const EquivKey&) = default;
};

TruthTable bool_canonical(const Expr& e, const VarOrder& order);
PolyNormalForm poly_canonical(const Expr& e, const VarOrder& order);
EquivKey equiv_key(const Expr& e, const VarOrder& order, Domain domain);

// Direct evaluation, independent of the canonical forms.
// `assignment` bit j is the value of order[j].
bool eval_bool(const Expr& e, const VarOrder& order, std::uint64_t assignment);
// Checked 64-bit evaluation; throws NumericError on overflow.
std::int64_t eval_poly(const Expr& e, const VarOrder& order,
                       std::span<const std::int64_t> point);

enum class Verdict { Distinguished, Indistinguishable };

struct PointCheckOptions {
  std::size_t trials = 64;
  std::uint64_t seed = 0;
  // Polynomial points are drawn uniformly from [-range, range].
  std::int64_t range = 7;
};

// Boolean: exhaustive when trials >= 2^V, otherwise random assignments.
Verdict random_point_check(const Expr& e1, const Expr& e2, Domain domain,
                           const VarOrder& order,
                           const PointCheckOptions& options = {});

}  // namespace semvec

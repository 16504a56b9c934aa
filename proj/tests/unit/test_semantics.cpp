#include <doctest.h>

#include <map>

#include "semvec/datagen.hpp"
#include "semvec/error.hpp"
#include "semvec/rng.hpp"
#include "semvec/semantics.hpp"

using namespace semvec;

namespace {

const VarOrder kAbc = VarOrder::first(3);

std::string key(const char* text, Domain d) {
  return equiv_key(parse(text, d), kAbc, d).id;
}

}  // namespace

TEST_CASE("VarOrder parsing and validation") {
  CHECK(VarOrder::parse("a,b,c") == kAbc);
  CHECK(VarOrder::parse("abc") == kAbc);
  CHECK(VarOrder::parse("c,a").index_of(0) == 1);
  CHECK_FALSE(VarOrder::parse("c,a").index_of(1).has_value());
  CHECK(VarOrder::parse("c,a").to_string() == "c,a");
  CHECK_THROWS_AS(VarOrder::parse("a,a"), DataError);
  CHECK_THROWS_AS(VarOrder::parse("a,k"), DataError);
  CHECK_THROWS_AS(VarOrder::parse(""), DataError);
  CHECK_NOTHROW(VarOrder::first(10));
  CHECK_THROWS_AS(VarOrder::first(11), DataError);
}

TEST_CASE("truth table keys") {
  // Bit i is the value under assignment i, where bit j of i is variable j.
  CHECK(key("a", Domain::Boolean) == "B:3:aa");
  CHECK(key("b", Domain::Boolean) == "B:3:cc");
  CHECK(key("a & b", Domain::Boolean) == "B:3:88");
  CHECK(key("a | (! a)", Domain::Boolean) == "B:3:ff");
  CHECK(key("a ^ a", Domain::Boolean) == "B:3:00");
  CHECK(key("a => b", Domain::Boolean) == key("(! a) | b", Domain::Boolean));
  CHECK(key("(a | c) & a", Domain::Boolean) == key("a", Domain::Boolean));
  CHECK(equiv_key(parse("a", Domain::Boolean), VarOrder::first(1), Domain::Boolean).id ==
        "B:1:2");
}

TEST_CASE("truth tables above six variables span several words") {
  const VarOrder eight = VarOrder::first(8);
  const Expr e = parse("(h & (g | a)) ^ (! b)", Domain::Boolean);
  const TruthTable t = bool_canonical(e, eight);
  REQUIRE(t.num_bits() == 256);
  for (std::uint64_t i = 0; i < 256; ++i) {
    CHECK(t.bit(i) == eval_bool(e, eight, i));
  }
}

TEST_CASE("polynomial normal form keys") {
  CHECK(key("(a + b) * (a - b)", Domain::Polynomial) == "P:3:0,2,0=-1;2,0,0=1");
  CHECK(key("a - a", Domain::Polynomial) == "P:3:");
  CHECK(key("(b - a) - (c + b)", Domain::Polynomial) == "P:3:0,0,1=-1;1,0,0=-1");
  CHECK(key("a + b", Domain::Polynomial) == key("b + a", Domain::Polynomial));
  CHECK(key("a * (b + c)", Domain::Polynomial) ==
        key("(a * b) + (c * a)", Domain::Polynomial));
  CHECK(key("a - b", Domain::Polynomial) != key("b - a", Domain::Polynomial));
}

TEST_CASE("canonical forms agree with direct evaluation") {
  DatasetSpec spec;
  spec.domain = Domain::Polynomial;
  spec.ops = {Op::Add, Op::Sub, Op::Mul};
  spec.vars = kAbc;
  spec.max_size = 7;
  SplitMix64 rng(5);
  for (const Expr& e : enumerate_all(spec)) {
    if (rng.below(20) != 0) continue;
    const PolyNormalForm p = poly_canonical(e, kAbc);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<std::int64_t> pt(3);
      for (auto& x : pt) x = static_cast<std::int64_t>(rng.below(15)) - 7;
      std::int64_t sum = 0;
      for (const auto& [exps, coeff] : p.terms()) {
        std::int64_t m = coeff;
        for (std::size_t v = 0; v < 3; ++v) {
          for (std::uint32_t k = 0; k < exps[v]; ++k) m *= pt[v];
        }
        sum += m;
      }
      CHECK(sum == eval_poly(e, kAbc, pt));
    }
  }
}

TEST_CASE("random point check") {
  const auto b = [](const char* t) { return parse(t, Domain::Boolean); };
  CHECK(random_point_check(b("a => b"), b("(! a) | b"), Domain::Boolean, kAbc) ==
        Verdict::Indistinguishable);
  CHECK(random_point_check(b("a & b"), b("a | b"), Domain::Boolean, kAbc) ==
        Verdict::Distinguished);
  const auto p = [](const char* t) { return parse(t, Domain::Polynomial); };
  CHECK(random_point_check(p("(a + b) * (a + b)"), p("((a * a) + (b * b)) + ((a * b) + (b * a))"),
                           Domain::Polynomial, kAbc) == Verdict::Indistinguishable);
  CHECK(random_point_check(p("a * b"), p("a + b"), Domain::Polynomial, kAbc) ==
        Verdict::Distinguished);
}

TEST_CASE("polynomial evaluation detects overflow") {
  const VarOrder one = VarOrder::first(1);
  Expr e = parse("a", Domain::Polynomial);
  for (int i = 0; i < 6; ++i) e = Expr::binary(Op::Mul, e, e);  // a^64
  const std::vector<std::int64_t> pt{3};
  CHECK_THROWS_AS(eval_poly(e, one, pt), NumericError);
}

TEST_CASE("boolean key equality matches exhaustive evaluation on Bool5") {
  DatasetSpec spec;
  spec.domain = Domain::Boolean;
  spec.ops = {Op::And, Op::Or, Op::Not, Op::Xor, Op::Implies};
  spec.vars = kAbc;
  spec.max_size = 5;
  const auto exprs = enumerate_all(spec);
  std::map<std::string, std::uint8_t> by_key;
  std::map<std::uint8_t, std::string> by_table;
  for (const Expr& e : exprs) {
    std::uint8_t table = 0;
    for (std::uint64_t i = 0; i < 8; ++i) table |= eval_bool(e, kAbc, i) << i;
    const std::string k = equiv_key(e, kAbc, Domain::Boolean).id;
    const auto [it, fresh] = by_key.emplace(k, table);
    CHECK(it->second == table);
    const auto [jt, fresh2] = by_table.emplace(table, k);
    CHECK(jt->second == k);
  }
  CHECK(by_key.size() == 95);
}

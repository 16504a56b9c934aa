#pragma once

// Exhaustive dataset synthesis: enumerate every parse tree up to a size
// bound, group by equivalence key, optionally cap class sizes, and assign
// train / valid / seen_test / unseen_test splits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semvec/expr.hpp"
#include "semvec/semantics.hpp"

namespace semvec {

struct DatasetSpec {
  Domain domain = Domain::Boolean;
  std::vector<Op> ops;
  VarOrder vars;
  std::uint32_t max_size = 1;
  std::optional<std::size_t> per_class_cap;
  std::uint64_t seed = 0;
  // Refuse to materialize more than this many expressions.
  std::uint64_t max_total = 20'000'000;

  void validate() const;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

// Size recurrence N(s) for s = 0..max_size (N(0) = 0):
//   N(s) = [s=1]|vars| + |unary| N(s-1) + |binary| sum_{i+j=s-1} N(i) N(j)
// Saturates at UINT64_MAX.
std::vector<std::uint64_t> count_by_size(std::size_t num_vars,
                                         std::size_t num_unary,
                                         std::size_t num_binary,
                                         std::size_t max_size);
std::uint64_t count_total(const DatasetSpec& spec);

// Every distinct tree with size <= max_size, each once. Ordered by size, then
// by root (variables in VarOrder, then operators in spec order), then by the
// split point (left size ascending), then left and right child order.
std::vector<Expr> enumerate_all(const DatasetSpec& spec);

struct EquivClass {
  EquivKey key;
  std::vector<Expr> members;
};

// Partition by equivalence key; classes sorted by key, members keep input
// order.
std::vector<EquivClass> group_classes(std::span<const Expr> exprs,
                                      const VarOrder& order, Domain domain);

// Each class with more than `cap` members is reduced to a uniform sample of
// `cap` members without replacement. Retained members keep their order.
std::vector<EquivClass> subsample_classes(std::vector<EquivClass> classes,
                                          std::size_t cap, std::uint64_t seed);

enum class Split : std::uint8_t { Train, Valid, SeenTest, UnseenTest };

std::string_view split_name(Split split) noexcept;
std::optional<Split> split_from_name(std::string_view name) noexcept;

struct DatasetRecord {
  std::string expr;
  std::string class_id;
  std::uint32_t size = 0;
  Split split = Split::Train;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct SplitOptions {
  // Fraction of all classes held out as unseen.
  double unseen_fraction = 0.20;
  // Mean members per class used by the eligibility filter. When absent, the
  // mean of the classes passed in is used.
  std::optional<double> mean_class_size;
};

// Unseen: round(unseen_fraction * #classes) classes drawn uniformly from
// those with 2 <= size < 3 * mean (capped at the number eligible). Every
// other class has its members shuffled and split ceil(0.60 m) train,
// floor(0.15 m) valid, rest seen_test. Records are emitted class by class in
// key order, members in class order.
std::vector<DatasetRecord> split(const std::vector<EquivClass>& classes,
                                 std::uint64_t seed,
                                 const SplitOptions& options = {});

struct SplitCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t seen_test = 0;
};
// Per-class 60/15/25 rounding used by split().
SplitCounts seen_split_counts(std::size_t members) noexcept;

struct DatasetStats {
  std::size_t num_classes = 0;
  std::size_t num_exprs = 0;
  double entropy_bits = 0.0;
};

DatasetStats stats(std::span<const DatasetRecord> records);

struct Dataset {
  std::optional<DatasetSpec> spec;
  std::vector<DatasetRecord> records;
};

// The complete pipeline: enumerate, group, subsample, split.
Dataset generate(const DatasetSpec& spec);

// One JSON object per line after a '#' header line carrying the DatasetSpec.
void write_jsonl(const std::filesystem::path& path,
                 std::span<const DatasetRecord> records,
                 const std::optional<DatasetSpec>& spec = std::nullopt);
Dataset read_jsonl(const std::filesystem::path& path);

std::string spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(std::string_view text);

// Parses every record's expression. Throws DataError naming the record.
std::vector<Expr> parse_records(std::span<const DatasetRecord> records,
                                Domain domain);

// Infers domain / variables from records when a file carries no header.
DatasetSpec infer_spec(std::span<const DatasetRecord> records);

}  // namespace semvec

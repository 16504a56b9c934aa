#include "semvec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "semvec/error.hpp"
#include "semvec/rng.hpp"

namespace semvec {

namespace {

constexpr std::uint64_t kSplitStream = 0x5350'4c49'54ULL;  // "SPLIT"
constexpr char kHeaderTag[] = "# semvec-dataset ";

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  return __builtin_add_overflow(a, b, &r)
             ? std::numeric_limits<std::uint64_t>::max()
             : r;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  return __builtin_mul_overflow(a, b, &r)
             ? std::numeric_limits<std::uint64_t>::max()
             : r;
}

}  // namespace

void DatasetSpec::validate() const {
  if (max_size < 1) throw DataError("max_size must be at least 1");
  if (vars.size() == 0) throw DataError("variable list is empty");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i] == Op::Var || !op_in_domain(ops[i], domain)) {
      throw DataError("operator '" + std::string(op_name(ops[i])) +
                      "' is not valid for the " +
                      std::string(domain_name(domain)) + " domain");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (ops[i] == ops[j]) {
        throw DataError("duplicate operator '" +
                        std::string(op_name(ops[i])) + "'");
      }
    }
  }
  if (per_class_cap && *per_class_cap < 1) {
    throw DataError("per-class cap must be at least 1");
  }
}

std::vector<std::uint64_t> count_by_size(std::size_t num_vars,
                                         std::size_t num_unary,
                                         std::size_t num_binary,
                                         std::size_t max_size) {
  std::vector<std::uint64_t> n(max_size + 1, 0);
  for (std::size_t s = 1; s <= max_size; ++s) {
    std::uint64_t total = s == 1 ? num_vars : 0;
    total = sat_add(total, sat_mul(num_unary, n[s - 1]));
    std::uint64_t pairs = 0;
    for (std::size_t i = 1; i + 1 < s; ++i) {
      pairs = sat_add(pairs, sat_mul(n[i], n[s - 1 - i]));
    }
    n[s] = sat_add(total, sat_mul(num_binary, pairs));
  }
  return n;
}

std::uint64_t count_total(const DatasetSpec& spec) {
  std::size_t unary = 0;
  std::size_t binary = 0;
  for (Op op : spec.ops) (arity(op) == 1 ? unary : binary) += 1;
  const auto n = count_by_size(spec.vars.size(), unary, binary, spec.max_size);
  std::uint64_t total = 0;
  for (std::uint64_t c : n) total = sat_add(total, c);
  return total;
}

std::vector<Expr> enumerate_all(const DatasetSpec& spec) {
  spec.validate();
  const std::uint64_t total = count_total(spec);
  if (total > spec.max_total) {
    throw DataError("enumeration would produce " + std::to_string(total) +
                    " expressions, above the limit of " +
                    std::to_string(spec.max_total));
  }
  std::vector<std::vector<Expr>> bands(spec.max_size + 1);
  for (VarId v : spec.vars.vars()) bands[1].push_back(Expr::var(v));
  for (std::size_t s = 2; s <= spec.max_size; ++s) {
    auto& band = bands[s];
    for (Op op : spec.ops) {
      if (arity(op) == 1) {
        for (const Expr& c : bands[s - 1]) band.push_back(Expr::unary(op, c));
        continue;
      }
      for (std::size_t i = 1; i + 1 < s; ++i) {
        const auto& left = bands[i];
        const auto& right = bands[s - 1 - i];
        for (const Expr& l : left) {
          for (const Expr& r : right) band.push_back(Expr::binary(op, l, r));
        }
      }
    }
  }
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(total));
  for (auto& band : bands) {
    out.insert(out.end(), std::make_move_iterator(band.begin()),
               std::make_move_iterator(band.end()));
  }
  return out;
}

std::vector<EquivClass> group_classes(std::span<const Expr> exprs,
                                      const VarOrder& order, Domain domain) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<EquivClass> classes;
  for (const Expr& e : exprs) {
    EquivKey key = equiv_key(e, order, domain);
    auto [it, inserted] = index.try_emplace(key.id, classes.size());
    if (inserted) classes.push_back(EquivClass{std::move(key), {}});
    classes[it->second].members.push_back(e);
  }
  std::sort(classes.begin(), classes.end(),
            [](const EquivClass& a, const EquivClass& b) {
              return a.key < b.key;
            });
  return classes;
}

std::vector<EquivClass> subsample_classes(std::vector<EquivClass> classes,
                                          std::size_t cap,
                                          std::uint64_t seed) {
  if (cap < 1) throw DataError("per-class cap must be at least 1");
  SplitMix64 rng(seed);
  for (auto& cls : classes) {
    const std::size_t m = cls.members.size();
    if (m <= cap) continue;
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + rng.below(m - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<Expr> kept;
    kept.reserve(cap);
    for (std::size_t i : idx) kept.push_back(cls.members[i]);
    cls.members = std::move(kept);
  }
  return classes;
}

std::string_view split_name(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::SeenTest: return "seen_test";
    case Split::UnseenTest: return "unseen_test";
  }
  return "train";
}

std::optional<Split> split_from_name(std::string_view name) noexcept {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "seen_test") return Split::SeenTest;
  if (name == "unseen_test") return Split::UnseenTest;
  return std::nullopt;
}

SplitCounts seen_split_counts(std::size_t members) noexcept {
  SplitCounts counts;
  counts.train = (60 * members + 99) / 100;
  counts.valid = (15 * members) / 100;
  if (counts.train + counts.valid > members) counts.valid = members - counts.train;
  counts.seen_test = members - counts.train - counts.valid;
  return counts;
}

std::vector<DatasetRecord> split(const std::vector<EquivClass>& classes,
                                 std::uint64_t seed,
                                 const SplitOptions& options) {
  if (classes.size() < 5) {
    throw DataError("splitting needs at least 5 equivalence classes, got " +
                    std::to_string(classes.size()));
  }
  double mean = 0.0;
  if (options.mean_class_size) {
    mean = *options.mean_class_size;
  } else {
    std::size_t total = 0;
    for (const auto& c : classes) total += c.members.size();
    mean = static_cast<double>(total) / static_cast<double>(classes.size());
  }

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto m = static_cast<double>(classes[i].members.size());
    if (classes[i].members.size() >= 2 && m < 3.0 * mean) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw DataError("no equivalence class is eligible for the unseen split");
  }

  SplitMix64 rng(seed);
  const auto wanted = static_cast<std::size_t>(
      std::floor(options.unseen_fraction * static_cast<double>(classes.size()) +
                 0.5));
  const std::size_t num_unseen = std::min(wanted, eligible.size());
  shuffle(std::span<std::size_t>(eligible), rng);
  std::vector<bool> unseen(classes.size(), false);
  for (std::size_t i = 0; i < num_unseen; ++i) unseen[eligible[i]] = true;

  std::vector<DatasetRecord> records;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& members = classes[c].members;
    std::vector<Split> labels(members.size(), Split::UnseenTest);
    if (!unseen[c]) {
      std::vector<std::size_t> order(members.size());
      std::iota(order.begin(), order.end(), 0);
      shuffle(std::span<std::size_t>(order), rng);
      const SplitCounts counts = seen_split_counts(members.size());
      for (std::size_t r = 0; r < order.size(); ++r) {
        labels[order[r]] = r < counts.train                  ? Split::Train
                           : r < counts.train + counts.valid ? Split::Valid
                                                             : Split::SeenTest;
      }
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
      records.push_back(DatasetRecord{
          print_infix(members[m]), classes[c].key.id,
          static_cast<std::uint32_t>(members[m].size()), labels[m]});
    }
  }
  return records;
}

DatasetStats stats(std::span<const DatasetRecord> records) {
  DatasetStats out;
  out.num_exprs = records.size();
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& r : records) ++counts[r.class_id];
  out.num_classes = counts.size();
  if (records.empty()) return out;
  // Accumulate in key order so the result does not depend on hashing.
  std::vector<std::pair<std::string_view, std::size_t>> sorted(counts.begin(),
                                                               counts.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(records.size());
  double h = 0.0;
  for (const auto& [key, count] : sorted) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  out.entropy_bits = std::max(0.0, h);
  return out;
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  const std::vector<Expr> exprs = enumerate_all(spec);
  std::vector<EquivClass> classes = group_classes(exprs, spec.vars, spec.domain);
  const double mean =
      static_cast<double>(exprs.size()) / static_cast<double>(classes.size());
  if (spec.per_class_cap) {
    classes = subsample_classes(std::move(classes), *spec.per_class_cap,
                                spec.seed);
  }
  SplitOptions options;
  options.mean_class_size = mean;
  Dataset out;
  out.spec = spec;
  out.records = split(classes, derive_seed(spec.seed, kSplitStream), options);
  return out;
}

std::string spec_to_json(const DatasetSpec& spec) {
  nlohmann::ordered_json j;
  j["domain"] = domain_name(spec.domain);
  auto ops = nlohmann::ordered_json::array();
  for (Op op : spec.ops) ops.push_back(op_name(op));
  j["ops"] = ops;
  j["vars"] = spec.vars.to_string();
  j["max_size"] = spec.max_size;
  if (spec.per_class_cap) {
    j["cap"] = *spec.per_class_cap;
  } else {
    j["cap"] = nullptr;
  }
  j["seed"] = spec.seed;
  return j.dump();
}

DatasetSpec spec_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  DatasetSpec spec;
  const auto domain = domain_from_name(j.at("domain").get<std::string>());
  if (!domain) throw DataError("unknown domain in dataset header");
  spec.domain = *domain;
  for (const auto& name : j.at("ops")) {
    const auto op = op_from_name(name.get<std::string>());
    if (!op) throw DataError("unknown operator in dataset header");
    spec.ops.push_back(*op);
  }
  spec.vars = VarOrder::parse(j.at("vars").get<std::string>());
  spec.max_size = j.at("max_size").get<std::uint32_t>();
  if (j.contains("cap") && !j["cap"].is_null()) {
    spec.per_class_cap = j["cap"].get<std::size_t>();
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

void write_jsonl(const std::filesystem::path& path,
                 std::span<const DatasetRecord> records,
                 const std::optional<DatasetSpec>& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << kHeaderTag << (spec ? spec_to_json(*spec) : std::string("{}")) << '\n';
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["expr"] = r.expr;
    j["class"] = r.class_id;
    j["size"] = r.size;
    j["split"] = split_name(r.split);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& why) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind(kHeaderTag, 0) == 0) {
        const std::string body = line.substr(sizeof(kHeaderTag) - 1);
        if (body != "{}") {
          try {
            out.spec = spec_from_json(body);
          } catch (const std::exception& e) {
            fail(std::string("malformed header: ") + e.what());
          }
        }
      }
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object() || !j.contains("expr") || !j.contains("class") ||
        !j.contains("size") || !j.contains("split")) {
      fail("record is missing one of expr/class/size/split");
    }
    DatasetRecord r;
    try {
      r.expr = j["expr"].get<std::string>();
      r.class_id = j["class"].get<std::string>();
      r.size = j["size"].get<std::uint32_t>();
      const auto s = split_from_name(j["split"].get<std::string>());
      if (!s) fail("unknown split '" + j["split"].get<std::string>() + "'");
      r.split = *s;
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("bad field type: ") + e.what());
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<Expr> parse_records(std::span<const DatasetRecord> records,
                                Domain domain) {
  std::vector<Expr> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(parse(records[i].expr, domain));
    } catch (const ParseError& err) {
      throw DataError("record " + std::to_string(i) + ": " + err.what());
    }
  }
  return out;
}

DatasetSpec infer_spec(std::span<const DatasetRecord> records) {
  if (records.empty()) throw DataError("cannot infer a spec from no records");
  DatasetSpec spec;
  const std::string& key = records.front().class_id;
  if (key.rfind("B:", 0) == 0) {
    spec.domain = Domain::Boolean;
  } else if (key.rfind("P:", 0) == 0) {
    spec.domain = Domain::Polynomial;
  } else {
    throw DataError("unrecognized class id '" + key + "'");
  }
  const std::size_t num_vars = std::stoul(key.substr(2));
  std::uint32_t vars = 0;
  std::uint32_t ops = 0;
  for (const auto& r : records) {
    const Expr e = parse(r.expr, spec.domain);
    vars |= variable_mask(e);
    ops |= op_mask(e);
    spec.max_size = std::max<std::uint32_t>(spec.max_size, r.size);
  }
  std::vector<VarId> present;
  for (VarId v = 0; v < kMaxVariables; ++v) {
    if (vars & (1u << v)) present.push_back(v);
  }
  spec.vars = present.size() == num_vars ? VarOrder(present)
                                         : VarOrder::first(num_vars);
  for (Op op : domain_ops(spec.domain)) {
    if (ops & (1u << static_cast<unsigned>(op))) spec.ops.push_back(op);
  }
  return spec;
}

}  // namespace semvec

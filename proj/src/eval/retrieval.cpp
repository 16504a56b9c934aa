#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "semvec/error.hpp"
#include "semvec/eval.hpp"
#include "semvec/kernels.hpp"
#include "semvec/parallel.hpp"
#include "semvec/rng.hpp"

namespace semvec::eval {

namespace {

bool ranks_before(const Neighbor& a, const Neighbor& b, const EmbeddingPool& pool) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return pool.id(a.index) < pool.id(b.index);
}

}  // namespace

void EmbeddingPool::add(std::uint64_t id, std::uint32_t cls,
                        std::span<const double> v) {
  if (v.size() != dim_) {
    throw std::invalid_argument("pool vector has dimension " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(dim_));
  }
  if (by_id_.count(id)) {
    throw std::invalid_argument("duplicate pool id " + std::to_string(id));
  }
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite embedding in pool");
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  by_id_.emplace(id, ids_.size());
  ids_.push_back(id);
  classes_.push_back(cls);
  ++class_sizes_[cls];
  raw_.insert(raw_.end(), v.begin(), v.end());
  for (double x : v) unit_.push_back(n > 0.0 ? x / n : 0.0);
}

void EmbeddingPool::add(std::uint64_t id, std::uint32_t cls,
                        std::span<const float> v) {
  std::vector<double> d(v.begin(), v.end());
  add(id, cls, std::span<const double>(d));
}

std::size_t EmbeddingPool::class_size(std::uint32_t c) const noexcept {
  const auto it = class_sizes_.find(c);
  return it == class_sizes_.end() ? 0 : it->second;
}

std::optional<std::size_t> EmbeddingPool::index_of_id(std::uint64_t id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<Neighbor> knn(const EmbeddingPool& pool, std::span<const double> query,
                          std::size_t k, std::optional<std::size_t> exclude) {
  if (query.size() != pool.dim()) {
    throw std::invalid_argument("query dimension does not match pool");
  }
  double sq = 0.0;
  for (double x : query) sq += x * x;
  const double n = std::sqrt(sq);
  std::vector<double> q(query.begin(), query.end());
  for (double& x : q) x = n > 0.0 ? x / n : 0.0;

  const auto& kern = kernels::active_kernels<double>();
  std::vector<Neighbor> top;
  top.reserve(k + 1);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (exclude && *exclude == i) continue;
    const Neighbor cand{i, kern.dot(q.data(), pool.unit(i).data(), pool.dim())};
    if (top.size() == k && !ranks_before(cand, top.back(), pool)) continue;
    auto pos = std::upper_bound(top.begin(), top.end(), cand,
                                [&](const Neighbor& a, const Neighbor& b) {
                                  return ranks_before(a, b, pool);
                                });
    top.insert(pos, cand);
    if (top.size() > k) top.pop_back();
  }
  return top;
}

std::vector<Neighbor> knn(const EmbeddingPool& pool, std::size_t query,
                          std::size_t k) {
  return knn(pool, pool.raw(query), k, query);
}

std::vector<std::size_t> knn_oracle(const EmbeddingPool& pool, std::size_t query,
                                    std::size_t k) {
  const auto q = pool.raw(query);
  const auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double nq = norm(q);
  std::vector<Neighbor> all;
  all.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i == query) continue;
    const auto v = pool.raw(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) dot += q[j] * v[j];
    const double nv = norm(v);
    const double sim = nq > 0.0 && nv > 0.0 ? dot / (nq * nv) : 0.0;
    all.push_back({i, sim});
  }
  std::sort(all.begin(), all.end(), [&](const Neighbor& a, const Neighbor& b) {
    return ranks_before(a, b, pool);
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].index);
  return out;
}

std::optional<double> knn_score(const EmbeddingPool& pool,
                                std::span<const double> query, std::uint32_t cls,
                                std::size_t k, std::optional<std::size_t> exclude) {
  const std::size_t others = pool.size() - (exclude ? 1 : 0);
  if (k == 0 || others < k) {
    throw DataError("pool too small for k = " + std::to_string(k));
  }
  const std::size_t same =
      pool.class_size(cls) - (exclude && pool.cls(*exclude) == cls ? 1 : 0);
  if (same == 0) return std::nullopt;
  std::size_t hits = 0;
  for (const Neighbor& nb : knn(pool, query, k, exclude)) {
    if (pool.cls(nb.index) == cls) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::min(k, same));
}

std::optional<double> knn_score(const EmbeddingPool& pool, std::size_t query,
                                std::size_t k) {
  return knn_score(pool, pool.raw(query), pool.cls(query), k, query);
}

ScoreCurve score_curve(const EmbeddingPool& pool, std::span<const std::size_t> queries,
                       std::size_t max_k, std::size_t threads) {
  if (max_k == 0) throw std::invalid_argument("max_k must be positive");
  if (pool.size() <= max_k) {
    throw DataError("pool of " + std::to_string(pool.size()) +
                    " vectors is too small for k = " + std::to_string(max_k));
  }
  // Per-query rows, summed afterwards in query order.
  std::vector<double> scores(queries.size() * max_k, 0.0);
  std::vector<char> scored(queries.size(), 0);
  parallel_for(queries.size(), threads, [&](std::size_t qi) {
    const std::size_t q = queries[qi];
    const std::uint32_t cls = pool.cls(q);
    const std::size_t same = pool.class_size(cls) - 1;
    if (same == 0) return;
    scored[qi] = 1;
    const auto nbrs = knn(pool, q, max_k);
    std::size_t hits = 0;
    for (std::size_t k = 1; k <= max_k; ++k) {
      if (pool.cls(nbrs[k - 1].index) == cls) ++hits;
      scores[qi * max_k + k - 1] =
          static_cast<double>(hits) / static_cast<double>(std::min(k, same));
    }
  });
  ScoreCurve curve;
  curve.mean.assign(max_k, 0.0);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    if (!scored[qi]) {
      ++curve.skipped;
      continue;
    }
    ++curve.scored;
    for (std::size_t k = 0; k < max_k; ++k) curve.mean[k] += scores[qi * max_k + k];
  }
  if (curve.scored > 0) {
    for (double& m : curve.mean) m /= static_cast<double>(curve.scored);
  }
  return curve;
}

double auc(std::span<const double> curve) {
  if (curve.empty()) return 0.0;
  if (curve.size() == 1) return curve[0];
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += 0.5 * (curve[i - 1] + curve[i]);
  return area / static_cast<double>(curve.size() - 1);
}

std::vector<CurvePoint> pair_curve(const EmbeddingPool& pool) {
  struct Pair {
    float sim;
    bool same;
  };
  const std::size_t n = pool.size();
  if (n < 2) throw DataError("pair curve needs at least two vectors");
  const auto& kern = kernels::active_kernels<double>();
  std::vector<Pair> pairs;
  pairs.reserve(n * (n - 1) / 2);
  // Similarities are ranked in single precision to bound memory; distinct
  // thresholds closer than float resolution merge into one point.
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = pool.cls(i) == pool.cls(j);
      positives += same;
      pairs.push_back({static_cast<float>(kern.dot(pool.unit(i).data(),
                                                   pool.unit(j).data(), pool.dim())),
                       same});
    }
  }
  const std::size_t negatives = pairs.size() - positives;
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.sim > b.sim; });
  std::vector<CurvePoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < pairs.size();) {
    const float t = pairs[i].sim;
    for (; i < pairs.size() && pairs[i].sim == t; ++i) {
      if (pairs[i].same) {
        ++tp;
      } else {
        ++fp;
      }
    }
    curve.push_back({static_cast<double>(t),
                     static_cast<double>(tp) / static_cast<double>(tp + fp),
                     positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0,
                     negatives ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0});
  }
  return curve;
}

std::vector<CurvePoint> thin_curve(std::vector<CurvePoint> curve,
                                   std::size_t max_points) {
  if (max_points < 2 || curve.size() <= max_points) return curve;
  std::vector<CurvePoint> out;
  out.reserve(max_points);
  const double step =
      static_cast<double>(curve.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t i = 0; i < max_points; ++i) {
    out.push_back(curve[static_cast<std::size_t>(std::llround(step * static_cast<double>(i)))]);
  }
  return out;
}

double roc_auc(std::span<const CurvePoint> curve) {
  double area = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
  for (const auto& p : curve) {
    area += (p.fpr - prev_fpr) * 0.5 * (p.recall + prev_tpr);
    prev_fpr = p.fpr;
    prev_tpr = p.recall;
  }
  return area;
}

double average_precision(std::span<const CurvePoint> curve) {
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

std::uint32_t ClassIndex::intern(const std::string& key) {
  const auto [it, inserted] =
      map_.emplace(key, static_cast<std::uint32_t>(map_.size()));
  return it->second;
}

std::optional<std::uint32_t> ClassIndex::find(const std::string& key) const {
  const auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Encoder model_encoder(const models::Model<float>& model) {
  return [&model](const Expr& e) {
    const auto v = model.embed(e);
    return std::vector<double>(v.begin(), v.end());
  };
}

Encoder tfidf_encoder(const models::TfIdfModel& model) {
  return [&model](const Expr& e) { return model.encode(tokenize(e)); };
}

Encoder random_encoder(std::size_t dim, std::uint64_t seed) {
  return [dim, seed](const Expr& e) {
    const std::string text = print_infix(e);
    std::uint64_t h = seed;
    for (unsigned char c : text) h = derive_seed(h, c);
    SplitMix64 rng(h);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.gaussian();
    return v;
  };
}

EmbeddingPool build_pool(const Encoder& encoder, std::span<const Expr> exprs,
                         std::span<const DatasetRecord> records,
                         std::span<const std::size_t> which, ClassIndex& classes,
                         std::size_t threads) {
  std::vector<std::vector<double>> vecs(which.size());
  parallel_for(which.size(), threads,
               [&](std::size_t i) { vecs[i] = encoder(exprs[which[i]]); });
  const std::size_t dim = vecs.empty() ? 0 : vecs[0].size();
  EmbeddingPool pool(dim);
  for (std::size_t i = 0; i < which.size(); ++i) {
    const auto& rec = records[which[i]];
    pool.add(which[i], classes.intern(rec.class_id), std::span<const double>(vecs[i]));
  }
  return pool;
}

namespace {

EvalResult run_eval(const Encoder& encoder, std::span<const Expr> exprs,
                    std::span<const DatasetRecord> records,
                    const std::vector<std::size_t>& members,
                    const std::vector<char>& is_query, std::size_t max_k,
                    std::size_t threads) {
  ClassIndex classes;
  EmbeddingPool pool = build_pool(encoder, exprs, records, members, classes, threads);
  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (is_query[i]) queries.push_back(i);
  }
  EvalResult r;
  r.curve = score_curve(pool, queries, max_k, threads);
  r.auc = auc(r.curve.mean);
  r.pool_size = pool.size();
  r.queries = queries.size();
  return r;
}

}  // namespace

EvalResult evaluate_split(const Encoder& encoder, std::span<const Expr> exprs,
                          std::span<const DatasetRecord> records,
                          Split split, std::size_t max_k, std::size_t threads) {
  std::vector<std::size_t> members;
  std::vector<char> is_query;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Split s = records[i].split;
    if (s == split || s == Split::Train) {
      members.push_back(i);
      is_query.push_back(s == split);
    }
  }
  return run_eval(encoder, exprs, records, members, is_query, max_k, threads);
}

void check_compatible(const models::ModelConfig& model, Domain domain,
                      std::span<const Op> ops, const VarOrder& vars) {
  if (model.domain != domain) {
    throw DataError("model domain '" + std::string(domain_name(model.domain)) +
                    "' does not match dataset domain '" +
                    std::string(domain_name(domain)) + "'");
  }
  if (!(model.vars == vars)) {
    throw DataError("model variables " + model.vars.to_string() +
                    " do not match dataset variables " + vars.to_string());
  }
  for (Op op : ops) {
    if (std::find(model.ops.begin(), model.ops.end(), op) == model.ops.end()) {
      throw DataError("dataset operator '" + std::string(op_name(op)) +
                      "' is unknown to the model");
    }
  }
}

EvalResult transfer_eval(const Encoder& encoder, std::span<const Expr> exprs,
                         std::span<const DatasetRecord> records,
                         std::span<const Split> splits, std::size_t max_k,
                         std::size_t threads) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (std::find(splits.begin(), splits.end(), records[i].split) != splits.end()) {
      members.push_back(i);
    }
  }
  const std::vector<char> all(members.size(), 1);
  return run_eval(encoder, exprs, records, members, all, max_k, threads);
}

}  // namespace semvec::eval

#pragma once

// Retrieval evaluation over expression embeddings.
//
// score_k(q) = |N_k(q) & c| / min(k, |c|)
//
// N_k(q) are the k most cosine-similar pool members other than q, ties
// broken by ascending id, and |c| counts the other pool members of q's
// class. Queries whose class has no other member in the pool have no score
// and are left out of averages.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semvec/datagen.hpp"
#include "semvec/expr.hpp"
#include "semvec/models.hpp"

namespace semvec::eval {

class EmbeddingPool {
 public:
  explicit EmbeddingPool(std::size_t dim) : dim_(dim) {}

  // Vectors are stored unit-normalized in double precision. A zero vector
  // is kept as zero and has cosine 0 with everything.
  void add(std::uint64_t id, std::uint32_t cls, std::span<const double> v);
  void add(std::uint64_t id, std::uint32_t cls, std::span<const float> v);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t id(std::size_t i) const noexcept { return ids_[i]; }
  std::uint32_t cls(std::size_t i) const noexcept { return classes_[i]; }
  std::span<const double> unit(std::size_t i) const noexcept {
    return {unit_.data() + i * dim_, dim_};
  }
  std::span<const double> raw(std::size_t i) const noexcept {
    return {raw_.data() + i * dim_, dim_};
  }
  // Members of class `c` in the pool.
  std::size_t class_size(std::uint32_t c) const noexcept;
  std::optional<std::size_t> index_of_id(std::uint64_t id) const;

 private:
  std::size_t dim_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint32_t> classes_;
  std::vector<double> unit_;
  std::vector<double> raw_;
  std::map<std::uint32_t, std::size_t> class_sizes_;
  std::map<std::uint64_t, std::size_t> by_id_;
};

struct Neighbor {
  std::size_t index;
  double similarity;
};

// Top-k pool members for a query vector, most similar first. Pool entry
// `exclude` (if any) is skipped.
std::vector<Neighbor> knn(const EmbeddingPool& pool, std::span<const double> query,
                          std::size_t k,
                          std::optional<std::size_t> exclude = std::nullopt);
std::vector<Neighbor> knn(const EmbeddingPool& pool, std::size_t query, std::size_t k);

// Reference scan: recomputes every cosine from the raw vectors, sorts the
// full candidate list and takes the first k.
std::vector<std::size_t> knn_oracle(const EmbeddingPool& pool, std::size_t query,
                                    std::size_t k);

// Errors when the pool holds no more than k members besides the query.
std::optional<double> knn_score(const EmbeddingPool& pool, std::size_t query,
                                std::size_t k);
std::optional<double> knn_score(const EmbeddingPool& pool,
                                std::span<const double> query, std::uint32_t cls,
                                std::size_t k,
                                std::optional<std::size_t> exclude = std::nullopt);

struct ScoreCurve {
  // mean[k - 1] = mean score_k over scored queries.
  std::vector<double> mean;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

ScoreCurve score_curve(const EmbeddingPool& pool, std::span<const std::size_t> queries,
                       std::size_t max_k = 15, std::size_t threads = 1);
// Trapezoidal area under mean[k] over k = 1..K, divided by K - 1.
double auc(std::span<const double> curve);

struct CurvePoint {
  double threshold;
  double precision;
  double recall;  // also the true-positive rate
  double fpr;
};

// Same-class pair detection over all unordered pairs, predicting "same" when
// cosine >= threshold. One point per distinct similarity, highest first.
std::vector<CurvePoint> pair_curve(const EmbeddingPool& pool);
// Keeps at most max_points points, evenly spaced in rank, always keeping the
// first and last.
std::vector<CurvePoint> thin_curve(std::vector<CurvePoint> curve, std::size_t max_points);
double roc_auc(std::span<const CurvePoint> curve);
double average_precision(std::span<const CurvePoint> curve);

// Maps class-id strings to dense indices.
class ClassIndex {
 public:
  std::uint32_t intern(const std::string& key);
  std::optional<std::uint32_t> find(const std::string& key) const;
  std::size_t size() const noexcept { return map_.size(); }

 private:
  std::map<std::string, std::uint32_t> map_;
};

using Encoder = std::function<std::vector<double>(const Expr&)>;

Encoder model_encoder(const models::Model<float>& model);
Encoder tfidf_encoder(const models::TfIdfModel& model);
// Seeded i.i.d. normal vectors keyed by the printed expression.
Encoder random_encoder(std::size_t dim, std::uint64_t seed);

// Pool built from `records` where record i gets id i. `exprs[i]` is the
// parsed form of records[i].
EmbeddingPool build_pool(const Encoder& encoder, std::span<const Expr> exprs,
                         std::span<const DatasetRecord> records,
                         std::span<const std::size_t> which, ClassIndex& classes,
                         std::size_t threads = 1);

struct EvalResult {
  ScoreCurve curve;
  double auc = 0.0;
  std::size_t pool_size = 0;
  std::size_t queries = 0;
};

// Queries = records in `split`; pool = train records plus the queries.
EvalResult evaluate_split(const Encoder& encoder, std::span<const Expr> exprs,
                          std::span<const DatasetRecord> records,
                          Split split, std::size_t max_k = 15, std::size_t threads = 1);

// Checks that a model can encode a dataset: same domain, same variable
// alphabet, every dataset operator known to the model. Throws DataError.
void check_compatible(const models::ModelConfig& model, Domain domain,
                      std::span<const Op> ops, const VarOrder& vars);

// Embeds the test records of another dataset with the given encoder. Pool
// and queries are both the chosen test splits.
EvalResult transfer_eval(const Encoder& encoder, std::span<const Expr> exprs,
                         std::span<const DatasetRecord> records,
                         std::span<const Split> splits, std::size_t max_k = 15,
                         std::size_t threads = 1);

// Score_k of every subtree of `e` against the pool. Each subtree's class is
// computed from its semantics; nodes whose class is absent from the pool
// get no score. A subtree that is itself a pool member is excluded from its
// own neighbors. Output: {"expr", "op", "score", "children"} nested JSON.
std::string per_node_scores(const Expr& e, const models::Model<float>& model,
                            const EmbeddingPool& pool, const ClassIndex& classes,
                            std::span<const DatasetRecord> records,
                            std::size_t k = 5);

struct Pca {
  std::vector<double> mean;
  std::vector<double> eigenvalues;             // descending
  std::vector<std::vector<double>> components;  // unit eigenvectors
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
// eigenvalues descending with matching column vectors, each vector's
// largest-magnitude component made positive.
void symmetric_eigen(std::vector<double> matrix, std::size_t n,
                     std::vector<double>& eigenvalues,
                     std::vector<std::vector<double>>& eigenvectors);

Pca pca_fit(std::span<const std::vector<double>> vectors, std::size_t dims = 2);
std::vector<std::vector<double>> pca_project(const Pca& pca,
                                             std::span<const std::vector<double>> vectors);

}  // namespace semvec::eval

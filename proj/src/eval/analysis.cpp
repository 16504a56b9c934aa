#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "semvec/eval.hpp"
#include "semvec/semantics.hpp"

namespace semvec::eval {

std::string per_node_scores(const Expr& e, const models::Model<float>& model,
                            const EmbeddingPool& pool, const ClassIndex& classes,
                            std::span<const DatasetRecord> records, std::size_t k) {
  using nlohmann::json;
  const auto& cfg = model.config();
  model.check_supported(e);

  std::unordered_map<std::string, std::size_t> in_pool;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    in_pool.emplace(records[pool.id(i)].expr, i);
  }

  const auto vectors = model.embed_nodes(e);
  std::size_t next = 0;
  // Post-order walk matching embed_nodes.
  const auto visit = [&](const auto& self, const Expr& node) -> json {
    json children = json::array();
    for (const Expr& c : node.children()) children.push_back(self(self, c));
    const auto& v = vectors[next++];
    const std::vector<double> q(v.begin(), v.end());
    const std::string text = print_infix(node);
    json out;
    out["expr"] = text;
    out["op"] = node.is_leaf() ? std::string(1, var_char(node.var_id()))
                               : std::string(op_name(node.op()));
    const auto cls = classes.find(equiv_key(node, cfg.vars, cfg.domain).id);
    std::optional<double> score;
    if (cls) {
      std::optional<std::size_t> exclude;
      if (const auto it = in_pool.find(text); it != in_pool.end()) exclude = it->second;
      score = knn_score(pool, q, *cls, k, exclude);
    }
    out["score"] = score ? json(*score) : json(nullptr);
    out["children"] = std::move(children);
    return out;
  };
  return visit(visit, e).dump();
}

void symmetric_eigen(std::vector<double> a, std::size_t n,
                     std::vector<double>& eigenvalues,
                     std::vector<std::vector<double>>& eigenvectors) {
  if (a.size() != n * n) throw std::invalid_argument("matrix is not n x n");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  const auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += at(i, j) * at(i, j);
        if (i != j) off += at(i, j) * at(i, j);
      }
    }
    if (off <= 1e-30 * std::max(total, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return at(x, x) > at(y, y); });
  eigenvalues.clear();
  eigenvectors.clear();
  for (std::size_t idx : order) {
    eigenvalues.push_back(at(idx, idx));
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + idx];
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (std::abs(col[k]) > std::abs(col[big])) big = k;
    }
    if (col[big] < 0) {
      for (double& x : col) x = -x;
    }
    eigenvectors.push_back(std::move(col));
  }
}

Pca pca_fit(std::span<const std::vector<double>> vectors, std::size_t dims) {
  if (vectors.size() < dims + 1) {
    throw std::invalid_argument("PCA needs at least dims + 1 vectors");
  }
  const std::size_t d = vectors[0].size();
  if (dims > d) throw std::invalid_argument("PCA dims exceed vector dimension");
  Pca pca;
  pca.mean.assign(d, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("PCA vectors differ in dimension");
    for (std::size_t j = 0; j < d; ++j) pca.mean[j] += v[j];
  }
  for (double& m : pca.mean) m /= static_cast<double>(vectors.size());
  std::vector<double> cov(d * d, 0.0);
  std::vector<double> c(d);
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < d; ++j) c[j] = v[j] - pca.mean[j];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += c[i] * c[j];
    }
  }
  const double denom = static_cast<double>(vectors.size() - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= denom;
      cov[j * d + i] = cov[i * d + j];
    }
  }
  std::vector<double> values;
  std::vector<std::vector<double>> vecs;
  symmetric_eigen(std::move(cov), d, values, vecs);
  pca.eigenvalues.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(dims));
  pca.components.assign(vecs.begin(), vecs.begin() + static_cast<std::ptrdiff_t>(dims));
  return pca;
}

std::vector<std::vector<double>> pca_project(const Pca& pca,
                                             std::span<const std::vector<double>> vectors) {
  std::vector<std::vector<double>> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    std::vector<double> p(pca.components.size(), 0.0);
    for (std::size_t c = 0; c < pca.components.size(); ++c) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        p[c] += (v[j] - pca.mean[j]) * pca.components[c][j];
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace semvec::eval

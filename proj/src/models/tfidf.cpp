#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semvec/models.hpp"

namespace semvec::models {

TfIdfModel::TfIdfModel(std::vector<std::string> vocabulary)
    : vocab_(std::move(vocabulary)), idf_(vocab_.size(), 1.0) {}

TfIdfModel::TfIdfModel(std::vector<std::string> vocabulary,
                       std::vector<double> idf, std::size_t num_docs)
    : vocab_(std::move(vocabulary)), idf_(std::move(idf)), num_docs_(num_docs) {
  if (idf_.size() != vocab_.size()) {
    throw std::invalid_argument("idf table does not match vocabulary");
  }
}

std::optional<std::size_t> TfIdfModel::index_of(std::string_view token) const {
  const auto it = std::find(vocab_.begin(), vocab_.end(), token);
  if (it == vocab_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vocab_.begin());
}

void TfIdfModel::fit(std::span<const TokenSeq> docs) {
  std::vector<std::size_t> df(vocab_.size(), 0);
  std::vector<char> seen(vocab_.size());
  for (const auto& doc : docs) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const auto& tok : doc) {
      if (const auto i = index_of(tok); i && !seen[*i]) {
        seen[*i] = 1;
        ++df[*i];
      }
    }
  }
  num_docs_ = docs.size();
  const double n = static_cast<double>(num_docs_);
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
}

double TfIdfModel::idf_of(std::string_view token) const {
  if (const auto i = index_of(token)) return idf_[*i];
  return std::log(1.0 + static_cast<double>(num_docs_)) + 1.0;
}

std::vector<double> TfIdfModel::encode(const TokenSeq& tokens) const {
  std::vector<double> v(vocab_.size(), 0.0);
  for (const auto& tok : tokens) {
    if (const auto i = index_of(tok)) v[*i] += 1.0;
  }
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= idf_[i];
  return v;
}

}  // namespace semvec::models

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semvec::ndiff {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

template <typename Real>
struct Tensor {
  Shape shape;
  std::vector<Real> values;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), values(shape_size(shape)) {}
  Tensor(Shape s, std::vector<Real> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape)) {
      throw std::invalid_argument("tensor values do not match shape");
    }
  }

  std::size_t size() const noexcept { return values.size(); }
  // Rows/cols of a matrix; a vector is a single column.
  std::size_t rows() const noexcept { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const noexcept {
    return shape.size() < 2 ? 1 : size() / shape[0];
  }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(values).subspan(r * cols(), cols());
  }
};

struct ParamId {
  std::uint32_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

// Named parameters plus the optimizer state that shadows each of them.
template <typename Real>
class ParamStore {
 public:
  ParamId add(std::string name, Tensor<Real> value) {
    if (index_.count(name)) {
      throw std::invalid_argument("duplicate parameter '" + name + "'");
    }
    const ParamId id{static_cast<std::uint32_t>(entries_.size())};
    index_.emplace(name, id.index);
    const std::size_t n = value.size();
    entries_.push_back(Entry{std::move(name), std::move(value),
                             std::vector<Real>(n, Real(0)),
                             std::vector<Real>(n, Real(0))});
    return id;
  }

  std::optional<ParamId> find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return ParamId{it->second};
  }

  ParamId at(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_[id.index].name; }
  const Tensor<Real>& value(ParamId id) const { return entries_[id.index].value; }
  Tensor<Real>& value(ParamId id) { return entries_[id.index].value; }
  std::vector<Real>& mean_square(ParamId id) { return entries_[id.index].mean_square; }
  std::vector<Real>& velocity(ParamId id) { return entries_[id.index].velocity; }
  const std::vector<Real>& mean_square(ParamId id) const {
    return entries_[id.index].mean_square;
  }
  const std::vector<Real>& velocity(ParamId id) const {
    return entries_[id.index].velocity;
  }

  std::size_t total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  // Same names and values in another precision; optimizer state is reset.
  template <typename Other>
  ParamStore<Other> convert() const {
    ParamStore<Other> out;
    for (const auto& e : entries_) {
      Tensor<Other> t(e.value.shape);
      for (std::size_t i = 0; i < t.size(); ++i) {
        t.values[i] = static_cast<Other>(e.value.values[i]);
      }
      out.add(e.name, std::move(t));
    }
    return out;
  }

 private:
  struct Entry {
    std::string name;
    Tensor<Real> value;
    std::vector<Real> mean_square;
    std::vector<Real> velocity;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// One gradient buffer per parameter, shaped like the store it was made for.
template <typename Real>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamStore<Real>& store) {
    buffers_.reserve(store.size());
    for (std::uint32_t i = 0; i < store.size(); ++i) {
      buffers_.emplace_back(store.value(ParamId{i}).size(), Real(0));
    }
  }

  std::size_t size() const noexcept { return buffers_.size(); }
  std::span<Real> operator[](ParamId id) { return buffers_[id.index]; }
  std::span<const Real> operator[](ParamId id) const { return buffers_[id.index]; }

  void zero() {
    for (auto& b : buffers_) std::fill(b.begin(), b.end(), Real(0));
  }

  double global_norm() const {
    double sq = 0.0;
    for (const auto& b : buffers_) {
      for (Real g : b) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sq);
  }

  void scale(Real factor) {
    for (auto& b : buffers_) {
      for (Real& g : b) g *= factor;
    }
  }

  void add(const Gradients& other) {
    for (std::size_t p = 0; p < buffers_.size(); ++p) {
      for (std::size_t i = 0; i < buffers_[p].size(); ++i) {
        buffers_[p][i] += other.buffers_[p][i];
      }
    }
  }

 private:
  std::vector<std::vector<Real>> buffers_;
};

}  // namespace semvec::ndiff

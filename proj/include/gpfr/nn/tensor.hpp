#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gpfr/error.hpp"

namespace gpfr::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major tensor. The first dimension is the batch for layer I/O.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), values_(shape_count(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_count(shape_)) {
      throw ConfigError("tensor value count " + std::to_string(values_.size()) +
                        " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  // Elements per leading-dimension slice.
  std::size_t row_size() const noexcept { return shape_.empty() || shape_[0] == 0 ? 0 : size() / shape_[0]; }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> row(std::size_t i) noexcept { return values().subspan(i * row_size(), row_size()); }
  std::span<const T> row(std::size_t i) const noexcept { return values().subspan(i * row_size(), row_size()); }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  // Reallocates only when the element count changes; contents unspecified.
  void resize(Shape shape) {
    shape_ = std::move(shape);
    values_.resize(shape_count(shape_));
  }
  void reshape(Shape shape) {
    if (shape_count(shape) != values_.size()) {
      throw ConfigError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
  }
  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> values_;
};

}  // namespace gpfr::nn

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpfr/nn/tensor.hpp"

namespace gpfr {

// Read-only random access to model inputs. Views do not own their storage;
// the caller keeps it alive for the lifetime of the view.
class InputSet {
 public:
  virtual ~InputSet() = default;
  virtual std::size_t size() const noexcept = 0;
  virtual const nn::Shape& sample_shape() const noexcept = 0;
  // Writes samples idx[0], idx[1], ... contiguously into out.
  virtual void gather(std::span<const std::size_t> idx, float* out) const = 0;

  std::size_t sample_size() const noexcept { return nn::shape_count(sample_shape()); }
  nn::Tensor<float> batch(std::span<const std::size_t> idx) const;
  // Contiguous range [begin, end).
  nn::Tensor<float> range(std::size_t begin, std::size_t end) const;
};

// Row-major float samples.
class DenseView final : public InputSet {
 public:
  DenseView(std::span<const float> values, nn::Shape sample_shape);
  std::size_t size() const noexcept override { return count_; }
  const nn::Shape& sample_shape() const noexcept override { return shape_; }
  void gather(std::span<const std::size_t> idx, float* out) const override;

 private:
  std::span<const float> values_;
  nn::Shape shape_;
  std::size_t count_;
};

// 8-bit pixels scaled to [0, 1].
class ByteImageView final : public InputSet {
 public:
  ByteImageView(std::span<const std::uint8_t> pixels, nn::Shape sample_shape);
  std::size_t size() const noexcept override { return count_; }
  const nn::Shape& sample_shape() const noexcept override { return shape_; }
  void gather(std::span<const std::size_t> idx, float* out) const override;

 private:
  std::span<const std::uint8_t> pixels_;
  nn::Shape shape_;
  std::size_t count_;
};

// Selected rows of another set, in the given order.
class SubsetView final : public InputSet {
 public:
  SubsetView(const InputSet& base, std::vector<std::size_t> rows);
  std::size_t size() const noexcept override { return rows_.size(); }
  const nn::Shape& sample_shape() const noexcept override { return base_.sample_shape(); }
  void gather(std::span<const std::size_t> idx, float* out) const override;
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  const InputSet& base_;
  std::vector<std::size_t> rows_;
};

}  // namespace gpfr

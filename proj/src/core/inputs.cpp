#include "gpfr/inputs.hpp"

#include <algorithm>
#include <numeric>

namespace gpfr {

nn::Tensor<float> InputSet::batch(std::span<const std::size_t> idx) const {
  nn::Shape shape{idx.size()};
  shape.insert(shape.end(), sample_shape().begin(), sample_shape().end());
  nn::Tensor<float> out(std::move(shape));
  gather(idx, out.data());
  return out;
}

nn::Tensor<float> InputSet::range(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return batch(idx);
}

DenseView::DenseView(std::span<const float> values, nn::Shape sample_shape)
    : values_(values), shape_(std::move(sample_shape)) {
  const std::size_t per = nn::shape_count(shape_);
  if (per == 0 || values_.size() % per != 0) {
    throw ConfigError("dense inputs: " + std::to_string(values_.size()) + " values do not tile samples of shape " +
                      nn::shape_string(shape_));
  }
  count_ = values_.size() / per;
}

void DenseView::gather(std::span<const std::size_t> idx, float* out) const {
  const std::size_t per = sample_size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= count_) throw UsageError("dense inputs: index out of range");
    std::copy_n(values_.data() + idx[i] * per, per, out + i * per);
  }
}

ByteImageView::ByteImageView(std::span<const std::uint8_t> pixels, nn::Shape sample_shape)
    : pixels_(pixels), shape_(std::move(sample_shape)) {
  const std::size_t per = nn::shape_count(shape_);
  if (per == 0 || pixels_.size() % per != 0) {
    throw ConfigError("image inputs: " + std::to_string(pixels_.size()) + " bytes do not tile samples of shape " +
                      nn::shape_string(shape_));
  }
  count_ = pixels_.size() / per;
}

void ByteImageView::gather(std::span<const std::size_t> idx, float* out) const {
  const std::size_t per = sample_size();
  constexpr float kScale = 1.0f / 255.0f;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= count_) throw UsageError("image inputs: index out of range");
    const std::uint8_t* src = pixels_.data() + idx[i] * per;
    float* dst = out + i * per;
    for (std::size_t j = 0; j < per; ++j) dst[j] = static_cast<float>(src[j]) * kScale;
  }
}

SubsetView::SubsetView(const InputSet& base, std::vector<std::size_t> rows) : base_(base), rows_(std::move(rows)) {
  for (std::size_t r : rows_) {
    if (r >= base_.size()) throw UsageError("subset row " + std::to_string(r) + " out of range");
  }
}

void SubsetView::gather(std::span<const std::size_t> idx, float* out) const {
  std::vector<std::size_t> mapped(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) mapped[i] = rows_.at(idx[i]);
  base_.gather(mapped, out);
}

}  // namespace gpfr

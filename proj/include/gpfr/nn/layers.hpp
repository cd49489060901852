#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gpfr/nn/tensor.hpp"
#include "gpfr/rng.hpp"

namespace gpfr::nn {

enum class LayerKind : std::uint8_t {
  kDense,
  kConv2d,
  kMaxPool2d,
  kDropout,
  kTanh,
  kRelu,
  kSoftmax,
  kFlatten,
};

std::string_view layer_kind_name(LayerKind kind);

template <class T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;
};

// A layer maps a batch [B, in...] to [B, out...]. infer() is const and
// touches no member state, so a frozen layer may serve concurrent readers.
// train_forward() caches whatever backward() needs; backward() accumulates
// into parameter gradients and writes the input gradient when dx is given.
// A null rng in train_forward() selects evaluation behaviour (dropout off)
// while still caching for backward().
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const noexcept = 0;
  // Per-sample output shape for a per-sample input shape.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual void infer(const Tensor<T>& x, Tensor<T>& y) const = 0;
  virtual void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) = 0;
  virtual void backward(const Tensor<T>& dy, Tensor<T>* dx) = 0;
  virtual std::span<Param<T>> params() noexcept { return {}; }
  virtual std::span<const Param<T>> params() const noexcept { return {}; }
  virtual void init_params(Rng&) {}
  virtual void clear_cache() noexcept = 0;
  // Whitespace-separated manifest token list, e.g. "dense 4608 32".
  virtual std::string describe() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
};

// y = x W^T + b with W stored [out, in].
template <class T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out);

  LayerKind kind() const noexcept override { return LayerKind::kDense; }
  Shape output_shape(const Shape& input) const override;
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  std::span<Param<T>> params() noexcept override { return params_; }
  std::span<const Param<T>> params() const noexcept override { return params_; }
  void init_params(Rng& rng) override;
  void clear_cache() noexcept override { input_ = {}; }
  std::string describe() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  Tensor<T>& weight() noexcept { return params_[0].value; }
  const Tensor<T>& weight() const noexcept { return params_[0].value; }
  Tensor<T>& bias() noexcept { return params_[1].value; }
  const Tensor<T>& bias() const noexcept { return params_[1].value; }

 private:
  std::size_t in_;
  std::size_t out_;
  std::vector<Param<T>> params_;
  Tensor<T> input_;
};

// Valid (unpadded) 2-D convolution on [C, H, W] samples, lowered to gemm
// through im2col. Weights stored [filters, C * kh * kw].
template <class T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t filters, std::size_t kernel_h, std::size_t kernel_w,
         std::size_t stride = 1);

  LayerKind kind() const noexcept override { return LayerKind::kConv2d; }
  Shape output_shape(const Shape& input) const override;
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  std::span<Param<T>> params() noexcept override { return params_; }
  std::span<const Param<T>> params() const noexcept override { return params_; }
  void init_params(Rng& rng) override;
  void clear_cache() noexcept override { input_ = {}; }
  std::string describe() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

 private:
  void im2col(const T* image, std::size_t h, std::size_t w, T* cols) const;
  void col2im(const T* cols, std::size_t h, std::size_t w, T* image) const;

  std::size_t channels_;
  std::size_t filters_;
  std::size_t kh_;
  std::size_t kw_;
  std::size_t stride_;
  std::vector<Param<T>> params_;
  Tensor<T> input_;
};

// Non-overlapping-or-strided max pooling on [C, H, W]; floor on ragged edges.
template <class T>
class MaxPool2d final : public Layer<T> {
 public:
  MaxPool2d(std::size_t pool_h, std::size_t pool_w, std::size_t stride_h = 0, std::size_t stride_w = 0);

  LayerKind kind() const noexcept override { return LayerKind::kMaxPool2d; }
  Shape output_shape(const Shape& input) const override;
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override { argmax_.clear(); }
  std::string describe() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  void pool(const Tensor<T>& x, Tensor<T>& y, std::vector<std::uint32_t>* argmax) const;

  std::size_t ph_, pw_, sh_, sw_;
  Shape input_shape_;
  std::vector<std::uint32_t> argmax_;
};

// Inverted dropout: training scales kept units by 1/(1-p); inference is identity.
template <class T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);

  LayerKind kind() const noexcept override { return LayerKind::kDropout; }
  Shape output_shape(const Shape& input) const override { return input; }
  void infer(const Tensor<T>& x, Tensor<T>& y) const override { y = x; }
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override {
    mask_ = {};
    cached_ = false;
  }
  std::string describe() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  Tensor<T> mask_;
  bool cached_ = false;
};

template <class T>
class Tanh final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kTanh; }
  Shape output_shape(const Shape& input) const override { return input; }
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override { output_ = {}; }
  std::string describe() const override { return "tanh"; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Tanh>(*this); }

 private:
  Tensor<T> output_;
};

template <class T>
class Relu final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kRelu; }
  Shape output_shape(const Shape& input) const override { return input; }
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override { input_ = {}; }
  std::string describe() const override { return "relu"; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Tensor<T> input_;
};

// Row-wise softmax over the trailing dimension of [B, K].
template <class T>
class Softmax final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kSoftmax; }
  Shape output_shape(const Shape& input) const override;
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override { output_ = {}; }
  std::string describe() const override { return "softmax"; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor<T> output_;
};

template <class T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::kFlatten; }
  Shape output_shape(const Shape& input) const override { return {shape_count(input)}; }
  void infer(const Tensor<T>& x, Tensor<T>& y) const override;
  void train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) override;
  void backward(const Tensor<T>& dy, Tensor<T>* dx) override;
  void clear_cache() noexcept override { input_shape_.clear(); }
  std::string describe() const override { return "flatten"; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

// Rebuilds a layer from its describe() tokens.
template <class T>
std::unique_ptr<Layer<T>> make_layer(const std::string& description);

// Row-wise numerically stable softmax.
template <class T>
void softmax_rows(const T* logits, T* probs, std::size_t rows, std::size_t cols);

}  // namespace gpfr::nn

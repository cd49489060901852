#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gpfr/nn/layers.hpp"

namespace gpfr::nn {

// Linear stack of layers with a declared per-sample input shape. An empty
// stack is the identity map.
template <class T>
class Sequential {
 public:
  explicit Sequential(Shape input_shape = {});
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  // Validates the new layer against the current output shape.
  Sequential& add(std::unique_ptr<Layer<T>> layer);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }
  std::size_t output_size() const noexcept { return shape_count(output_shape_); }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  // Inference; keeps no caches and is safe to call concurrently.
  Tensor<T> infer(const Tensor<T>& x) const;
  // Caching forward for a later backward(). A null rng disables dropout.
  const Tensor<T>& train_forward(const Tensor<T>& x, Rng* rng);
  // Accumulates parameter gradients; writes the input gradient when dx is set.
  void backward(const Tensor<T>& dy, Tensor<T>* dx);

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  std::size_t parameter_count() const;
  void zero_grad();
  void init_params(Rng& rng);
  void clear_cache() noexcept;

 private:
  void check_input(const Tensor<T>& x) const;

  Shape input_shape_;
  Shape output_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Tensor<T>> activations_;
  Tensor<T> scratch_;
  bool cached_ = false;
};

// Builds the convolutional shared encoder for 3x28x28 inputs: two 3x3
// convolutions with 32 filters and relu, 2x2 max pooling, dropout 0.25,
// flatten (4608 outputs).
template <class T>
Sequential<T> make_conv_encoder(Shape input_shape = {3, 28, 28}, std::size_t filters = 32,
                                double dropout = 0.25);

}  // namespace gpfr::nn

#include "gpfr/nn/network.hpp"

namespace gpfr::nn {

template <class T>
Sequential<T>::Sequential(Shape input_shape)
    : input_shape_(std::move(input_shape)), output_shape_(input_shape_) {}

template <class T>
Sequential<T>::Sequential(const Sequential& other)
    : input_shape_(other.input_shape_), output_shape_(other.output_shape_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) {
    layers_.push_back(l->clone());
    layers_.back()->clear_cache();
  }
}

template <class T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <class T>
Sequential<T>& Sequential<T>::add(std::unique_ptr<Layer<T>> layer) {
  try {
    output_shape_ = layer->output_shape(output_shape_);
  } catch (const ConfigError& e) {
    throw ConfigError("layer " + std::to_string(layers_.size()) + " (" +
                      std::string(layer_kind_name(layer->kind())) + "): " + e.what());
  }
  layers_.push_back(std::move(layer));
  cached_ = false;
  return *this;
}

template <class T>
void Sequential<T>::check_input(const Tensor<T>& x) const {
  const Shape& s = x.shape();
  const bool ok = s.size() == input_shape_.size() + 1 && std::equal(input_shape_.begin(), input_shape_.end(), s.begin() + 1);
  if (!ok) {
    const std::string where =
        layers_.empty() ? std::string("empty stack") : "layer 0 (" + std::string(layer_kind_name(layers_[0]->kind())) + ")";
    throw ConfigError(where + ": expected per-sample input " + shape_string(input_shape_) + ", got batch " +
                      shape_string(s));
  }
}

template <class T>
Tensor<T> Sequential<T>::infer(const Tensor<T>& x) const {
  check_input(x);
  if (layers_.empty()) return x;
  Tensor<T> a, b;
  layers_[0]->infer(x, a);
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    layers_[i]->infer(a, b);
    std::swap(a, b);
  }
  return a;
}

template <class T>
const Tensor<T>& Sequential<T>::train_forward(const Tensor<T>& x, Rng* rng) {
  check_input(x);
  activations_.resize(layers_.size() + 1);
  activations_[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->train_forward(activations_[i], activations_[i + 1], rng);
  }
  cached_ = true;
  return activations_.back();
}

template <class T>
void Sequential<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  if (!cached_) throw UsageError("sequential: backward called without a cached training forward pass");
  if (layers_.empty()) {
    if (dx) *dx = dy;
    return;
  }
  Tensor<T> grad = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i == 0) {
      layers_[0]->backward(grad, dx);
    } else {
      layers_[i]->backward(grad, &scratch_);
      std::swap(grad, scratch_);
    }
  }
}

template <class T>
std::vector<Param<T>*> Sequential<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    for (auto& p : l->params()) out.push_back(&p);
  }
  return out;
}

template <class T>
std::vector<const Param<T>*> Sequential<T>::params() const {
  std::vector<const Param<T>*> out;
  for (const auto& l : layers_) {
    for (const auto& p : std::as_const(*l).params()) out.push_back(&p);
  }
  return out;
}

template <class T>
std::size_t Sequential<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : params()) n += p->value.size();
  return n;
}

template <class T>
void Sequential<T>::zero_grad() {
  for (auto* p : params()) p->grad.fill(T(0));
}

template <class T>
void Sequential<T>::init_params(Rng& rng) {
  for (auto& l : layers_) l->init_params(rng);
}

template <class T>
void Sequential<T>::clear_cache() noexcept {
  for (auto& l : layers_) l->clear_cache();
  activations_.clear();
  cached_ = false;
}

template <class T>
Sequential<T> make_conv_encoder(Shape input_shape, std::size_t filters, double dropout) {
  if (input_shape.size() != 3) throw ConfigError("conv encoder expects a [C, H, W] input");
  Sequential<T> net(input_shape);
  net.add(std::make_unique<Conv2d<T>>(input_shape[0], filters, 3, 3));
  net.add(std::make_unique<Relu<T>>());
  net.add(std::make_unique<Conv2d<T>>(filters, filters, 3, 3));
  net.add(std::make_unique<Relu<T>>());
  net.add(std::make_unique<MaxPool2d<T>>(2, 2));
  net.add(std::make_unique<Dropout<T>>(dropout));
  net.add(std::make_unique<Flatten<T>>());
  return net;
}

template class Sequential<float>;
template class Sequential<double>;
template Sequential<float> make_conv_encoder<float>(Shape, std::size_t, double);
template Sequential<double> make_conv_encoder<double>(Shape, std::size_t, double);

}  // namespace gpfr::nn

#include "gpfr/nn/layers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gpfr/nn/ops.hpp"

namespace gpfr::nn {

using simd::Trans;

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kFlatten: return "flatten";
  }
  return "unknown";
}

namespace {

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
}

void require_cache(bool present, std::string_view layer) {
  if (!present) {
    throw UsageError(std::string(layer) + ": backward called without a cached training forward pass");
  }
}

template <class T>
Shape batch_shape(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

// ---------------------------------------------------------------- Dense

template <class T>
Dense<T>::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
  if (in == 0 || out == 0) throw ConfigError("dense: zero-sized layer");
  params_.push_back({Tensor<T>({out, in}), Tensor<T>({out, in})});
  params_.push_back({Tensor<T>({out}), Tensor<T>({out})});
}

template <class T>
Shape Dense<T>::output_shape(const Shape& input) const {
  if (shape_count(input) != in_ || input.size() != 1) {
    throw ConfigError("dense " + std::to_string(in_) + "->" + std::to_string(out_) +
                      ": expected input [" + std::to_string(in_) + "], got " + shape_string(input));
  }
  return {out_};
}

template <class T>
void Dense<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ConfigError("dense: expected batch of [" + std::to_string(in_) + "], got " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  y.resize({batch, out_});
  ops::gemm(Trans::kNo, Trans::kYes, batch, out_, in_, T(1), x.data(), in_, weight().data(), in_, T(0),
            y.data(), out_);
  ops::add_row_bias(y.data(), batch, out_, bias().data());
}

template <class T>
void Dense<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  input_ = x;
}

template <class T>
void Dense<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!input_.shape().empty(), "dense");
  const std::size_t batch = input_.dim(0);
  // dW += dy^T x ; db += column sums of dy
  ops::gemm(Trans::kYes, Trans::kNo, out_, in_, batch, T(1), dy.data(), out_, input_.data(), in_, T(1),
            params_[0].grad.data(), in_);
  ops::add_column_sums(dy.data(), batch, out_, params_[1].grad.data());
  if (dx) {
    dx->resize({batch, in_});
    ops::gemm(Trans::kNo, Trans::kNo, batch, in_, out_, T(1), dy.data(), out_, weight().data(), in_, T(0),
              dx->data(), in_);
  }
}

template <class T>
void Dense<T>::init_params(Rng& rng) {
  glorot_uniform(weight(), in_, out_, rng);
  bias().fill(T(0));
}

template <class T>
std::string Dense<T>::describe() const {
  return "dense " + std::to_string(in_) + " " + std::to_string(out_);
}

// ---------------------------------------------------------------- Conv2d

template <class T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t filters, std::size_t kernel_h, std::size_t kernel_w,
                  std::size_t stride)
    : channels_(in_channels), filters_(filters), kh_(kernel_h), kw_(kernel_w), stride_(stride) {
  if (!channels_ || !filters_ || !kh_ || !kw_ || !stride_) throw ConfigError("conv2d: zero-sized parameter");
  const std::size_t k = channels_ * kh_ * kw_;
  params_.push_back({Tensor<T>({filters_, k}), Tensor<T>({filters_, k})});
  params_.push_back({Tensor<T>({filters_}), Tensor<T>({filters_})});
}

template <class T>
Shape Conv2d<T>::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] != channels_ || input[1] < kh_ || input[2] < kw_) {
    throw ConfigError("conv2d(" + std::to_string(filters_) + "," + std::to_string(kh_) + "," +
                      std::to_string(kw_) + "): incompatible input " + shape_string(input));
  }
  return {filters_, (input[1] - kh_) / stride_ + 1, (input[2] - kw_) / stride_ + 1};
}

template <class T>
void Conv2d<T>::im2col(const T* image, std::size_t h, std::size_t w, T* cols) const {
  const std::size_t oh = (h - kh_) / stride_ + 1;
  const std::size_t ow = (w - kw_) / stride_ + 1;
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t i = 0; i < kh_; ++i) {
      for (std::size_t j = 0; j < kw_; ++j) {
        T* dst = cols + ((c * kh_ + i) * kw_ + j) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const T* src = image + (c * h + oy * stride_ + i) * w + j;
          if (stride_ == 1) {
            std::copy(src, src + ow, dst + oy * ow);
          } else {
            for (std::size_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = src[ox * stride_];
          }
        }
      }
    }
  }
}

template <class T>
void Conv2d<T>::col2im(const T* cols, std::size_t h, std::size_t w, T* image) const {
  const std::size_t oh = (h - kh_) / stride_ + 1;
  const std::size_t ow = (w - kw_) / stride_ + 1;
  std::fill(image, image + channels_ * h * w, T(0));
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t i = 0; i < kh_; ++i) {
      for (std::size_t j = 0; j < kw_; ++j) {
        const T* src = cols + ((c * kh_ + i) * kw_ + j) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          T* dst = image + (c * h + oy * stride_ + i) * w + j;
          for (std::size_t ox = 0; ox < ow; ++ox) dst[ox * stride_] += src[oy * ow + ox];
        }
      }
    }
  }
}

template <class T>
void Conv2d<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.rank() != 4) throw ConfigError("conv2d: expected [B, C, H, W], got " + shape_string(x.shape()));
  const Shape out = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t k = channels_ * kh_ * kw_;
  const std::size_t positions = out[1] * out[2];
  y.resize(batch_shape<T>(batch, out));
  std::vector<T> cols(k * positions);
  const T* bias = params_[1].value.data();
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.data() + b * channels_ * h * w, h, w, cols.data());
    T* yb = y.data() + b * filters_ * positions;
    ops::gemm(Trans::kNo, Trans::kNo, filters_, positions, k, T(1), params_[0].value.data(), k, cols.data(),
              positions, T(0), yb, positions);
    for (std::size_t f = 0; f < filters_; ++f) {
      T* row = yb + f * positions;
      for (std::size_t p = 0; p < positions; ++p) row[p] += bias[f];
    }
  }
}

template <class T>
void Conv2d<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  input_ = x;
}

template <class T>
void Conv2d<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!input_.shape().empty(), "conv2d");
  const std::size_t batch = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const std::size_t k = channels_ * kh_ * kw_;
  const std::size_t positions = dy.row_size() / filters_;
  std::vector<T> cols(k * positions);
  std::vector<T> dcols(dx ? k * positions : 0);
  if (dx) dx->resize(input_.shape());
  T* dw = params_[0].grad.data();
  T* db = params_[1].grad.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const T* dyb = dy.data() + b * filters_ * positions;
    im2col(input_.data() + b * channels_ * h * w, h, w, cols.data());
    ops::gemm(Trans::kNo, Trans::kYes, filters_, k, positions, T(1), dyb, positions, cols.data(), positions,
              T(1), dw, k);
    for (std::size_t f = 0; f < filters_; ++f) {
      const T* row = dyb + f * positions;
      T acc = T(0);
      for (std::size_t p = 0; p < positions; ++p) acc += row[p];
      db[f] += acc;
    }
    if (dx) {
      ops::gemm(Trans::kYes, Trans::kNo, k, positions, filters_, T(1), params_[0].value.data(), k, dyb,
                positions, T(0), dcols.data(), positions);
      col2im(dcols.data(), h, w, dx->data() + b * channels_ * h * w);
    }
  }
}

template <class T>
void Conv2d<T>::init_params(Rng& rng) {
  glorot_uniform(params_[0].value, channels_ * kh_ * kw_, filters_ * kh_ * kw_, rng);
  params_[1].value.fill(T(0));
}

template <class T>
std::string Conv2d<T>::describe() const {
  std::ostringstream s;
  s << "conv2d " << channels_ << ' ' << filters_ << ' ' << kh_ << ' ' << kw_ << ' ' << stride_;
  return s.str();
}

// ---------------------------------------------------------------- MaxPool2d

template <class T>
MaxPool2d<T>::MaxPool2d(std::size_t pool_h, std::size_t pool_w, std::size_t stride_h, std::size_t stride_w)
    : ph_(pool_h), pw_(pool_w), sh_(stride_h ? stride_h : pool_h), sw_(stride_w ? stride_w : pool_w) {
  if (!ph_ || !pw_) throw ConfigError("maxpool2d: zero-sized window");
}

template <class T>
Shape MaxPool2d<T>::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[1] < ph_ || input[2] < pw_) {
    throw ConfigError("maxpool2d: incompatible input " + shape_string(input));
  }
  return {input[0], (input[1] - ph_) / sh_ + 1, (input[2] - pw_) / sw_ + 1};
}

template <class T>
void MaxPool2d<T>::pool(const Tensor<T>& x, Tensor<T>& y, std::vector<std::uint32_t>* argmax) const {
  if (x.rank() != 4) throw ConfigError("maxpool2d: expected [B, C, H, W], got " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0), channels = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Shape out = output_shape({channels, h, w});
  const std::size_t oh = out[1], ow = out[2];
  y.resize(batch_shape<T>(batch, out));
  if (argmax) argmax->resize(y.size());
  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t plane = (b * channels + c) * h * w;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = plane + (oy * sh_) * w + ox * sw_;
          for (std::size_t i = 0; i < ph_; ++i) {
            for (std::size_t j = 0; j < pw_; ++j) {
              const std::size_t idx = plane + (oy * sh_ + i) * w + ox * sw_ + j;
              if (x[idx] > x[best]) best = idx;
            }
          }
          y[o] = x[best];
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best - b * channels * h * w);
        }
      }
    }
  }
}

template <class T>
void MaxPool2d<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  pool(x, y, nullptr);
}

template <class T>
void MaxPool2d<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  pool(x, y, &argmax_);
  input_shape_ = x.shape();
}

template <class T>
void MaxPool2d<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!input_shape_.empty(), "maxpool2d");
  if (!dx) return;
  dx->resize(input_shape_);
  dx->fill(T(0));
  const std::size_t batch = input_shape_[0];
  const std::size_t in_per = dx->size() / batch;
  const std::size_t out_per = dy.size() / batch;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_per; ++o) {
      (*dx)[b * in_per + argmax_[b * out_per + o]] += dy[b * out_per + o];
    }
  }
}

template <class T>
std::string MaxPool2d<T>::describe() const {
  std::ostringstream s;
  s << "maxpool2d " << ph_ << ' ' << pw_ << ' ' << sh_ << ' ' << sw_;
  return s.str();
}

// ---------------------------------------------------------------- Dropout

template <class T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
}

template <class T>
void Dropout<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng* rng) {
  mask_.resize(x.shape());
  if (rng == nullptr || rate_ == 0.0) {
    mask_.fill(T(1));
  } else {
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    for (auto& m : mask_.values()) m = rng->uniform(0.0, 1.0) < rate_ ? T(0) : keep_scale;
  }
  y.resize(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
  cached_ = true;
}

template <class T>
void Dropout<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(cached_, "dropout");
  if (!dx) return;
  dx->resize(mask_.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] = dy[i] * mask_[i];
}

template <class T>
std::string Dropout<T>::describe() const {
  return "dropout " + format_real(rate_);
}

// ---------------------------------------------------------------- Tanh / Relu

template <class T>
void Tanh<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  y.resize(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

template <class T>
void Tanh<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  output_ = y;
}

template <class T>
void Tanh<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!output_.shape().empty(), "tanh");
  if (!dx) return;
  dx->resize(output_.shape());
  ops::tanh_backward(output_.data(), dy.data(), dx->data(), dy.size());
}

template <class T>
void Relu<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  y.resize(x.shape());
  ops::relu_forward(x.data(), y.data(), x.size());
}

template <class T>
void Relu<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  input_ = x;
}

template <class T>
void Relu<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!input_.shape().empty(), "relu");
  if (!dx) return;
  dx->resize(input_.shape());
  ops::relu_backward(input_.data(), dy.data(), dx->data(), dy.size());
}

// ---------------------------------------------------------------- Softmax

template <class T>
void softmax_rows(const T* logits, T* probs, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = logits + r * cols;
    T* out = probs + r * cols;
    const T peak = *std::max_element(in, in + cols);
    T total = T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] = std::exp(in[j] - peak);
      total += out[j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] /= total;
  }
}

template <class T>
Shape Softmax<T>::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] == 0) throw ConfigError("softmax: expects a flat input, got " + shape_string(input));
  return input;
}

template <class T>
void Softmax<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  if (x.rank() != 2) throw ConfigError("softmax: expected [B, K], got " + shape_string(x.shape()));
  y.resize(x.shape());
  softmax_rows(x.data(), y.data(), x.dim(0), x.dim(1));
}

template <class T>
void Softmax<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  output_ = y;
}

template <class T>
void Softmax<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!output_.shape().empty(), "softmax");
  if (!dx) return;
  dx->resize(output_.shape());
  const std::size_t rows = output_.dim(0), cols = output_.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yr = output_.data() + r * cols;
    const T* gr = dy.data() + r * cols;
    T inner = T(0);
    for (std::size_t j = 0; j < cols; ++j) inner += gr[j] * yr[j];
    T* out = dx->data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] = yr[j] * (gr[j] - inner);
  }
}

// ---------------------------------------------------------------- Flatten

template <class T>
void Flatten<T>::infer(const Tensor<T>& x, Tensor<T>& y) const {
  y = x;
  y.reshape({x.dim(0), x.row_size()});
}

template <class T>
void Flatten<T>::train_forward(const Tensor<T>& x, Tensor<T>& y, Rng*) {
  infer(x, y);
  input_shape_ = x.shape();
}

template <class T>
void Flatten<T>::backward(const Tensor<T>& dy, Tensor<T>* dx) {
  require_cache(!input_shape_.empty(), "flatten");
  if (!dx) return;
  *dx = dy;
  dx->reshape(input_shape_);
}

// ---------------------------------------------------------------- factory

template <class T>
std::unique_ptr<Layer<T>> make_layer(const std::string& description) {
  std::istringstream in(description);
  std::string kind;
  in >> kind;
  auto need = [&](std::size_t& v) {
    if (!(in >> v)) throw ConfigError("malformed layer description '" + description + "'");
  };
  if (kind == "dense") {
    std::size_t a, b;
    need(a), need(b);
    return std::make_unique<Dense<T>>(a, b);
  }
  if (kind == "conv2d") {
    std::size_t c, f, kh, kw, s;
    need(c), need(f), need(kh), need(kw), need(s);
    return std::make_unique<Conv2d<T>>(c, f, kh, kw, s);
  }
  if (kind == "maxpool2d") {
    std::size_t ph, pw, sh, sw;
    need(ph), need(pw), need(sh), need(sw);
    return std::make_unique<MaxPool2d<T>>(ph, pw, sh, sw);
  }
  if (kind == "dropout") {
    double rate;
    if (!(in >> rate)) throw ConfigError("malformed layer description '" + description + "'");
    return std::make_unique<Dropout<T>>(rate);
  }
  if (kind == "tanh") return std::make_unique<Tanh<T>>();
  if (kind == "relu") return std::make_unique<Relu<T>>();
  if (kind == "softmax") return std::make_unique<Softmax<T>>();
  if (kind == "flatten") return std::make_unique<Flatten<T>>();
  throw ConfigError("unknown layer kind '" + kind + "'");
}

#define GPFR_INSTANTIATE(T)                                                        \
  template class Dense<T>;                                                         \
  template class Conv2d<T>;                                                        \
  template class MaxPool2d<T>;                                                     \
  template class Dropout<T>;                                                       \
  template class Tanh<T>;                                                          \
  template class Relu<T>;                                                          \
  template class Softmax<T>;                                                       \
  template class Flatten<T>;                                                       \
  template std::unique_ptr<Layer<T>> make_layer<T>(const std::string&);            \
  template void softmax_rows<T>(const T*, T*, std::size_t, std::size_t);

GPFR_INSTANTIATE(float)
GPFR_INSTANTIATE(double)

#undef GPFR_INSTANTIATE

}  // namespace gpfr::nn

#include "gpfr/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpfr/nn/layers.hpp"

namespace gpfr::nn {

namespace {
double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
}  // namespace

double binary_cross_entropy(double p, int a) {
  const double q = clamp_prob(p);
  return -(a * std::log(q) + (1 - a) * std::log(1.0 - q));
}

double categorical_cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw UsageError("categorical_cross_entropy: class index " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  return -std::log(clamp_prob(probs[label]));
}

double categorical_cross_entropy(std::span<const float> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw UsageError("categorical_cross_entropy: class index " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  return -std::log(clamp_prob(probs[label]));
}

template <class T>
double softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, double weight,
                             Tensor<T>* grad, Tensor<T>* probs) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || labels.empty()) {
    throw UsageError("softmax_cross_entropy: logits " + shape_string(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor<T> local;
  Tensor<T>& p = probs ? *probs : local;
  p.resize(logits.shape());
  softmax_rows(logits.data(), p.data(), batch, classes);

  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw UsageError("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
    }
    total += -std::log(clamp_prob(static_cast<double>(p[b * classes + label])));
  }
  const double mean = total / static_cast<double>(batch);

  if (grad) {
    grad->resize(logits.shape());
    const T scale = static_cast<T>(weight / static_cast<double>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < classes; ++k) {
        const T target = static_cast<std::size_t>(labels[b]) == k ? T(1) : T(0);
        (*grad)[b * classes + k] = scale * (p[b * classes + k] - target);
      }
    }
  }
  return weight * mean;
}

template double softmax_cross_entropy<float>(const Tensor<float>&, std::span<const int>, double, Tensor<float>*,
                                             Tensor<float>*);
template double softmax_cross_entropy<double>(const Tensor<double>&, std::span<const int>, double,
                                              Tensor<double>*, Tensor<double>*);

}  // namespace gpfr::nn

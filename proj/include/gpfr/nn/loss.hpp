#pragma once

#include <cstddef>
#include <span>

#include "gpfr/nn/tensor.hpp"

namespace gpfr::nn {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

// -(a log p + (1 - a) log(1 - p)), a in {0, 1}.
double binary_cross_entropy(double p, int a);

// -log p[label]; throws UsageError when label is out of range.
double categorical_cross_entropy(std::span<const double> probs, std::size_t label);
double categorical_cross_entropy(std::span<const float> probs, std::size_t label);

// Softmax followed by categorical cross-entropy over a batch of logits
// [B, K]. Returns weight * mean loss and writes d(weight * mean loss)/d logits
// into grad (resized) when given. probs receives the softmax output if given.
template <class T>
double softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, double weight,
                             Tensor<T>* grad, Tensor<T>* probs = nullptr);

}  // namespace gpfr::nn

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpfr/nn/layers.hpp"

namespace gpfr::nn {

enum class OptimizerKind : std::uint8_t { kAdam, kRmsprop };

OptimizerKind parse_optimizer(const std::string& name);
std::string_view optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-8;
};

// Adam or RMSprop over a fixed list of parameters. Moment buffers are
// created on the first step and mirror the parameter shapes.
template <class T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  void step(std::span<Param<T>* const> params);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::uint64_t step_count() const noexcept { return steps_; }
  // First and second moment buffers (second is empty for RMSprop).
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

}  // namespace gpfr::nn

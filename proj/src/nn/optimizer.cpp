#include "gpfr/nn/optimizer.hpp"

#include <cmath>

#include "gpfr/nn/ops.hpp"

namespace gpfr::nn {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "rmsprop") return OptimizerKind::kRmsprop;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or rmsprop)");
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "rmsprop";
}

template <class T>
void Optimizer<T>::step(std::span<Param<T>* const> params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.shape());
      if (config_.kind == OptimizerKind::kAdam) v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) throw UsageError("optimizer: parameter list changed between steps");

  ++steps_;
  const T lr = static_cast<T>(config_.learning_rate);
  const T eps = static_cast<T>(config_.epsilon);
  if (config_.kind == OptimizerKind::kAdam) {
    const double t = static_cast<double>(steps_);
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(config_.beta1, t));
    const T bc2 = static_cast<T>(1.0 - std::pow(config_.beta2, t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      ops::adam_update(p.value.data(), p.grad.data(), m_[i].data(), v_[i].data(), p.value.size(), lr, b1, b2,
                       bc1, bc2, eps);
    }
  } else {
    const T rho = static_cast<T>(config_.rho);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      ops::rmsprop_update(p.value.data(), p.grad.data(), m_[i].data(), p.value.size(), lr, rho, eps);
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace gpfr::nn

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nightday/nn/layers.hpp"

namespace nightday::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to parameters by position.
template <class T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  void step(const std::vector<Param<T>*>& params) {
    if (m_.empty()) {
      for (const Param<T>* p : params) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
      }
    }
    if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T step_size = static_cast<T>(config_.learning_rate / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Param<T>& p = *params[k];
      Tensor<T>& m = m_[k];
      Tensor<T>& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const T g = p.grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        p.value[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
      }
    }
  }

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace nightday::nn

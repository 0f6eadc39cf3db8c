#pragma once

#include <cmath>

#include "nightday/core/error.hpp"
#include "nightday/core/tensor.hpp"

namespace nightday::translation {

template <class T>
struct DiscriminatorLoss {
  T value;
  Tensor<T> grad_real;
  Tensor<T> grad_fake;
};

template <class T>
struct GeneratorLoss {
  T value;
  Tensor<T> grad_fake;
};

template <class T>
struct CycleLoss {
  T value;
  Tensor<T> grad_a_cycled;
  Tensor<T> grad_b_cycled;
};

namespace detail {
template <class T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (t.empty()) throw ShapeError(std::string(what) + ": empty tensor");
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite input");
}
}  // namespace detail

/// Least-squares discriminator objective: mean((real - 1)^2) + mean(fake^2).
template <class T>
DiscriminatorLoss<T> adversarial_loss_discriminator(const Tensor<T>& real_scores, const Tensor<T>& fake_scores) {
  detail::require_finite(real_scores, "adversarial_loss_discriminator");
  detail::require_finite(fake_scores, "adversarial_loss_discriminator");
  DiscriminatorLoss<T> out{T(0), Tensor<T>(real_scores.shape()), Tensor<T>(fake_scores.shape())};
  const T nr = static_cast<T>(real_scores.size()), nf = static_cast<T>(fake_scores.size());
  T real_sum = T(0), fake_sum = T(0);
  for (std::size_t i = 0; i < real_scores.size(); ++i) {
    const T d = real_scores[i] - T(1);
    real_sum += d * d;
    out.grad_real[i] = T(2) * d / nr;
  }
  for (std::size_t i = 0; i < fake_scores.size(); ++i) {
    fake_sum += fake_scores[i] * fake_scores[i];
    out.grad_fake[i] = T(2) * fake_scores[i] / nf;
  }
  out.value = real_sum / nr + fake_sum / nf;
  return out;
}

/// Least-squares generator objective: mean((fake - 1)^2).
template <class T>
GeneratorLoss<T> adversarial_loss_generator(const Tensor<T>& fake_scores) {
  detail::require_finite(fake_scores, "adversarial_loss_generator");
  GeneratorLoss<T> out{T(0), Tensor<T>(fake_scores.shape())};
  const T n = static_cast<T>(fake_scores.size());
  T sum = T(0);
  for (std::size_t i = 0; i < fake_scores.size(); ++i) {
    const T d = fake_scores[i] - T(1);
    sum += d * d;
    out.grad_fake[i] = T(2) * d / n;
  }
  out.value = sum / n;
  return out;
}

/// lambda * (mean|a - a_cycled| + mean|b - b_cycled|). Subgradient 0 where equal.
template <class T>
CycleLoss<T> cycle_loss(const Tensor<T>& a, const Tensor<T>& a_cycled, const Tensor<T>& b, const Tensor<T>& b_cycled,
                        T lambda) {
  require_same_shape(a, a_cycled, "cycle_loss");
  require_same_shape(b, b_cycled, "cycle_loss");
  if (!(lambda > T(0))) throw ArgumentError("cycle_loss: lambda must be positive");
  CycleLoss<T> out{T(0), Tensor<T>(a.shape()), Tensor<T>(b.shape())};
  auto term = [lambda](const Tensor<T>& x, const Tensor<T>& y, Tensor<T>& grad) {
    const T n = static_cast<T>(x.size());
    T sum = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T d = y[i] - x[i];
      sum += std::abs(d);
      grad[i] = lambda * (d > T(0) ? T(1) : d < T(0) ? T(-1) : T(0)) / n;
    }
    return sum / n;
  };
  const T la = term(a, a_cycled, out.grad_a_cycled);
  const T lb = term(b, b_cycled, out.grad_b_cycled);
  out.value = lambda * (la + lb);
  if (!std::isfinite(out.value)) throw NumericError("cycle_loss: non-finite result");
  return out;
}

}  // namespace nightday::translation

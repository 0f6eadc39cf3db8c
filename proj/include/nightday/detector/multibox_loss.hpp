#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/detector/matching.hpp"

namespace nightday::detector {

inline constexpr int kConfChannels = kNumClasses + 1;  // background is channel 0

struct MultiboxOptions {
  double phi = 1.0;             // localization weight
  double neg_pos_ratio = 3.0;   // hard negatives per positive
};

/// Unnormalized sums for one image; gradients are of those sums.
template <class T>
struct MultiboxTerms {
  T conf_sum = T(0);
  T loc_sum = T(0);
  std::size_t positives = 0;
  Tensor<T> grad_conf;  // [A, 7]
  Tensor<T> grad_loc;   // [A, 4]
  std::vector<std::size_t> mined_negatives;
};

template <class T>
struct MultiboxLoss {
  T total = T(0);
  T conf = T(0);
  T loc = T(0);
  std::size_t positives = 0;
  Tensor<T> grad_conf;
  Tensor<T> grad_loc;
};

namespace detail {

template <class T>
T log_sum_exp(const T* z, int n) {
  T m = z[0];
  for (int i = 1; i < n; ++i) m = std::max(m, z[i]);
  T s = T(0);
  for (int i = 0; i < n; ++i) s += std::exp(z[i] - m);
  return m + std::log(s);
}

template <class T>
T smooth_l1(T x) {
  const T ax = std::abs(x);
  return ax < T(1) ? T(0.5) * x * x : ax - T(0.5);
}

template <class T>
T smooth_l1_grad(T x) {
  return std::abs(x) < T(1) ? x : (x > T(0) ? T(1) : T(-1));
}

}  // namespace detail

/// Background losses -log p_bg(a) for each anchor.
template <class T>
std::vector<T> background_losses(const Tensor<T>& conf_logits) {
  const int na = conf_logits.dim(0);
  std::vector<T> out(static_cast<std::size_t>(na));
  for (int a = 0; a < na; ++a) {
    const T* z = conf_logits.data() + static_cast<std::size_t>(a) * kConfChannels;
    out[static_cast<std::size_t>(a)] = detail::log_sum_exp(z, kConfChannels) - z[0];
  }
  return out;
}

/// Cross-entropy over positives plus the highest-background-loss negatives
/// (ratio:1, ties to the lower index), smooth-L1 over positive offsets.
template <class T>
MultiboxTerms<T> multibox_terms(const Tensor<T>& conf_logits, const Tensor<T>& loc_preds, const MatchResult& match,
                                const MultiboxOptions& opts = {}) {
  const std::size_t na = match.matched_gt.size();
  if (conf_logits.shape() != std::vector<int>{static_cast<int>(na), kConfChannels})
    throw ShapeError("multibox_loss: confidence logits must be [A,7]");
  if (loc_preds.shape() != std::vector<int>{static_cast<int>(na), 4})
    throw ShapeError("multibox_loss: localization predictions must be [A,4]");
  if (!conf_logits.all_finite() || !loc_preds.all_finite()) throw NumericError("multibox_loss: non-finite input");

  MultiboxTerms<T> t;
  t.grad_conf = Tensor<T>(conf_logits.shape());
  t.grad_loc = Tensor<T>(loc_preds.shape());
  t.positives = match.positives();
  if (t.positives == 0) return t;

  auto add_ce = [&](std::size_t a, int target) {
    const T* z = conf_logits.data() + a * kConfChannels;
    const T lse = detail::log_sum_exp(z, kConfChannels);
    t.conf_sum += lse - z[target];
    T* g = t.grad_conf.data() + a * kConfChannels;
    for (int c = 0; c < kConfChannels; ++c) g[c] += std::exp(z[c] - lse);
    g[target] -= T(1);
  };

  std::vector<std::size_t> negatives;
  for (std::size_t a = 0; a < na; ++a) {
    if (match.matched_gt[a] == kBackground) {
      negatives.push_back(a);
      continue;
    }
    add_ce(a, match.target_class[a]);
    for (int d = 0; d < 4; ++d) {
      const T diff = loc_preds.at(static_cast<int>(a), d) - static_cast<T>(match.offsets[a][static_cast<std::size_t>(d)]);
      t.loc_sum += detail::smooth_l1(diff);
      t.grad_loc.at(static_cast<int>(a), d) = detail::smooth_l1_grad(diff);
    }
  }

  const auto bg = background_losses(conf_logits);
  const std::size_t want = static_cast<std::size_t>(std::floor(opts.neg_pos_ratio * static_cast<double>(t.positives)));
  const std::size_t take = std::min(want, negatives.size());
  std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) { return bg[a] > bg[b]; });
  negatives.resize(take);
  for (std::size_t a : negatives) add_ce(a, 0);
  t.mined_negatives = std::move(negatives);
  return t;
}

/// (1/N) * (CE_conf + phi * SmoothL1_loc) with N the positive count; 0 when N = 0.
template <class T>
MultiboxLoss<T> multibox_loss(const Tensor<T>& conf_logits, const Tensor<T>& loc_preds, const MatchResult& match,
                              const MultiboxOptions& opts = {}) {
  if (!(opts.phi > 0)) throw ArgumentError("multibox_loss: phi must be positive");
  auto terms = multibox_terms(conf_logits, loc_preds, match, opts);
  MultiboxLoss<T> out;
  out.positives = terms.positives;
  out.grad_conf = std::move(terms.grad_conf);
  out.grad_loc = std::move(terms.grad_loc);
  if (terms.positives == 0) return out;
  const T inv_n = T(1) / static_cast<T>(terms.positives);
  const T phi = static_cast<T>(opts.phi);
  out.conf = terms.conf_sum * inv_n;
  out.loc = terms.loc_sum * inv_n;
  out.total = out.conf + phi * out.loc;
  out.grad_conf *= inv_n;
  out.grad_loc *= phi * inv_n;
  return out;
}

}  // namespace nightday::detector

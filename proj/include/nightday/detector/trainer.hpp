#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/detector/matching.hpp"
#include "nightday/detector/model.hpp"
#include "nightday/detector/multibox_loss.hpp"
#include "nightday/nn/adam.hpp"

namespace nightday::detector {

template <class T>
struct DetectorSample {
  Tensor<T> image;
  std::vector<LabeledBox> boxes;
};

struct DetectorLosses {
  double total = 0;
  double conf = 0;
  double loc = 0;
  std::size_t positives = 0;

  friend bool operator==(const DetectorLosses&, const DetectorLosses&) = default;
};

struct DetectorTrainOptions {
  MultiboxOptions loss;
  double match_threshold = 0.5;
};

/// One Adam step on the batch multibox loss, normalized by the batch's total
/// positive count. `step` is only used to label divergence errors.
template <class T>
DetectorLosses train_detector_step(Detector<T>& model, std::span<const DetectorSample<T>> batch, const AnchorSet& anchors,
                                   nn::Adam<T>& optimizer, const DetectorTrainOptions& opts, std::int64_t step) {
  if (batch.empty()) throw ArgumentError("detector step needs a non-empty batch");
  if (anchors.layout != model.arch().layout) throw CompatibilityError("anchor set does not match the detector layout");
  auto params = model.parameters();
  nn::zero_grad(params);

  struct Pending {
    DetectorTape<T> tape;
    MultiboxTerms<T> terms;
  };
  std::vector<Pending> pending(batch.size());
  std::size_t positives = 0;
  T conf_sum = T(0), loc_sum = T(0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto out = model.forward(batch[i].image, &pending[i].tape);
    const MatchResult match = match_anchors(anchors, batch[i].boxes, opts.match_threshold);
    try {
      pending[i].terms = multibox_terms(out.conf_logits, out.loc_preds, match, opts.loss);
    } catch (const NumericError& e) {
      throw DivergenceError(e.what(), step);
    }
    positives += pending[i].terms.positives;
    conf_sum += pending[i].terms.conf_sum;
    loc_sum += pending[i].terms.loc_sum;
  }
  DetectorLosses losses;
  losses.positives = positives;
  if (positives > 0) {
    const T inv_n = T(1) / static_cast<T>(positives);
    const T phi = static_cast<T>(opts.loss.phi);
    losses.conf = static_cast<double>(conf_sum * inv_n);
    losses.loc = static_cast<double>(loc_sum * inv_n);
    losses.total = losses.conf + opts.loss.phi * losses.loc;
    if (!std::isfinite(losses.total)) throw DivergenceError("non-finite detector loss", step);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto& t = pending[i].terms;
      t.grad_conf *= inv_n;
      t.grad_loc *= phi * inv_n;
      model.backward(t.grad_conf, t.grad_loc, pending[i].tape);
    }
  }
  optimizer.step(params);
  return losses;
}

}  // namespace nightday::detector

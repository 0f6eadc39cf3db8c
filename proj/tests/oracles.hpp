#pragma once

// Reference implementations written independently of the library, used to
// cross-check it. They favor the most literal reading over speed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/detector/anchors.hpp"
#include "nightday/detector/matching.hpp"
#include "nightday/detector/nms.hpp"
#include "nightday/metrics/average_precision.hpp"

namespace oracle {

using nightday::Box;
using nightday::LabeledBox;
using nightday::Tensor;

/// IoU by counting unit cells of a `grid` x `grid` raster; exact for boxes with
/// corners on multiples of 1/grid.
inline double raster_iou(const Box& a, const Box& b, int grid) {
  long inter = 0, uni = 0;
  for (int y = 0; y < grid; ++y) {
    for (int x = 0; x < grid; ++x) {
      const double cx = (x + 0.5) / grid, cy = (y + 0.5) / grid;
      const bool in_a = cx > a.x_min && cx < a.x_max && cy > a.y_min && cy < a.y_max;
      const bool in_b = cx > b.x_min && cx < b.x_max && cy > b.y_min && cy < b.y_max;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

inline double plain_iou(const Box& a, const Box& b) {
  const double aa = std::max(0.0, a.x_max - a.x_min) * std::max(0.0, a.y_max - a.y_min);
  const double ab = std::max(0.0, b.x_max - b.x_min) * std::max(0.0, b.y_max - b.y_min);
  if (aa <= 0 || ab <= 0) return 0;
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0;
  return w * h / (aa + ab - w * h);
}

inline Box corner(const nightday::detector::Anchor& a) {
  return {a.cx - a.w / 2, a.cy - a.h / 2, a.cx + a.w / 2, a.cy + a.h / 2};
}

/// Matching rules applied literally: all (iou, gt, anchor) triples sorted by
/// IoU descending then gt then anchor index; a triple claims when both its gt
/// and anchor are still free. Remaining anchors take their best gt at >= threshold.
inline std::vector<int> brute_match(const std::vector<nightday::detector::Anchor>& anchors,
                                    const std::vector<LabeledBox>& gt, double threshold) {
  std::vector<int> out(anchors.size(), -1);
  if (gt.empty()) return out;
  std::vector<std::tuple<double, std::size_t, std::size_t>> triples;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t a = 0; a < anchors.size(); ++a) triples.emplace_back(-plain_iou(corner(anchors[a]), gt[g].box), g, a);
  std::sort(triples.begin(), triples.end());
  std::vector<bool> gt_done(gt.size(), false), anchor_done(anchors.size(), false);
  for (const auto& [neg, g, a] : triples) {
    if (gt_done[g] || anchor_done[a]) continue;
    gt_done[g] = anchor_done[a] = true;
    out[a] = static_cast<int>(g);
  }
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (anchor_done[a]) continue;
    double best = -1;
    int best_g = -1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double o = plain_iou(corner(anchors[a]), gt[g].box);
      if (o > best) {
        best = o;
        best_g = static_cast<int>(g);
      }
    }
    if (best >= threshold) out[a] = best_g;
  }
  return out;
}

/// Repeated arg-max selection with suppression of the survivors.
inline std::vector<std::size_t> quadratic_nms(const std::vector<nightday::detector::Detection>& dets, double iou_threshold,
                                              double score_threshold, int top_k) {
  std::vector<bool> alive(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) alive[i] = dets[i].score >= score_threshold;
  std::vector<std::size_t> kept;
  while (static_cast<int>(kept.size()) < top_k) {
    std::size_t best = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && (best == dets.size() || dets[i].score > dets[best].score)) best = i;
    }
    if (best == dets.size()) break;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && dets[i].class_id == dets[best].class_id && plain_iou(dets[i].box, dets[best].box) > iou_threshold)
        alive[i] = false;
    }
  }
  return kept;
}

/// AP by recomputing the matching for every ranked prefix, then integrating
/// recall increments against the best precision at that recall or beyond.
inline double ranked_list_ap(const std::vector<nightday::metrics::ImageDetection>& dets,
                             const std::vector<nightday::metrics::GroundTruth>& gts, int cls, double threshold) {
  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].det.class_id == cls) ranked.push_back(i);
  std::vector<std::size_t> class_gts;
  for (std::size_t i = 0; i < gts.size(); ++i)
    if (gts[i].class_id == cls) class_gts.push_back(i);
  if (class_gts.empty()) return 0.0;
  // insertion rank: higher score first, earlier input first on ties
  for (std::size_t i = 1; i < ranked.size(); ++i)
    for (std::size_t j = i; j > 0 && dets[ranked[j]].det.score > dets[ranked[j - 1]].det.score; --j)
      std::swap(ranked[j], ranked[j - 1]);

  std::vector<double> precision, recall;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    std::vector<bool> taken(class_gts.size(), false);
    int tp = 0;
    for (std::size_t r = 0; r < k; ++r) {
      const auto& d = dets[ranked[r]];
      int best = -1;
      double best_iou = -1;
      for (std::size_t g = 0; g < class_gts.size(); ++g) {
        const auto& gt = gts[class_gts[g]];
        if (taken[g] || gt.image_id != d.image_id) continue;
        const double o = plain_iou(d.det.box, gt.box);
        if (o > best_iou) {
          best_iou = o;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0 && best_iou >= threshold) {
        taken[static_cast<std::size_t>(best)] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(class_gts.size()));
  }
  double ap = 0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    const double prev = k ? recall[k - 1] : 0.0;
    ap += (recall[k] - prev) * *std::max_element(precision.begin() + static_cast<long>(k), precision.end());
  }
  return ap;
}

struct MultiboxValue {
  double total, conf, loc;
};

/// Multibox objective transcribed term by term: softmax probabilities, explicit
/// negative ranking over (loss, index) pairs, smooth-L1 written piecewise.
inline MultiboxValue literal_multibox(const Tensor<double>& logits, const Tensor<double>& loc,
                                      const nightday::detector::MatchResult& m, double phi, double ratio) {
  const int na = logits.dim(0), nc = logits.dim(1);
  auto prob = [&](int a, int c) {
    double denom = 0;
    for (int k = 0; k < nc; ++k) denom += std::exp(logits.at(a, k));
    return std::exp(logits.at(a, c)) / denom;
  };
  int n = 0;
  for (int a = 0; a < na; ++a) n += m.matched_gt[static_cast<std::size_t>(a)] >= 0;
  if (n == 0) return {0, 0, 0};
  double conf = 0, l = 0;
  std::vector<std::pair<double, int>> negatives;
  for (int a = 0; a < na; ++a) {
    if (m.matched_gt[static_cast<std::size_t>(a)] >= 0) {
      conf += -std::log(prob(a, m.target_class[static_cast<std::size_t>(a)]));
      for (int d = 0; d < 4; ++d) {
        const double x = loc.at(a, d) - m.offsets[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)];
        l += std::abs(x) < 1 ? 0.5 * x * x : std::abs(x) - 0.5;
      }
    } else {
      negatives.emplace_back(-(-std::log(prob(a, 0))), a);
    }
  }
  std::sort(negatives.begin(), negatives.end());
  const std::size_t take = std::min(negatives.size(), static_cast<std::size_t>(std::floor(ratio * n)));
  for (std::size_t i = 0; i < take; ++i) conf += -std::log(prob(negatives[i].second, 0));
  return {(conf + phi * l) / n, conf / n, l / n};
}

/// Central differences of `f` with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(Tensor<double>& x, const std::function<double()>& f, double h = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor = 1e-6) {
  double worst = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

inline std::vector<double> as_vector(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace oracle

#pragma once

#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/detector/anchors.hpp"
#include "nightday/detector/boxes.hpp"

namespace nightday::detector {

inline constexpr int kBackground = -1;

/// Per-anchor assignment. target_class is 0 for background and class_id + 1 otherwise.
struct MatchResult {
  std::vector<int> matched_gt;
  std::vector<Offsets> offsets;
  std::vector<int> target_class;

  std::size_t positives() const {
    std::size_t n = 0;
    for (int m : matched_gt) n += m != kBackground;
    return n;
  }
};

/// Anchor assignment:
///  1. every ground truth claims an anchor: repeatedly take the highest-IoU pair
///     among unclaimed anchors and unserved ground truths (ties: lower gt index,
///     then lower anchor index), so each ground truth gets its best available anchor;
///  2. every other anchor takes its best ground truth (ties: lower index) when
///     IoU >= threshold, else background.
inline MatchResult match_anchors(const AnchorSet& anchors, const std::vector<LabeledBox>& gt, double threshold,
                                 Variances variances = {}) {
  const std::size_t na = anchors.size(), ng = gt.size();
  MatchResult r{std::vector<int>(na, kBackground), std::vector<Offsets>(na, Offsets{}), std::vector<int>(na, 0)};
  if (ng == 0) return r;

  std::vector<double> overlap(na * ng);
  std::vector<Box> corners(na);
  for (std::size_t a = 0; a < na; ++a) corners[a] = to_corner(anchors.anchors[a]);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t g = 0; g < ng; ++g) overlap[a * ng + g] = iou(corners[a], gt[g].box);
  }

  for (std::size_t a = 0; a < na; ++a) {
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < ng; ++g) {
      if (overlap[a * ng + g] > best_iou) {
        best_iou = overlap[a * ng + g];
        best = static_cast<int>(g);
      }
    }
    if (best_iou >= threshold) r.matched_gt[a] = best;
  }

  std::vector<char> claimed(na, 0), served(ng, 0);
  for (std::size_t round = 0; round < ng && round < na; ++round) {
    std::size_t best_a = na, best_g = ng;
    double best_iou = -1;
    for (std::size_t g = 0; g < ng; ++g) {
      if (served[g]) continue;
      for (std::size_t a = 0; a < na; ++a) {
        if (!claimed[a] && overlap[a * ng + g] > best_iou) {
          best_iou = overlap[a * ng + g];
          best_a = a;
          best_g = g;
        }
      }
    }
    claimed[best_a] = 1;
    served[best_g] = 1;
    r.matched_gt[best_a] = static_cast<int>(best_g);
  }

  for (std::size_t a = 0; a < na; ++a) {
    const int g = r.matched_gt[a];
    if (g == kBackground) continue;
    r.offsets[a] = encode_box(gt[static_cast<std::size_t>(g)].box, anchors.anchors[a], variances);
    r.target_class[a] = gt[static_cast<std::size_t>(g)].class_id + 1;
  }
  return r;
}

}  // namespace nightday::detector

#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/detector/boxes.hpp"

namespace nightday::detector {

struct Detection {
  int class_id = 0;
  double score = 0;
  Box box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct NmsConfig {
  double iou_threshold = 0.45;
  double score_threshold = 0.01;
  int top_k = 200;
};

/// Indices of the detections kept by per-class greedy suppression, in output
/// order (score descending, ties to the lower input index).
inline std::vector<std::size_t> nms_indices(const std::vector<Detection>& dets, const NmsConfig& cfg) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].score >= cfg.score_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (static_cast<int>(kept.size()) >= cfg.top_k) break;
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (dets[k].class_id == dets[i].class_id && iou(dets[k].box, dets[i].box) > cfg.iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

inline std::vector<Detection> nms(const std::vector<Detection>& dets, const NmsConfig& cfg) {
  std::vector<Detection> out;
  for (std::size_t i : nms_indices(dets, cfg)) out.push_back(dets[i]);
  return out;
}

}  // namespace nightday::detector

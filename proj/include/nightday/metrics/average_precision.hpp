#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/detector/boxes.hpp"
#include "nightday/detector/nms.hpp"

namespace nightday::metrics {

struct ImageDetection {
  std::size_t image_id = 0;
  detector::Detection det;
};

struct GroundTruth {
  std::size_t image_id = 0;
  int class_id = 0;
  Box box;
};

/// All-point interpolated AP for one class, in [0, 1].
///
/// Detections of the class are ranked by score (ties keep input order); each is
/// matched to the highest-IoU still-unmatched ground truth of that class in the
/// same image when that IoU reaches `iou_threshold`. A class with no ground truth
/// scores 0.
inline double average_precision(const std::vector<ImageDetection>& dets, const std::vector<GroundTruth>& gts,
                                int class_id, double iou_threshold = 0.5) {
  if (class_id < 0 || class_id >= kNumClasses) throw VocabularyError("class id " + std::to_string(class_id) + " out of range");
  std::vector<std::size_t> gt_idx;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].class_id == class_id) gt_idx.push_back(i);
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].det.class_id == class_id) order.push_back(i);
  }
  if (gt_idx.empty()) return 0.0;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].det.score > dets[b].det.score; });

  std::vector<char> used(gt_idx.size(), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (std::size_t d : order) {
    double best = -1;
    std::size_t best_k = gt_idx.size();
    for (std::size_t k = 0; k < gt_idx.size(); ++k) {
      const auto& g = gts[gt_idx[k]];
      if (used[k] || g.image_id != dets[d].image_id) continue;
      const double o = detector::iou(dets[d].det.box, g.box);
      if (o > best) {
        best = o;
        best_k = k;
      }
    }
    if (best_k < gt_idx.size() && best >= iou_threshold) {
      used[best_k] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_idx.size()));
  }
  // precision envelope, right to left
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

struct MapResult {
  std::array<std::optional<double>, kNumClasses> per_class;  // in [0,1]; absent when the class never occurs
  double mean = 0;                                           // over present classes
};

/// Per-class AP for the six classes. Classes with neither ground truth nor
/// detections are absent and excluded from the mean.
inline MapResult mean_average_precision(const std::vector<ImageDetection>& dets, const std::vector<GroundTruth>& gts,
                                        double iou_threshold = 0.5) {
  MapResult r;
  double sum = 0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const bool has_gt = std::any_of(gts.begin(), gts.end(), [c](const GroundTruth& g) { return g.class_id == c; });
    const bool has_det = std::any_of(dets.begin(), dets.end(), [c](const ImageDetection& d) { return d.det.class_id == c; });
    if (!has_gt && !has_det) continue;
    const double ap = average_precision(dets, gts, c, iou_threshold);
    r.per_class[static_cast<std::size_t>(c)] = ap;
    sum += ap;
    ++present;
  }
  r.mean = present ? sum / present : 0.0;
  return r;
}

}  // namespace nightday::metrics

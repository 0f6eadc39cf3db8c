#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/data/image.hpp"
#include "nightday/detector/nms.hpp"
#include "nightday/metrics/report.hpp"

namespace nightday::pipeline {

using Rgb = std::array<std::uint8_t, 3>;

inline Rgb class_color(int class_id) {
  static constexpr std::array<Rgb, kNumClasses> palette{{
      {230, 25, 75},   // bike
      {255, 225, 25},  // bus
      {0, 130, 200},   // car
      {60, 180, 75},   // people
      {240, 50, 230},  // sign
      {245, 130, 48},  // traffic sign
  }};
  return palette[static_cast<std::size_t>(class_id) % palette.size()];
}

/// Draws a 1-pixel rectangle and a "class score" label per detection. Boxes
/// outside the unit square are clamped and reported in `warnings`.
inline Image8 render_overlay(const Image8& image, const std::vector<detector::Detection>& dets,
                             std::vector<std::string>* warnings = nullptr) {
  Image8 out = image;
  if (dets.empty()) return out;
  cv::Mat mat(out.height, out.width, CV_8UC3, out.pixels.data());
  for (const auto& d : dets) {
    Box b = d.box;
    const Box clamped{std::clamp(b.x_min, 0.0, 1.0), std::clamp(b.y_min, 0.0, 1.0), std::clamp(b.x_max, 0.0, 1.0),
                      std::clamp(b.y_max, 0.0, 1.0)};
    if (!(clamped == b)) {
      if (warnings) warnings->push_back("box for " + metrics::display_name(d.class_id) + " clamped to the image");
      b = clamped;
    }
    const int x0 = static_cast<int>(std::lround(b.x_min * (out.width - 1)));
    const int y0 = static_cast<int>(std::lround(b.y_min * (out.height - 1)));
    const int x1 = static_cast<int>(std::lround(b.x_max * (out.width - 1)));
    const int y1 = static_cast<int>(std::lround(b.y_max * (out.height - 1)));
    const Rgb c = class_color(d.class_id);
    const cv::Scalar color(c[0], c[1], c[2]);
    cv::rectangle(mat, cv::Point(x0, y0), cv::Point(x1, y1), color, 1, cv::LINE_8);

    char score[16];
    std::snprintf(score, sizeof score, "%.2f", d.score);
    const std::string label = metrics::display_name(d.class_id) + " " + score;
    int baseline = 0;
    const double scale = 0.3;
    const cv::Size ts = cv::getTextSize(label, cv::FONT_HERSHEY_SIMPLEX, scale, 1, &baseline);
    const cv::Point org(x0 + 1, y0 + 1);
    cv::rectangle(mat, cv::Rect(org.x, org.y, ts.width + 2, ts.height + baseline + 2), color, cv::FILLED, cv::LINE_8);
    cv::putText(mat, label, cv::Point(org.x + 1, org.y + ts.height + 1), cv::FONT_HERSHEY_SIMPLEX, scale,
                cv::Scalar(0, 0, 0), 1, cv::LINE_8);
  }
  return out;
}

/// Row-major grid of equally sized images separated and framed by `pad` pixels of `fill`.
inline Image8 render_comparison_grid(const std::vector<std::vector<Image8>>& rows, int pad = 4, std::uint8_t fill = 0) {
  if (rows.empty() || rows.front().empty()) throw ArgumentError("comparison grid needs at least one image");
  if (pad < 0) throw ArgumentError("comparison grid padding must be non-negative");
  const std::size_t cols = rows.front().size();
  const int w = rows.front().front().width, h = rows.front().front().height;
  for (const auto& row : rows) {
    if (row.size() != cols) throw ArgumentError("comparison grid rows have different lengths");
    for (const auto& img : row) {
      if (img.width != w || img.height != h) throw ArgumentError("comparison grid images differ in size");
    }
  }
  const int nr = static_cast<int>(rows.size()), nc = static_cast<int>(cols);
  Image8 out(nc * w + (nc + 1) * pad, nr * h + (nr + 1) * pad, fill);
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      const Image8& img = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const int ox = pad + c * (w + pad), oy = pad + r * (h + pad);
      for (int y = 0; y < h; ++y)
        std::copy_n(&img.pixels[static_cast<std::size_t>(y) * w * 3], static_cast<std::size_t>(w) * 3,
                    &out.pixels[(static_cast<std::size_t>(oy + y) * out.width + ox) * 3]);
    }
  }
  return out;
}

}  // namespace nightday::pipeline

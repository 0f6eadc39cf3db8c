#pragma once

#include <cmath>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/data/image_tensor.hpp"

namespace nightday::metrics {

/// Rec. 601 luma of a [-1,1] RGB tensor, mapped to [0,1].
inline std::vector<double> luminance(const Tensor<float>& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("luminance expects [3,H,W]");
  const std::size_t n = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (t[i] + 1.0) / 2, g = (t[n + i] + 1.0) / 2, b = (t[2 * n + i] + 1.0) / 2;
    y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
  }
  return y;
}

/// Mean structural similarity over all fully-covered 11x11 Gaussian (sigma 1.5)
/// windows of the luma planes, with C1 = (0.01)^2 and C2 = (0.03)^2 for unit range.
inline double ssim(const Tensor<float>& a, const Tensor<float>& b) {
  require_same_shape(a, b, "ssim");
  const int h = a.dim(1), w = a.dim(2);
  constexpr int kWin = 11;
  if (h < kWin || w < kWin) throw ShapeError("ssim needs images of at least 11x11");
  const auto ya = luminance(a), yb = luminance(b);

  double kernel[kWin];
  double ksum = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    kernel[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int windows = 0;
  for (int y0 = 0; y0 + kWin <= h; ++y0) {
    for (int x0 = 0; x0 + kWin <= w; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = 0; dy < kWin; ++dy) {
        for (int dx = 0; dx < kWin; ++dx) {
          const double k = kernel[dy] * kernel[dx];
          const std::size_t i = static_cast<std::size_t>(y0 + dy) * w + (x0 + dx);
          ma += k * ya[i];
          mb += k * yb[i];
          saa += k * ya[i] * ya[i];
          sbb += k * yb[i] * yb[i];
          sab += k * ya[i] * yb[i];
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / windows;
}

struct ReconstructionResult {
  double accuracy = 0;         // percentage of pairs with similarity >= tau
  double mean_similarity = 0;
  std::vector<double> similarities;
};

inline ReconstructionResult reconstruction_accuracy(const std::vector<ImageTensor>& translated,
                                                    const std::vector<ImageTensor>& references, double tau = 0.5) {
  if (translated.size() != references.size()) throw ArgumentError("reconstruction_accuracy: list lengths differ");
  if (translated.empty()) throw ArgumentError("reconstruction_accuracy: no pairs");
  if (!(tau > 0 && tau < 1)) throw ArgumentError("reconstruction_accuracy: tau must lie in (0,1)");
  ReconstructionResult r;
  int hits = 0;
  for (std::size_t i = 0; i < translated.size(); ++i) {
    const double s = ssim(translated[i].tensor(), references[i].tensor());
    r.similarities.push_back(s);
    r.mean_similarity += s;
    hits += s >= tau;
  }
  r.mean_similarity /= static_cast<double>(translated.size());
  r.accuracy = 100.0 * hits / static_cast<double>(translated.size());
  return r;
}

}  // namespace nightday::metrics

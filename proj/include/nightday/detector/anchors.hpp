#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/detector/boxes.hpp"

namespace nightday::detector {

/// One feature map's share of the prior boxes.
struct FeatureMapLayout {
  int size = 1;             // map is size x size
  double scale = 0.2;       // s_k
  double next_scale = 1.0;  // s_{k+1}; the extra square box uses sqrt(s_k * s_{k+1})
  std::vector<double> aspect_ratios{1.0};

  int boxes_per_cell() const { return static_cast<int>(aspect_ratios.size()) + 1; }

  friend bool operator==(const FeatureMapLayout&, const FeatureMapLayout&) = default;
};

using AnchorLayout = std::vector<FeatureMapLayout>;

struct AnchorSet {
  std::vector<Anchor> anchors;
  AnchorLayout layout;

  std::size_t size() const { return anchors.size(); }
};

inline void validate_layout(const AnchorLayout& layout) {
  if (layout.empty()) throw ConfigError("anchor layout is empty");
  for (const auto& m : layout) {
    if (m.size < 1) throw ConfigError("feature map size must be positive");
    if (!(m.scale > 0 && m.scale <= 1) || !(m.next_scale > 0 && m.next_scale <= 1))
      throw ConfigError("anchor scales must lie in (0, 1]");
    if (m.aspect_ratios.empty()) throw ConfigError("feature map needs at least one aspect ratio");
    for (double r : m.aspect_ratios) {
      if (!(r > 0) || !std::isfinite(r)) throw ConfigError("aspect ratios must be positive");
    }
  }
}

/// Anchors ordered map-major, then row-major over cells, then per cell: one box
/// per aspect ratio in listed order (w = s*sqrt(r), h = s/sqrt(r)) followed by the
/// extra square box of side sqrt(s * s_next).
inline AnchorSet generate_anchors(const AnchorLayout& layout) {
  validate_layout(layout);
  AnchorSet set;
  set.layout = layout;
  for (const auto& m : layout) {
    const double f = m.size;
    const double extra = std::sqrt(m.scale * m.next_scale);
    for (int i = 0; i < m.size; ++i) {
      for (int j = 0; j < m.size; ++j) {
        const double cx = (j + 0.5) / f, cy = (i + 0.5) / f;
        for (double r : m.aspect_ratios) {
          const double sr = std::sqrt(r);
          set.anchors.push_back({cx, cy, m.scale * sr, m.scale / sr});
        }
        set.anchors.push_back({cx, cy, extra, extra});
      }
    }
  }
  return set;
}

/// Six-map layout for 300x300 inputs: maps 38, 19, 10, 5, 3, 1; scales linear from
/// 0.2 to 0.9; ratios {1, 2, 1/2} on the outer maps and {1, 2, 1/2, 3, 1/3} on the middle three.
inline AnchorLayout layout_300() {
  const int sizes[] = {38, 19, 10, 5, 3, 1};
  AnchorLayout layout;
  for (int k = 0; k < 6; ++k) {
    const double s = 0.2 + 0.7 * k / 5.0;
    const double next = k + 1 < 6 ? 0.2 + 0.7 * (k + 1) / 5.0 : 1.0;
    std::vector<double> ratios{1.0, 2.0, 0.5};
    if (k >= 1 && k <= 3) {
      ratios.push_back(3.0);
      ratios.push_back(1.0 / 3.0);
    }
    layout.push_back({sizes[k], s, next, ratios});
  }
  return layout;
}

/// Two-map layout for 128x128 desk-scale inputs.
inline AnchorLayout layout_desk() {
  return {{8, 0.2, 0.4, {1.0, 2.0, 0.5}}, {4, 0.4, 0.7, {1.0, 2.0, 0.5}}};
}

}  // namespace nightday::detector

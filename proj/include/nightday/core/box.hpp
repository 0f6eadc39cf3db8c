#pragma once

#include <array>
#include <string>
#include <string_view>

#include "nightday/core/error.hpp"

namespace nightday {

/// Object classes in report-column order.
inline constexpr std::array<std::string_view, 6> kClassNames = {"bike", "bus", "car", "people", "sign", "traffic_sign"};
inline constexpr int kNumClasses = static_cast<int>(kClassNames.size());

inline int class_index(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[static_cast<std::size_t>(i)] == name) return i;
  }
  throw VocabularyError("unknown class name '" + std::string(name) + "'");
}

inline std::string_view class_name(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses) throw VocabularyError("class id " + std::to_string(class_id) + " out of range");
  return kClassNames[static_cast<std::size_t>(class_id)];
}

/// Normalized corner-form box.
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct LabeledBox {
  int class_id = 0;
  Box box;

  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

}  // namespace nightday

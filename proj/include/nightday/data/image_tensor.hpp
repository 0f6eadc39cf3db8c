#pragma once

#include <cmath>
#include <utility>

#include "nightday/core/error.hpp"
#include "nightday/core/tensor.hpp"

namespace nightday {

/// A [3, H, W] float image with every value finite and inside [-1, 1].
class ImageTensor {
 public:
  ImageTensor() = default;

  /// Validates the invariants; throws ShapeError / NumericError.
  explicit ImageTensor(Tensor<float> t) : t_(std::move(t)) {
    if (t_.rank() != 3 || t_.dim(0) != 3) throw ShapeError("image tensor must be [3,H,W], got " + Tensor<float>::shape_string(t_.shape()));
    for (float v : t_.values()) {
      if (!std::isfinite(v)) throw NumericError("image tensor holds a non-finite value");
      if (v < -1.0f || v > 1.0f) throw NumericError("image tensor value outside [-1,1]");
    }
  }

  const Tensor<float>& tensor() const noexcept { return t_; }
  int height() const { return t_.dim(1); }
  int width() const { return t_.dim(2); }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  Tensor<float> t_;
};

}  // namespace nightday

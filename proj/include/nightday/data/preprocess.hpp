#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/core/random.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/data/image.hpp"
#include "nightday/data/image_tensor.hpp"

namespace nightday {

enum class Mode { train, eval };
enum class Target { translation, detection };

struct PreprocessSizes {
  int load_size = 286;        // translation training resize
  int crop_size = 256;        // translation training crop / eval resize
  int detection_size = 300;   // detector input
};

namespace detail {

inline Tensor<float> to_unit_range(const Image8& img) {
  Tensor<float> t({3, img.height, img.width});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<float>(img.at(x, y, c)) / 127.5f - 1.0f;
    }
  }
  return t;
}

inline void require_pixels(const Image8& img) {
  if (img.width <= 0 || img.height <= 0 || img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw DecodeError("image has no pixels");
}

}  // namespace detail

/// Deterministic resize / crop / flip and affine map v/127.5 - 1.
///
/// translation+train: resize to load_size², seeded crop to crop_size², seeded horizontal flip.
/// translation+eval:  resize to crop_size².
/// detection:         resize to detection_size² (train mode also flips; see preprocess_detection).
inline ImageTensor preprocess(const Image8& raw, Mode mode, Target target, std::uint64_t seed,
                              const PreprocessSizes& sizes = {}) {
  detail::require_pixels(raw);
  if (target == Target::detection) {
    Image8 img = resize(raw, sizes.detection_size, sizes.detection_size);
    if (mode == Mode::train) {
      Rng rng(derive_seed(seed, {2}));
      if (rng.coin()) img = flip_horizontal(img);
    }
    return ImageTensor(detail::to_unit_range(img));
  }
  if (mode == Mode::eval) return ImageTensor(detail::to_unit_range(resize(raw, sizes.crop_size, sizes.crop_size)));
  if (sizes.load_size < sizes.crop_size) throw ConfigError("load_size must be at least crop_size");
  Image8 img = resize(raw, sizes.load_size, sizes.load_size);
  Rng rng(derive_seed(seed, {1}));
  const int span = sizes.load_size - sizes.crop_size + 1;
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  img = crop(img, x0, y0, sizes.crop_size, sizes.crop_size);
  if (rng.coin()) img = flip_horizontal(img);
  return ImageTensor(detail::to_unit_range(img));
}

struct DetectionInput {
  ImageTensor image;
  std::vector<LabeledBox> boxes;
};

/// Detection preprocessing with the boxes carried through the same flip.
inline DetectionInput preprocess_detection(const Image8& raw, std::vector<LabeledBox> boxes, Mode mode,
                                           std::uint64_t seed, const PreprocessSizes& sizes = {}) {
  detail::require_pixels(raw);
  Image8 img = resize(raw, sizes.detection_size, sizes.detection_size);
  if (mode == Mode::train) {
    Rng rng(derive_seed(seed, {2}));
    if (rng.coin()) {
      img = flip_horizontal(img);
      for (auto& b : boxes) b.box = Box{1.0 - b.box.x_max, b.box.y_min, 1.0 - b.box.x_min, b.box.y_max};
    }
  }
  return {ImageTensor(detail::to_unit_range(img)), std::move(boxes)};
}

/// round((v + 1) * 127.5) clamped to [0, 255].
inline Image8 denormalize(const Tensor<float>& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("denormalize expects [3,H,W]");
  if (!t.all_finite()) throw NumericError("denormalize: non-finite value");
  Image8 out(t.dim(2), t.dim(1));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::round((static_cast<double>(t.at(c, y, x)) + 1.0) * 127.5);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return out;
}

inline Image8 denormalize(const ImageTensor& t) { return denormalize(t.tensor()); }

}  // namespace nightday

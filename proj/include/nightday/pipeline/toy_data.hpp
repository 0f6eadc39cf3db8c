#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightday/core/box.hpp"
#include "nightday/core/random.hpp"
#include "nightday/data/image.hpp"
#include "nightday/pipeline/render.hpp"

namespace nightday::pipeline {

struct ToyOptions {
  int pairs = 16;
  int detection_images = 8;
  int image_size = 128;
  std::uint64_t seed = 7;
};

struct ToyScene {
  Image8 day;
  Image8 night;
  std::vector<LabeledBox> boxes;
};

namespace detail {

inline bool overlaps(const Box& a, const Box& b, double margin) {
  return a.x_min < b.x_max + margin && b.x_min < a.x_max + margin && a.y_min < b.y_max + margin &&
         b.y_min < a.y_max + margin;
}

inline std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace detail

/// A bright scene (sky, road, one to three solid class-colored rectangles) and
/// its dimmed, blue-shifted night counterpart. The first object's class is
/// `index % 6` so consecutive scenes cover every class.
inline ToyScene make_toy_scene(int index, const ToyOptions& opts = {}) {
  Rng rng(derive_seed(opts.seed, {0x70e, static_cast<std::uint64_t>(index)}));
  const int n = opts.image_size;
  ToyScene s;
  const int objects = 1 + static_cast<int>(rng.below(3));
  for (int k = 0; k < objects; ++k) {
    const int cls = k == 0 ? index % kNumClasses : static_cast<int>(rng.below(kNumClasses));
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double w = rng.uniform(0.25, 0.5);
      const double h = std::clamp(w * rng.uniform(0.6, 1.6), 0.25, 0.5);
      const double x0 = rng.uniform(0.0, 1.0 - w), y0 = rng.uniform(0.0, 1.0 - h);
      const Box b{x0, y0, x0 + w, y0 + h};
      if (std::none_of(s.boxes.begin(), s.boxes.end(), [&](const LabeledBox& o) { return detail::overlaps(o.box, b, 0.02); })) {
        s.boxes.push_back({cls, b});
        break;
      }
    }
  }

  s.day = Image8(n, n);
  const double horizon = rng.uniform(0.35, 0.55);
  for (int y = 0; y < n; ++y) {
    const double v = (y + 0.5) / n;
    for (int x = 0; x < n; ++x) {
      const double noise = rng.uniform(-6.0, 6.0);
      if (v < horizon) {
        s.day.at(x, y, 0) = detail::clamp_u8(150 + 40 * v + noise);
        s.day.at(x, y, 1) = detail::clamp_u8(180 + 30 * v + noise);
        s.day.at(x, y, 2) = detail::clamp_u8(225 + noise);
      } else {
        for (int c = 0; c < 3; ++c) s.day.at(x, y, c) = detail::clamp_u8(120 + 20 * v + noise);
      }
    }
  }
  for (const auto& lb : s.boxes) {
    const Rgb color = class_color(lb.class_id);
    const int x0 = static_cast<int>(std::lround(lb.box.x_min * n)), x1 = static_cast<int>(std::lround(lb.box.x_max * n));
    const int y0 = static_cast<int>(std::lround(lb.box.y_min * n)), y1 = static_cast<int>(std::lround(lb.box.y_max * n));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const bool edge = y < y0 + 2 || y >= y1 - 2 || x < x0 + 2 || x >= x1 - 2;
        for (int c = 0; c < 3; ++c) s.day.at(x, y, c) = edge ? 20 : color[static_cast<std::size_t>(c)];
      }
    }
  }

  s.night = Image8(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double noise = rng.uniform(-3.0, 3.0);
      for (int c = 0; c < 3; ++c) s.night.at(x, y, c) = detail::clamp_u8(0.3 * s.day.at(x, y, c) + (c == 2 ? 12 : 0) + noise);
    }
  }
  return s;
}

/// Writes night/, day/, correspondences.csv, manifest.tsv and toy.json under `dir`.
/// The manifest lists the first `detection_images` day scenes with their boxes.
inline std::filesystem::path write_toy_dataset(const std::filesystem::path& dir, const ToyOptions& opts = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "night");
  fs::create_directories(dir / "day");
  std::ofstream corr(dir / "correspondences.csv");
  std::ofstream manifest(dir / "manifest.tsv");
  for (int i = 0; i < opts.pairs; ++i) {
    const ToyScene s = make_toy_scene(i, opts);
    char name[32];
    std::snprintf(name, sizeof name, "%02d.png", i);
    write_image(dir / "night" / (std::string("night_") + name), s.night);
    write_image(dir / "day" / (std::string("day_") + name), s.day);
    corr << i << "," << i << "\n";
    if (i < opts.detection_images) {
      manifest << "day/day_" << name << "\t";
      for (std::size_t k = 0; k < s.boxes.size(); ++k) {
        const auto& b = s.boxes[k].box;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s%s,%.6f,%.6f,%.6f,%.6f", k ? ";" : "",
                      std::string(class_name(s.boxes[k].class_id)).c_str(), b.x_min, b.y_min, b.x_max, b.y_max);
        manifest << buf;
      }
      manifest << "\n";
    }
  }

  nlohmann::json config = {
      {"translation",
       {{"residual_blocks", 3}, {"generator_width", 16}, {"discriminator_width", 16}, {"lambda_cycle", 10.0},
        {"learning_rate", 2e-4}, {"beta1", 0.5}, {"beta2", 0.999}, {"batch_size", 1}, {"steps", 300}, {"seed", 1},
        {"load_size", 72}, {"crop_size", 64}}},
      {"detector", {{"input_size", 128}, {"learning_rate", 1e-3}, {"batch_size", 8}, {"steps", 500}, {"seed", 1}}},
      {"metrics", {{"tau", 0.5}, {"fps_warmup", 1}, {"fps_repeats", 3}, {"fps_images", 4}, {"dataset_name", "toy"}}},
      {"paths",
       {{"night_dir", "night"}, {"day_dir", "day"}, {"correspondences", "correspondences.csv"},
        {"manifest", "manifest.tsv"}, {"output_dir", "out"}}}};
  const fs::path config_path = dir / "toy.json";
  std::ofstream(config_path) << config.dump(2) << "\n";
  return config_path;
}

}  // namespace nightday::pipeline

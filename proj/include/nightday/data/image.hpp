#pragma once

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nightday/core/error.hpp"

namespace nightday {

/// 8-bit interleaved RGB image.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  friend bool operator==(const Image8&, const Image8&) = default;
};

/// Extensions accepted when scanning image directories.
inline bool is_supported_image(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".ppm" || ext == ".pnm";
}

namespace detail {

inline cv::Mat as_mat(const Image8& img) {
  return cv::Mat(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.pixels.data()));
}

inline Image8 from_mat(const cv::Mat& rgb) {
  Image8 out(rgb.cols, rgb.rows);
  cv::Mat dst(rgb.rows, rgb.cols, CV_8UC3, out.pixels.data());
  rgb.copyTo(dst);
  return out;
}

}  // namespace detail

inline Image8 read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DecodeError("cannot decode image '" + path.string() + "'");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return detail::from_mat(rgb);
}

inline void write_image(const std::filesystem::path& path, const Image8& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  cv::Mat bgr;
  cv::cvtColor(detail::as_mat(img), bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write image '" + path.string() + "'");
}

/// Bilinear resize with half-pixel centers.
inline Image8 resize(const Image8& img, int width, int height) {
  if (img.width <= 0 || img.height <= 0) throw DecodeError("cannot resize an empty image");
  if (img.width == width && img.height == height) return img;
  cv::Mat out;
  cv::resize(detail::as_mat(img), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return detail::from_mat(out);
}

inline Image8 flip_horizontal(const Image8& img) {
  Image8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    }
  }
  return out;
}

inline Image8 crop(const Image8& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || x0 + width > img.width || y0 + height > img.height) throw ArgumentError("crop out of bounds");
  Image8 out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto* src = &img.pixels[(static_cast<std::size_t>(y0 + y) * img.width + x0) * 3];
    std::copy(src, src + static_cast<std::size_t>(width) * 3, &out.pixels[static_cast<std::size_t>(y) * width * 3]);
  }
  return out;
}

}  // namespace nightday

#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "nightday/core/error.hpp"

namespace nightday::metrics {

struct FpsReport {
  double fps = 0;                    // median of the measurements
  std::vector<double> measurements;  // one frames/second value per repeat
  std::string hardware;
  std::string note;
};

/// CPU model name and logical core count, as far as the platform reveals them.
inline std::string hardware_description() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        model = line.substr(colon + 1);
        model.erase(0, model.find_first_not_of(' '));
      }
      break;
    }
  }
  return model + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + " logical cores";
}

/// Runs `fn(image)` over every image `warmup` times untimed, then `repeats`
/// timed passes; each pass yields images.size() / elapsed seconds.
template <class Fn, class Image>
FpsReport fps_benchmark(Fn&& fn, const std::vector<Image>& images, int warmup = 1, int repeats = 3) {
  if (images.empty()) throw ArgumentError("fps_benchmark: image list is empty");
  if (warmup < 1) throw ArgumentError("fps_benchmark: warmup must be >= 1");
  if (repeats < 1) throw ArgumentError("fps_benchmark: repeats must be >= 1");
  for (int w = 0; w < warmup; ++w) {
    for (const auto& img : images) fn(img);
  }
  FpsReport r;
  using clock = std::chrono::steady_clock;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto t0 = clock::now();
    for (const auto& img : images) fn(img);
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    r.measurements.push_back(static_cast<double>(images.size()) / std::max(secs, 1e-12));
  }
  auto sorted = r.measurements;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.fps = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.hardware = hardware_description();
  r.note = "timed section ran single-threaded with no concurrent work scheduled by this process";
  return r;
}

}  // namespace nightday::metrics

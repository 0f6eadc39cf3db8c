#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "nightday/core/text.hpp"
#include "nightday/detector/model.hpp"
#include "nightday/nn/archive.hpp"

namespace nightday::detector {

inline constexpr std::string_view kDetectorMagic = "SSDC";

struct DetectorCheckpoint {
  Detector<float> model;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

template <class Num>
Num parse_or_throw(std::string_view s, const char* what) {
  auto v = text::parse_number<Num>(s);
  if (!v) throw CheckpointError(CheckpointErrc::malformed, std::string("bad ") + what + " '" + std::string(s) + "'");
  return *v;
}

}  // namespace detail

/// "size:scale:next_scale:r1,r2,...;..." with round-trippable doubles.
inline std::string serialize_layout(const AnchorLayout& layout) {
  std::string s;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    if (m) s += ";";
    s += std::to_string(layout[m].size) + ":" + detail::format_double(layout[m].scale) + ":" +
         detail::format_double(layout[m].next_scale) + ":";
    for (std::size_t r = 0; r < layout[m].aspect_ratios.size(); ++r)
      s += (r ? "," : "") + detail::format_double(layout[m].aspect_ratios[r]);
  }
  return s;
}

inline AnchorLayout parse_layout(std::string_view text) {
  AnchorLayout layout;
  for (auto item : text::split(text, ';')) {
    const auto f = text::split(item, ':');
    if (f.size() != 4) throw CheckpointError(CheckpointErrc::malformed, "bad layout entry '" + std::string(item) + "'");
    FeatureMapLayout m;
    m.size = detail::parse_or_throw<int>(f[0], "map size");
    m.scale = detail::parse_or_throw<double>(f[1], "scale");
    m.next_scale = detail::parse_or_throw<double>(f[2], "scale");
    m.aspect_ratios.clear();
    for (auto r : text::split(f[3], ',')) m.aspect_ratios.push_back(detail::parse_or_throw<double>(r, "ratio"));
    layout.push_back(std::move(m));
  }
  return layout;
}

inline std::vector<int> parse_ints(std::string_view text) {
  std::vector<int> out;
  for (auto p : text::split(text, ',')) out.push_back(detail::parse_or_throw<int>(p, "integer"));
  return out;
}

inline void save_checkpoint(DetectorCheckpoint& ckpt, const std::filesystem::path& path) {
  nn::TensorArchive a;
  a.magic = std::string(kDetectorMagic);
  const auto& arch = ckpt.model.arch();
  a.metadata = {{"step", std::to_string(ckpt.step)},
                {"seed", std::to_string(ckpt.seed)},
                {"config_digest", ckpt.config_digest},
                {"input_size", std::to_string(arch.input_size)},
                {"layout", serialize_layout(arch.layout)},
                {"stem_channels", detail::join_ints(arch.stem_channels)},
                {"extra_channels", std::to_string(arch.extra_channels)}};
  for (const auto* p : ckpt.model.parameters()) a.tensors.push_back(nn::to_record(*p));
  nn::write_archive(path, a);
}

inline DetectorCheckpoint load_checkpoint(const std::filesystem::path& path,
                                          std::optional<std::string_view> expected_digest = std::nullopt) {
  const auto a = nn::read_archive(path, kDetectorMagic);
  DetectorArch arch;
  arch.input_size = detail::parse_or_throw<int>(a.meta("input_size"), "input_size");
  arch.layout = parse_layout(a.meta("layout"));
  arch.stem_channels = parse_ints(a.meta("stem_channels"));
  arch.extra_channels = detail::parse_or_throw<int>(a.meta("extra_channels"), "extra_channels");
  DetectorCheckpoint ckpt{Detector<float>(arch), detail::parse_or_throw<std::int64_t>(a.meta("step"), "step"),
                          detail::parse_or_throw<std::uint64_t>(a.meta("seed"), "seed"), a.meta("config_digest")};
  nn::assign_from(a, ckpt.model.parameters());
  if (expected_digest && *expected_digest != ckpt.config_digest)
    throw CheckpointError(CheckpointErrc::digest_mismatch, "checkpoint was written for config " + ckpt.config_digest +
                                                              ", expected " + std::string(*expected_digest));
  return ckpt;
}

}  // namespace nightday::detector

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightday/core/digest.hpp"
#include "nightday/core/error.hpp"
#include "nightday/detector/anchors.hpp"
#include "nightday/detector/model.hpp"
#include "nightday/translation/networks.hpp"

namespace nightday::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct TranslationSection {
  int residual_blocks = 6;
  int generator_width = 64;
  int discriminator_width = 64;
  double lambda_cycle = 10.0;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  std::int64_t steps = 300;
  std::uint64_t seed = 1;
  int load_size = 286;
  int crop_size = 256;
};

struct DetectorSection {
  int input_size = 128;
  detector::AnchorLayout layout = detector::layout_desk();
  std::vector<int> stem_channels{16, 32, 64, 64};
  int extra_channels = 64;
  double phi = 1.0;
  double match_threshold = 0.5;
  double neg_pos_ratio = 3.0;
  double nms_iou = 0.45;
  double score_threshold = 0.01;
  double overlay_threshold = 0.5;  // minimum score drawn on overlays and written by infer
  int top_k = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 8;
  std::int64_t steps = 500;
  std::uint64_t seed = 1;
  bool augment = true;  // seeded horizontal flips during training
};

struct MetricsSection {
  double iou_threshold = 0.5;
  double tau = 0.5;
  int fps_warmup = 1;
  int fps_repeats = 3;
  int fps_images = 8;
  bool translate_before_detect = false;  // evaluate the detector on translated manifest images
  std::string dataset_name = "toy";
  std::string method_name = "night-to-day + detector";
};

struct PathSection {
  std::string night_dir;
  std::string day_dir;
  std::string correspondences;  // optional; empty when absent
  std::string manifest;
  std::string output_dir;
};

struct PipelineConfig {
  TranslationSection translation;
  DetectorSection detector;
  MetricsSection metrics;
  PathSection paths;
  fs::path base_dir;  // relative paths resolve against this; not part of any digest

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_relative() ? base_dir / path : path;
  }
  fs::path output_dir() const { return resolve(paths.output_dir); }
  fs::path translation_checkpoint() const { return output_dir() / "translation.ckpt"; }
  fs::path detector_checkpoint() const { return output_dir() / "detector.ckpt"; }
  fs::path report_path() const { return output_dir() / "eval_report.json"; }

  translation::TranslationModelConfig translation_models() const {
    return {translation.residual_blocks, translation.generator_width, translation.discriminator_width};
  }
  detector::DetectorArch detector_arch() const {
    return {detector.input_size, detector.layout, detector.stem_channels, detector.extra_channels};
  }
};

namespace detail {

/// Reads typed keys from one JSON object and rejects whatever it did not read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <class V>
  void get(const char* key, V& out, bool required = false) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) throw ConfigError("missing required key " + name(key));
      return;
    }
    out = convert<V>(*it, name(key));
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + name(k));
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class V>
  static V convert(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<V, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!v.is_string()) throw ConfigError(name + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<V>) {
      if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
      if constexpr (std::is_unsigned_v<V>) {
        if (v.is_number_unsigned()) return v.get<V>();
        throw ConfigError(name + ": expected a non-negative integer");
      } else {
        const auto x = v.get<std::int64_t>();
        if (x < std::numeric_limits<V>::min() || x > std::numeric_limits<V>::max())
          throw ConfigError(name + ": integer out of range");
        return static_cast<V>(x);
      }
    } else if constexpr (std::is_floating_point_v<V>) {
      if (!v.is_number()) throw ConfigError(name + ": expected a number");
      return v.get<V>();
    } else {
      if (!v.is_array()) throw ConfigError(name + ": expected an array");
      V out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename V::value_type>(v[i], name + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError(key + ": " + rule);
}

inline void read_layout(const json& j, detector::AnchorLayout& layout) {
  if (!j.is_array()) throw ConfigError("detector.layout: expected an array");
  layout.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j[i], "detector.layout[" + std::to_string(i) + "]");
    detector::FeatureMapLayout m;
    r.get("size", m.size, true);
    r.get("scale", m.scale, true);
    r.get("next_scale", m.next_scale, true);
    r.get("aspect_ratios", m.aspect_ratios, true);
    r.finish();
    layout.push_back(std::move(m));
  }
}

}  // namespace detail

/// Range checks for every field; throws ConfigError naming the offending key.
inline void validate(const PipelineConfig& c) {
  using detail::check;
  const auto& t = c.translation;
  check(t.residual_blocks >= 1, "translation.residual_blocks", "must be >= 1");
  check(t.generator_width >= 1, "translation.generator_width", "must be >= 1");
  check(t.discriminator_width >= 1, "translation.discriminator_width", "must be >= 1");
  check(t.lambda_cycle > 0, "translation.lambda_cycle", "must be positive");
  check(t.learning_rate > 0, "translation.learning_rate", "must be positive");
  check(t.beta1 >= 0 && t.beta1 < 1, "translation.beta1", "must lie in [0,1)");
  check(t.beta2 >= 0 && t.beta2 < 1, "translation.beta2", "must lie in [0,1)");
  check(t.batch_size >= 1, "translation.batch_size", "must be >= 1");
  check(t.steps >= 0, "translation.steps", "must be >= 0");
  check(t.crop_size >= translation::kMinDiscriminatorInput, "translation.crop_size", "must be >= 64");
  check(t.crop_size % 4 == 0, "translation.crop_size", "must be a multiple of 4");
  check(t.load_size >= t.crop_size, "translation.load_size", "must be >= crop_size");

  const auto& d = c.detector;
  check(d.input_size >= 8, "detector.input_size", "must be >= 8");
  check(d.extra_channels >= 1, "detector.extra_channels", "must be >= 1");
  for (int ch : d.stem_channels) check(ch >= 1, "detector.stem_channels", "entries must be >= 1");
  check(d.phi > 0, "detector.phi", "must be positive");
  check(d.match_threshold > 0 && d.match_threshold < 1, "detector.match_threshold", "must lie in (0,1)");
  check(d.neg_pos_ratio > 0, "detector.neg_pos_ratio", "must be positive");
  check(d.nms_iou > 0 && d.nms_iou <= 1, "detector.nms_iou", "must lie in (0,1]");
  check(d.score_threshold >= 0 && d.score_threshold < 1, "detector.score_threshold", "must lie in [0,1)");
  check(d.overlay_threshold >= 0 && d.overlay_threshold <= 1, "detector.overlay_threshold", "must lie in [0,1]");
  check(d.top_k >= 1, "detector.top_k", "must be >= 1");
  check(d.learning_rate > 0, "detector.learning_rate", "must be positive");
  check(d.beta1 >= 0 && d.beta1 < 1, "detector.beta1", "must lie in [0,1)");
  check(d.beta2 >= 0 && d.beta2 < 1, "detector.beta2", "must lie in [0,1)");
  check(d.batch_size >= 1, "detector.batch_size", "must be >= 1");
  check(d.steps >= 0, "detector.steps", "must be >= 0");
  try {
    detector::Detector<float> probe(c.detector_arch());
  } catch (const Error& e) {
    throw ConfigError(std::string("detector: ") + e.what());
  }

  const auto& m = c.metrics;
  check(m.iou_threshold > 0 && m.iou_threshold <= 1, "metrics.iou_threshold", "must lie in (0,1]");
  check(m.tau > 0 && m.tau < 1, "metrics.tau", "must lie in (0,1)");
  check(m.fps_warmup >= 1, "metrics.fps_warmup", "must be >= 1");
  check(m.fps_repeats >= 1, "metrics.fps_repeats", "must be >= 1");
  check(m.fps_images >= 1, "metrics.fps_images", "must be >= 1");

  check(!c.paths.night_dir.empty(), "paths.night_dir", "must not be empty");
  check(!c.paths.day_dir.empty(), "paths.day_dir", "must not be empty");
  check(!c.paths.manifest.empty(), "paths.manifest", "must not be empty");
  check(!c.paths.output_dir.empty(), "paths.output_dir", "must not be empty");
}

inline PipelineConfig config_from_json(const json& root, const fs::path& base_dir = {}) {
  PipelineConfig c;
  c.base_dir = base_dir;
  detail::ObjectReader top(root, "");

  if (const json* j = top.child("translation")) {
    detail::ObjectReader r(*j, "translation");
    auto& t = c.translation;
    r.get("residual_blocks", t.residual_blocks);
    r.get("generator_width", t.generator_width);
    r.get("discriminator_width", t.discriminator_width);
    r.get("lambda_cycle", t.lambda_cycle);
    r.get("learning_rate", t.learning_rate);
    r.get("beta1", t.beta1);
    r.get("beta2", t.beta2);
    r.get("batch_size", t.batch_size);
    r.get("steps", t.steps);
    r.get("seed", t.seed);
    r.get("load_size", t.load_size);
    r.get("crop_size", t.crop_size);
    r.finish();
  }
  if (const json* j = top.child("detector")) {
    detail::ObjectReader r(*j, "detector");
    auto& d = c.detector;
    r.get("input_size", d.input_size);
    if (const json* l = r.child("layout")) detail::read_layout(*l, d.layout);
    r.get("stem_channels", d.stem_channels);
    r.get("extra_channels", d.extra_channels);
    r.get("phi", d.phi);
    r.get("match_threshold", d.match_threshold);
    r.get("neg_pos_ratio", d.neg_pos_ratio);
    r.get("nms_iou", d.nms_iou);
    r.get("score_threshold", d.score_threshold);
    r.get("overlay_threshold", d.overlay_threshold);
    r.get("top_k", d.top_k);
    r.get("learning_rate", d.learning_rate);
    r.get("beta1", d.beta1);
    r.get("beta2", d.beta2);
    r.get("batch_size", d.batch_size);
    r.get("steps", d.steps);
    r.get("seed", d.seed);
    r.get("augment", d.augment);
    r.finish();
  }
  if (const json* j = top.child("metrics")) {
    detail::ObjectReader r(*j, "metrics");
    auto& m = c.metrics;
    r.get("iou_threshold", m.iou_threshold);
    r.get("tau", m.tau);
    r.get("fps_warmup", m.fps_warmup);
    r.get("fps_repeats", m.fps_repeats);
    r.get("fps_images", m.fps_images);
    r.get("translate_before_detect", m.translate_before_detect);
    r.get("dataset_name", m.dataset_name);
    r.get("method_name", m.method_name);
    r.finish();
  }
  const json* p = top.child("paths");
  if (!p) throw ConfigError("missing required key paths");
  {
    detail::ObjectReader r(*p, "paths");
    r.get("night_dir", c.paths.night_dir, true);
    r.get("day_dir", c.paths.day_dir, true);
    r.get("correspondences", c.paths.correspondences);
    r.get("manifest", c.paths.manifest, true);
    r.get("output_dir", c.paths.output_dir, true);
    r.finish();
  }
  top.finish();
  validate(c);
  return c;
}

/// Parses a JSON document (comments allowed); relative paths resolve against its directory.
inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(root, fs::absolute(path).parent_path());
}

inline json translation_json(const TranslationSection& t) {
  return {{"residual_blocks", t.residual_blocks}, {"generator_width", t.generator_width},
          {"discriminator_width", t.discriminator_width}, {"lambda_cycle", t.lambda_cycle},
          {"learning_rate", t.learning_rate}, {"beta1", t.beta1}, {"beta2", t.beta2},
          {"batch_size", t.batch_size}, {"steps", t.steps}, {"seed", t.seed},
          {"load_size", t.load_size}, {"crop_size", t.crop_size}};
}

inline json detector_json(const DetectorSection& d) {
  json layout = json::array();
  for (const auto& m : d.layout)
    layout.push_back({{"size", m.size}, {"scale", m.scale}, {"next_scale", m.next_scale}, {"aspect_ratios", m.aspect_ratios}});
  return {{"input_size", d.input_size}, {"layout", layout}, {"stem_channels", d.stem_channels},
          {"extra_channels", d.extra_channels}, {"phi", d.phi}, {"match_threshold", d.match_threshold},
          {"neg_pos_ratio", d.neg_pos_ratio}, {"nms_iou", d.nms_iou}, {"score_threshold", d.score_threshold},
          {"overlay_threshold", d.overlay_threshold}, {"top_k", d.top_k}, {"learning_rate", d.learning_rate},
          {"beta1", d.beta1}, {"beta2", d.beta2}, {"batch_size", d.batch_size}, {"steps", d.steps},
          {"seed", d.seed}, {"augment", d.augment}};
}

/// Every field with its effective value; keys sort, so the dump is canonical.
inline json to_json(const PipelineConfig& c) {
  const auto& m = c.metrics;
  json metrics = {{"iou_threshold", m.iou_threshold}, {"tau", m.tau}, {"fps_warmup", m.fps_warmup},
                  {"fps_repeats", m.fps_repeats}, {"fps_images", m.fps_images},
                  {"translate_before_detect", m.translate_before_detect}, {"dataset_name", m.dataset_name},
                  {"method_name", m.method_name}};
  json paths = {{"night_dir", c.paths.night_dir}, {"day_dir", c.paths.day_dir}, {"manifest", c.paths.manifest},
                {"output_dir", c.paths.output_dir}};
  if (!c.paths.correspondences.empty()) paths["correspondences"] = c.paths.correspondences;
  return {{"translation", translation_json(c.translation)}, {"detector", detector_json(c.detector)},
          {"metrics", metrics}, {"paths", paths}};
}

/// Digest of the whole normalized config.
inline std::string digest(const PipelineConfig& c) { return digest_hex(to_json(c).dump()); }

/// Digest stamped into translation checkpoints: the translation section without
/// the run-length and seed fields, which the command line may override.
inline std::string translation_digest(const PipelineConfig& c) {
  json j = translation_json(c.translation);
  j.erase("steps");
  j.erase("seed");
  return digest_hex(j.dump());
}

inline std::string detector_digest(const PipelineConfig& c) {
  json j = detector_json(c.detector);
  j.erase("steps");
  j.erase("seed");
  return digest_hex(j.dump());
}

}  // namespace nightday::pipeline

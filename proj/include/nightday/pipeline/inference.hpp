#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nightday/detector/checkpoint.hpp"
#include "nightday/metrics/report.hpp"
#include "nightday/pipeline/config.hpp"
#include "nightday/pipeline/render.hpp"
#include "nightday/pipeline/training.hpp"
#include "nightday/translation/checkpoint.hpp"

namespace nightday::pipeline {

/// Raised with the original error nested inside; `stage()` names the failing step.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError(stage, e.what()));
  }
}

/// Loaded checkpoints plus the anchors they need, checked against the config.
struct PipelineModels {
  translation::TranslationCheckpoint translator;
  detector::DetectorCheckpoint detector;
  detector::AnchorSet anchors;
};

inline PipelineModels load_models(const PipelineConfig& c, const fs::path& translation_ckpt, const fs::path& detector_ckpt) {
  auto t = in_stage("load translation checkpoint",
                    [&] { return translation::load_checkpoint(translation_ckpt, translation_digest(c)); });
  auto d = in_stage("load detector checkpoint", [&] { return detector::load_checkpoint(detector_ckpt, detector_digest(c)); });
  auto anchors = detector::generate_anchors(d.model.arch().layout);
  return {std::move(t), std::move(d), std::move(anchors)};
}

inline detector::NmsConfig nms_config(const PipelineConfig& c) {
  return {c.detector.nms_iou, c.detector.score_threshold, c.detector.top_k};
}

inline Image8 translate_image(const PipelineModels& m, const Image8& night, const PipelineConfig& c) {
  return in_stage("translate", [&] {
    const ImageTensor in = preprocess(night, Mode::eval, Target::translation, 0, translation_sizes(c));
    return denormalize(translation::translate(m.translator, in));
  });
}

inline std::vector<detector::Detection> detect_image(const PipelineModels& m, const Image8& image, const PipelineConfig& c) {
  return in_stage("detect", [&] {
    const ImageTensor in = preprocess(image, Mode::eval, Target::detection, 0, translation_sizes(c));
    return detector::detect(m.detector.model, in.tensor(), m.anchors, nms_config(c));
  });
}

struct InferenceResult {
  Image8 day_image;
  std::vector<detector::Detection> detections;
};

/// Night image -> translated day image -> detections on the day image.
inline InferenceResult run_inference(const PipelineModels& m, const Image8& night, const PipelineConfig& c) {
  InferenceResult r;
  r.day_image = translate_image(m, night, c);
  r.detections = detect_image(m, r.day_image, c);
  return r;
}

inline InferenceResult run_inference(const fs::path& translation_ckpt, const fs::path& detector_ckpt,
                                     const fs::path& night_image, const PipelineConfig& c) {
  const PipelineModels m = load_models(c, translation_ckpt, detector_ckpt);
  const Image8 night = in_stage("read image", [&] { return read_image(night_image); });
  return run_inference(m, night, c);
}

/// "path<TAB>class<TAB>score<TAB>x_min<TAB>y_min<TAB>x_max<TAB>y_max", six decimals.
inline std::string detection_records(const std::string& image, const std::vector<detector::Detection>& dets) {
  std::string out;
  for (const auto& d : dets) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "\t%s\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n", std::string(class_name(d.class_id)).c_str(),
                  d.score, d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max);
    out += image + buf;
  }
  return out;
}

struct InferenceArtifacts {
  fs::path day_image, overlay, grid, detections;
  std::vector<std::string> warnings;
};

/// Writes <stem>_day.png, <stem>_overlay.png, <stem>_grid.png (night | day) and
/// <stem>_detections.tsv into `out_dir`. The overlay shows detections scoring at
/// least the configured overlay threshold; the record file lists all of them.
inline InferenceArtifacts write_inference(const InferenceResult& r, const Image8& night, const fs::path& night_path,
                                          const fs::path& out_dir, const PipelineConfig& c) {
  fs::create_directories(out_dir);
  const std::string stem = night_path.stem().string();
  InferenceArtifacts a{out_dir / (stem + "_day.png"), out_dir / (stem + "_overlay.png"), out_dir / (stem + "_grid.png"),
                       out_dir / (stem + "_detections.tsv"), {}};
  std::vector<detector::Detection> shown;
  for (const auto& d : r.detections) {
    if (d.score >= c.detector.overlay_threshold) shown.push_back(d);
  }
  write_image(a.day_image, r.day_image);
  write_image(a.overlay, render_overlay(r.day_image, shown, &a.warnings));
  const Image8 night_view = resize(night, r.day_image.width, r.day_image.height);
  write_image(a.grid, render_comparison_grid({{night_view, r.day_image}}));
  std::ofstream(a.detections, std::ios::binary) << detection_records(night_path.string(), r.detections);
  return a;
}

/// Detection AP over the manifest, pipeline FPS over night images, and
/// reconstruction accuracy over the corresponded pairs when present.
inline metrics::EvalReport evaluate(const PipelineModels& m, const PipelineConfig& c, std::ostream* log = nullptr) {
  const auto samples = in_stage("load manifest", [&] { return load_detection_dataset(c.resolve(c.paths.manifest)); });
  std::vector<metrics::ImageDetection> dets;
  std::vector<metrics::GroundTruth> gts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Image8 img = in_stage("read image", [&] { return read_image(samples[i].image_path); });
    if (c.metrics.translate_before_detect) img = translate_image(m, img, c);
    for (const auto& d : detect_image(m, img, c)) dets.push_back({i, d});
    for (const auto& b : samples[i].boxes) gts.push_back({i, b.class_id, b.box});
  }
  const auto map = metrics::mean_average_precision(dets, gts, c.metrics.iou_threshold);
  if (log) *log << "evaluated " << samples.size() << " manifest images\n";

  const UnpairedDataset ds = in_stage("load unpaired data", [&] { return load_unpaired(c); });
  std::vector<Image8> fps_images;
  for (std::size_t i = 0; i < ds.domain_a_paths.size() && fps_images.size() < static_cast<std::size_t>(c.metrics.fps_images); ++i)
    fps_images.push_back(read_image(ds.domain_a_paths[i]));
  const auto fps = metrics::fps_benchmark([&](const Image8& img) { return run_inference(m, img, c); }, fps_images,
                                          c.metrics.fps_warmup, c.metrics.fps_repeats);

  std::optional<metrics::ReconstructionResult> recon;
  if (ds.correspondences && !ds.correspondences->empty()) {
    std::vector<ImageTensor> translated, references;
    const auto sizes = translation_sizes(c);
    for (const auto& pair : *ds.correspondences) {
      const Image8 night = read_image(ds.domain_a_paths[pair.night_index]);
      const Image8 day = read_image(ds.domain_b_paths[pair.day_index]);
      translated.push_back(in_stage("translate", [&] {
        return translation::translate(m.translator, preprocess(night, Mode::eval, Target::translation, 0, sizes));
      }));
      references.push_back(preprocess(day, Mode::eval, Target::translation, 0, sizes));
    }
    recon = metrics::reconstruction_accuracy(translated, references, c.metrics.tau);
  }

  metrics::EvalReport report = metrics::make_report(map, fps, recon);
  report.method = c.metrics.method_name;
  report.dataset = c.metrics.dataset_name;
  report.input_size = c.translation.crop_size;
  report.tau = c.metrics.tau;
  report.config_digest = digest(c);
  return report;
}

}  // namespace nightday::pipeline

#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "nightday/data/datasets.hpp"
#include "nightday/data/preprocess.hpp"
#include "nightday/detector/checkpoint.hpp"
#include "nightday/detector/trainer.hpp"
#include "nightday/pipeline/config.hpp"
#include "nightday/translation/checkpoint.hpp"
#include "nightday/translation/trainer.hpp"

namespace nightday::pipeline {

inline PreprocessSizes translation_sizes(const PipelineConfig& c) {
  return {c.translation.load_size, c.translation.crop_size, c.detector.input_size};
}

inline UnpairedDataset load_unpaired(const PipelineConfig& c) {
  std::optional<fs::path> corr;
  if (!c.paths.correspondences.empty()) corr = c.resolve(c.paths.correspondences);
  return load_unpaired_dataset(c.resolve(c.paths.night_dir), c.resolve(c.paths.day_dir), corr);
}

inline std::vector<Image8> read_images(const std::vector<fs::path>& paths) {
  std::vector<Image8> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_image(p));
  return out;
}

struct TranslationRun {
  translation::TranslationCheckpoint models;
  std::vector<translation::TranslationLosses> history;
};

/// Unpaired training: each step draws one night and one day image per batch slot
/// independently, both with seeded crop and flip.
inline TranslationRun train_translation(const PipelineConfig& c, std::ostream* log = nullptr, int log_every = 50) {
  const auto& t = c.translation;
  const UnpairedDataset ds = load_unpaired(c);
  const auto night = read_images(ds.domain_a_paths);
  const auto day = read_images(ds.domain_b_paths);
  const auto sizes = translation_sizes(c);

  TranslationRun run{translation::build_translation_models<float>(c.translation_models(), t.seed, translation_digest(c)),
                     {}};
  translation::TranslationOptimizer<float> opt(nn::AdamConfig{t.learning_rate, t.beta1, t.beta2});
  for (std::int64_t step = 1; step <= t.steps; ++step) {
    Rng pick(derive_seed(t.seed, {0xba7c, static_cast<std::uint64_t>(step)}));
    std::vector<Tensor<float>> batch_a, batch_b;
    for (int i = 0; i < t.batch_size; ++i) {
      const auto& a = night[pick.below(night.size())];
      const auto& b = day[pick.below(day.size())];
      const auto slot = static_cast<std::uint64_t>(i);
      batch_a.push_back(preprocess(a, Mode::train, Target::translation,
                                   derive_seed(t.seed, {static_cast<std::uint64_t>(step), slot, 0xa}), sizes)
                            .tensor());
      batch_b.push_back(preprocess(b, Mode::train, Target::translation,
                                   derive_seed(t.seed, {static_cast<std::uint64_t>(step), slot, 0xb}), sizes)
                            .tensor());
    }
    run.history.push_back(translation::train_translation_step<float>(run.models, batch_a, batch_b, opt,
                                                                      static_cast<float>(t.lambda_cycle)));
    if (log && (step % log_every == 0 || step == t.steps)) {
      const auto& l = run.history.back();
      *log << "translate step " << step << "/" << t.steps << "  cycle " << l.cycle << "  g_adv " << l.g_adv << "  d_a "
           << l.d_a << "  d_b " << l.d_b << "\n";
    }
  }
  return run;
}

struct DetectorRun {
  detector::DetectorCheckpoint checkpoint;
  std::vector<detector::DetectorLosses> history;
};

/// Cycles through the manifest in order, `batch_size` images per step.
inline DetectorRun train_detector(const PipelineConfig& c, std::ostream* log = nullptr, int log_every = 50) {
  const auto& d = c.detector;
  const auto samples = load_detection_dataset(c.resolve(c.paths.manifest));
  std::vector<Image8> images;
  for (const auto& s : samples) images.push_back(read_image(s.image_path));
  const auto sizes = translation_sizes(c);

  DetectorRun run{{detector::Detector<float>(c.detector_arch()), 0, d.seed, detector_digest(c)}, {}};
  run.checkpoint.model.initialize(d.seed);
  const auto anchors = detector::generate_anchors(d.layout);
  nn::Adam<float> adam(nn::AdamConfig{d.learning_rate, d.beta1, d.beta2});
  const detector::DetectorTrainOptions opts{{d.phi, d.neg_pos_ratio}, d.match_threshold};

  std::size_t cursor = 0;
  for (std::int64_t step = 1; step <= d.steps; ++step) {
    std::vector<detector::DetectorSample<float>> batch;
    for (int i = 0; i < d.batch_size; ++i, ++cursor) {
      const std::size_t k = cursor % samples.size();
      const Mode mode = d.augment ? Mode::train : Mode::eval;
      auto in = preprocess_detection(images[k], samples[k].boxes, mode,
                                     derive_seed(d.seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i)}),
                                     sizes);
      batch.push_back({in.image.tensor(), std::move(in.boxes)});
    }
    run.history.push_back(detector::train_detector_step<float>(run.checkpoint.model, batch, anchors, adam, opts, step));
    run.checkpoint.step = step;
    if (log && (step % log_every == 0 || step == d.steps)) {
      const auto& l = run.history.back();
      *log << "detect step " << step << "/" << d.steps << "  total " << l.total << "  conf " << l.conf << "  loc "
           << l.loc << "\n";
    }
  }
  return run;
}

}  // namespace nightday::pipeline

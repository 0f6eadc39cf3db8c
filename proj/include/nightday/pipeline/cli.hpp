#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nightday/pipeline/inference.hpp"
#include "nightday/pipeline/toy_data.hpp"

namespace nightday::pipeline {

struct CliOverrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::string out;
  std::string image;
  std::string translation_ckpt;
  std::string detector_ckpt;
  std::string report;
};

namespace detail {

enum class Section { translation, detector, both };

inline PipelineConfig configured(const CliOverrides& o, Section section) {
  PipelineConfig c = load_config(o.config);
  const bool t = section != Section::detector, d = section != Section::translation;
  if (o.seed) {
    if (t) c.translation.seed = *o.seed;
    if (d) c.detector.seed = *o.seed;
  }
  if (o.steps) {
    if (t) c.translation.steps = *o.steps;
    if (d) c.detector.steps = *o.steps;
  }
  validate(c);
  return c;
}

inline fs::path output_dir(const CliOverrides& o, const PipelineConfig& c) {
  return o.out.empty() ? c.output_dir() : fs::path(o.out);
}

inline PipelineModels models_for(const CliOverrides& o, const PipelineConfig& c) {
  const fs::path t = o.translation_ckpt.empty() ? c.translation_checkpoint() : fs::path(o.translation_ckpt);
  const fs::path d = o.detector_ckpt.empty() ? c.detector_checkpoint() : fs::path(o.detector_ckpt);
  return load_models(c, t, d);
}

inline std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace detail

/// Command-line entry point. Returns 0 on success, 1 on runtime or validation
/// failure, 2 on usage errors.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Night-to-day translation and object detection pipeline", "nightday"};
  app.require_subcommand(1);
  CliOverrides o;

  auto common = [&](CLI::App* sub, bool config_required = true) {
    auto* opt = sub->add_option("--config", o.config, "pipeline config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--seed", o.seed, "override the seed");
    sub->add_option("--steps", o.steps, "override the step count");
    sub->add_option("--out", o.out, "output directory (defaults to paths.output_dir)");
  };
  auto checkpoints = [&](CLI::App* sub) {
    sub->add_option("--translation-ckpt", o.translation_ckpt, "defaults to <paths.output_dir>/translation.ckpt");
    sub->add_option("--detector-ckpt", o.detector_ckpt, "defaults to <paths.output_dir>/detector.ckpt");
  };

  auto* train_t = app.add_subcommand("train-translate", "train the night/day translation networks");
  common(train_t);
  auto* train_d = app.add_subcommand("train-detect", "train the detector on the manifest");
  common(train_d);
  auto* infer = app.add_subcommand("infer", "translate one night image and detect objects on the result");
  common(infer);
  checkpoints(infer);
  infer->add_option("--image", o.image, "night image")->required();
  auto* eval = app.add_subcommand("eval", "compute per-class AP, FPS and reconstruction accuracy");
  common(eval);
  checkpoints(eval);
  auto* report = app.add_subcommand("report", "render an evaluation report as text tables");
  common(report);
  report->add_option("--report", o.report, "defaults to <output dir>/eval_report.json");
  auto* toy = app.add_subcommand("make-toy", "write the synthetic toy dataset and its config");
  toy->add_option("--out", o.out, "target directory")->required();
  toy->add_option("--seed", o.seed, "scene seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << detail::one_line(e.what()) << "\n" << app.help();
    return 2;
  }

  try {
    using detail::Section;
    if (*train_t) {
      const PipelineConfig c = detail::configured(o, Section::translation);
      auto run = train_translation(c, &out);
      const fs::path dir = detail::output_dir(o, c);
      fs::create_directories(dir);
      translation::save_checkpoint(run.models, dir / "translation.ckpt");
      out << "wrote " << (dir / "translation.ckpt").string() << "\n";
    } else if (*train_d) {
      const PipelineConfig c = detail::configured(o, Section::detector);
      auto run = train_detector(c, &out);
      const fs::path dir = detail::output_dir(o, c);
      fs::create_directories(dir);
      detector::save_checkpoint(run.checkpoint, dir / "detector.ckpt");
      out << "wrote " << (dir / "detector.ckpt").string() << "\n";
    } else if (*infer) {
      const PipelineConfig c = detail::configured(o, Section::both);
      const PipelineModels m = detail::models_for(o, c);
      const Image8 night = in_stage("read image", [&] { return read_image(o.image); });
      const InferenceResult r = run_inference(m, night, c);
      const auto a = write_inference(r, night, o.image, detail::output_dir(o, c), c);
      for (const auto& w : a.warnings) err << "warning: " << w << "\n";
      out << r.detections.size() << " detections\nwrote " << a.day_image.string() << "\nwrote " << a.overlay.string()
          << "\nwrote " << a.grid.string() << "\nwrote " << a.detections.string() << "\n";
    } else if (*eval) {
      const PipelineConfig c = detail::configured(o, Section::both);
      const PipelineModels m = detail::models_for(o, c);
      const metrics::EvalReport r = evaluate(m, c, &out);
      const fs::path dir = detail::output_dir(o, c);
      fs::create_directories(dir);
      std::ofstream(dir / "eval_report.json") << metrics::to_json(r).dump(2) << "\n";
      out << "mean AP " << r.mean_ap << "%\nwrote " << (dir / "eval_report.json").string() << "\n";
    } else if (*report) {
      const PipelineConfig c = detail::configured(o, Section::both);
      const fs::path dir = detail::output_dir(o, c);
      const fs::path path = o.report.empty() ? dir / "eval_report.json" : fs::path(o.report);
      std::ifstream in(path);
      if (!in) throw DatasetError("cannot open report '" + path.string() + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("report '" + path.string() + "' is not valid JSON: " + e.what());
      }
      const std::string text = metrics::render_tables(metrics::report_from_json(j));
      fs::create_directories(dir);
      std::ofstream(dir / "report.txt") << text;
      out << text;
    } else if (*toy) {
      ToyOptions opts;
      if (o.seed) opts.seed = *o.seed;
      const fs::path config = write_toy_dataset(o.out, opts);
      out << "wrote " << config.string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << detail::one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nightday::pipeline

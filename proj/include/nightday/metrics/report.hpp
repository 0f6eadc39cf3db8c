#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/metrics/average_precision.hpp"
#include "nightday/metrics/fps.hpp"
#include "nightday/metrics/ssim.hpp"

namespace nightday::metrics {

/// Column label of a class in reports ("traffic_sign" -> "traffic sign").
inline std::string display_name(int class_id) {
  std::string s(class_name(class_id));
  for (char& c : s) {
    if (c == '_') c = ' ';
  }
  return s;
}

struct EvalReport {
  std::string method = "night-to-day + detector";
  std::string dataset = "toy";
  int input_size = 256;
  std::array<std::optional<double>, kNumClasses> per_class_ap;  // percentages, absent when the class never occurs
  double mean_ap = 0;                                           // percentage
  double fps = 0;
  std::vector<double> fps_measurements;
  std::string hardware;
  std::string fps_note;
  std::optional<double> reconstruction_accuracy;  // percentage
  std::optional<double> mean_similarity;
  double tau = 0.5;
  std::string config_digest;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline EvalReport make_report(const MapResult& map, const FpsReport& fps,
                              const std::optional<ReconstructionResult>& recon) {
  EvalReport r;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& ap = map.per_class[static_cast<std::size_t>(c)];
    if (ap) r.per_class_ap[static_cast<std::size_t>(c)] = 100.0 * *ap;
  }
  r.mean_ap = 100.0 * map.mean;
  r.fps = fps.fps;
  r.fps_measurements = fps.measurements;
  r.hardware = fps.hardware;
  r.fps_note = fps.note;
  if (recon) {
    r.reconstruction_accuracy = recon->accuracy;
    r.mean_similarity = recon->mean_similarity;
  }
  return r;
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline std::optional<double> json_optional(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace detail

/// One key per table column, plus the run metadata.
inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["Method"] = r.method;
  j["Dataset"] = r.dataset;
  j["Input Size"] = r.input_size;
  for (int c = 0; c < kNumClasses; ++c) j[display_name(c)] = detail::optional_json(r.per_class_ap[static_cast<std::size_t>(c)]);
  j["FPS"] = r.fps;
  j["Average mAP (%)"] = r.mean_ap;
  j["Reconstruction Accuracy (%)"] = detail::optional_json(r.reconstruction_accuracy);
  j["mean_similarity"] = detail::optional_json(r.mean_similarity);
  j["tau"] = r.tau;
  j["fps_measurements"] = r.fps_measurements;
  j["hardware"] = r.hardware;
  j["fps_note"] = r.fps_note;
  j["config_digest"] = r.config_digest;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.method = j.at("Method").get<std::string>();
    r.dataset = j.at("Dataset").get<std::string>();
    r.input_size = j.at("Input Size").get<int>();
    for (int c = 0; c < kNumClasses; ++c)
      r.per_class_ap[static_cast<std::size_t>(c)] = detail::json_optional(j, display_name(c).c_str());
    r.fps = j.at("FPS").get<double>();
    r.mean_ap = j.at("Average mAP (%)").get<double>();
    r.reconstruction_accuracy = detail::json_optional(j, "Reconstruction Accuracy (%)");
    r.mean_similarity = detail::json_optional(j, "mean_similarity");
    r.tau = j.at("tau").get<double>();
    r.fps_measurements = j.at("fps_measurements").get<std::vector<double>>();
    r.hardware = j.at("hardware").get<std::string>();
    r.fps_note = j.at("fps_note").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed evaluation report: ") + e.what());
  }
}

namespace detail {

inline std::string one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

inline std::string cell(const std::optional<double>& v) { return v ? one_decimal(*v) : "-"; }

inline std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(widths[i] - row[i].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace detail

/// Per-class detection table: Method, the six classes, FPS, Average mAP (%).
inline std::string detection_table(const EvalReport& r) {
  std::vector<std::string> header{"Method"}, row{r.method};
  for (int c = 0; c < kNumClasses; ++c) {
    header.push_back(display_name(c));
    row.push_back(detail::cell(r.per_class_ap[static_cast<std::size_t>(c)]));
  }
  header.insert(header.end(), {"FPS", "Average mAP (%)"});
  row.insert(row.end(), {detail::one_decimal(r.fps), detail::one_decimal(r.mean_ap)});
  return detail::aligned({header, row});
}

/// Translation table: Method, Dataset, Input Size, Reconstruction Accuracy.
inline std::string reconstruction_table(const EvalReport& r) {
  const std::string size = std::to_string(r.input_size) + "x" + std::to_string(r.input_size);
  const std::string acc = r.reconstruction_accuracy ? detail::one_decimal(*r.reconstruction_accuracy) + "%" : "-";
  return detail::aligned({{"Method", "Dataset", "Input Size", "Reconstruction Accuracy"}, {r.method, r.dataset, size, acc}});
}

inline std::string render_tables(const EvalReport& r) {
  std::string out = detection_table(r) + "\n" + reconstruction_table(r);
  if (r.mean_similarity) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "\nmean similarity %.4f at tau %.2f\n", *r.mean_similarity, r.tau);
    out += buf;
  }
  if (!r.hardware.empty()) out += "FPS measured on " + r.hardware + "\n";
  out += "config " + r.config_digest + "\n";
  return out;
}

}  // namespace nightday::metrics

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nightday/core/box.hpp"
#include "nightday/core/error.hpp"
#include "nightday/core/text.hpp"
#include "nightday/data/image.hpp"

namespace nightday {

struct Correspondence {
  std::size_t night_index = 0;
  std::size_t day_index = 0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Night (domain a) and day (domain b) image paths, each sorted lexicographically.
struct UnpairedDataset {
  std::vector<std::filesystem::path> domain_a_paths;
  std::vector<std::filesystem::path> domain_b_paths;
  std::optional<std::vector<Correspondence>> correspondences;
};

struct AnnotatedSample {
  std::filesystem::path image_path;
  std::vector<LabeledBox> boxes;
};

namespace detail {

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DatasetError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) out.push_back(entry.path());
  }
  if (out.empty()) throw DatasetError("no images in '" + dir.string() + "'");
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return out;
}

}  // namespace detail

/// Parses "night_index,day_index" rows; blank lines are skipped.
inline std::vector<Correspondence> parse_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    const auto fields = text::split(row, ',');
    if (fields.size() != 2) throw ParseError("correspondence row must have two fields", line_no);
    auto a = text::parse_number<std::size_t>(fields[0]);
    auto b = text::parse_number<std::size_t>(fields[1]);
    if (!a || !b) throw ParseError("correspondence indices must be non-negative integers", line_no);
    out.push_back({*a, *b});
  }
  return out;
}

inline UnpairedDataset load_unpaired_dataset(const std::filesystem::path& night_dir, const std::filesystem::path& day_dir,
                                             const std::optional<std::filesystem::path>& correspondence_file = std::nullopt) {
  UnpairedDataset ds;
  ds.domain_a_paths = detail::list_images(night_dir);
  ds.domain_b_paths = detail::list_images(day_dir);
  if (correspondence_file) {
    std::ifstream in(*correspondence_file);
    if (!in) throw DatasetError("cannot open correspondence file '" + correspondence_file->string() + "'");
    auto pairs = parse_correspondences(in);
    for (const auto& p : pairs) {
      if (p.night_index >= ds.domain_a_paths.size() || p.day_index >= ds.domain_b_paths.size())
        throw DatasetError("correspondence (" + std::to_string(p.night_index) + "," + std::to_string(p.day_index) +
                           ") out of range");
    }
    ds.correspondences = std::move(pairs);
  }
  return ds;
}

/// Parses "class,x_min,y_min,x_max,y_max[;...]"; an empty field means no boxes.
inline std::vector<LabeledBox> parse_box_field(std::string_view field, const std::string& context) {
  std::vector<LabeledBox> boxes;
  field = text::trim(field);
  if (field.empty()) return boxes;
  for (auto item : text::split(field, ';')) {
    item = text::trim(item);
    if (item.empty()) continue;
    const auto parts = text::split(item, ',');
    if (parts.size() != 5) throw ValidationError(context + ": box '" + std::string(item) + "' needs five fields");
    LabeledBox lb;
    try {
      lb.class_id = class_index(text::trim(parts[0]));
    } catch (const VocabularyError& e) {
      throw VocabularyError(context + ": " + e.what());
    }
    double v[4];
    for (int i = 0; i < 4; ++i) {
      auto num = text::parse_number<double>(parts[static_cast<std::size_t>(i) + 1]);
      if (!num) throw ValidationError(context + ": bad coordinate in '" + std::string(item) + "'");
      v[i] = *num;
    }
    lb.box = {v[0], v[1], v[2], v[3]};
    for (double c : v) {
      if (!(c >= 0.0 && c <= 1.0)) throw ValidationError(context + ": coordinate outside [0,1] in '" + std::string(item) + "'");
    }
    if (!(lb.box.x_min < lb.box.x_max) || !(lb.box.y_min < lb.box.y_max))
      throw ValidationError(context + ": degenerate box '" + std::string(item) + "'");
    boxes.push_back(lb);
  }
  return boxes;
}

/// Reads "image_path<TAB>boxes" records; relative paths resolve against the manifest's directory.
inline std::vector<AnnotatedSample> load_detection_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DatasetError("cannot open manifest '" + manifest_path.string() + "'");
  const auto base = manifest_path.parent_path();
  std::vector<AnnotatedSample> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::string_view row = line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (text::trim(row).empty()) continue;
    const auto tab = row.find('\t');
    const std::string path_str(text::trim(row.substr(0, tab)));
    const std::string context = manifest_path.filename().string() + ":" + std::to_string(line_no) + " (" + path_str + ")";
    AnnotatedSample s;
    s.image_path = std::filesystem::path(path_str);
    if (s.image_path.is_relative()) s.image_path = base / s.image_path;
    if (tab != std::string_view::npos) s.boxes = parse_box_field(row.substr(tab + 1), context);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DatasetError("manifest '" + manifest_path.string() + "' has no records");
  return out;
}

}  // namespace nightday

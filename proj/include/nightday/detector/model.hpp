#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/core/random.hpp"
#include "nightday/detector/anchors.hpp"
#include "nightday/detector/multibox_loss.hpp"
#include "nightday/detector/nms.hpp"
#include "nightday/nn/layers.hpp"

namespace nightday::detector {

using nn::ConvGeometry;
using nn::Param;
using nn::Tape;

struct DetectorArch {
  int input_size = 128;
  AnchorLayout layout = layout_desk();
  std::vector<int> stem_channels{16, 32, 64, 64};  // one stride-2 stage each
  int extra_channels = 64;                         // width of the stages between maps

  friend bool operator==(const DetectorArch&, const DetectorArch&) = default;
};

template <class T>
struct DetectorTape {
  Tape<T> stem;
  std::vector<Tape<T>> extras;
  std::vector<Tape<T>> loc_heads;
  std::vector<Tape<T>> conf_heads;
  std::vector<std::vector<int>> map_shapes;
};

template <class T>
struct DetectorOutput {
  Tensor<T> conf_logits;  // [A, 7]
  Tensor<T> loc_preds;    // [A, 4]
};

/// Small from-scratch backbone: stride-2 3x3 conv stages down to the first
/// feature map, then one stage per further map (stride 2, or a valid 3x3 when
/// the map shrinks by two). Each map feeds a 3x3 localization head (4K channels)
/// and a 3x3 confidence head (7K channels).
template <class T>
class Detector {
 public:
  explicit Detector(DetectorArch arch) : arch_(std::move(arch)) {
    validate_layout(arch_.layout);
    if (arch_.stem_channels.empty()) throw ConfigError("detector stem needs at least one stage");
    int side = arch_.input_size;
    int channels = 3;
    for (std::size_t i = 0; i < arch_.stem_channels.size(); ++i) {
      const ConvGeometry g{3, 2, 1};
      stem_.template emplace<nn::Conv2d<T>>("stem" + std::to_string(i) + ".conv", channels, arch_.stem_channels[i], g);
      stem_.template emplace<nn::LeakyRelu<T>>();
      channels = arch_.stem_channels[i];
      side = g.out(side);
    }
    if (side != arch_.layout.front().size)
      throw ConfigError("stem produces a " + std::to_string(side) + "x" + std::to_string(side) +
                        " map but the layout starts at " + std::to_string(arch_.layout.front().size));
    map_channels_.push_back(channels);
    for (std::size_t m = 1; m < arch_.layout.size(); ++m) {
      const int target = arch_.layout[m].size;
      ConvGeometry g{3, 2, 1};
      if (g.out(side) != target) g = ConvGeometry{3, 1, 0};
      if (g.out(side) != target)
        throw ConfigError("cannot reach a " + std::to_string(target) + "x" + std::to_string(target) + " map from " +
                          std::to_string(side));
      nn::Sequential<T> stage;
      stage.template emplace<nn::Conv2d<T>>("extra" + std::to_string(m) + ".conv", channels, arch_.extra_channels, g);
      stage.template emplace<nn::LeakyRelu<T>>();
      extras_.push_back(std::move(stage));
      channels = arch_.extra_channels;
      map_channels_.push_back(channels);
      side = target;
    }
    for (std::size_t m = 0; m < arch_.layout.size(); ++m) {
      const int k = arch_.layout[m].boxes_per_cell();
      loc_heads_.emplace_back("loc" + std::to_string(m), map_channels_[m], 4 * k, ConvGeometry{3, 1, 1});
      conf_heads_.emplace_back("conf" + std::to_string(m), map_channels_[m], kConfChannels * k, ConvGeometry{3, 1, 1});
    }
  }

  const DetectorArch& arch() const { return arch_; }

  std::size_t anchor_count() const {
    std::size_t n = 0;
    for (const auto& m : arch_.layout) n += static_cast<std::size_t>(m.size) * m.size * m.boxes_per_cell();
    return n;
  }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    stem_.parameters(out);
    for (auto& e : extras_) e.parameters(out);
    for (std::size_t m = 0; m < loc_heads_.size(); ++m) {
      loc_heads_[m].parameters(out);
      conf_heads_[m].parameters(out);
    }
    return out;
  }

  /// He-normal backbone weights, N(0, 0.01) heads, zero biases.
  void initialize(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x55dc}));
    std::vector<Param<T>*> backbone;
    stem_.parameters(backbone);
    for (auto& e : extras_) e.parameters(backbone);
    for (Param<T>* p : backbone) {
      if (p->value.rank() != 4) continue;
      const double fan_in = static_cast<double>(p->value.dim(1)) * p->value.dim(2) * p->value.dim(3);
      for (auto& v : p->value.values()) v = static_cast<T>(rng.normal(0.0, std::sqrt(2.0 / fan_in)));
    }
    for (std::size_t m = 0; m < loc_heads_.size(); ++m) {
      for (auto* head : {&loc_heads_[m], &conf_heads_[m]}) {
        for (auto& v : head->weight().value.values()) v = static_cast<T>(rng.normal(0.0, 0.01));
      }
    }
  }

  DetectorOutput<T> forward(const Tensor<T>& x, DetectorTape<T>* tape = nullptr) const {
    if (x.rank() != 3 || x.dim(0) != 3 || x.dim(1) != arch_.input_size || x.dim(2) != arch_.input_size)
      throw ShapeError("detector expects a [3," + std::to_string(arch_.input_size) + "," +
                       std::to_string(arch_.input_size) + "] input, got " + Tensor<T>::shape_string(x.shape()));
    const std::size_t na = anchor_count();
    DetectorOutput<T> out{Tensor<T>({static_cast<int>(na), kConfChannels}), Tensor<T>({static_cast<int>(na), 4})};
    if (tape) {
      tape->extras.assign(extras_.size(), Tape<T>{});
      tape->loc_heads.assign(loc_heads_.size(), Tape<T>{});
      tape->conf_heads.assign(conf_heads_.size(), Tape<T>{});
      tape->map_shapes.clear();
    }
    Tensor<T> feat = stem_.forward(x, tape ? &tape->stem : nullptr);
    std::size_t offset = 0;
    for (std::size_t m = 0; m < arch_.layout.size(); ++m) {
      if (m > 0) feat = extras_[m - 1].forward(feat, tape ? &tape->extras[m - 1] : nullptr);
      if (tape) tape->map_shapes.push_back(feat.shape());
      const Tensor<T> loc = loc_heads_[m].forward(feat, tape ? &tape->loc_heads[m] : nullptr);
      const Tensor<T> conf = conf_heads_[m].forward(feat, tape ? &tape->conf_heads[m] : nullptr);
      scatter(loc, 4, offset, out.loc_preds);
      scatter(conf, kConfChannels, offset, out.conf_logits);
      offset += static_cast<std::size_t>(loc.dim(1)) * loc.dim(2) * arch_.layout[m].boxes_per_cell();
    }
    return out;
  }

  void backward(const Tensor<T>& grad_conf, const Tensor<T>& grad_loc, const DetectorTape<T>& tape) {
    const std::size_t maps = arch_.layout.size();
    std::vector<std::size_t> offsets(maps, 0);
    for (std::size_t m = 1; m < maps; ++m) {
      const auto& prev = arch_.layout[m - 1];
      offsets[m] = offsets[m - 1] + static_cast<std::size_t>(prev.size) * prev.size * prev.boxes_per_cell();
    }
    Tensor<T> g_feat;
    for (std::size_t m = maps; m-- > 0;) {
      const int k = arch_.layout[m].boxes_per_cell();
      const int side = arch_.layout[m].size;
      Tensor<T> g_loc = gather(grad_loc, 4, k, side, offsets[m]);
      Tensor<T> g_conf = gather(grad_conf, kConfChannels, k, side, offsets[m]);
      Tensor<T> g = loc_heads_[m].backward(g_loc, tape.loc_heads[m]);
      g += conf_heads_[m].backward(g_conf, tape.conf_heads[m]);
      if (!g_feat.empty()) g += g_feat;
      if (m > 0) {
        g_feat = extras_[m - 1].backward(g, tape.extras[m - 1]);
      } else {
        stem_.backward(g, tape.stem);
      }
    }
  }

 private:
  // head output [K*width, f, f] -> rows offset + (i*f + j)*K + k of a [A, width] matrix
  static void scatter(const Tensor<T>& head, int width, std::size_t offset, Tensor<T>& dst) {
    const int f = head.dim(1);
    const int k = head.dim(0) / width;
    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < f; ++j) {
        for (int b = 0; b < k; ++b) {
          const std::size_t row = offset + (static_cast<std::size_t>(i) * f + j) * k + b;
          for (int c = 0; c < width; ++c) dst.at(static_cast<int>(row), c) = head.at(b * width + c, i, j);
        }
      }
    }
  }

  static Tensor<T> gather(const Tensor<T>& src, int width, int k, int f, std::size_t offset) {
    Tensor<T> out({k * width, f, f});
    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < f; ++j) {
        for (int b = 0; b < k; ++b) {
          const std::size_t row = offset + (static_cast<std::size_t>(i) * f + j) * k + b;
          for (int c = 0; c < width; ++c) out.at(b * width + c, i, j) = src.at(static_cast<int>(row), c);
        }
      }
    }
    return out;
  }

  DetectorArch arch_;
  nn::Sequential<T> stem_;
  std::vector<nn::Sequential<T>> extras_;
  std::vector<nn::Conv2d<T>> loc_heads_;
  std::vector<nn::Conv2d<T>> conf_heads_;
  std::vector<int> map_channels_;
};

using DetectorParams = Detector<float>;

template <class T>
void softmax_rows(Tensor<T>& logits) {
  const int rows = logits.dim(0), cols = logits.dim(1);
  for (int r = 0; r < rows; ++r) {
    T* z = logits.data() + static_cast<std::size_t>(r) * cols;
    const T lse = detail::log_sum_exp(z, cols);
    for (int c = 0; c < cols; ++c) z[c] = std::exp(z[c] - lse);
  }
}

/// Decodes every anchor for every object class and keeps those surviving NMS.
template <class T>
std::vector<Detection> decode_detections(const DetectorOutput<T>& out, const AnchorSet& anchors, const NmsConfig& nms_cfg,
                                         Variances variances = {}) {
  Tensor<T> probs = out.conf_logits;
  softmax_rows(probs);
  std::vector<Detection> candidates;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const int row = static_cast<int>(a);
    bool any = false;
    for (int c = 1; c < kConfChannels; ++c) any = any || static_cast<double>(probs.at(row, c)) >= nms_cfg.score_threshold;
    if (!any) continue;
    const Offsets o{static_cast<double>(out.loc_preds.at(row, 0)), static_cast<double>(out.loc_preds.at(row, 1)),
                    static_cast<double>(out.loc_preds.at(row, 2)), static_cast<double>(out.loc_preds.at(row, 3))};
    const Box box = decode_box(o, anchors.anchors[a], variances);
    if (!box.valid()) continue;
    for (int c = 1; c < kConfChannels; ++c) {
      const double score = static_cast<double>(probs.at(row, c));
      if (score >= nms_cfg.score_threshold) candidates.push_back({c - 1, score, box});
    }
  }
  return nms(candidates, nms_cfg);
}

/// Forward pass, softmax, decode, NMS.
template <class T>
std::vector<Detection> detect(const Detector<T>& model, const Tensor<T>& image, const AnchorSet& anchors,
                              const NmsConfig& nms_cfg) {
  if (anchors.layout != model.arch().layout || anchors.size() != model.anchor_count())
    throw CompatibilityError("anchor set does not match the detector layout");
  return decode_detections(model.forward(image), anchors, nms_cfg);
}

}  // namespace nightday::detector

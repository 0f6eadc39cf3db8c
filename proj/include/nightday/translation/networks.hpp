#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/core/random.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/nn/layers.hpp"

namespace nightday::translation {

using nn::ConvGeometry;
using nn::Padding;
using nn::Param;
using nn::Tape;

/// Smallest spatial side a PatchDiscriminator accepts.
inline constexpr int kMinDiscriminatorInput = 64;

/// Residual translation generator:
///
///   7x7 conv (3 -> w), two stride-2 convs (w -> 2w -> 4w),
///   R residual blocks at 4w, two stride-2 transposed convs (4w -> 2w -> w),
///   7x7 conv (w -> 3), tanh.
///
/// Every conv except the last is followed by instance norm and ReLU. The 7x7
/// and residual convs use reflection padding; the strided convs pad with zeros.
template <class T>
class Generator {
 public:
  Generator(int residual_blocks, int width = 64, const std::string& prefix = "") : blocks_(residual_blocks), width_(width) {
    if (residual_blocks < 1) throw ConfigError("generator needs at least one residual block");
    if (width < 1) throw ConfigError("generator width must be positive");
    const int w = width;
    auto conv_norm_relu = [&](const std::string& name, int cin, int cout, ConvGeometry g) {
      net_.template emplace<nn::Conv2d<T>>(prefix + name + ".conv", cin, cout, g);
      net_.template emplace<nn::InstanceNorm<T>>(prefix + name + ".norm", cout);
      net_.template emplace<nn::LeakyRelu<T>>();
    };
    conv_norm_relu("stem", 3, w, {7, 1, 3, Padding::reflect});
    conv_norm_relu("down1", w, 2 * w, {3, 2, 1, Padding::zero});
    conv_norm_relu("down2", 2 * w, 4 * w, {3, 2, 1, Padding::zero});
    for (int r = 0; r < residual_blocks; ++r) {
      const std::string name = prefix + "res" + std::to_string(r);
      nn::Sequential<T> body;
      body.template emplace<nn::Conv2d<T>>(name + ".conv1", 4 * w, 4 * w, ConvGeometry{3, 1, 1, Padding::reflect});
      body.template emplace<nn::InstanceNorm<T>>(name + ".norm1", 4 * w);
      body.template emplace<nn::LeakyRelu<T>>();
      body.template emplace<nn::Conv2d<T>>(name + ".conv2", 4 * w, 4 * w, ConvGeometry{3, 1, 1, Padding::reflect});
      body.template emplace<nn::InstanceNorm<T>>(name + ".norm2", 4 * w);
      net_.template emplace<nn::Residual<T>>(std::move(body));
    }
    auto up = [&](const std::string& name, int cin, int cout) {
      net_.template emplace<nn::ConvTranspose2d<T>>(prefix + name + ".conv", cin, cout, ConvGeometry{3, 2, 1}, 1);
      net_.template emplace<nn::InstanceNorm<T>>(prefix + name + ".norm", cout);
      net_.template emplace<nn::LeakyRelu<T>>();
    };
    up("up1", 4 * w, 2 * w);
    up("up2", 2 * w, w);
    net_.template emplace<nn::Conv2d<T>>(prefix + "out.conv", w, 3, ConvGeometry{7, 1, 3, Padding::reflect});
    net_.template emplace<nn::Tanh<T>>();
  }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape = nullptr) const {
    if (x.rank() != 3 || x.dim(0) != 3) throw ShapeError("generator input must be [3,H,W]");
    if (x.dim(1) % 4 != 0 || x.dim(2) % 4 != 0 || x.dim(1) < 8 || x.dim(2) < 8)
      throw ShapeError("generator input sides must be multiples of 4 and at least 8, got " +
                       Tensor<T>::shape_string(x.shape()));
    return net_.forward(x, tape);
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const Tape<T>& tape) { return net_.backward(grad_out, tape); }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    net_.parameters(out);
    return out;
  }

  int residual_blocks() const { return blocks_; }
  int width() const { return width_; }

 private:
  int blocks_;
  int width_;
  nn::Sequential<T> net_;
};

/// Patch discriminator: 4x4 convs 3 -> w -> 2w -> 4w (stride 2), 4w -> 8w (stride 1),
/// 8w -> 1 (stride 1), all zero-padded by 1; leaky ReLU 0.2 after every conv but the
/// last, instance norm on all but the first. A 256x256 input yields a 30x30 map.
template <class T>
class PatchDiscriminator {
 public:
  explicit PatchDiscriminator(int width = 64, const std::string& prefix = "") : width_(width) {
    if (width < 1) throw ConfigError("discriminator width must be positive");
    const int w = width;
    const ConvGeometry s2{4, 2, 1}, s1{4, 1, 1};
    net_.template emplace<nn::Conv2d<T>>(prefix + "c1.conv", 3, w, s2);
    net_.template emplace<nn::LeakyRelu<T>>(T(0.2));
    int cin = w;
    const int outs[] = {2 * w, 4 * w, 8 * w};
    for (int i = 0; i < 3; ++i) {
      const std::string name = prefix + "c" + std::to_string(i + 2);
      net_.template emplace<nn::Conv2d<T>>(name + ".conv", cin, outs[i], i < 2 ? s2 : s1);
      net_.template emplace<nn::InstanceNorm<T>>(name + ".norm", outs[i]);
      net_.template emplace<nn::LeakyRelu<T>>(T(0.2));
      cin = outs[i];
    }
    net_.template emplace<nn::Conv2d<T>>(prefix + "out.conv", cin, 1, s1);
  }

  /// Score-map side for an input side.
  static int output_size(int in) {
    const ConvGeometry s2{4, 2, 1}, s1{4, 1, 1};
    return s1.out(s1.out(s2.out(s2.out(s2.out(in)))));
  }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape = nullptr) const {
    if (x.rank() != 3 || x.dim(0) != 3) throw ShapeError("discriminator input must be [3,H,W]");
    if (x.dim(1) < kMinDiscriminatorInput || x.dim(2) < kMinDiscriminatorInput)
      throw ShapeError("discriminator input must be at least 64x64, got " + Tensor<T>::shape_string(x.shape()));
    return net_.forward(x, tape);
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const Tape<T>& tape) { return net_.backward(grad_out, tape); }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    net_.parameters(out);
    return out;
  }

  int width() const { return width_; }

 private:
  int width_;
  nn::Sequential<T> net_;
};

/// Anything usable as the adversary in a translation training step.
template <class C, class T>
concept Critic = requires(C& c, const C& cc, const Tensor<T>& x, Tape<T>* tape, const Tape<T>& t) {
  { cc.forward(x, tape) } -> std::same_as<Tensor<T>>;
  { c.backward(x, t) } -> std::same_as<Tensor<T>>;
  { c.parameters() } -> std::same_as<std::vector<Param<T>*>>;
};

struct TranslationModelConfig {
  int residual_blocks = 6;
  int generator_width = 64;
  int discriminator_width = 64;
};

/// Both translation directions and both domain discriminators.
template <class T, class Disc = PatchDiscriminator<T>>
struct TranslationModels {
  Generator<T> g_ab;  // night -> day
  Generator<T> g_ba;  // day -> night
  Disc d_a;           // judges night images
  Disc d_b;           // judges day images
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  std::vector<Param<T>*> generator_parameters() {
    auto p = g_ab.parameters();
    auto q = g_ba.parameters();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  std::vector<Param<T>*> all_parameters() {
    auto p = generator_parameters();
    for (auto* d : {&d_a, &d_b}) {
      auto q = d->parameters();
      p.insert(p.end(), q.begin(), q.end());
    }
    return p;
  }
};

using TranslationCheckpoint = TranslationModels<float>;

/// Fresh models with weights drawn from N(0, 0.02); deterministic in `seed`.
template <class T = float>
TranslationModels<T> build_translation_models(const TranslationModelConfig& config, std::uint64_t seed,
                                              std::string config_digest = {}) {
  if (config.residual_blocks < 1) throw ConfigError("residual_blocks must be >= 1");
  TranslationModels<T> m{Generator<T>(config.residual_blocks, config.generator_width, "g_ab."),
                         Generator<T>(config.residual_blocks, config.generator_width, "g_ba."),
                         PatchDiscriminator<T>(config.discriminator_width, "d_a."),
                         PatchDiscriminator<T>(config.discriminator_width, "d_b."),
                         0,
                         seed,
                         std::move(config_digest)};
  Rng rng(derive_seed(seed, {0x7a11}));
  nn::init_normal(m.all_parameters(), rng, 0.02);
  return m;
}

}  // namespace nightday::translation

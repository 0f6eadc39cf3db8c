#include <gtest/gtest.h>

#include <bit>
#include <algorithm>
#include <cmath>
#include <limits>

#include "nightday/translation/checkpoint.hpp"
#include "nightday/translation/losses.hpp"
#include "nightday/translation/networks.hpp"
#include "nightday/translation/trainer.hpp"
#include "test_util.hpp"

using namespace nightday;
using namespace nightday::translation;
using testutil::random_tensor;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

template <class A, class B>
bool same(const A& a, const B& b) {
  return std::ranges::equal(a.values(), b.values());
}

std::size_t count(std::vector<nn::Param<float>*> p) { return nn::parameter_count(p); }

// conv weights + biases, plus gain and bias for every instance norm
std::size_t generator_formula(std::size_t r, std::size_t w) {
  auto conv = [](std::size_t cin, std::size_t cout, std::size_t k) { return cin * cout * k * k + cout; };
  auto norm = [](std::size_t c) { return 2 * c; };
  std::size_t n = conv(3, w, 7) + norm(w);
  n += conv(w, 2 * w, 3) + norm(2 * w) + conv(2 * w, 4 * w, 3) + norm(4 * w);
  n += r * 2 * (conv(4 * w, 4 * w, 3) + norm(4 * w));
  n += conv(4 * w, 2 * w, 3) + norm(2 * w) + conv(2 * w, w, 3) + norm(w);
  n += conv(w, 3, 7);
  return n;
}

/// Scores 1 on any registered real image and 0 on everything else.
struct StubCritic {
  std::vector<Tensor<float>> reals;

  Tensor<float> forward(const Tensor<float>& x, nn::Tape<float>* tape = nullptr) const {
    if (tape) tape->saved = {Tensor<float>(x.shape())};
    bool real = false;
    for (const auto& r : reals) real = real || same(r, x);
    return Tensor<float>({1, 4, 4}, real ? 1.0f : 0.0f);
  }
  Tensor<float> backward(const Tensor<float>&, const nn::Tape<float>& tape) { return tape.saved.at(0); }
  std::vector<nn::Param<float>*> parameters() { return {}; }
};

CheckpointErrc load_code(const fs::path& p, std::optional<std::string_view> digest = std::nullopt) {
  try {
    load_checkpoint(p, digest);
  } catch (const CheckpointError& e) {
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return CheckpointErrc::io;
}

}  // namespace

TEST(Generator, PreservesShape) {
  Rng rng(1);
  Generator<float> g(2, 4);
  Rng init(2);
  nn::init_normal(g.parameters(), init, 0.02);
  EXPECT_EQ(g.forward(random_tensor<float>({3, 64, 64}, rng)).shape(), (std::vector<int>{3, 64, 64}));
  EXPECT_EQ(g.forward(random_tensor<float>({3, 256, 256}, rng)).shape(), (std::vector<int>{3, 256, 256}));
  EXPECT_EQ(g.forward(random_tensor<float>({3, 32, 48}, rng)).shape(), (std::vector<int>{3, 32, 48}));
  EXPECT_THROW(g.forward(random_tensor<float>({3, 30, 32}, rng)), ShapeError);
  EXPECT_THROW(g.forward(random_tensor<float>({1, 32, 32}, rng)), ShapeError);
}

TEST(Generator, ParameterCounts) {
  Generator<float> r6(6, 64), r9(9, 64);
  EXPECT_EQ(count(r9.parameters()) - count(r6.parameters()), 3543552u);
  EXPECT_EQ(count(r6.parameters()), generator_formula(6, 64));
  EXPECT_EQ(count(Generator<float>(3, 16).parameters()), generator_formula(3, 16));
}

TEST(Generator, OutputInTanhRange) {
  auto m = build_translation_models<float>({2, 8, 8}, 3);
  Rng rng(4);
  const auto y = m.g_ab.forward(random_tensor<float>({3, 32, 32}, rng));
  for (float v : y.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(PatchDiscriminator, OutputSizes) {
  EXPECT_EQ(PatchDiscriminator<float>::output_size(256), 30);
  EXPECT_EQ(PatchDiscriminator<float>::output_size(64), 6);
  PatchDiscriminator<float> d(2);
  Rng rng(5), init(6);
  nn::init_normal(d.parameters(), init, 0.02);
  EXPECT_EQ(d.forward(random_tensor<float>({3, 256, 256}, rng)).shape(), (std::vector<int>{1, 30, 30}));
  EXPECT_EQ(d.forward(random_tensor<float>({3, 64, 64}, rng)).shape(), (std::vector<int>{1, 6, 6}));
  EXPECT_THROW(d.forward(random_tensor<float>({3, 32, 32}, rng)), ShapeError);
}

TEST(PatchDiscriminator, ZeroedFinalLayerGivesZeroMap) {
  PatchDiscriminator<float> d(4);
  Rng rng(7), init(8);
  nn::init_normal(d.parameters(), init, 0.02);
  for (auto* p : d.parameters()) {
    if (p->name.rfind("out.conv", 0) == 0) p->value.fill(0.0f);
  }
  const auto y = d.forward(random_tensor<float>({3, 64, 64}, rng));
  for (float v : y.values()) EXPECT_EQ(v, 0.0f);
}

TEST(TranslationModels, DeterministicInSeed) {
  auto a = build_translation_models<float>({1, 4, 4}, 11);
  auto b = build_translation_models<float>({1, 4, 4}, 11);
  auto c = build_translation_models<float>({1, 4, 4}, 12);
  const auto pa = a.all_parameters(), pb = b.all_parameters(), pc = c.all_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_TRUE(same(pa[i]->value, pb[i]->value));
    differs = differs || !same(pa[i]->value, pc[i]->value);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(build_translation_models<float>({0, 4, 4}, 1), ConfigError);
}

TEST(Losses, WorkedExamples) {
  const Tensor<double> half({1, 2, 2}, 0.5), zero({1, 2, 2}, 0.0), one({1, 2, 2}, 1.0);
  EXPECT_DOUBLE_EQ(adversarial_loss_discriminator(half, half).value, 0.5);
  EXPECT_DOUBLE_EQ(adversarial_loss_discriminator(one, zero).value, 0.0);
  EXPECT_DOUBLE_EQ(adversarial_loss_generator(zero).value, 1.0);
  EXPECT_DOUBLE_EQ(adversarial_loss_generator(one).value, 0.0);
  EXPECT_DOUBLE_EQ(cycle_loss(zero, one, one, zero, 10.0).value, 20.0);
  EXPECT_DOUBLE_EQ(cycle_loss(one, one, zero, zero, 10.0).value, 0.0);
}

TEST(Losses, Errors) {
  const Tensor<double> a({1, 2, 2}), b({1, 3, 2});
  Tensor<double> bad({1, 2, 2});
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(cycle_loss(a, b, a, a, 10.0), ShapeError);
  EXPECT_THROW(cycle_loss(a, a, a, a, 0.0), ArgumentError);
  EXPECT_THROW(adversarial_loss_generator(bad), NumericError);
  EXPECT_THROW(adversarial_loss_discriminator(a, bad), NumericError);
  EXPECT_THROW(adversarial_loss_generator(Tensor<double>()), ShapeError);
}

TEST(TrainStep, PerfectCriticHasZeroLoss) {
  TranslationModels<float, StubCritic> m{Generator<float>(1, 4, "g_ab."), Generator<float>(1, 4, "g_ba."), {}, {}, 0, 0, {}};
  Rng init(9), rng(10);
  nn::init_normal(m.generator_parameters(), init, 0.02);
  const std::vector<Tensor<float>> a{random_tensor<float>({3, 16, 16}, rng)}, b{random_tensor<float>({3, 16, 16}, rng)};
  m.d_a.reals = a;
  m.d_b.reals = b;
  TranslationOptimizer<float> opt;
  const auto l = train_translation_step<float>(m, a, b, opt);
  EXPECT_EQ(l.d_a, 0.0);
  EXPECT_EQ(l.d_b, 0.0);
  EXPECT_DOUBLE_EQ(l.g_adv, 2.0);
  EXPECT_GT(l.cycle, 0.0);
  EXPECT_EQ(m.step, 1);
}

TEST(TrainStep, NonFiniteWeightsRaiseDivergence) {
  auto m = build_translation_models<float>({1, 4, 4}, 13);
  m.step = 6;
  m.g_ab.parameters().front()->value[0] = std::numeric_limits<float>::quiet_NaN();
  Rng rng(14);
  const std::vector<Tensor<float>> a{random_tensor<float>({3, 64, 64}, rng)}, b{random_tensor<float>({3, 64, 64}, rng)};
  TranslationOptimizer<float> opt;
  try {
    train_translation_step<float>(m, a, b, opt);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 7);
  }
}

TEST(TrainStep, RejectsMismatchedBatches) {
  auto m = build_translation_models<float>({1, 4, 4}, 15);
  Rng rng(16);
  const std::vector<Tensor<float>> a{random_tensor<float>({3, 64, 64}, rng)}, none;
  TranslationOptimizer<float> opt;
  EXPECT_THROW(train_translation_step<float>(m, a, none, opt), ArgumentError);
}

TEST(Translate, ChecksDigest) {
  auto m = build_translation_models<float>({1, 4, 4}, 17, "abc");
  Rng rng(18);
  const ImageTensor night(random_tensor<float>({3, 32, 32}, rng));
  EXPECT_EQ(translate(m, night, "abc").tensor().shape(), night.tensor().shape());
  EXPECT_THROW(translate(m, night, "abd"), CompatibilityError);
}

TEST(TranslationCheckpoint, RoundTripIsBitExact) {
  TempDir dir("tckpt");
  auto m = build_translation_models<float>({2, 4, 4}, 19, "digest-1");
  m.step = 42;
  save_checkpoint(m, dir / "t.ckpt");
  auto back = load_checkpoint(dir / "t.ckpt", std::string_view("digest-1"));
  EXPECT_EQ(back.step, 42);
  EXPECT_EQ(back.seed, 19u);
  EXPECT_EQ(back.g_ab.residual_blocks(), 2);
  const auto pa = m.all_parameters(), pb = back.all_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i]->value.size(), pb[i]->value.size());
    for (std::size_t k = 0; k < pa[i]->value.size(); ++k)
      ASSERT_EQ(std::bit_cast<std::uint32_t>(pa[i]->value[k]), std::bit_cast<std::uint32_t>(pb[i]->value[k]));
  }
  Rng rng(20);
  const ImageTensor night(random_tensor<float>({3, 32, 32}, rng));
  EXPECT_TRUE(same(translate(m, night).tensor(), translate(back, night).tensor()));
}

TEST(TranslationCheckpoint, Errors) {
  TempDir dir("tckpt_err");
  auto m = build_translation_models<float>({1, 4, 4}, 21, "digest-1");
  const fs::path p = dir / "t.ckpt";
  save_checkpoint(m, p);
  const std::string bytes = testutil::slurp(p);

  EXPECT_EQ(load_code(p, std::string_view("digest-2")), CheckpointErrc::digest_mismatch);
  testutil::spit(dir / "short.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(load_code(dir / "short.ckpt"), CheckpointErrc::truncated);
  std::string bad = bytes;
  bad[4] = 9;
  testutil::spit(dir / "version.ckpt", bad);
  EXPECT_EQ(load_code(dir / "version.ckpt"), CheckpointErrc::unsupported_version);
  bad = bytes;
  bad[0] = 'Z';
  testutil::spit(dir / "magic.ckpt", bad);
  EXPECT_EQ(load_code(dir / "magic.ckpt"), CheckpointErrc::bad_magic);
  bad = bytes;
  bad[bytes.size() - 10] ^= 0x10;  // inside the last float value
  testutil::spit(dir / "flip.ckpt", bad);
  EXPECT_EQ(load_code(dir / "flip.ckpt"), CheckpointErrc::checksum_mismatch);
  EXPECT_EQ(load_code(dir / "missing.ckpt"), CheckpointErrc::io);
}

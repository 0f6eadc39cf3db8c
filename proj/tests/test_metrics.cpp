#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "nightday/metrics/average_precision.hpp"
#include "nightday/metrics/fps.hpp"
#include "nightday/metrics/report.hpp"
#include "nightday/metrics/ssim.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nightday;
using namespace nightday::metrics;
using detector::Detection;
using testutil::random_tensor;

namespace {

Box jitter(const Box& b, Rng& rng, double amount) {
  return {b.x_min + rng.uniform(-amount, amount), b.y_min + rng.uniform(-amount, amount),
          b.x_max + rng.uniform(-amount, amount), b.y_max + rng.uniform(-amount, amount)};
}

struct Scene {
  std::vector<ImageDetection> dets;
  std::vector<GroundTruth> gts;
};

// Ground truth over a few images, detections that are noisy copies, duplicates
// and strays, with coarse scores so ties appear.
Scene random_scene(Rng& rng) {
  Scene s;
  const std::size_t images = 1 + rng.below(4);
  for (std::size_t img = 0; img < images; ++img) {
    const int n = static_cast<int>(rng.below(5));
    for (int k = 0; k < n; ++k) {
      const double w = rng.uniform(0.1, 0.4), h = rng.uniform(0.1, 0.4);
      const double x = rng.uniform(0.0, 1 - w), y = rng.uniform(0.0, 1 - h);
      const GroundTruth g{img, static_cast<int>(rng.below(3)), {x, y, x + w, y + h}};
      s.gts.push_back(g);
      const int copies = static_cast<int>(rng.below(3));
      for (int c = 0; c < copies; ++c)
        s.dets.push_back({img, {g.class_id, static_cast<double>(rng.below(8)) / 8.0, jitter(g.box, rng, 0.06)}});
    }
    const int strays = static_cast<int>(rng.below(3));
    for (int k = 0; k < strays; ++k) {
      const double x = rng.uniform(0.0, 0.7), y = rng.uniform(0.0, 0.7);
      s.dets.push_back({img, {static_cast<int>(rng.below(3)), static_cast<double>(rng.below(8)) / 8.0,
                               {x, y, x + 0.3, y + 0.3}}});
    }
  }
  return s;
}

ImageTensor image_from(Tensor<float> t) { return ImageTensor(std::move(t)); }

}  // namespace

TEST(AveragePrecision, PerfectAndEmpty) {
  const std::vector<GroundTruth> gts{{0, 1, {0.1, 0.1, 0.4, 0.4}}, {1, 1, {0.5, 0.5, 0.9, 0.9}}};
  const std::vector<ImageDetection> perfect{{0, {1, 0.9, {0.1, 0.1, 0.4, 0.4}}}, {1, {1, 0.8, {0.5, 0.5, 0.9, 0.9}}}};
  EXPECT_DOUBLE_EQ(average_precision(perfect, gts, 1), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({}, gts, 1), 0.0);
  // right box, wrong image
  const std::vector<ImageDetection> misplaced{{1, {1, 0.9, {0.1, 0.1, 0.4, 0.4}}}};
  EXPECT_DOUBLE_EQ(average_precision(misplaced, {gts[0]}, 1), 0.0);
  EXPECT_DOUBLE_EQ(average_precision(perfect, gts, 2), 0.0);
  EXPECT_THROW(average_precision(perfect, gts, 6), VocabularyError);
}

TEST(AveragePrecision, HandComputedCase) {
  // ranked TP, FP, TP over two ground truths: 0.5 * 1 + 0.5 * 2/3
  const std::vector<GroundTruth> gts{{0, 0, {0.0, 0.0, 0.2, 0.2}}, {0, 0, {0.5, 0.5, 0.7, 0.7}}};
  const std::vector<ImageDetection> dets{{0, {0, 0.9, {0.0, 0.0, 0.2, 0.2}}},
                                         {0, {0, 0.8, {0.8, 0.0, 1.0, 0.2}}},
                                         {0, {0, 0.7, {0.5, 0.5, 0.7, 0.7}}}};
  EXPECT_NEAR(average_precision(dets, gts, 0), 5.0 / 6.0, 1e-12);
}

TEST(AveragePrecision, DuplicateIsFalsePositive) {
  const std::vector<GroundTruth> gts{{0, 0, {0.0, 0.0, 0.2, 0.2}}};
  const std::vector<ImageDetection> dets{{0, {0, 0.9, {0.0, 0.0, 0.2, 0.2}}}, {0, {0, 0.95, {0.0, 0.0, 0.21, 0.2}}}};
  EXPECT_DOUBLE_EQ(average_precision(dets, gts, 0), 1.0);
  const std::vector<ImageDetection> late{{0, {0, 0.9, {0.6, 0.6, 0.8, 0.8}}}, {0, {0, 0.5, {0.0, 0.0, 0.2, 0.2}}}};
  EXPECT_DOUBLE_EQ(average_precision(late, gts, 0), 0.5);
}

TEST(AveragePrecision, AgreesWithRankedListReference) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const Scene s = random_scene(rng);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(average_precision(s.dets, s.gts, c), oracle::ranked_list_ap(s.dets, s.gts, c, 0.5), 1e-9) << t;
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreMap) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    Scene s = random_scene(rng);
    std::vector<double> before;
    for (int c = 0; c < 3; ++c) before.push_back(average_precision(s.dets, s.gts, c));
    for (auto& d : s.dets) d.det.score = 1.0 / (1.0 + std::exp(-5 * d.det.score)) * 0.5;
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(average_precision(s.dets, s.gts, c), before[static_cast<std::size_t>(c)]);
  }
}

TEST(AveragePrecision, ExtraFalsePositiveNeverHelps) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Scene s = random_scene(rng);
    const double before = average_precision(s.dets, s.gts, 0);
    // far outside every ground truth
    s.dets.push_back({99, {0, rng.uniform(0.0, 1.0), {0.0, 0.0, 0.1, 0.1}}});
    EXPECT_LE(average_precision(s.dets, s.gts, 0), before + 1e-12);
  }
}

TEST(MeanAveragePrecision, ExcludesAbsentClasses) {
  const std::vector<GroundTruth> gts{{0, 0, {0.0, 0.0, 0.2, 0.2}}, {0, 3, {0.5, 0.5, 0.7, 0.7}}};
  const std::vector<ImageDetection> dets{{0, {0, 0.9, {0.0, 0.0, 0.2, 0.2}}}, {0, {5, 0.9, {0.3, 0.3, 0.4, 0.4}}}};
  const auto r = mean_average_precision(dets, gts);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 1.0);
  EXPECT_DOUBLE_EQ(*r.per_class[3], 0.0);
  EXPECT_DOUBLE_EQ(*r.per_class[5], 0.0);
  EXPECT_FALSE(r.per_class[1].has_value());
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_FALSE(r.per_class[4].has_value());
  EXPECT_DOUBLE_EQ(r.mean, 1.0 / 3.0);
}

TEST(MeanAveragePrecision, IsMeanOfPerClass) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Scene s = random_scene(rng);
    const auto r = mean_average_precision(s.dets, s.gts);
    double sum = 0;
    int n = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!r.per_class[static_cast<std::size_t>(c)]) continue;
      EXPECT_DOUBLE_EQ(*r.per_class[static_cast<std::size_t>(c)], average_precision(s.dets, s.gts, c));
      sum += *r.per_class[static_cast<std::size_t>(c)];
      ++n;
    }
    EXPECT_DOUBLE_EQ(r.mean, n ? sum / n : 0.0);
  }
}

TEST(Ssim, IdentityAndSymmetry) {
  Rng rng(5);
  const auto a = random_tensor<float>({3, 24, 24}, rng), b = random_tensor<float>({3, 24, 24}, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_LT(ssim(a, b), 0.5);
  EXPECT_THROW(ssim(Tensor<float>({3, 8, 8}), Tensor<float>({3, 8, 8})), ShapeError);
  EXPECT_THROW(ssim(a, Tensor<float>({3, 24, 20})), ShapeError);
}

TEST(Ssim, ConstantImagesAreIdentical) {
  const Tensor<float> grey({3, 16, 16}, 0.2f);
  EXPECT_NEAR(ssim(grey, grey), 1.0, 1e-12);
}

TEST(ReconstructionAccuracy, CountsPairsAboveTau) {
  Rng rng(6);
  std::vector<ImageTensor> refs, same, inverted;
  for (int i = 0; i < 4; ++i) {
    auto t = random_tensor<float>({3, 32, 32}, rng);
    auto neg = t;
    for (auto& v : neg.values()) v = -v;
    refs.push_back(image_from(t));
    same.push_back(image_from(t));
    inverted.push_back(image_from(neg));
  }
  const auto ok = reconstruction_accuracy(same, refs, 0.5);
  EXPECT_DOUBLE_EQ(ok.accuracy, 100.0);
  EXPECT_NEAR(ok.mean_similarity, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(reconstruction_accuracy(inverted, refs, 0.5).accuracy, 0.0);
  std::vector<ImageTensor> mixed{same[0], inverted[1], same[2], inverted[3]};
  EXPECT_DOUBLE_EQ(reconstruction_accuracy(mixed, refs, 0.5).accuracy, 50.0);
  EXPECT_THROW(reconstruction_accuracy(std::vector<ImageTensor>(refs.begin(), refs.begin() + 3), refs), ArgumentError);
  EXPECT_THROW(reconstruction_accuracy({}, {}), ArgumentError);
  EXPECT_THROW(reconstruction_accuracy(same, refs, 1.0), ArgumentError);
}

TEST(Fps, SleepingStub) {
  const std::vector<int> images(10, 0);
  int calls = 0;
  const auto r = fps_benchmark(
      [&](int) {
        ++calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      },
      images, 1, 3);
  EXPECT_EQ(calls, 40);
  ASSERT_EQ(r.measurements.size(), 3u);
  EXPECT_NEAR(r.fps, 10.0, 2.0);
  EXPECT_FALSE(r.hardware.empty());
}

TEST(Fps, Errors) {
  auto noop = [](int) {};
  EXPECT_THROW(fps_benchmark(noop, std::vector<int>{}), ArgumentError);
  EXPECT_THROW(fps_benchmark(noop, std::vector<int>{1}, 0, 3), ArgumentError);
  EXPECT_THROW(fps_benchmark(noop, std::vector<int>{1}, 1, 0), ArgumentError);
}

namespace {

EvalReport sample_report() {
  EvalReport r;
  r.method = "m";
  r.dataset = "d";
  r.input_size = 64;
  r.per_class_ap = {89.6, 91.4, std::nullopt, 91.7, 84.1, 85.7};
  r.mean_ap = 88.5;
  r.fps = 12.25;
  r.fps_measurements = {12.0, 12.25, 13.0};
  r.hardware = "cpu";
  r.fps_note = "note";
  r.reconstruction_accuracy = 75.0;
  r.mean_similarity = 0.61;
  r.tau = 0.5;
  r.config_digest = "abc";
  return r;
}

}  // namespace

TEST(Report, JsonRoundTrip) {
  const EvalReport r = sample_report();
  EXPECT_EQ(report_from_json(to_json(r)), r);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(to_json(r).dump())), r);
  EvalReport empty = r;
  empty.reconstruction_accuracy.reset();
  empty.mean_similarity.reset();
  EXPECT_EQ(report_from_json(to_json(empty)), empty);
  auto broken = to_json(r);
  broken.erase("FPS");
  EXPECT_THROW(report_from_json(broken), ValidationError);
  EXPECT_TRUE(to_json(r).contains("traffic sign"));
}

TEST(Report, TableColumns) {
  const std::string table = detection_table(sample_report());
  const std::string header = table.substr(0, table.find('\n'));
  std::size_t pos = 0;
  for (const char* col : {"Method", "bike", "bus", "car", "people", "sign", "traffic sign", "FPS",
                          "Average mAP (%)"}) {
    const auto at = header.find(col, pos);
    ASSERT_NE(at, std::string::npos) << col;
    pos = at + 1;
  }
  EXPECT_NE(table.find("89.6"), std::string::npos);
  EXPECT_NE(table.find(" - "), std::string::npos);
  EXPECT_NE(table.find("12.2"), std::string::npos);

  const std::string recon = reconstruction_table(sample_report());
  EXPECT_NE(recon.find("Reconstruction Accuracy"), std::string::npos);
  EXPECT_NE(recon.find("64x64"), std::string::npos);
  EXPECT_NE(recon.find("75.0%"), std::string::npos);
}

TEST(Report, MeanComesFromPerClassValues) {
  // this row averages to 88.72
  MapResult map;
  const double row[] = {0.896, 0.914, 0.898, 0.917, 0.841, 0.857};
  double sum = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    map.per_class[static_cast<std::size_t>(c)] = row[c];
    sum += row[c];
  }
  map.mean = sum / kNumClasses;
  const auto r = make_report(map, FpsReport{}, std::nullopt);
  EXPECT_NEAR(r.mean_ap, 88.7166666, 1e-6);
  EXPECT_NE(detection_table(r).find("88.7"), std::string::npos);
}

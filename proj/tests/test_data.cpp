#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "nightday/data/datasets.hpp"
#include "nightday/data/preprocess.hpp"
#include "test_util.hpp"

using namespace nightday;
using testutil::TempDir;

namespace {

Image8 gradient_image(int w, int h) {
  Image8 img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 3 + c * 50) % 256);
  return img;
}

void write_images(const std::filesystem::path& dir, int n) {
  for (int i = 0; i < n; ++i) write_image(dir / ("img_" + std::to_string(100 + i) + ".png"), gradient_image(8, 8));
}

}  // namespace

TEST(UnpairedDataset, LoadsSortedPaths) {
  TempDir tmp;
  write_images(tmp / "night", 16);
  write_images(tmp / "day", 16);
  std::ofstream(tmp / "README.txt") << "not an image";
  const auto ds = load_unpaired_dataset(tmp / "night", tmp / "day");
  EXPECT_EQ(ds.domain_a_paths.size(), 16u);
  EXPECT_EQ(ds.domain_b_paths.size(), 16u);
  EXPECT_FALSE(ds.correspondences.has_value());
  EXPECT_TRUE(std::is_sorted(ds.domain_a_paths.begin(), ds.domain_a_paths.end()));
  const auto again = load_unpaired_dataset(tmp / "night", tmp / "day");
  EXPECT_EQ(ds.domain_a_paths, again.domain_a_paths);
}

TEST(UnpairedDataset, EmptyDirectoryIsDatasetError) {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "night");
  write_images(tmp / "day", 2);
  EXPECT_THROW(load_unpaired_dataset(tmp / "night", tmp / "day"), DatasetError);
  EXPECT_THROW(load_unpaired_dataset(tmp / "missing", tmp / "day"), DatasetError);
}

TEST(UnpairedDataset, Correspondences) {
  TempDir tmp;
  write_images(tmp / "night", 8);
  write_images(tmp / "day", 8);
  std::ofstream(tmp / "pairs.csv") << "0,0\n3,7\n\n";
  const auto ds = load_unpaired_dataset(tmp / "night", tmp / "day", tmp / "pairs.csv");
  ASSERT_TRUE(ds.correspondences);
  ASSERT_EQ(ds.correspondences->size(), 2u);
  EXPECT_EQ(ds.correspondences->at(1), (Correspondence{3, 7}));

  std::ofstream(tmp / "range.csv") << "0,8\n";
  EXPECT_THROW(load_unpaired_dataset(tmp / "night", tmp / "day", tmp / "range.csv"), DatasetError);
}

TEST(Correspondences, MalformedRowNamesLine) {
  std::istringstream in("1,2\n\n4;5\n");
  try {
    parse_correspondences(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream negative("1,-2\n");
  EXPECT_THROW(parse_correspondences(negative), ParseError);
}

TEST(DetectionManifest, ParsesRecords) {
  TempDir tmp;
  std::ofstream(tmp / "m.tsv") << "a.png\tcar,0.1,0.1,0.5,0.5\n"
                                    "b.png\t\n"
                                    "/abs/c.png\tbike,0,0,1,1;traffic_sign,0.2,0.3,0.4,0.5\n";
  const auto s = load_detection_dataset(tmp / "m.tsv");
  ASSERT_EQ(s.size(), 3u);
  ASSERT_EQ(s[0].boxes.size(), 1u);
  EXPECT_EQ(s[0].boxes[0].class_id, 2);
  EXPECT_EQ(s[0].boxes[0].box, (Box{0.1, 0.1, 0.5, 0.5}));
  EXPECT_EQ(s[0].image_path, tmp.path() / "a.png");
  EXPECT_TRUE(s[1].boxes.empty());
  EXPECT_EQ(s[2].image_path, std::filesystem::path("/abs/c.png"));
  EXPECT_EQ(s[2].boxes[1].class_id, 5);
}

TEST(DetectionManifest, RejectsInvalidBoxes) {
  TempDir tmp;
  std::ofstream(tmp / "bad.tsv") << "a.png\tcar,0.5,0.5,0.4,0.6\n";
  try {
    load_detection_dataset(tmp / "bad.tsv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("a.png"), std::string::npos);
  }
  std::ofstream(tmp / "vocab.tsv") << "a.png\ttruck,0.1,0.1,0.5,0.5\n";
  EXPECT_THROW(load_detection_dataset(tmp / "vocab.tsv"), VocabularyError);
  std::ofstream(tmp / "range.tsv") << "a.png\tcar,0.1,0.1,1.5,0.5\n";
  EXPECT_THROW(load_detection_dataset(tmp / "range.tsv"), ValidationError);
}

TEST(Preprocess, AffineMapOfExtremes) {
  for (auto target : {Target::translation, Target::detection}) {
    for (auto mode : {Mode::train, Mode::eval}) {
      const auto lo = preprocess(Image8(40, 30, 0), mode, target, 3).tensor();
      const auto hi = preprocess(Image8(40, 30, 255), mode, target, 3).tensor();
      for (float v : lo.values()) ASSERT_EQ(v, -1.0f);
      for (float v : hi.values()) ASSERT_EQ(v, 1.0f);
    }
  }
}

TEST(Preprocess, OutputSizes) {
  const Image8 img = gradient_image(50, 40);
  EXPECT_EQ(preprocess(img, Mode::train, Target::translation, 1).tensor().shape(), (std::vector<int>{3, 256, 256}));
  EXPECT_EQ(preprocess(img, Mode::eval, Target::translation, 1).tensor().shape(), (std::vector<int>{3, 256, 256}));
  EXPECT_EQ(preprocess(img, Mode::eval, Target::detection, 1).tensor().shape(), (std::vector<int>{3, 300, 300}));
  const PreprocessSizes small{72, 64, 128};
  EXPECT_EQ(preprocess(img, Mode::train, Target::translation, 1, small).tensor().shape(), (std::vector<int>{3, 64, 64}));
}

TEST(Preprocess, SeededAndPure) {
  const Image8 img = gradient_image(97, 61);
  const auto a = preprocess(img, Mode::train, Target::translation, 11);
  const auto b = preprocess(img, Mode::train, Target::translation, 11);
  EXPECT_EQ(a, b);
  bool any_diff = false;
  for (std::uint64_t s = 0; s < 8 && !any_diff; ++s)
    any_diff = !(preprocess(img, Mode::train, Target::translation, s) == a);
  EXPECT_TRUE(any_diff);
}

TEST(Preprocess, EmptyImageIsDecodeError) {
  EXPECT_THROW(preprocess(Image8{}, Mode::eval, Target::translation, 0), DecodeError);
}

TEST(Preprocess, DetectionFlipMovesBoxes) {
  Image8 img(64, 64, 0);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 16; ++x) img.at(x, y, 0) = 255;  // red band on the left
  const std::vector<LabeledBox> boxes{{1, Box{0.0, 0.0, 0.25, 1.0}}};
  int flipped = 0;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    const auto in = preprocess_detection(img, boxes, Mode::train, seed, {286, 256, 64});
    const bool moved = in.boxes[0].box.x_min > 0.5;
    const bool red_right = in.image.tensor().at(0, 32, 60) > 0.9f;
    EXPECT_EQ(moved, red_right);
    if (moved) {
      EXPECT_NEAR(in.boxes[0].box.x_min, 0.75, 1e-12);
      ++flipped;
    }
  }
  EXPECT_GT(flipped, 0);
  EXPECT_LT(flipped, 16);
}

TEST(Denormalize, Extremes) {
  const Image8 lo = denormalize(Tensor<float>({3, 2, 2}, -1.0f));
  const Image8 hi = denormalize(Tensor<float>({3, 2, 2}, 1.0f));
  for (auto p : lo.pixels) EXPECT_EQ(p, 0);
  for (auto p : hi.pixels) EXPECT_EQ(p, 255);
  EXPECT_THROW(denormalize(Tensor<float>({3, 1, 1}, std::nanf(""))), NumericError);
}

TEST(Denormalize, ExhaustiveRoundTrip) {
  Image8 img(256, 1);
  for (int v = 0; v < 256; ++v)
    for (int c = 0; c < 3; ++c) img.at(v, 0, c) = static_cast<std::uint8_t>(v);
  const PreprocessSizes sizes{256, 256, 300};
  Image8 wide = resize(img, 256, 256);
  const Image8 back = denormalize(preprocess(wide, Mode::eval, Target::translation, 0, sizes));
  for (std::size_t i = 0; i < back.pixels.size(); ++i)
    ASSERT_LE(std::abs(int(back.pixels[i]) - int(wide.pixels[i])), 1);
}

TEST(Denormalize, AfterEvalPreprocessWithinOne) {
  const Image8 img = gradient_image(90, 70);
  const Image8 resized = resize(img, 256, 256);
  const Image8 back = denormalize(preprocess(img, Mode::eval, Target::translation, 0));
  for (std::size_t i = 0; i < back.pixels.size(); ++i) ASSERT_LE(std::abs(int(back.pixels[i]) - int(resized.pixels[i])), 1);
}

TEST(Image, PngRoundTripAndFormats) {
  TempDir tmp;
  const Image8 img = gradient_image(13, 7);
  write_image(tmp / "x.png", img);
  EXPECT_EQ(read_image(tmp / "x.png"), img);
  EXPECT_TRUE(is_supported_image("a.JPG"));
  EXPECT_FALSE(is_supported_image("a.txt"));
  std::ofstream(tmp / "junk.png") << "garbage";
  EXPECT_THROW(read_image(tmp / "junk.png"), DecodeError);
}

TEST(ImageTensor, Invariants) {
  EXPECT_THROW(ImageTensor(Tensor<float>({1, 4, 4})), ShapeError);
  EXPECT_THROW(ImageTensor(Tensor<float>({3, 4, 4}, 1.5f)), NumericError);
  EXPECT_NO_THROW(ImageTensor(Tensor<float>({3, 4, 4}, -1.0f)));
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "uct/dataset.hpp"
#include "uct/errors.hpp"
#include "uct/image_io.hpp"
#include "uct/synth.hpp"

namespace fs = std::filesystem;

namespace {

using uct::Box;
using uct::DenseMap;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("uct_dataset_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "img");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_frames(const std::vector<std::string>& names) {
    for (std::size_t k = 0; k < names.size(); ++k)
      uct::write_pnm((dir_ / "img" / names[k]).string(), DenseMap(1, 4, 5, static_cast<double>(k) / 20.0));
  }
  void write_groundtruth(const std::string& text) { std::ofstream(dir_ / "groundtruth_rect.txt") << text; }

  fs::path dir_;
};

TEST(ParseGroundtruth, Separators) {
  const Box want{10, 20, 30, 40};
  EXPECT_EQ(uct::parse_groundtruth("10,20,30,40"), std::vector<Box>{want});
  EXPECT_EQ(uct::parse_groundtruth("10\t20\t30\t40"), std::vector<Box>{want});
  EXPECT_EQ(uct::parse_groundtruth("10 20  30 40\n"), std::vector<Box>{want});
  EXPECT_EQ(uct::parse_groundtruth("1.5,2.25,3,4\r\n\n5,6,7,8").size(), 2u);
}

TEST(ParseGroundtruth, ErrorsNameTheLine) {
  try {
    uct::parse_groundtruth("10,20,0,40");
    FAIL() << "expected rejection";
  } catch (const uct::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
  try {
    uct::parse_groundtruth("1,2,3,4\n1,2,x,4");
    FAIL() << "expected rejection";
  } catch (const uct::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(uct::parse_groundtruth(""), uct::DataError);
}

TEST(ParseGroundtruth, FormatRoundTrip) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.001, 500.0);
  std::vector<Box> boxes;
  for (int k = 0; k < 50; ++k) boxes.push_back({u(rng), u(rng), u(rng), u(rng)});
  EXPECT_EQ(uct::parse_groundtruth(uct::format_groundtruth(boxes)), boxes);
}

TEST(OneBased, ConversionIsInverse) {
  const Box b{3.5, 7, 10, 12};
  EXPECT_EQ(uct::from_one_based(b), (Box{2.5, 6, 10, 12}));
  EXPECT_EQ(uct::to_one_based(uct::from_one_based(b)), b);
}

TEST(SortFramePaths, NumericOrder) {
  std::vector<std::string> p = {"img010.jpg", "img002.jpg", "img1.jpg", "img009.jpg"};
  uct::sort_frame_paths(p);
  EXPECT_EQ(p, (std::vector<std::string>{"img1.jpg", "img002.jpg", "img009.jpg", "img010.jpg"}));
}

TEST_F(TempDir, LoadsThreeFrames) {
  write_frames({"0001.pgm", "0002.pgm", "0003.pgm"});
  write_groundtruth("1,1,2,2\n2,2,2,2\n3,3,2,2\n");
  const uct::Sequence s = uct::load_sequence(dir_.string());
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.boxes.size(), 3u);
  EXPECT_EQ(s.boxes[0], (Box{0, 0, 2, 2}));
  EXPECT_TRUE(s.warnings.empty());
  EXPECT_NEAR(s.frame(2)(0, 0), 0.1, 1.0 / 255.0);
}

TEST_F(TempDir, NumericFrameOrder) {
  std::vector<std::string> names;
  for (int k = 10; k >= 1; --k) names.push_back("img" + std::to_string(k) + ".pgm");
  write_frames(names);
  std::string gt;
  for (int k = 0; k < 10; ++k) gt += "1,1,2,2\n";
  write_groundtruth(gt);
  const uct::Sequence s = uct::load_sequence(dir_.string());
  ASSERT_EQ(s.size(), 10u);
  for (int k = 0; k < 10; ++k)
    EXPECT_EQ(fs::path(s.frame_paths[k]).filename().string(), "img" + std::to_string(k + 1) + ".pgm");
}

TEST_F(TempDir, FewerBoxesThanFramesWarns) {
  std::vector<std::string> names;
  for (int k = 1; k <= 10; ++k) names.push_back(std::to_string(k) + ".pgm");
  write_frames(names);
  std::string gt;
  for (int k = 0; k < 8; ++k) gt += "1,1,2,2\n";
  write_groundtruth(gt);
  const uct::Sequence s = uct::load_sequence(dir_.string());
  EXPECT_EQ(s.size(), 10u);
  EXPECT_EQ(s.boxes.size(), 8u);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST_F(TempDir, MissingGroundTruthIsDataError) {
  write_frames({"1.pgm"});
  EXPECT_THROW(uct::load_sequence(dir_.string()), uct::DataError);
}

TEST_F(TempDir, UnreadableFrameIsDataError) {
  write_frames({"1.pgm"});
  std::ofstream(dir_ / "img" / "2.pgm") << "P5\n garbage";
  write_groundtruth("1,1,2,2\n1,1,2,2\n");
  const uct::Sequence s = uct::load_sequence(dir_.string());
  EXPECT_THROW(s.frame(1), uct::DataError);
}

TEST_F(TempDir, ExportRoundTrip) {
  uct::SynthSpec spec;
  spec.frame_count = 4;
  spec.velocity = {1.25, -0.5};
  const uct::Sequence src = uct::generate_synthetic(spec).sequence;
  uct::export_sequence(src, (dir_ / "seq").string());
  const uct::Sequence back = uct::load_sequence((dir_ / "seq").string());
  ASSERT_EQ(back.size(), src.size());
  for (std::size_t k = 0; k < src.boxes.size(); ++k) {
    EXPECT_NEAR(back.boxes[k].x, src.boxes[k].x, 1e-12);
    EXPECT_NEAR(back.boxes[k].y, src.boxes[k].y, 1e-12);
    EXPECT_EQ(back.boxes[k].w, src.boxes[k].w);
  }
  const DenseMap f = back.frame(2);
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_NEAR(f.data()[k], src.frames[2].data()[k], 0.5 / 255.0 + 1e-12);
}

TEST(ImageIo, PnmRoundTripThreeChannels) {
  const fs::path p = fs::temp_directory_path() / "uct_rgb_roundtrip.ppm";
  DenseMap img(3, 2, 3);
  for (std::size_t k = 0; k < img.size(); ++k) img.data()[k] = static_cast<double>(k) / 17.0;
  uct::write_pnm(p.string(), img);
  const DenseMap back = uct::read_image(p.string());
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_NEAR(back.data()[k], img.data()[k], 0.5 / 255.0 + 1e-12);
  fs::remove(p);
}

TEST(Synthetic, StaticSpecGivesIdenticalBoxes) {
  uct::SynthSpec spec;
  spec.frame_count = 6;
  const auto s = uct::generate_synthetic(spec).sequence;
  for (const Box& b : s.boxes) EXPECT_EQ(b, s.boxes[0]);
}

TEST(Synthetic, ArithmeticMotion) {
  uct::SynthSpec spec;
  spec.frame_count = 10;
  spec.velocity = {2, 0};
  spec.start_center = uct::Point2{40, 60};
  const auto s = uct::generate_synthetic(spec).sequence;
  ASSERT_EQ(s.boxes.size(), 10u);
  for (std::size_t k = 1; k < 10; ++k) {
    EXPECT_NEAR(s.boxes[k].x - s.boxes[k - 1].x, 2.0, 1e-12);
    EXPECT_EQ(s.boxes[k].y, s.boxes[0].y);
  }
}

TEST(Synthetic, GeometricZoom) {
  uct::SynthSpec spec;
  spec.frame_count = 20;
  spec.zoom = 1.02;
  spec.object_size = {20, 20};
  const auto s = uct::generate_synthetic(spec).sequence;
  ASSERT_EQ(s.boxes.size(), 20u);
  EXPECT_NEAR(s.boxes.back().w, 20.0 * std::pow(1.02, 19), 1e-9);
}

TEST(Synthetic, BitwiseDeterministic) {
  uct::SynthSpec spec;
  spec.frame_count = 5;
  spec.velocity = {1, 1};
  spec.occlusion_first = 2;
  spec.occlusion_last = 3;
  spec.seed = 99;
  const auto a = uct::generate_synthetic(spec);
  const auto b = uct::generate_synthetic(spec);
  EXPECT_EQ(a.sequence.frames, b.sequence.frames);
  EXPECT_EQ(a.sequence.boxes, b.sequence.boxes);
  EXPECT_EQ(a.occluded, b.occluded);
  spec.seed = 100;
  EXPECT_NE(uct::generate_synthetic(spec).sequence.frames, a.sequence.frames);
}

TEST(Synthetic, OcclusionLeavesGroundTruthUnchanged) {
  uct::SynthSpec spec;
  spec.frame_count = 6;
  spec.velocity = {1, 0};
  const auto clear = uct::generate_synthetic(spec);
  spec.occlusion_first = 3;
  spec.occlusion_last = 4;
  const auto hidden = uct::generate_synthetic(spec);
  EXPECT_EQ(hidden.sequence.boxes, clear.sequence.boxes);
  EXPECT_EQ(hidden.occluded, (std::vector<bool>{false, false, true, true, false, false}));
  EXPECT_NE(hidden.sequence.frames[2], clear.sequence.frames[2]);
  EXPECT_EQ(hidden.sequence.frames[0], clear.sequence.frames[0]);
}

TEST(Synthetic, LeavingCanvasTruncates) {
  uct::SynthSpec spec;
  spec.frame_count = 100;
  spec.velocity = {5, 0};
  const auto s = uct::generate_synthetic(spec);
  EXPECT_TRUE(s.truncated);
  EXPECT_LT(s.sequence.size(), 100u);
  EXPECT_EQ(s.requested_frames, 100u);
}

TEST(Synthetic, BoxesStayOnCanvas) {
  for (const auto& spec : uct::random_specs(20, 30, 7, true)) {
    const auto s = uct::generate_synthetic(spec).sequence;
    for (const Box& b : s.boxes) {
      EXPECT_GE(b.x, 0.0);
      EXPECT_GE(b.y, 0.0);
      EXPECT_LE(b.x + b.w, static_cast<double>(spec.canvas_width));
      EXPECT_LE(b.y + b.h, static_cast<double>(spec.canvas_height));
    }
  }
}

TEST(Synthetic, InvalidSpecRejected) {
  uct::SynthSpec spec;
  spec.frame_count = 0;
  EXPECT_THROW(uct::generate_synthetic(spec), uct::InvalidArgument);
  spec.frame_count = 3;
  spec.zoom = 0.0;
  EXPECT_THROW(uct::generate_synthetic(spec), uct::InvalidArgument);
}

}  // namespace

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "uct/errors.hpp"
#include "uct/features.hpp"
#include "uct/tensor_ops.hpp"

namespace {

using uct::ConvLayer;
using uct::ConvStack;
using uct::DenseMap;

DenseMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w, double lo = -1.0,
                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseMap m(c, h, w);
  for (double& v : m.data()) v = u(rng);
  return m;
}

ConvLayer layer(DenseMap weights, std::size_t out, std::size_t in, std::size_t k, std::size_t stride, bool relu) {
  ConvLayer l;
  l.weights = std::move(weights);
  l.out_channels = out;
  l.in_channels = in;
  l.kernel = k;
  l.stride = stride;
  l.rectify = relu;
  return l;
}

TEST(CropAndResize, IdentityCrop) {
  std::mt19937_64 rng(1);
  const DenseMap img = random_map(rng, 1, 6, 9, 0.0, 1.0);
  const uct::Patch p = uct::crop_and_resize(img, {{4.5, 3.0}, {9.0, 6.0}}, 6, 9);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_NEAR(p.pixels.data()[k], img.data()[k], 1e-12);
  EXPECT_EQ(p.source_window.size.w, 9.0);
}

TEST(CropAndResize, BilinearMiddleColumn) {
  const DenseMap img = DenseMap::from_rows({{0, 1}, {0, 1}});
  const uct::Patch p = uct::crop_and_resize(img, {{1.0, 1.0}, {2.0, 2.0}}, 2, 3);
  ASSERT_EQ(p.pixels.width(), 3u);
  EXPECT_NEAR(p.pixels(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(p.pixels(1, 1), 0.5, 1e-12);
  EXPECT_LE(p.pixels(0, 0), p.pixels(0, 1));
  EXPECT_GE(p.pixels(0, 2), p.pixels(0, 1));
}

TEST(CropAndResize, OutsideWindowReplicatesCorner) {
  const DenseMap img = DenseMap::from_rows({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9}});
  const uct::Patch p = uct::crop_and_resize(img, {{50.0, 60.0}, {4.0, 4.0}}, 3, 3);
  for (double v : p.pixels.data()) EXPECT_DOUBLE_EQ(v, 0.9);
  const uct::Patch q = uct::crop_and_resize(img, {{-40.0, -9.0}, {2.0, 5.0}}, 2, 2);
  for (double v : q.pixels.data()) EXPECT_DOUBLE_EQ(v, 0.1);
}

TEST(CropAndResize, IdempotentOnExactWindow) {
  std::mt19937_64 rng(2);
  const DenseMap img = random_map(rng, 3, 8, 8, 0.0, 1.0);
  const uct::Window w{{4.0, 4.0}, {8.0, 8.0}};
  const uct::Patch once = uct::crop_and_resize(img, w, 8, 8);
  const uct::Patch twice = uct::crop_and_resize(once.pixels, w, 8, 8);
  for (std::size_t k = 0; k < img.size(); ++k) EXPECT_NEAR(twice.pixels.data()[k], once.pixels.data()[k], 1e-12);
}

TEST(CropAndResize, RejectsEmptyImageAndBadSizes) {
  EXPECT_THROW(uct::crop_and_resize(DenseMap(), {{1, 1}, {2, 2}}, 2, 2), uct::InvalidArgument);
  EXPECT_THROW(uct::crop_and_resize(DenseMap(1, 4, 4), {{1, 1}, {0, 2}}, 2, 2), uct::InvalidArgument);
  EXPECT_THROW(uct::crop_and_resize(DenseMap(1, 4, 4), {{1, 1}, {2, 2}}, 0, 2), uct::InvalidArgument);
}

TEST(Grayscale, LuminanceWeights) {
  DenseMap rgb(3, 1, 1);
  rgb(0, 0, 0) = 1.0;
  rgb(1, 0, 0) = 0.5;
  rgb(2, 0, 0) = 0.25;
  EXPECT_NEAR(uct::to_grayscale(rgb)(0, 0), 0.299 + 0.587 * 0.5 + 0.114 * 0.25, 1e-12);
}

TEST(Extract, EmptyStackIsIdentity) {
  std::mt19937_64 rng(3);
  const DenseMap x = random_map(rng, 3, 5, 5);
  EXPECT_EQ(uct::extract(x, ConvStack()), x);
}

TEST(Extract, OneByOneScaling) {
  std::mt19937_64 rng(4);
  const DenseMap x = random_map(rng, 1, 4, 6);
  const ConvStack s({layer(DenseMap::from_rows({{2}}), 1, 1, 1, 1, false)});
  DenseMap want = x;
  want *= 2.0;
  EXPECT_EQ(uct::extract(x, s), want);
}

TEST(Extract, AveragingOnConstantPatch) {
  const DenseMap x(1, 7, 7, 0.3);
  const ConvStack s({layer(DenseMap(1, 3, 3, 1.0 / 9.0), 1, 1, 3, 1, false)});
  const DenseMap out = uct::extract(x, s);
  EXPECT_EQ(out.height(), 5u);
  for (double v : out.data()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Extract, StridedOutputSizeAndRectifier) {
  const DenseMap x(1, 13, 13, 1.0);
  const ConvStack s({layer(DenseMap(2, 3, 3, -1.0), 2, 1, 3, 2, true)});
  const DenseMap out = uct::extract(x, s);
  EXPECT_EQ(out.channels(), 2u);
  EXPECT_EQ(out.height(), 6u);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(s.total_stride(), 2u);
}

TEST(Extract, RejectsTooSmallPatchWithMinimum) {
  const ConvStack s = ConvStack::random(1, uct::parse_layer_specs("4:5:2:relu,4:3:2:relu"), 1);
  try {
    uct::extract(DenseMap(1, 6, 6), s);
    FAIL() << "expected rejection";
  } catch (const uct::InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(s.min_input_size())), std::string::npos) << e.what();
  }
}

TEST(LayerSpecs, ParseFormatRoundTrip) {
  const auto specs = uct::parse_layer_specs("8:3:2:relu,16:3:2:linear");
  ASSERT_EQ(specs.size(), 2u);
  EXPECT_EQ(specs[0], (uct::LayerSpec{8, 3, 2, true}));
  EXPECT_EQ(specs[1], (uct::LayerSpec{16, 3, 2, false}));
  EXPECT_EQ(uct::parse_layer_specs(uct::format_layer_specs(specs)), specs);
  EXPECT_TRUE(uct::parse_layer_specs("raw").empty());
  EXPECT_THROW(uct::parse_layer_specs("8:3"), uct::InvalidArgument);
}

TEST(ApplyWindow, Examples) {
  const DenseMap f = DenseMap::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(uct::apply_window(f, DenseMap(1, 2, 2, 1.0)), f);
  EXPECT_EQ(uct::apply_window(f, DenseMap(1, 2, 2, 0.0)), DenseMap(1, 2, 2, 0.0));
  EXPECT_EQ(uct::apply_window(f, DenseMap::from_rows({{1, 0}, {0, 1}})), DenseMap::from_rows({{1, 0}, {0, 4}}));
  EXPECT_THROW(uct::apply_window(f, DenseMap(1, 3, 2, 1.0)), uct::InvalidArgument);
}

TEST(ApplyWindow, PreservesDominantPeak) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> cell(2, 12);
  for (int n = 0; n < 30; ++n) {
    const DenseMap hann = uct::hann2d(15, 15);
    DenseMap f = random_map(rng, 1, 15, 15, 0.0, 0.1);
    const std::size_t pi = cell(rng), pj = cell(rng);
    // Attenuation ratio of the window: peak must beat every other cell by more than 1/hann(peak).
    f(pi, pj) = 0.1 / hann(pi, pj) * 1.01 + 0.01;
    const uct::MapStats s = uct::map_stats(uct::apply_window(f, hann));
    EXPECT_EQ(s.max_pos, (uct::CellIndex{pi, pj}));
  }
}

TEST(BackwardStack, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(6);
  const ConvStack s = ConvStack::random(1, uct::parse_layer_specs("3:3:1:relu,2:3:2:linear"), 2);
  const DenseMap x = random_map(rng, 1, 11, 11);
  const uct::StackTrace t = uct::extract_traced(x, s);
  for (const DenseMap& g : uct::backward_stack(s, t, DenseMap(t.output.channels(), t.output.height(), t.output.width())))
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(BackwardStack, OneByOneIdentityLayer) {
  const DenseMap x = DenseMap::from_rows({{1, 2}, {3, 4}});
  const DenseMap g = DenseMap::from_rows({{0.5, -1}, {2, 0.25}});
  const ConvStack s({layer(DenseMap::from_rows({{1}}), 1, 1, 1, 1, false)});
  const auto grads = uct::backward_stack(s, uct::extract_traced(x, s), g);
  ASSERT_EQ(grads.size(), 1u);
  EXPECT_DOUBLE_EQ(grads[0](0, 0), 0.5 * 1 - 1 * 2 + 2 * 3 + 0.25 * 4);
}

TEST(BackwardStack, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const char* configs[] = {"2:3:1:relu", "3:3:2:relu,2:2:1:linear", "2:2:1:linear,3:3:1:relu", "4:3:1:relu,2:3:1:relu"};
  for (const char* spec : configs) {
    for (int n = 0; n < 5; ++n) {
      ConvStack s = ConvStack::random(2, uct::parse_layer_specs(spec), rng());
      const std::size_t side = 8 + rng() % 5;
      const DenseMap x = random_map(rng, 2, side, side);
      const uct::StackTrace t = uct::extract_traced(x, s);
      const DenseMap up = random_map(rng, t.output.channels(), t.output.height(), t.output.width());
      const auto grads = uct::backward_stack(s, t, up);
      auto objective = [&](const ConvStack& st) {
        const DenseMap out = uct::extract(x, st);
        double v = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) v += out.data()[k] * up.data()[k];
        return v;
      };
      const double eps = 1e-5;
      for (std::size_t l = 0; l < s.layers().size(); ++l) {
        for (std::size_t k = 0; k < s.layers()[l].weights.size(); ++k) {
          ConvStack plus = s, minus = s;
          plus.layers()[l].weights.data()[k] += eps;
          minus.layers()[l].weights.data()[k] -= eps;
          const double numeric = (objective(plus) - objective(minus)) / (2 * eps);
          const double analytic = grads[l].data()[k];
          const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
          // A rectifier input within eps of zero makes the central difference straddle the kink.
          if (std::abs(numeric - analytic) / denom > 1e-4) {
            bool near_kink = false;
            for (std::size_t m = 0; m < t.pre_activations.size(); ++m)
              for (double v : t.pre_activations[m].data()) near_kink |= std::abs(v) < 1e-3;
            EXPECT_TRUE(near_kink) << spec << " layer " << l << " weight " << k << ": " << analytic << " vs "
                                   << numeric;
          }
        }
      }
    }
  }
}

TEST(EnergyNormalization, TargetMeanSquareAndBackward) {
  std::mt19937_64 rng(8);
  const DenseMap z = random_map(rng, 2, 4, 4);
  const uct::EnergyNormalized e = uct::normalize_energy(z, 2.5);
  EXPECT_NEAR(e.output.squared_norm() / static_cast<double>(z.size()), 2.5, 1e-12);
  const DenseMap up = random_map(rng, 2, 4, 4);
  const DenseMap g = uct::normalize_energy_backward(e, up);
  const double eps = 1e-6;
  for (std::size_t k = 0; k < z.size(); ++k) {
    DenseMap zp = z, zm = z;
    zp.data()[k] += eps;
    zm.data()[k] -= eps;
    auto f = [&](const DenseMap& m) {
      const DenseMap o = uct::normalize_energy(m, 2.5).output;
      double v = 0.0;
      for (std::size_t q = 0; q < o.size(); ++q) v += o.data()[q] * up.data()[q];
      return v;
    };
    EXPECT_NEAR(g.data()[k], (f(zp) - f(zm)) / (2 * eps), 1e-6);
  }
}

TEST(StackIo, RoundTripIsExact) {
  const ConvStack s = ConvStack::random(3, uct::parse_layer_specs("4:3:2:relu,5:3:1:linear"), 9);
  std::stringstream buf;
  uct::write_stack(buf, s);
  EXPECT_EQ(uct::read_stack(buf), s);
}

}  // namespace

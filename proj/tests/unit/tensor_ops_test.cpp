#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "uct/dense_map.hpp"
#include "uct/errors.hpp"
#include "uct/tensor_ops.hpp"

namespace {

using uct::DenseMap;

DenseMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMap m(c, h, w);
  for (double& v : m.data()) v = u(rng);
  return m;
}

DenseMap nested_loop_xcorr(const DenseMap& x, const DenseMap& f) {
  DenseMap out(1, x.height() - f.height() + 1, x.width() - f.width() + 1);
  for (std::size_t i = 0; i < out.height(); ++i)
    for (std::size_t j = 0; j < out.width(); ++j)
      for (std::size_t l = 0; l < x.channels(); ++l)
        for (std::size_t u = 0; u < f.height(); ++u)
          for (std::size_t v = 0; v < f.width(); ++v) out(0, i, j) += x(l, i + u, j + v) * f(l, u, v);
  return out;
}

void expect_map_near(const DenseMap& a, const DenseMap& b, double tol) {
  ASSERT_TRUE(a.same_shape(b)) << a.shape_string() << " vs " << b.shape_string();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.data()[k], b.data()[k], tol) << "cell " << k;
}

TEST(Xcorr, IdentityDiagonalFilter) {
  const DenseMap x = DenseMap::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const DenseMap f = DenseMap::from_rows({{1, 0}, {0, 1}});
  EXPECT_EQ(uct::xcorr2d_valid(x, f), DenseMap::from_rows({{6, 8}, {12, 14}}));
}

TEST(Xcorr, UnitFilterReturnsInput) {
  std::mt19937_64 rng(3);
  const DenseMap x = random_map(rng, 1, 5, 7);
  EXPECT_EQ(uct::xcorr2d_valid(x, DenseMap::from_rows({{1}})), x);
}

TEST(Xcorr, ZeroSecondChannelMatchesFirstChannelResult) {
  std::mt19937_64 rng(4);
  DenseMap x = random_map(rng, 2, 6, 6);
  DenseMap f = random_map(rng, 2, 3, 3);
  for (double& v : f.channel(1)) v = 0.0;
  DenseMap x0(1, 6, 6), f0(1, 3, 3);
  std::copy(x.channel(0).begin(), x.channel(0).end(), x0.data().begin());
  std::copy(f.channel(0).begin(), f.channel(0).end(), f0.data().begin());
  expect_map_near(uct::xcorr2d_valid(x, f), uct::xcorr2d_valid(x0, f0), 1e-12);
}

TEST(Xcorr, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 100; ++n) {
    const std::size_t c = 1 + rng() % 4, h = 1 + rng() % 16, w = 1 + rng() % 16;
    const std::size_t fh = 1 + rng() % h, fw = 1 + rng() % w;
    const DenseMap x = random_map(rng, c, h, w);
    const DenseMap f = random_map(rng, c, fh, fw);
    const DenseMap got = uct::xcorr2d_valid(x, f);
    const DenseMap want = nested_loop_xcorr(x, f);
    ASSERT_TRUE(got.same_shape(want));
    for (std::size_t k = 0; k < got.size(); ++k) {
      const double scale = std::max(1.0, std::abs(want.data()[k]));
      EXPECT_LE(std::abs(got.data()[k] - want.data()[k]) / scale, 1e-9);
    }
  }
}

TEST(Xcorr, LinearInFilter) {
  std::mt19937_64 rng(12);
  const DenseMap x = random_map(rng, 3, 9, 8);
  const DenseMap f = random_map(rng, 3, 4, 3);
  const DenseMap g = random_map(rng, 3, 4, 3);
  const double a = 0.7, b = -1.3;
  DenseMap combo = f;
  combo *= a;
  DenseMap gb = g;
  gb *= b;
  combo += gb;
  DenseMap want = uct::xcorr2d_valid(x, f);
  want *= a;
  DenseMap rg = uct::xcorr2d_valid(x, g);
  rg *= b;
  want += rg;
  expect_map_near(uct::xcorr2d_valid(x, combo), want, 1e-9);
}

TEST(Xcorr, LinearInInput) {
  std::mt19937_64 rng(13);
  const DenseMap x = random_map(rng, 2, 7, 7);
  const DenseMap y = random_map(rng, 2, 7, 7);
  const DenseMap f = random_map(rng, 2, 3, 3);
  DenseMap sum = x;
  sum += y;
  DenseMap want = uct::xcorr2d_valid(x, f);
  want += uct::xcorr2d_valid(y, f);
  expect_map_near(uct::xcorr2d_valid(sum, f), want, 1e-9);
}

TEST(Xcorr, RejectsMismatchedShapes) {
  EXPECT_THROW(uct::xcorr2d_valid(DenseMap(1, 3, 3), DenseMap(2, 2, 2)), uct::InvalidArgument);
  EXPECT_THROW(uct::xcorr2d_valid(DenseMap(1, 3, 3), DenseMap(1, 4, 2)), uct::InvalidArgument);
  try {
    uct::xcorr2d_valid(DenseMap(1, 3, 3), DenseMap(1, 4, 2));
  } catch (const uct::InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
}

TEST(Xcorr, GradientsAreAdjointOfForward) {
  // <r, xcorr(x, f)> is bilinear, so each gradient must reproduce it by an inner product.
  std::mt19937_64 rng(14);
  const DenseMap x = random_map(rng, 3, 8, 9);
  const DenseMap f = random_map(rng, 3, 3, 4);
  const DenseMap out = uct::xcorr2d_valid(x, f);
  const DenseMap r = random_map(rng, 1, out.height(), out.width());
  double forward = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) forward += r.data()[k] * out.data()[k];
  const DenseMap gf = uct::xcorr2d_filter_grad(x, r, 3, 4);
  const DenseMap gx = uct::xcorr2d_input_grad(r, f, 8, 9);
  double via_f = 0.0, via_x = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) via_f += gf.data()[k] * f.data()[k];
  for (std::size_t k = 0; k < x.size(); ++k) via_x += gx.data()[k] * x.data()[k];
  EXPECT_NEAR(via_f, forward, 1e-10);
  EXPECT_NEAR(via_x, forward, 1e-10);
}

TEST(Hann, ThreeByThree) {
  expect_map_near(uct::hann2d(3, 3), DenseMap::from_rows({{0, 0, 0}, {0, 1, 0}, {0, 0, 0}}), 1e-15);
}

TEST(Hann, DegenerateIsOne) { EXPECT_EQ(uct::hann2d(1, 1), DenseMap::from_rows({{1}})); }

TEST(Hann, FiveByOneColumn) {
  const DenseMap h = uct::hann2d(5, 1);
  ASSERT_EQ(h.height(), 5u);
  const double want[] = {0, 0.5, 1, 0.5, 0};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(h(i, 0), want[i], 1e-15);
}

TEST(Hann, SymmetricUnderFlipsAndBounded) {
  for (std::size_t h : {2u, 5u, 8u, 13u}) {
    for (std::size_t w : {1u, 4u, 9u}) {
      const DenseMap m = uct::hann2d(h, w);
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          EXPECT_NEAR(m(i, j), m(h - 1 - i, j), 1e-15);
          EXPECT_NEAR(m(i, j), m(i, w - 1 - j), 1e-15);
          EXPECT_GE(m(i, j), 0.0);
          EXPECT_LE(m(i, j), 1.0);
        }
      }
    }
  }
}

TEST(GaussianLabel, PeakAxisAndCorner) {
  const DenseMap y = uct::gaussian_label(5, 5, {2, 2}, {1.7, 0.4});
  EXPECT_DOUBLE_EQ(y(2, 2), 1.0);
  const DenseMap u = uct::gaussian_label(5, 5, {2, 2}, {1, 1});
  EXPECT_NEAR(u(3, 2), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(u(2, 1), 0.60653, 1e-5);
  const DenseMap c = uct::gaussian_label(3, 3, {1, 1}, {1, 1});
  EXPECT_NEAR(c(0, 0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(c(2, 2), 0.36788, 1e-5);
}

TEST(GaussianLabel, RejectsNonPositiveSigma) {
  EXPECT_THROW(uct::gaussian_label(3, 3, {1, 1}, {0, 1}), uct::InvalidArgument);
  EXPECT_THROW(uct::gaussian_label(3, 3, {1, 1}, {1, -2}), uct::InvalidArgument);
}

TEST(GaussianLabel, PeaksAtNearestCellAndDecaysAlongRays) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0.0, 10.0), sig(0.3, 3.0);
  for (int n = 0; n < 50; ++n) {
    const uct::RealCell c{pos(rng), pos(rng)};
    const DenseMap y = uct::gaussian_label(11, 11, c, {sig(rng), sig(rng)});
    const uct::MapStats s = uct::map_stats(y);
    EXPECT_EQ(s.max_pos.row, static_cast<std::size_t>(std::lround(c.row)));
    EXPECT_EQ(s.max_pos.col, static_cast<std::size_t>(std::lround(c.col)));
    for (double v : y.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const std::size_t pr = s.max_pos.row, pc = s.max_pos.col;
    for (std::size_t j = pc + 1; j < 11; ++j) EXPECT_LE(y(pr, j), y(pr, j - 1));
    for (std::size_t j = pc; j-- > 0;) EXPECT_LE(y(pr, j), y(pr, j + 1));
    for (std::size_t i = pr + 1; i < 11; ++i) EXPECT_LE(y(i, pc), y(i - 1, pc));
    for (std::size_t i = pr; i-- > 0;) EXPECT_LE(y(i, pc), y(i + 1, pc));
  }
}

TEST(MapStats, Examples) {
  const uct::MapStats a = uct::map_stats(DenseMap::from_rows({{1, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(a.max_value, 1.0);
  EXPECT_EQ(a.max_pos, (uct::CellIndex{0, 0}));
  EXPECT_EQ(a.min_value, 0.5);
  EXPECT_EQ(a.mean_excluding_max, 0.5);

  const uct::MapStats u = uct::map_stats(DenseMap(1, 3, 4, 0.25));
  EXPECT_EQ(u.max_value, 0.25);
  EXPECT_EQ(u.min_value, 0.25);
  EXPECT_DOUBLE_EQ(u.mean_excluding_max, 0.25);

  const uct::MapStats t = uct::map_stats(DenseMap::from_rows({{3, 3}, {0, 0}}));
  EXPECT_EQ(t.max_pos, (uct::CellIndex{0, 0}));
  EXPECT_DOUBLE_EQ(t.mean_excluding_max, 1.0);
}

TEST(MapStats, RejectsSingleCell) {
  EXPECT_THROW(uct::map_stats(DenseMap::from_rows({{1}})), uct::InvalidArgument);
}

TEST(MapStats, MaxPlusRestEqualsTotal) {
  std::mt19937_64 rng(22);
  for (int n = 0; n < 50; ++n) {
    const DenseMap r = random_map(rng, 1, 2 + rng() % 9, 1 + rng() % 9);
    const uct::MapStats s = uct::map_stats(r);
    const double rest = s.mean_excluding_max * static_cast<double>(r.size() - 1);
    EXPECT_NEAR(s.max_value + rest, r.sum(), 1e-9);
    EXPECT_GE(s.max_value, s.min_value);
    EXPECT_EQ(r(s.max_pos.row, s.max_pos.col), s.max_value);
  }
}

TEST(DenseMapIo, RoundTripIsExact) {
  std::mt19937_64 rng(23);
  const DenseMap m = random_map(rng, 3, 4, 5);
  std::stringstream buf;
  uct::write_map(buf, m);
  EXPECT_EQ(uct::read_map(buf), m);
}

}  // namespace

#include "uct/tensor_ops.hpp"

#include <cmath>
#include <numbers>

#include "uct/errors.hpp"

namespace uct {

namespace {

void require_correlatable(const DenseMap& x, const DenseMap& f) {
  if (x.empty() || f.empty() || x.channels() != f.channels() || f.height() > x.height() ||
      f.width() > x.width()) {
    throw InvalidArgument("xcorr2d_valid: incompatible shapes x=" + x.shape_string() +
                          " f=" + f.shape_string());
  }
}

}  // namespace

DenseMap xcorr2d_valid(const DenseMap& x, const DenseMap& f) {
  require_correlatable(x, f);
  const std::size_t oh = x.height() - f.height() + 1;
  const std::size_t ow = x.width() - f.width() + 1;
  const std::size_t xw = x.width();
  DenseMap out(1, oh, ow);
  double* o = out.data().data();
  for (std::size_t l = 0; l < x.channels(); ++l) {
    const double* xl = x.channel(l).data();
    for (std::size_t u = 0; u < f.height(); ++u) {
      for (std::size_t v = 0; v < f.width(); ++v) {
        const double w = f(l, u, v);
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < oh; ++i) {
          const double* xr = xl + (i + u) * xw + v;
          double* orow = o + i * ow;
          for (std::size_t j = 0; j < ow; ++j) orow[j] += w * xr[j];
        }
      }
    }
  }
  return out;
}

DenseMap xcorr2d_filter_grad(const DenseMap& x, const DenseMap& residual, std::size_t fh, std::size_t fw) {
  if (residual.channels() != 1 || fh == 0 || fw == 0 || fh > x.height() || fw > x.width() ||
      residual.height() != x.height() - fh + 1 || residual.width() != x.width() - fw + 1) {
    throw InvalidArgument("xcorr2d_filter_grad: residual " + residual.shape_string() +
                          " incompatible with x " + x.shape_string() + " and filter " +
                          std::to_string(fh) + "x" + std::to_string(fw));
  }
  const std::size_t oh = residual.height();
  const std::size_t ow = residual.width();
  const std::size_t xw = x.width();
  const double* r = residual.data().data();
  DenseMap g(x.channels(), fh, fw);
  for (std::size_t l = 0; l < x.channels(); ++l) {
    const double* xl = x.channel(l).data();
    for (std::size_t u = 0; u < fh; ++u) {
      for (std::size_t v = 0; v < fw; ++v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < oh; ++i) {
          const double* xr = xl + (i + u) * xw + v;
          const double* rr = r + i * ow;
          for (std::size_t j = 0; j < ow; ++j) acc += rr[j] * xr[j];
        }
        g(l, u, v) = acc;
      }
    }
  }
  return g;
}

DenseMap xcorr2d_input_grad(const DenseMap& residual, const DenseMap& f, std::size_t xh, std::size_t xw) {
  if (residual.channels() != 1 || f.height() > xh || f.width() > xw ||
      residual.height() != xh - f.height() + 1 || residual.width() != xw - f.width() + 1) {
    throw InvalidArgument("xcorr2d_input_grad: residual " + residual.shape_string() +
                          " incompatible with filter " + f.shape_string() + " and input " +
                          std::to_string(xh) + "x" + std::to_string(xw));
  }
  const std::size_t oh = residual.height();
  const std::size_t ow = residual.width();
  const double* r = residual.data().data();
  DenseMap g(f.channels(), xh, xw);
  for (std::size_t l = 0; l < f.channels(); ++l) {
    double* gl = g.channel(l).data();
    for (std::size_t u = 0; u < f.height(); ++u) {
      for (std::size_t v = 0; v < f.width(); ++v) {
        const double w = f(l, u, v);
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < oh; ++i) {
          double* gr = gl + (i + u) * xw + v;
          const double* rr = r + i * ow;
          for (std::size_t j = 0; j < ow; ++j) gr[j] += w * rr[j];
        }
      }
    }
  }
  return g;
}

namespace {

double hann_tap(std::size_t i, std::size_t n) {
  if (n == 1) return 1.0;
  return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
}

}  // namespace

DenseMap hann2d(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw InvalidArgument("hann2d: dimensions must be positive");
  DenseMap out(1, height, width);
  for (std::size_t i = 0; i < height; ++i) {
    const double wi = hann_tap(i, height);
    for (std::size_t j = 0; j < width; ++j) out(i, j) = wi * hann_tap(j, width);
  }
  return out;
}

DenseMap gaussian_label(std::size_t height, std::size_t width, RealCell center, RealCell sigma) {
  if (!(sigma.row > 0.0) || !(sigma.col > 0.0)) {
    throw InvalidArgument("gaussian_label: sigmas must be positive");
  }
  if (height == 0 || width == 0) throw InvalidArgument("gaussian_label: dimensions must be positive");
  DenseMap out(1, height, width);
  const double kr = 1.0 / (2.0 * sigma.row * sigma.row);
  const double kc = 1.0 / (2.0 * sigma.col * sigma.col);
  for (std::size_t i = 0; i < height; ++i) {
    const double di = static_cast<double>(i) - center.row;
    for (std::size_t j = 0; j < width; ++j) {
      const double dj = static_cast<double>(j) - center.col;
      out(i, j) = std::exp(-(di * di * kr + dj * dj * kc));
    }
  }
  return out;
}

MapStats map_stats(const DenseMap& r) {
  if (r.channels() != 1 || r.size() < 2) {
    throw InvalidArgument("map_stats: need a single-channel map with at least 2 cells, got " + r.shape_string());
  }
  const auto data = r.data();
  std::size_t best = 0;
  double mn = data[0];
  double total = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data[k] > data[best]) best = k;
    if (data[k] < mn) mn = data[k];
    total += data[k];
  }
  MapStats s;
  s.max_value = data[best];
  s.max_pos = {best / r.width(), best % r.width()};
  s.min_value = mn;
  s.mean_excluding_max = (total - data[best]) / static_cast<double>(data.size() - 1);
  return s;
}

}  // namespace uct

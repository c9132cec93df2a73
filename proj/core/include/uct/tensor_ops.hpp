#pragma once

#include <cstddef>

#include "uct/dense_map.hpp"

namespace uct {

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct RealCell {
  double row = 0.0;
  double col = 0.0;
};

struct MapStats {
  double max_value = 0.0;
  CellIndex max_pos;
  double min_value = 0.0;
  double mean_excluding_max = 0.0;
};

/// Valid-mode multi-channel cross-correlation (no kernel flip), summed over
/// channels: out(i,j) = sum_l sum_{u,v} x(l, i+u, j+v) * f(l, u, v).
DenseMap xcorr2d_valid(const DenseMap& x, const DenseMap& f);

/// Gradient of sum(residual * xcorr2d_valid(x, f)) with respect to f.
/// Output has x.channels() channels and size fh x fw.
DenseMap xcorr2d_filter_grad(const DenseMap& x, const DenseMap& residual, std::size_t fh, std::size_t fw);

/// Gradient of sum(residual * xcorr2d_valid(x, f)) with respect to x
/// (transposed correlation). Output has f's channel count and size xh x xw.
DenseMap xcorr2d_input_grad(const DenseMap& residual, const DenseMap& f, std::size_t xh, std::size_t xw);

/// Outer product of 1-D Hann windows; a dimension of length 1 is all ones.
DenseMap hann2d(std::size_t height, std::size_t width);

/// exp(-((i-cr)^2 / (2 sr^2) + (j-cc)^2 / (2 sc^2))) over an h x w grid.
DenseMap gaussian_label(std::size_t height, std::size_t width, RealCell center, RealCell sigma);

/// Max (ties to lowest row-major index), min, and mean of all cells except
/// the chosen max cell. Requires a single-channel map with >= 2 cells.
MapStats map_stats(const DenseMap& r);

}  // namespace uct

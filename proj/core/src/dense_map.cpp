#include "uct/dense_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uct/binary_io.hpp"
#include "uct/errors.hpp"

namespace uct {

DenseMap::DenseMap(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {
  if (channels == 0 || height == 0 || width == 0) {
    throw InvalidArgument("DenseMap dimensions must be positive, got " + std::to_string(channels) +
                          "x" + std::to_string(height) + "x" + std::to_string(width));
  }
}

DenseMap DenseMap::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0 || rows.begin()->size() == 0) throw InvalidArgument("from_rows: empty rows");
  DenseMap map(1, rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != map.width()) throw InvalidArgument("from_rows: ragged rows");
    std::copy(row.begin(), row.end(), map.data_.begin() + static_cast<std::ptrdiff_t>(i * map.width()));
    ++i;
  }
  return map;
}

std::string DenseMap::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
}

bool DenseMap::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double DenseMap::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double DenseMap::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

void DenseMap::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

DenseMap& DenseMap::operator+=(const DenseMap& other) {
  if (!same_shape(other)) throw InvalidArgument("shape mismatch: " + shape_string() + " vs " + other.shape_string());
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMap& DenseMap::operator-=(const DenseMap& other) {
  if (!same_shape(other)) throw InvalidArgument("shape mismatch: " + shape_string() + " vs " + other.shape_string());
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMap& DenseMap::operator*=(double scale) noexcept {
  for (double& v : data_) v *= scale;
  return *this;
}

void write_map(std::ostream& out, const DenseMap& map) {
  binary::write_u32(out, static_cast<std::uint32_t>(map.channels()));
  binary::write_u32(out, static_cast<std::uint32_t>(map.height()));
  binary::write_u32(out, static_cast<std::uint32_t>(map.width()));
  for (double v : map.data()) binary::write_f64(out, v);
}

DenseMap read_map(std::istream& in) {
  const auto c = binary::read_u32(in);
  const auto h = binary::read_u32(in);
  const auto w = binary::read_u32(in);
  if (c == 0 || h == 0 || w == 0) throw DataError("serialized map has a zero dimension");
  if (static_cast<std::uint64_t>(c) * h * w > (1ull << 28)) throw DataError("serialized map is implausibly large");
  DenseMap map(c, h, w);
  for (double& v : map.data()) v = binary::read_f64(in);
  return map;
}

}  // namespace uct

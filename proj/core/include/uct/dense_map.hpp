#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace uct {

/// Multi-channel real-valued 2-D array stored channel-major, then row-major.
///
/// Holds images, patches, feature maps, filters, labels and response maps.
/// Element (c, i, j) lives at data()[(c * height + i) * width + j].
class DenseMap {
 public:
  DenseMap() = default;
  DenseMap(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);

  /// Single-channel map from nested rows; all rows must have equal length.
  static DenseMap from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t i, std::size_t j) noexcept {
    return data_[(c * height_ + i) * width_ + j];
  }
  double operator()(std::size_t c, std::size_t i, std::size_t j) const noexcept {
    return data_[(c * height_ + i) * width_ + j];
  }
  /// Single-channel shorthand.
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * width_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * width_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> channel(std::size_t c) noexcept {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> channel(std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const DenseMap& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  bool all_finite() const noexcept;
  double sum() const noexcept;
  double squared_norm() const noexcept;

  void fill(double value) noexcept;
  DenseMap& operator+=(const DenseMap& other);
  DenseMap& operator-=(const DenseMap& other);
  DenseMap& operator*=(double scale) noexcept;

  friend bool operator==(const DenseMap&, const DenseMap&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Serialized as three little-endian uint32 dimensions (c, h, w) followed by
/// c*h*w little-endian IEEE-754 doubles in storage order.
void write_map(std::ostream& out, const DenseMap& map);
DenseMap read_map(std::istream& in);

}  // namespace uct

#pragma once

// Image-plane geometry. Continuous coordinates: pixel (row i, col j) covers
// [j, j+1) x [i, i+1), so its center sits at (j + 0.5, i + 0.5) and an image
// of width W spans [0, W].

namespace uct {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Size2 {
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

/// Axis-aligned box as top-left corner plus size (0-based internally).
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point2 center() const noexcept { return {x + 0.5 * w, y + 0.5 * h}; }
  Size2 size() const noexcept { return {w, h}; }
  double area() const noexcept { return w * h; }

  static Box from_center(Point2 c, Size2 s) noexcept { return {c.x - 0.5 * s.w, c.y - 0.5 * s.h, s.w, s.h}; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Region of an image given by center and size; used for crops.
struct Window {
  Point2 center;
  Size2 size;

  double left() const noexcept { return center.x - 0.5 * size.w; }
  double top() const noexcept { return center.y - 0.5 * size.h; }
};

}  // namespace uct

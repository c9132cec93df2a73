#pragma once

#include <string>

#include "uct/dense_map.hpp"
#include "uct/geometry.hpp"

namespace uct {

/// Decodes an image into a 1- or 3-channel map with intensities in [0, 1].
/// Formats are detected from the file header: netpbm P2/P3/P5/P6 (8 or 16
/// bit) always, PNG and JPEG when the library was built with them.
DenseMap read_image(const std::string& path);

/// Binary netpbm: P5 for one channel, P6 for three. Values are clamped to
/// [0, 1] and quantized to 8 bits.
void write_pnm(const std::string& path, const DenseMap& image);

/// Supported decoders, e.g. "pnm png jpeg".
std::string supported_image_formats();

/// Copy of `image` as RGB with the outline of `box` drawn `thickness` px wide.
DenseMap draw_box(const DenseMap& image, const Box& box, const double rgb[3], int thickness = 1);

}  // namespace uct

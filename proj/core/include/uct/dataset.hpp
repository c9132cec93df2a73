#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "uct/dense_map.hpp"
#include "uct/geometry.hpp"

namespace uct {

/// An ordered image sequence with 0-based ground-truth boxes for a prefix of
/// its frames. Frames are either decoded on demand from `frame_paths` or held
/// in memory (`frames`), never both.
struct Sequence {
  std::string name;
  std::vector<std::string> frame_paths;
  std::vector<DenseMap> frames;
  std::vector<Box> boxes;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return frames.empty() ? frame_paths.size() : frames.size(); }
  DenseMap frame(std::size_t index) const;
};

/// One box per non-blank line; fields separated by commas, tabs or spaces.
/// Values are returned as written (no 1-based conversion). Any malformed line
/// or non-positive size raises DataError naming the line.
std::vector<Box> parse_groundtruth(std::string_view text);

/// Inverse of parse_groundtruth: comma-separated, shortest round-trip decimals.
std::string format_groundtruth(const std::vector<Box>& boxes);

/// OTB boxes are 1-based; internal boxes are 0-based.
Box from_one_based(const Box& b);
Box to_one_based(const Box& b);

/// Loads `<dir>/img/*` (sorted by the number embedded in the file name) and
/// `<dir>/groundtruth_rect.txt`. Extra annotations are dropped and missing
/// ones tolerated, both with a warning on the sequence.
Sequence load_sequence(const std::string& directory);

/// A single sequence directory, or a directory whose subdirectories are
/// sequences (sorted by name).
std::vector<Sequence> load_dataset(const std::string& directory);

/// Writes `<dir>/img/0001.pgm|ppm ...` and `<dir>/groundtruth_rect.txt`.
void export_sequence(const Sequence& sequence, const std::string& directory);

/// Sort key helper: file names ordered by their embedded number, then by name.
void sort_frame_paths(std::vector<std::string>& paths);

}  // namespace uct

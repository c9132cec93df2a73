#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "uct/dataset.hpp"
#include "uct/geometry.hpp"

namespace uct {

/// A textured rectangle moving over a textured background. Motion is
/// center_k = start + k * velocity, size_k = object_size * zoom^k for frame
/// k = 0, 1, ...
struct SynthSpec {
  std::size_t canvas_width = 160;
  std::size_t canvas_height = 120;
  Size2 object_size{28.0, 28.0};
  std::optional<Point2> start_center;  ///< canvas center when unset
  Point2 velocity{0.0, 0.0};           ///< px per frame
  double zoom = 1.0;                   ///< size factor per frame
  /// Occluded frames, 1-based inclusive; empty when first > last.
  std::size_t occlusion_first = 1;
  std::size_t occlusion_last = 0;
  double occluder_opacity = 0.85;
  double occluder_scale = 1.3;  ///< occluder box relative to the object box
  std::uint64_t seed = 1;
  std::size_t frame_count = 30;
  bool color = false;
};

struct SynthSequence {
  Sequence sequence;              ///< in-memory frames, exact 0-based boxes
  std::vector<bool> occluded;     ///< per emitted frame
  std::size_t requested_frames = 0;
  bool truncated = false;         ///< object would have left the canvas
};

/// Throws InvalidArgument on an invalid spec (no frames, zoom <= 0, ...).
SynthSequence generate_synthetic(const SynthSpec& spec);

/// Randomized specs drawn from one master seed. Every trajectory is placed so
/// the object stays on the canvas for all frames.
std::vector<SynthSpec> random_specs(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                    bool with_occlusion, bool color = false);

/// Training corpus: `count` sequences of `frames` frames, no occlusion.
std::vector<SynthSequence> generate_corpus(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                           bool color = false);

/// Evaluation suite: `count` sequences mixing translation, zoom and
/// occlusion (every other sequence has an occlusion interval).
std::vector<SynthSequence> generate_suite(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                          bool color = false);

}  // namespace uct

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uct/config.hpp"
#include "uct/dataset.hpp"
#include "uct/features.hpp"
#include "uct/geometry.hpp"

namespace uct {

inline constexpr std::size_t kPrecisionPoints = 51;  ///< center-error thresholds 0..50 px
inline constexpr std::size_t kSuccessPoints = 21;    ///< overlap thresholds 0..1 step 0.05

/// Euclidean distance between box centers.
double center_error(const Box& pred, const Box& gt);
/// Intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

struct EvalCurves {
  std::array<double, kPrecisionPoints> precision{};  ///< fraction with error <= threshold
  std::array<double, kSuccessPoints> success{};      ///< fraction with overlap > threshold
  double precision_at_20 = 0.0;
  double auc = 0.0;  ///< mean of the success points
  std::size_t frames = 0;

  friend bool operator==(const EvalCurves&, const EvalCurves&) = default;
};

double success_threshold(std::size_t k);

/// Throws InvalidArgument on empty or unequal-length inputs.
EvalCurves curves(std::span<const double> errors, std::span<const double> overlaps);

/// One line of a per-frame record file.
struct FrameRecord {
  std::size_t frame_index = 0;  ///< 1-based
  Box box;                      ///< 0-based internally
  double score = 0.0;
  double pnr = 0.0;
  bool updated = false;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// "frame_index,x,y,w,h,score,pnr,updated_flag" with a 1-based box.
std::string format_record(const FrameRecord& r);
FrameRecord parse_record(std::string_view line);

/// Anything that can be run over a sequence.
class SequenceTracker {
 public:
  virtual ~SequenceTracker() = default;
  virtual FrameRecord init(const DenseMap& image, const Box& box) = 0;
  virtual FrameRecord step(const DenseMap& image) = 0;
};

using TrackerFactory = std::function<std::unique_ptr<SequenceTracker>()>;

/// Factory for the convolutional tracker with a fixed config and extractor.
TrackerFactory make_tracker_factory(const TrackerConfig& config, const ConvStack& stack);

struct SequenceResult {
  std::string name;
  std::vector<FrameRecord> records;
  std::vector<double> errors;    ///< per annotated frame
  std::vector<double> overlaps;  ///< per annotated frame
  EvalCurves curves;
  bool failed = false;
  std::string error;
  double seconds = 0.0;  ///< wall-clock time spent in init/step
};

enum class Aggregation { per_frame, per_sequence };

struct OpeResult {
  std::vector<SequenceResult> sequences;  ///< sorted by name
  bool has_aggregate = false;
  EvalCurves aggregate;
  double fps = 0.0;  ///< informational, wall clock
};

/// One-pass evaluation: each tracker starts from the first ground-truth box
/// and runs to the end without resets. Sequences run on up to `workers`
/// threads (0 = hardware concurrency); results do not depend on the count.
/// Failed sequences are reported and left out of the aggregate.
OpeResult run_ope(std::span<const Sequence> sequences, const TrackerFactory& factory, std::size_t workers = 1,
                  Aggregation aggregation = Aggregation::per_frame);

/// Resolves a worker count: 0 means the machine's logical core count.
std::size_t resolve_workers(std::size_t requested);

}  // namespace uct

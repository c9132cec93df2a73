#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "uct/config.hpp"
#include "uct/dense_map.hpp"
#include "uct/features.hpp"
#include "uct/geometry.hpp"
#include "uct/regression.hpp"
#include "uct/scale.hpp"
#include "uct/tensor_ops.hpp"

namespace uct {

struct TargetState {
  Point2 center;
  Size2 size;
  double score = 0.0;  ///< R_max of the frame's response
  double pnr = 0.0;
  bool updated = false;
  bool clamped = false;  ///< estimate fell outside the image and was clamped

  Box box() const noexcept { return Box::from_center(center, size); }
};

/// Running PNR and R_max records; thresholds are their historical means.
class UpdateHistory {
 public:
  explicit UpdateHistory(std::size_t window = 0) : window_(window) {}

  std::size_t size() const noexcept { return pnr_values_.size(); }
  bool empty() const noexcept { return pnr_values_.empty(); }
  const std::vector<double>& pnr_values() const noexcept { return pnr_values_; }
  const std::vector<double>& rmax_values() const noexcept { return rmax_values_; }
  std::size_t window() const noexcept { return window_; }

  /// Mean over the whole history, or the last `window` entries when set.
  double pnr_mean() const;
  double rmax_mean() const;

  void append(double pnr, double rmax);

 private:
  std::size_t window_;
  std::vector<double> pnr_values_;
  std::vector<double> rmax_values_;
};

/// (max - min) / max(mean_excluding_max, epsilon).
double pnr(const MapStats& stats, double epsilon);

/// PNR of a response map as used for update gating. With `shift_to_min` the
/// map is taken relative to its minimum, which keeps the denominator
/// non-negative for zero-centered regression responses.
double response_pnr(const DenseMap& response, double epsilon, bool shift_to_min);

/// Compares against the means of the existing history (frames 1..T-1), then
/// appends (pnr_t, rmax_t) whatever the verdict. With `use_pnr` false only the
/// R_max criterion is applied.
bool should_update(UpdateHistory& history, double pnr_t, double rmax_t, double beta_pnr, double beta_rmax,
                   bool use_pnr = true);

/// Per-axis quadratic peak refinement; zero offset on border axes.
RealCell subpixel_refine(const DenseMap& response, CellIndex peak);

/// Response cell (possibly fractional) to image coordinates for a response
/// computed over `window`.
Point2 map_to_image(RealCell cell, const Window& window, const HeadGeometry& geometry);

/// Online tracker: one-pass response, PNR/R_max-gated updates and a scale
/// branch. Single owner; one frame at a time.
class Tracker {
 public:
  Tracker(TrackerConfig config, ConvStack stack);

  void init(const DenseMap& image, const Box& box);
  TargetState step(const DenseMap& image);

  bool initialized() const noexcept { return initialized_; }
  const TrackerConfig& config() const noexcept { return config_; }
  const TargetState& state() const noexcept { return state_; }
  const UpdateHistory& history() const noexcept { return history_; }
  const FilterBank& filter() const noexcept { return filter_; }
  const ScaleFilter& scale_filter() const noexcept { return scale_filter_; }
  const FeaturePipeline& pipeline() const noexcept { return pipeline_; }
  const DenseMap& last_response() const noexcept { return last_response_; }
  std::size_t frame_index() const noexcept { return frame_index_; }
  /// Loss of the first-frame training sample before and after training.
  double first_frame_initial_loss() const noexcept { return first_loss_before_; }
  double first_frame_final_loss() const noexcept { return first_loss_after_; }

  /// Full state snapshot; load() of a saved tracker reproduces step() exactly.
  void save(std::ostream& out) const;
  static Tracker load(std::istream& in);

 private:
  ScaleExtractor scale_extractor() const;
  void clamp_to_image(const DenseMap& image);

  TrackerConfig config_;
  FeaturePipeline pipeline_;
  FilterBank filter_;
  SgdState sgd_;
  ScaleFilter scale_filter_;
  std::vector<double> scale_velocity_;
  std::vector<double> multires_scales_;
  UpdateHistory history_;
  TargetState state_;
  DenseMap last_response_;
  std::size_t frame_index_ = 0;
  bool initialized_ = false;
  double first_loss_before_ = 0.0;
  double first_loss_after_ = 0.0;
};

}  // namespace uct

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "uct/config.hpp"
#include "uct/dense_map.hpp"
#include "uct/features.hpp"
#include "uct/geometry.hpp"
#include "uct/regression.hpp"

namespace uct {

/// 1-D scale filter: a shared linear template scored against each of the S
/// scale samples. Scoring row s with the template is the valid 1-D
/// correlation, over the scale axis, of the sample stack with a filter whose
/// only nonzero tap sits at the sample's own scale index, so the response is
/// a length-S vector indexed by scale exponent.
struct ScaleFilter {
  std::vector<double> weights;  ///< feature_dims entries; empty until trained
  std::size_t count = 33;       ///< S, odd
  double step = 1.02;           ///< a > 1
  double sigma = 33.0 / 16.0;   ///< label width in scale taps
  bool trained = false;

  int half() const noexcept { return static_cast<int>(count / 2); }
  friend bool operator==(const ScaleFilter&, const ScaleFilter&) = default;
};

ScaleFilter make_scale_filter(const TrackerConfig& config);

/// Feature rows for scale exponents -(S-1)/2 ... (S-1)/2 in ascending order.
struct ScaleSampleSet {
  DenseMap rows;                 ///< 1 x S x D
  std::vector<int> exponents;
  std::vector<Size2> patch_sizes;  ///< rounded pixel sizes used for the crops
};

/// Shared-extractor settings for scale samples.
struct ScaleExtractor {
  const ConvStack* stack = nullptr;  ///< nullptr or empty: raw pixels
  std::size_t template_size = 32;
  std::size_t feature_dims = 256;
  bool color = false;
};

/// Eq. size(P^n) = a^n W x a^n H, rounded to whole pixels (minimum 2).
Size2 scale_patch_size(Size2 target, double step, int exponent);

/// Crops every scale patch around `center`, resizes it to the template,
/// extracts and mean-pools features, then conditions the stack of rows
/// (subtract the across-scale mean row, scale to unit mean row energy).
ScaleSampleSet build_scale_samples(const DenseMap& image, Point2 center, Size2 target, const ScaleFilter& filter,
                                   const ScaleExtractor& extractor);

/// Adaptive average pooling to at most `max_dims` values, flattened.
std::vector<double> pool_features(const DenseMap& features, std::size_t max_dims);

/// response[s] = <weights, rows[s]>.
std::vector<double> scale_response(const ScaleSampleSet& samples, const ScaleFilter& filter);

/// 1-D Gaussian over scale index, peaked at exponent `center`.
std::vector<double> scale_label(const ScaleFilter& filter, double center = 0.0);

double scale_loss(const ScaleSampleSet& samples, const ScaleFilter& filter, std::span<const double> label,
                  double lambda);
std::vector<double> scale_gradient(const ScaleSampleSet& samples, const ScaleFilter& filter,
                                   std::span<const double> label, double lambda);

struct ScaleTraining {
  ScaleFilter filter;
  std::vector<double> velocity;
  std::vector<double> losses;  ///< loss before each step, then the final loss
};

/// Ridge objective over the scale axis minimized by momentum SGD.
/// An untrained filter starts from zero weights.
ScaleTraining train_scale_filter(const ScaleSampleSet& samples, ScaleFilter filter, std::span<const double> label,
                                 double learning_rate, double momentum, double lambda, std::size_t steps,
                                 std::vector<double> velocity = {});

struct ScaleEstimate {
  double multiplier = 1.0;
  int best_exponent = 0;
  double refined_exponent = 0.0;
  std::vector<double> response;
  ScaleSampleSet samples;
};

/// a^(n*) for the argmax n* of the scale response (with optional sub-tap
/// quadratic refinement), clamped to [1/clamp, clamp].
ScaleEstimate estimate_scale(const DenseMap& image, Point2 center, Size2 target, const ScaleFilter& filter,
                             const ScaleExtractor& extractor, double clamp, bool refine);

/// Offset in (-0.5, 0.5) of a 1-D quadratic through (left, peak, right);
/// 0 when the fit is not concave.
double quadratic_peak_offset(double left, double peak, double right);

/// Pyramid multipliers step^n for every n with step^|n| <= clamp, ascending.
std::vector<double> pyramid_multipliers(double step, double clamp);

struct MultiresEstimate {
  double multiplier = 1.0;
  DenseMap response;
  DenseMap features;  ///< filter input at the chosen multiplier
  Window window;
};

/// Exhaustive baseline: evaluates the translation filter on the search window
/// resampled at every multiplier and keeps the strongest response maximum
/// (ties go to the multiplier closest to 1).
MultiresEstimate estimate_scale_multires(const DenseMap& image, Point2 center, Size2 target, const FilterBank& f,
                                         const FeaturePipeline& pipeline, std::span<const double> scales);

void write_scale_filter(std::ostream& out, const ScaleFilter& filter);
ScaleFilter read_scale_filter(std::istream& in);

}  // namespace uct

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "uct/config.hpp"
#include "uct/dense_map.hpp"
#include "uct/features.hpp"
#include "uct/geometry.hpp"
#include "uct/tensor_ops.hpp"

namespace uct {

/// Regression filters f (d channels, fh x fw). There is no bias term.
struct FilterBank {
  DenseMap weights;
  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Momentum SGD state. Weight decay is carried for callers that build the
/// gradient; sgd_step itself never applies it.
struct SgdState {
  std::vector<DenseMap> velocity;
  double momentum = 0.9;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
};

SgdState make_sgd_state(std::span<const DenseMap> params, double momentum, double learning_rate,
                        double weight_decay);

struct TrainSample {
  DenseMap features;
  DenseMap label;
};

/// sum((R(x) - y)^2) + lambda * sum(f^2), with R the valid cross-correlation.
double loss(const TrainSample& sample, const FilterBank& f, double lambda);

struct FilterGradients {
  DenseMap filter;  ///< dL/df
  DenseMap input;   ///< dL/dx, for backpropagation into the extractor
};
FilterGradients grad_filters(const TrainSample& sample, const FilterBank& f, double lambda);

/// v <- momentum * v - lr * g; p <- p + v, for every (p, g) pair.
void sgd_step(std::span<DenseMap* const> params, std::span<const DenseMap> grads, SgdState& state);

/// Maps between patch pixels, feature cells and response cells for a given
/// patch size, context padding and extractor.
///
/// Continuous patch coordinate u covers pixel index floor(u); feature cell q
/// is centered on patch index offset + stride * q, and response cell r on
/// feature cell r + (fh - 1) / 2.
class HeadGeometry {
 public:
  HeadGeometry() = default;
  HeadGeometry(const ConvStack& stack, std::size_t input_channels, std::size_t patch_size, double padding_factor,
               double label_sigma_factor);

  std::size_t patch_size() const noexcept { return patch_size_; }
  std::size_t feature_channels() const noexcept { return feature_channels_; }
  std::size_t feature_size() const noexcept { return feature_size_; }
  std::size_t filter_size() const noexcept { return filter_size_; }
  std::size_t response_size() const noexcept { return response_size_; }
  std::size_t stride() const noexcept { return stride_; }
  double label_sigma() const noexcept { return label_sigma_; }
  double padding_factor() const noexcept { return padding_factor_; }

  double response_to_patch(double r) const noexcept;
  double patch_to_response(double u) const noexcept;
  /// Response cell of the patch center.
  double center_cell() const noexcept { return patch_to_response(0.5 * static_cast<double>(patch_size_)); }

  /// Gaussian label peaked at `center` (response cells).
  DenseMap label(RealCell center) const;

 private:
  std::size_t patch_size_ = 0;
  std::size_t feature_channels_ = 0;
  std::size_t feature_size_ = 0;
  std::size_t filter_size_ = 0;
  std::size_t response_size_ = 0;
  std::size_t stride_ = 1;
  double offset_ = 0.0;
  double label_sigma_ = 1.0;
  double padding_factor_ = 2.0;
};

/// Crop -> grayscale (unless color) -> mean-subtract -> extractor -> Hann
/// window -> energy normalization. The result is what the filters see.
class FeaturePipeline {
 public:
  FeaturePipeline() = default;
  FeaturePipeline(ConvStack stack, const TrackerConfig& config);

  const ConvStack& stack() const noexcept { return stack_; }
  ConvStack& mutable_stack() noexcept { return stack_; }
  const HeadGeometry& geometry() const noexcept { return geometry_; }
  const DenseMap& hann() const noexcept { return hann_; }
  std::size_t input_channels() const noexcept { return color_ ? 3 : 1; }
  double target_mean_square() const noexcept { return target_mean_square_; }

  /// Pixels fed to the extractor for `window` of `image`.
  DenseMap prepare_pixels(const DenseMap& image, const Window& window) const;
  /// Window-and-normalize applied to raw extractor output.
  EnergyNormalized finish(const DenseMap& raw_features) const;
  DenseMap features(const DenseMap& image, const Window& window) const;

 private:
  ConvStack stack_;
  HeadGeometry geometry_;
  DenseMap hann_;
  bool color_ = false;
  double target_mean_square_ = 1.0;
};

/// Search window for a target: `padding_factor` times its size, same center.
Window search_window(Point2 center, Size2 target_size, double padding_factor);

struct FirstFrameResult {
  FilterBank filter;
  SgdState state;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Zero-mean Gaussian init (config.filter_init_std) followed by
/// config.first_frame_steps momentum-SGD steps on a single sample.
FirstFrameResult train_first_frame(const DenseMap& features, const DenseMap& label, const TrackerConfig& config,
                                   std::uint64_t seed);

struct UpdateResult {
  double loss_before = 0.0;
  double loss_after = 0.0;
};

/// One momentum-SGD step with config.lr_update / config.lambda_update.
/// `state` carries the velocity between online updates.
UpdateResult update_one_step(const DenseMap& features, const DenseMap& label, FilterBank& f, SgdState& state,
                             const TrackerConfig& config);

/// An image and its 0-based ground-truth box.
struct LabeledFrame {
  DenseMap image;
  Box box;
};

/// Crops the context region around `box` (context_factor times the search
/// window) resampled so the search window spans config.patch_size pixels.
/// Keeps offline corpora small; jittered crops stay inside the stored region.
LabeledFrame make_training_crop(const DenseMap& image, const Box& box, const TrackerConfig& config,
                                double context_factor = 1.5);

/// Loss and gradients of the full pipeline (extractor, Hann, normalization,
/// filters) on one patch. Weight decay `stack_decay` applies to the
/// extractor weights, `lambda` to the filters.
struct EndToEndGradients {
  double loss = 0.0;
  FilterBank filter_grad;
  std::vector<DenseMap> stack_grads;
};
EndToEndGradients end_to_end_gradients(const FeaturePipeline& pipeline, const FilterBank& f,
                                       const DenseMap& pixels, const DenseMap& label, double lambda,
                                       double stack_decay);
double end_to_end_loss(const FeaturePipeline& pipeline, const FilterBank& f, const DenseMap& pixels,
                       const DenseMap& label, double lambda, double stack_decay);

struct OfflineResult {
  ConvStack stack;
  FilterBank filter;
  std::vector<double> epoch_losses;  ///< mean per-sample loss of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Joint momentum-SGD over extractor and filters with jittered crops and
/// Gaussian labels (batch size 1, seeded per-epoch shuffling).
OfflineResult offline_train(std::span<const LabeledFrame> corpus, ConvStack stack, FilterBank f,
                            const TrackerConfig& config, const EpochCallback& on_epoch = {});

/// Zero-mean Gaussian filter bank shaped for `geometry`.
FilterBank random_filter_bank(const HeadGeometry& geometry, double stddev, std::uint64_t seed);

}  // namespace uct

#include "uct/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uct/errors.hpp"

namespace uct {

namespace {

void require_sample_shapes(const TrainSample& sample, const FilterBank& f) {
  const DenseMap& x = sample.features;
  const DenseMap& w = f.weights;
  if (x.empty() || w.empty() || x.channels() != w.channels() || w.height() > x.height() || w.width() > x.width() ||
      sample.label.channels() != 1 || sample.label.height() != x.height() - w.height() + 1 ||
      sample.label.width() != x.width() - w.width() + 1) {
    throw InvalidArgument("regression: incompatible shapes features=" + x.shape_string() +
                          " filter=" + w.shape_string() + " label=" + sample.label.shape_string());
  }
}

DenseMap residual_of(const TrainSample& sample, const FilterBank& f) {
  DenseMap r = xcorr2d_valid(sample.features, f.weights);
  r -= sample.label;
  return r;
}

}  // namespace

SgdState make_sgd_state(std::span<const DenseMap> params, double momentum, double learning_rate,
                        double weight_decay) {
  SgdState s;
  s.momentum = momentum;
  s.learning_rate = learning_rate;
  s.weight_decay = weight_decay;
  for (const auto& p : params) s.velocity.emplace_back(p.channels(), p.height(), p.width());
  return s;
}

double loss(const TrainSample& sample, const FilterBank& f, double lambda) {
  require_sample_shapes(sample, f);
  return residual_of(sample, f).squared_norm() + lambda * f.weights.squared_norm();
}

FilterGradients grad_filters(const TrainSample& sample, const FilterBank& f, double lambda) {
  require_sample_shapes(sample, f);
  const DenseMap r = residual_of(sample, f);
  FilterGradients g{xcorr2d_filter_grad(sample.features, r, f.weights.height(), f.weights.width()),
                    xcorr2d_input_grad(r, f.weights, sample.features.height(), sample.features.width())};
  g.filter *= 2.0;
  g.input *= 2.0;
  const auto w = f.weights.data();
  auto gf = g.filter.data();
  for (std::size_t k = 0; k < gf.size(); ++k) gf[k] += 2.0 * lambda * w[k];
  return g;
}

void sgd_step(std::span<DenseMap* const> params, std::span<const DenseMap> grads, SgdState& state) {
  if (params.size() != grads.size() || params.size() != state.velocity.size()) {
    throw InvalidArgument("sgd_step: " + std::to_string(params.size()) + " params, " +
                          std::to_string(grads.size()) + " grads, " + std::to_string(state.velocity.size()) +
                          " velocities");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(grads[k]) || !params[k]->same_shape(state.velocity[k])) {
      throw InvalidArgument("sgd_step: tensor " + std::to_string(k) + " shape mismatch " +
                            params[k]->shape_string() + " / " + grads[k].shape_string() + " / " +
                            state.velocity[k].shape_string());
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto v = state.velocity[k].data();
    const auto g = grads[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = state.momentum * v[i] - state.learning_rate * g[i];
      p[i] += v[i];
    }
  }
}

HeadGeometry::HeadGeometry(const ConvStack& stack, std::size_t input_channels, std::size_t patch_size,
                           double padding_factor, double label_sigma_factor)
    : patch_size_(patch_size),
      feature_channels_(stack.output_channels(input_channels)),
      stride_(stack.total_stride()),
      offset_(stack.receptive_offset()),
      padding_factor_(padding_factor) {
  feature_size_ = stack.output_size(patch_size, patch_size).first;
  const auto target_px = static_cast<std::size_t>(std::lround(static_cast<double>(patch_size) / padding_factor));
  filter_size_ = stack.output_size(target_px, target_px).first;
  if (feature_size_ == 0 || filter_size_ == 0) {
    throw InvalidArgument("patch size " + std::to_string(patch_size) + " with padding " +
                          std::to_string(padding_factor) + " is too small for the extractor (minimum target " +
                          std::to_string(stack.min_input_size()) + " px)");
  }
  response_size_ = feature_size_ - filter_size_ + 1;
  label_sigma_ = label_sigma_factor * static_cast<double>(target_px) / static_cast<double>(stride_);
}

double HeadGeometry::response_to_patch(double r) const noexcept {
  return offset_ + static_cast<double>(stride_) * (r + 0.5 * static_cast<double>(filter_size_ - 1)) + 0.5;
}

double HeadGeometry::patch_to_response(double u) const noexcept {
  return (u - 0.5 - offset_) / static_cast<double>(stride_) - 0.5 * static_cast<double>(filter_size_ - 1);
}

DenseMap HeadGeometry::label(RealCell center) const {
  return gaussian_label(response_size_, response_size_, center, {label_sigma_, label_sigma_});
}

FeaturePipeline::FeaturePipeline(ConvStack stack, const TrackerConfig& config)
    : stack_(std::move(stack)), color_(config.color) {
  if (!stack_.empty() && stack_.layers().front().in_channels != input_channels()) {
    throw InvalidArgument("extractor expects " + std::to_string(stack_.layers().front().in_channels) +
                          " input channels but the config provides " + std::to_string(input_channels()));
  }
  geometry_ = HeadGeometry(stack_, input_channels(), config.patch_size, config.padding_factor,
                           config.label_sigma_factor);
  hann_ = hann2d(geometry_.feature_size(), geometry_.feature_size());
  const double window_cells = static_cast<double>(geometry_.feature_channels() * geometry_.filter_size() *
                                                  geometry_.filter_size());
  target_mean_square_ = config.feature_energy / window_cells;
}

DenseMap FeaturePipeline::prepare_pixels(const DenseMap& image, const Window& window) const {
  const std::size_t p = geometry_.patch_size();
  Patch patch = crop_and_resize(image, window, p, p);
  if (!color_) patch.pixels = to_grayscale(patch.pixels);
  else if (patch.pixels.channels() == 1) {
    DenseMap rgb(3, p, p);
    for (std::size_t c = 0; c < 3; ++c) std::copy(patch.pixels.data().begin(), patch.pixels.data().end(), rgb.channel(c).begin());
    patch.pixels = std::move(rgb);
  }
  return center_intensities(patch.pixels);
}

EnergyNormalized FeaturePipeline::finish(const DenseMap& raw_features) const {
  return normalize_energy(apply_window(raw_features, hann_), target_mean_square_);
}

DenseMap FeaturePipeline::features(const DenseMap& image, const Window& window) const {
  return finish(extract(prepare_pixels(image, window), stack_)).output;
}

Window search_window(Point2 center, Size2 target_size, double padding_factor) {
  return Window{center, {target_size.w * padding_factor, target_size.h * padding_factor}};
}

FilterBank random_filter_bank(const HeadGeometry& geometry, double stddev, std::uint64_t seed) {
  FilterBank f{DenseMap(geometry.feature_channels(), geometry.filter_size(), geometry.filter_size())};
  if (stddev > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    for (double& w : f.weights.data()) w = normal(rng);
  }
  return f;
}

FirstFrameResult train_first_frame(const DenseMap& features, const DenseMap& label, const TrackerConfig& config,
                                   std::uint64_t seed) {
  const std::size_t fs = features.height() - label.height() + 1;
  if (label.height() > features.height() || label.width() > features.width() ||
      features.width() - label.width() + 1 != fs) {
    throw InvalidArgument("train_first_frame: label " + label.shape_string() + " incompatible with features " +
                          features.shape_string());
  }
  FirstFrameResult result;
  result.filter.weights = DenseMap(features.channels(), fs, fs);
  if (config.filter_init_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, config.filter_init_std);
    for (double& w : result.filter.weights.data()) w = normal(rng);
  }
  const TrainSample sample{features, label};
  const double lambda = config.lambda_first_frame;
  result.state = make_sgd_state(std::span(&result.filter.weights, 1), config.momentum, config.lr_first_frame, lambda);
  result.initial_loss = loss(sample, result.filter, lambda);
  DenseMap* params[] = {&result.filter.weights};
  for (std::size_t step = 0; step < config.first_frame_steps; ++step) {
    const FilterGradients g = grad_filters(sample, result.filter, lambda);
    sgd_step(params, std::span(&g.filter, 1), result.state);
    if (!result.filter.weights.all_finite()) {
      throw NumericalError("first-frame training diverged at step " + std::to_string(step + 1));
    }
  }
  result.final_loss = loss(sample, result.filter, lambda);
  if (!std::isfinite(result.final_loss)) {
    throw NumericalError("first-frame training produced a non-finite loss after " +
                         std::to_string(config.first_frame_steps) + " steps");
  }
  return result;
}

UpdateResult update_one_step(const DenseMap& features, const DenseMap& label, FilterBank& f, SgdState& state,
                             const TrackerConfig& config) {
  const TrainSample sample{features, label};
  const double lambda = config.lambda_update;
  state.learning_rate = config.lr_update;
  state.momentum = config.momentum;
  state.weight_decay = lambda;
  if (state.velocity.empty()) state = make_sgd_state(std::span(&f.weights, 1), config.momentum, config.lr_update, lambda);
  UpdateResult r;
  r.loss_before = loss(sample, f, lambda);
  const FilterGradients g = grad_filters(sample, f, lambda);
  DenseMap* params[] = {&f.weights};
  sgd_step(params, std::span(&g.filter, 1), state);
  r.loss_after = loss(sample, f, lambda);
  if (!std::isfinite(r.loss_after)) throw NumericalError("online update produced a non-finite loss");
  return r;
}

LabeledFrame make_training_crop(const DenseMap& image, const Box& box, const TrackerConfig& config,
                                double context_factor) {
  const Window search = search_window(box.center(), box.size(), config.padding_factor);
  const Window region{search.center, {search.size.w * context_factor, search.size.h * context_factor}};
  const auto side = static_cast<std::size_t>(std::lround(context_factor * static_cast<double>(config.patch_size)));
  Patch crop = crop_and_resize(image, region, side, side);
  const double sx = static_cast<double>(side) / region.size.w;
  const double sy = static_cast<double>(side) / region.size.h;
  Box local{(box.x - region.left()) * sx, (box.y - region.top()) * sy, box.w * sx, box.h * sy};
  return LabeledFrame{std::move(crop.pixels), local};
}

namespace {

struct ForwardPass {
  StackTrace trace;
  EnergyNormalized normalized;
  DenseMap residual;
  double loss = 0.0;
};

ForwardPass forward_pass(const FeaturePipeline& pipeline, const FilterBank& f, const DenseMap& pixels,
                         const DenseMap& label, double lambda, double stack_decay) {
  ForwardPass fp;
  fp.trace = extract_traced(pixels, pipeline.stack());
  fp.normalized = pipeline.finish(fp.trace.output);
  const TrainSample sample{fp.normalized.output, label};
  require_sample_shapes(sample, f);
  fp.residual = residual_of(sample, f);
  double stack_sq = 0.0;
  for (const auto& layer : pipeline.stack().layers()) stack_sq += layer.weights.squared_norm();
  fp.loss = fp.residual.squared_norm() + lambda * f.weights.squared_norm() + stack_decay * stack_sq;
  return fp;
}

}  // namespace

double end_to_end_loss(const FeaturePipeline& pipeline, const FilterBank& f, const DenseMap& pixels,
                       const DenseMap& label, double lambda, double stack_decay) {
  return forward_pass(pipeline, f, pixels, label, lambda, stack_decay).loss;
}

EndToEndGradients end_to_end_gradients(const FeaturePipeline& pipeline, const FilterBank& f,
                                       const DenseMap& pixels, const DenseMap& label, double lambda,
                                       double stack_decay) {
  ForwardPass fp = forward_pass(pipeline, f, pixels, label, lambda, stack_decay);
  EndToEndGradients g;
  g.loss = fp.loss;
  const DenseMap& z = fp.normalized.output;
  g.filter_grad.weights = xcorr2d_filter_grad(z, fp.residual, f.weights.height(), f.weights.width());
  g.filter_grad.weights *= 2.0;
  {
    auto gf = g.filter_grad.weights.data();
    const auto w = f.weights.data();
    for (std::size_t k = 0; k < gf.size(); ++k) gf[k] += 2.0 * lambda * w[k];
  }
  if (pipeline.stack().empty()) return g;

  DenseMap gz = xcorr2d_input_grad(fp.residual, f.weights, z.height(), z.width());
  gz *= 2.0;
  const DenseMap g_windowed = normalize_energy_backward(fp.normalized, gz);
  const DenseMap g_raw = apply_window(g_windowed, pipeline.hann());
  g.stack_grads = backward_stack(pipeline.stack(), fp.trace, g_raw);
  const auto layers = pipeline.stack().layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto gw = g.stack_grads[k].data();
    const auto w = layers[k].weights.data();
    for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += 2.0 * stack_decay * w[i];
  }
  return g;
}

OfflineResult offline_train(std::span<const LabeledFrame> corpus, ConvStack stack, FilterBank f,
                            const TrackerConfig& config, const EpochCallback& on_epoch) {
  if (corpus.empty()) throw InvalidArgument("offline_train: empty corpus");
  FeaturePipeline pipeline(std::move(stack), config);
  const HeadGeometry& geo = pipeline.geometry();
  if (f.weights.channels() != geo.feature_channels() || f.weights.height() != geo.filter_size() ||
      f.weights.width() != geo.filter_size()) {
    throw InvalidArgument("offline_train: filter bank " + f.weights.shape_string() + " does not match geometry " +
                          std::to_string(geo.feature_channels()) + "x" + std::to_string(geo.filter_size()) + "x" +
                          std::to_string(geo.filter_size()));
  }

  std::vector<DenseMap*> params;
  for (auto& layer : pipeline.mutable_stack().layers()) params.push_back(&layer.weights);
  params.push_back(&f.weights);
  std::vector<DenseMap> shapes;
  for (const DenseMap* p : params) shapes.push_back(*p);
  SgdState state = make_sgd_state(shapes, config.momentum, config.lr_offline, config.lambda_offline);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  const double patch = static_cast<double>(geo.patch_size());
  OfflineResult result;
  std::vector<DenseMap> grads(params.size());
  for (std::size_t epoch = 0; epoch < config.offline_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      const LabeledFrame& frame = corpus[order[n]];
      const Point2 target = frame.box.center();
      Window window = search_window(target, frame.box.size(), config.padding_factor);
      const double scale = std::exp(config.jitter_scale * normal(rng));
      window.size.w *= scale;
      window.size.h *= scale;
      window.center.x += config.jitter_translation * window.size.w * normal(rng);
      window.center.y += config.jitter_translation * window.size.h * normal(rng);

      const RealCell center{geo.patch_to_response((target.y - window.top()) / window.size.h * patch),
                            geo.patch_to_response((target.x - window.left()) / window.size.w * patch)};
      const DenseMap label = geo.label(center);
      const DenseMap pixels = pipeline.prepare_pixels(frame.image, window);
      EndToEndGradients g = end_to_end_gradients(pipeline, f, pixels, label, config.lambda_offline,
                                                 config.lambda_offline);
      if (!std::isfinite(g.loss)) {
        throw NumericalError("offline training diverged at epoch " + std::to_string(epoch + 1) + ", sample " +
                             std::to_string(n));
      }
      total += g.loss;
      for (std::size_t k = 0; k < g.stack_grads.size(); ++k) grads[k] = std::move(g.stack_grads[k]);
      grads.back() = std::move(g.filter_grad.weights);
      sgd_step(params, grads, state);
    }
    const double mean = total / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.stack = pipeline.stack();
  result.filter = std::move(f);
  return result;
}

}  // namespace uct

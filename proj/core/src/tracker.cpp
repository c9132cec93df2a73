#include "uct/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uct/binary_io.hpp"
#include "uct/errors.hpp"

namespace uct {

namespace {

double tail_mean(const std::vector<double>& values, std::size_t window) {
  if (values.empty()) throw InvalidArgument("update history is empty");
  const std::size_t n = (window == 0 || window > values.size()) ? values.size() : window;
  const double total = std::accumulate(values.end() - static_cast<std::ptrdiff_t>(n), values.end(), 0.0);
  return total / static_cast<double>(n);
}

}  // namespace

double UpdateHistory::pnr_mean() const { return tail_mean(pnr_values_, window_); }
double UpdateHistory::rmax_mean() const { return tail_mean(rmax_values_, window_); }

void UpdateHistory::append(double pnr, double rmax) {
  if (!std::isfinite(pnr) || !std::isfinite(rmax)) throw InvalidArgument("update history values must be finite");
  pnr_values_.push_back(pnr);
  rmax_values_.push_back(rmax);
}

double pnr(const MapStats& stats, double epsilon) {
  return (stats.max_value - stats.min_value) / std::max(stats.mean_excluding_max, epsilon);
}

double response_pnr(const DenseMap& response, double epsilon, bool shift_to_min) {
  MapStats stats = map_stats(response);
  if (shift_to_min) {
    stats.max_value -= stats.min_value;
    stats.mean_excluding_max -= stats.min_value;
    stats.min_value = 0.0;
  }
  return pnr(stats, epsilon);
}

bool should_update(UpdateHistory& history, double pnr_t, double rmax_t, double beta_pnr, double beta_rmax,
                   bool use_pnr) {
  if (history.empty()) throw InvalidArgument("should_update: history must be seeded by the first frame");
  const bool rmax_ok = rmax_t >= beta_rmax * history.rmax_mean();
  const bool pnr_ok = !use_pnr || pnr_t >= beta_pnr * history.pnr_mean();
  history.append(pnr_t, rmax_t);
  return rmax_ok && pnr_ok;
}

RealCell subpixel_refine(const DenseMap& response, CellIndex peak) {
  RealCell offset;
  const std::size_t i = peak.row;
  const std::size_t j = peak.col;
  if (i > 0 && i + 1 < response.height()) {
    offset.row = quadratic_peak_offset(response(i - 1, j), response(i, j), response(i + 1, j));
  }
  if (j > 0 && j + 1 < response.width()) {
    offset.col = quadratic_peak_offset(response(i, j - 1), response(i, j), response(i, j + 1));
  }
  return offset;
}

Point2 map_to_image(RealCell cell, const Window& window, const HeadGeometry& geometry) {
  const double p = static_cast<double>(geometry.patch_size());
  return {window.left() + geometry.response_to_patch(cell.col) * window.size.w / p,
          window.top() + geometry.response_to_patch(cell.row) * window.size.h / p};
}

Tracker::Tracker(TrackerConfig config, ConvStack stack)
    : config_(std::move(config)), history_(config_.history_window) {
  validate(config_);
  pipeline_ = FeaturePipeline(std::move(stack), config_);
  multires_scales_ = config_.multires_scales.empty() ? pyramid_multipliers(config_.scale_step, config_.scale_clamp)
                                                     : config_.multires_scales;
}

ScaleExtractor Tracker::scale_extractor() const {
  return ScaleExtractor{&pipeline_.stack(), config_.scale_template, config_.scale_feature_dims, config_.color};
}

void Tracker::init(const DenseMap& image, const Box& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw InvalidArgument("init: box must have positive size");
  if (box.x + box.w <= 0.0 || box.y + box.h <= 0.0 || box.x >= static_cast<double>(image.width()) ||
      box.y >= static_cast<double>(image.height())) {
    throw InvalidArgument("init: box lies outside the image");
  }
  state_ = TargetState{box.center(), box.size(), 0.0, 0.0, true, false};
  history_ = UpdateHistory(config_.history_window);
  frame_index_ = 0;

  const HeadGeometry& geo = pipeline_.geometry();
  const Window window = search_window(state_.center, state_.size, config_.padding_factor);
  const DenseMap z = pipeline_.features(image, window);
  const double c = geo.center_cell();
  const DenseMap label = geo.label({c, c});
  FirstFrameResult trained = train_first_frame(z, label, config_, config_.seed);
  filter_ = std::move(trained.filter);
  first_loss_before_ = trained.initial_loss;
  first_loss_after_ = trained.final_loss;
  sgd_ = make_sgd_state(std::span(&filter_.weights, 1), config_.momentum, config_.lr_update, config_.lambda_update);

  scale_filter_ = make_scale_filter(config_);
  scale_velocity_.clear();
  if (config_.scale_mode == "filter") {
    const auto samples = build_scale_samples(image, state_.center, state_.size, scale_filter_, scale_extractor());
    const auto y = scale_label(scale_filter_, 0.0);
    ScaleTraining t = train_scale_filter(samples, scale_filter_, y, config_.scale_lr_first_frame, config_.momentum,
                                         config_.scale_lambda, config_.scale_steps);
    scale_filter_ = std::move(t.filter);
  }

  last_response_ = xcorr2d_valid(z, filter_.weights);
  state_.score = map_stats(last_response_).max_value;
  state_.pnr = response_pnr(last_response_, config_.pnr_epsilon, config_.pnr_shift_min);
  history_.append(state_.pnr, state_.score);
  initialized_ = true;
}

TargetState Tracker::step(const DenseMap& image) {
  if (!initialized_) throw InvalidArgument("step: tracker is not initialized");
  ++frame_index_;
  const HeadGeometry& geo = pipeline_.geometry();
  const TargetState prev = state_;

  Window window;
  DenseMap z;
  Size2 size = prev.size;
  if (config_.scale_mode == "multires") {
    MultiresEstimate m =
        estimate_scale_multires(image, prev.center, prev.size, filter_, pipeline_, multires_scales_);
    window = m.window;
    z = std::move(m.features);
    last_response_ = std::move(m.response);
    size = {prev.size.w * m.multiplier, prev.size.h * m.multiplier};
  } else {
    window = search_window(prev.center, prev.size, config_.padding_factor);
    z = pipeline_.features(image, window);
    last_response_ = xcorr2d_valid(z, filter_.weights);
  }

  const MapStats stats = map_stats(last_response_);
  RealCell peak{static_cast<double>(stats.max_pos.row), static_cast<double>(stats.max_pos.col)};
  if (config_.subpixel) {
    const RealCell d = subpixel_refine(last_response_, stats.max_pos);
    peak.row += d.row;
    peak.col += d.col;
  }
  const Point2 center = map_to_image(peak, window, geo);
  const double rmax = stats.max_value;
  const double pnr_t = response_pnr(last_response_, config_.pnr_epsilon, config_.pnr_shift_min);
  const bool update =
      should_update(history_, pnr_t, rmax, config_.beta_pnr, config_.beta_rmax, config_.use_pnr);

  ScaleEstimate scale;
  bool have_scale = false;
  if (config_.scale_mode == "filter" && (update || !config_.gate_scale_estimation)) {
    scale = estimate_scale(image, center, prev.size, scale_filter_, scale_extractor(), config_.scale_clamp,
                           config_.subpixel);
    size = {prev.size.w * scale.multiplier, prev.size.h * scale.multiplier};
    have_scale = true;
  }

  if (update) {
    update_one_step(z, geo.label(peak), filter_, sgd_, config_);
    if (have_scale) {
      const double applied = std::log(scale.multiplier) / std::log(scale_filter_.step);
      ScaleTraining t = train_scale_filter(scale.samples, scale_filter_, scale_label(scale_filter_, applied),
                                           config_.scale_lr_update, config_.momentum, config_.scale_lambda, 1,
                                           std::move(scale_velocity_));
      scale_filter_ = std::move(t.filter);
      scale_velocity_ = std::move(t.velocity);
    }
  }

  state_ = TargetState{center, size, rmax, pnr_t, update, false};
  clamp_to_image(image);
  return state_;
}

void Tracker::clamp_to_image(const DenseMap& image) {
  const double w = static_cast<double>(image.width());
  const double h = static_cast<double>(image.height());
  state_.size.w = std::clamp(state_.size.w, 4.0, std::max(4.0, w));
  state_.size.h = std::clamp(state_.size.h, 4.0, std::max(4.0, h));
  const Point2 c = state_.center;
  state_.center.x = std::clamp(c.x, 0.0, w);
  state_.center.y = std::clamp(c.y, 0.0, h);
  state_.clamped = !(state_.center == c);
}

namespace {

constexpr char kTrackerMagic[8] = {'U', 'C', 'T', 'T', 'R', 'A', 'C', 'K'};
constexpr std::uint32_t kTrackerVersion = 1;

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  binary::write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (double x : v) binary::write_f64(out, x);
}

std::vector<double> read_doubles(std::istream& in) {
  const auto n = binary::read_u32(in);
  if (n > (1u << 26)) throw DataError("snapshot vector too long");
  std::vector<double> v(n);
  for (double& x : v) x = binary::read_f64(in);
  return v;
}

}  // namespace

void Tracker::save(std::ostream& out) const {
  if (!initialized_) throw InvalidArgument("save: tracker is not initialized");
  out.write(kTrackerMagic, sizeof(kTrackerMagic));
  binary::write_u32(out, kTrackerVersion);
  binary::write_string(out, to_json(config_));
  write_stack(out, pipeline_.stack());
  write_map(out, filter_.weights);
  binary::write_f64(out, sgd_.momentum);
  binary::write_f64(out, sgd_.learning_rate);
  binary::write_f64(out, sgd_.weight_decay);
  binary::write_u32(out, static_cast<std::uint32_t>(sgd_.velocity.size()));
  for (const auto& v : sgd_.velocity) write_map(out, v);
  write_scale_filter(out, scale_filter_);
  write_doubles(out, scale_velocity_);
  write_doubles(out, history_.pnr_values());
  write_doubles(out, history_.rmax_values());
  binary::write_f64(out, state_.center.x);
  binary::write_f64(out, state_.center.y);
  binary::write_f64(out, state_.size.w);
  binary::write_f64(out, state_.size.h);
  binary::write_f64(out, state_.score);
  binary::write_f64(out, state_.pnr);
  binary::write_u32(out, (state_.updated ? 1u : 0u) | (state_.clamped ? 2u : 0u));
  binary::write_u32(out, static_cast<std::uint32_t>(frame_index_));
  binary::write_f64(out, first_loss_before_);
  binary::write_f64(out, first_loss_after_);
  write_map(out, last_response_);
  if (!out) throw DataError("failed to write tracker snapshot");
}

Tracker Tracker::load(std::istream& in) {
  char magic[sizeof(kTrackerMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kTrackerMagic)) {
    throw DataError("not a tracker snapshot");
  }
  const auto version = binary::read_u32(in);
  if (version != kTrackerVersion) throw DataError("unsupported tracker snapshot version " + std::to_string(version));
  TrackerConfig config = parse_config(binary::read_string(in));
  ConvStack stack = read_stack(in);
  Tracker t(config, std::move(stack));
  t.filter_.weights = read_map(in);
  t.sgd_.momentum = binary::read_f64(in);
  t.sgd_.learning_rate = binary::read_f64(in);
  t.sgd_.weight_decay = binary::read_f64(in);
  const auto nv = binary::read_u32(in);
  if (nv > 64) throw DataError("snapshot declares too many velocity tensors");
  for (std::uint32_t k = 0; k < nv; ++k) t.sgd_.velocity.push_back(read_map(in));
  t.scale_filter_ = read_scale_filter(in);
  t.scale_velocity_ = read_doubles(in);
  const auto pnrs = read_doubles(in);
  const auto rmaxs = read_doubles(in);
  if (pnrs.size() != rmaxs.size()) throw DataError("snapshot history lengths differ");
  t.history_ = UpdateHistory(config.history_window);
  for (std::size_t k = 0; k < pnrs.size(); ++k) t.history_.append(pnrs[k], rmaxs[k]);
  t.state_.center.x = binary::read_f64(in);
  t.state_.center.y = binary::read_f64(in);
  t.state_.size.w = binary::read_f64(in);
  t.state_.size.h = binary::read_f64(in);
  t.state_.score = binary::read_f64(in);
  t.state_.pnr = binary::read_f64(in);
  const auto flags = binary::read_u32(in);
  t.state_.updated = (flags & 1u) != 0;
  t.state_.clamped = (flags & 2u) != 0;
  t.frame_index_ = binary::read_u32(in);
  t.first_loss_before_ = binary::read_f64(in);
  t.first_loss_after_ = binary::read_f64(in);
  t.last_response_ = read_map(in);
  const HeadGeometry& geo = t.pipeline_.geometry();
  if (t.filter_.weights.channels() != geo.feature_channels() || t.filter_.weights.height() != geo.filter_size()) {
    throw DataError("snapshot filter " + t.filter_.weights.shape_string() + " does not match its extractor");
  }
  t.initialized_ = true;
  return t;
}

}  // namespace uct

#include "uct/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uct/binary_io.hpp"
#include "uct/errors.hpp"

namespace uct {

ScaleFilter make_scale_filter(const TrackerConfig& config) {
  ScaleFilter f;
  f.count = config.scale_count;
  f.step = config.scale_step;
  f.sigma = config.scale_sigma_factor * static_cast<double>(config.scale_count);
  return f;
}

Size2 scale_patch_size(Size2 target, double step, int exponent) {
  const double factor = std::pow(step, exponent);
  const double w = factor * target.w;
  const double h = factor * target.h;
  if (!(w >= 1.0) || !(h >= 1.0)) {
    throw InvalidArgument("scale patch for exponent n=" + std::to_string(exponent) + " is sub-pixel (" +
                          std::to_string(w) + "x" + std::to_string(h) + ")");
  }
  return {std::max(2.0, std::round(w)), std::max(2.0, std::round(h))};
}

std::vector<double> pool_features(const DenseMap& features, std::size_t max_dims) {
  const std::size_t d = features.channels();
  const std::size_t fh = features.height();
  const std::size_t fw = features.width();
  const auto side = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(max_dims) / static_cast<double>(d))));
  const std::size_t gh = std::clamp<std::size_t>(side, 1, fh);
  const std::size_t gw = std::clamp<std::size_t>(side, 1, fw);
  std::vector<double> out;
  out.reserve(d * gh * gw);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t bi = 0; bi < gh; ++bi) {
      const std::size_t r0 = bi * fh / gh;
      const std::size_t r1 = std::max(r0 + 1, ((bi + 1) * fh + gh - 1) / gh);
      for (std::size_t bj = 0; bj < gw; ++bj) {
        const std::size_t c0 = bj * fw / gw;
        const std::size_t c1 = std::max(c0 + 1, ((bj + 1) * fw + gw - 1) / gw);
        double acc = 0.0;
        for (std::size_t i = r0; i < r1; ++i) {
          for (std::size_t j = c0; j < c1; ++j) acc += features(c, i, j);
        }
        out.push_back(acc / static_cast<double>((r1 - r0) * (c1 - c0)));
      }
    }
  }
  return out;
}

ScaleSampleSet build_scale_samples(const DenseMap& image, Point2 center, Size2 target, const ScaleFilter& filter,
                                   const ScaleExtractor& extractor) {
  if (filter.count % 2 == 0 || filter.count == 0) throw InvalidArgument("scale count must be odd");
  if (!(target.w > 0.0) || !(target.h > 0.0)) throw InvalidArgument("build_scale_samples: target size must be positive");
  static const ConvStack raw;
  const ConvStack& stack = extractor.stack != nullptr ? *extractor.stack : raw;
  const std::size_t t = extractor.template_size;

  ScaleSampleSet set;
  std::vector<std::vector<double>> rows;
  const int half = filter.half();
  for (int n = -half; n <= half; ++n) {
    const Size2 size = scale_patch_size(target, filter.step, n);
    Patch patch = crop_and_resize(image, Window{center, size}, t, t);
    DenseMap pixels = extractor.color ? patch.pixels : to_grayscale(patch.pixels);
    rows.push_back(pool_features(extract(center_intensities(pixels), stack), extractor.feature_dims));
    set.exponents.push_back(n);
    set.patch_sizes.push_back(size);
  }
  const std::size_t dims = rows.front().size();
  set.rows = DenseMap(1, filter.count, dims);
  std::vector<double> mean(dims, 0.0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < dims; ++k) mean[k] += row[k] / static_cast<double>(rows.size());
  }
  double energy = 0.0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t k = 0; k < dims; ++k) {
      const double v = rows[s][k] - mean[k];
      set.rows(s, k) = v;
      energy += v * v;
    }
  }
  energy /= static_cast<double>(rows.size());
  if (energy > 0.0) set.rows *= 1.0 / std::sqrt(energy);
  return set;
}

std::vector<double> scale_response(const ScaleSampleSet& samples, const ScaleFilter& filter) {
  const std::size_t dims = samples.rows.width();
  if (filter.weights.size() != dims) {
    throw InvalidArgument("scale_response: filter has " + std::to_string(filter.weights.size()) +
                          " weights, samples have " + std::to_string(dims) + " features");
  }
  std::vector<double> response(samples.rows.height(), 0.0);
  for (std::size_t s = 0; s < response.size(); ++s) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dims; ++k) acc += filter.weights[k] * samples.rows(s, k);
    response[s] = acc;
  }
  return response;
}

std::vector<double> scale_label(const ScaleFilter& filter, double center) {
  std::vector<double> y(filter.count);
  const int half = filter.half();
  for (std::size_t s = 0; s < filter.count; ++s) {
    const double d = static_cast<double>(static_cast<int>(s) - half) - center;
    y[s] = std::exp(-d * d / (2.0 * filter.sigma * filter.sigma));
  }
  return y;
}

namespace {

void require_label(const ScaleSampleSet& samples, std::span<const double> label) {
  if (label.size() != samples.rows.height()) {
    throw InvalidArgument("scale label has " + std::to_string(label.size()) + " entries for " +
                          std::to_string(samples.rows.height()) + " scale samples");
  }
}

}  // namespace

double scale_loss(const ScaleSampleSet& samples, const ScaleFilter& filter, std::span<const double> label,
                  double lambda) {
  require_label(samples, label);
  const auto r = scale_response(samples, filter);
  double l = 0.0;
  for (std::size_t s = 0; s < r.size(); ++s) l += (r[s] - label[s]) * (r[s] - label[s]);
  for (double w : filter.weights) l += lambda * w * w;
  return l;
}

std::vector<double> scale_gradient(const ScaleSampleSet& samples, const ScaleFilter& filter,
                                   std::span<const double> label, double lambda) {
  require_label(samples, label);
  const auto r = scale_response(samples, filter);
  const std::size_t dims = samples.rows.width();
  std::vector<double> g(dims);
  for (std::size_t k = 0; k < dims; ++k) g[k] = 2.0 * lambda * filter.weights[k];
  for (std::size_t s = 0; s < r.size(); ++s) {
    const double e = 2.0 * (r[s] - label[s]);
    for (std::size_t k = 0; k < dims; ++k) g[k] += e * samples.rows(s, k);
  }
  return g;
}

ScaleTraining train_scale_filter(const ScaleSampleSet& samples, ScaleFilter filter, std::span<const double> label,
                                 double learning_rate, double momentum, double lambda, std::size_t steps,
                                 std::vector<double> velocity) {
  const std::size_t dims = samples.rows.width();
  if (samples.rows.height() != filter.count) {
    throw InvalidArgument("train_scale_filter: " + std::to_string(samples.rows.height()) + " samples for S=" +
                          std::to_string(filter.count));
  }
  if (filter.weights.empty()) filter.weights.assign(dims, 0.0);
  if (velocity.size() != dims) velocity.assign(dims, 0.0);
  ScaleTraining t;
  for (std::size_t step = 0; step < steps; ++step) {
    t.losses.push_back(scale_loss(samples, filter, label, lambda));
    const auto g = scale_gradient(samples, filter, label, lambda);
    for (std::size_t k = 0; k < dims; ++k) {
      velocity[k] = momentum * velocity[k] - learning_rate * g[k];
      filter.weights[k] += velocity[k];
    }
  }
  const double final_loss = scale_loss(samples, filter, label, lambda);
  if (!std::isfinite(final_loss)) {
    throw NumericalError("scale filter training diverged after " + std::to_string(steps) + " steps");
  }
  t.losses.push_back(final_loss);
  filter.trained = true;
  t.filter = std::move(filter);
  t.velocity = std::move(velocity);
  return t;
}

double quadratic_peak_offset(double left, double peak, double right) {
  const double denom = left - 2.0 * peak + right;
  if (!(denom < 0.0)) return 0.0;
  const double offset = (left - right) / (2.0 * denom);
  return std::clamp(offset, -0.499999, 0.499999);
}

ScaleEstimate estimate_scale(const DenseMap& image, Point2 center, Size2 target, const ScaleFilter& filter,
                             const ScaleExtractor& extractor, double clamp, bool refine) {
  if (!filter.trained || filter.weights.empty()) throw InvalidArgument("estimate_scale: scale filter is untrained");
  ScaleEstimate e;
  e.samples = build_scale_samples(image, center, target, filter, extractor);
  e.response = scale_response(e.samples, filter);
  const auto best = static_cast<std::size_t>(std::max_element(e.response.begin(), e.response.end()) - e.response.begin());
  e.best_exponent = static_cast<int>(best) - filter.half();
  double offset = 0.0;
  if (refine && best > 0 && best + 1 < e.response.size()) {
    offset = quadratic_peak_offset(e.response[best - 1], e.response[best], e.response[best + 1]);
  }
  e.refined_exponent = e.best_exponent + offset;
  e.multiplier = std::clamp(std::pow(filter.step, e.refined_exponent), 1.0 / clamp, clamp);
  return e;
}

std::vector<double> pyramid_multipliers(double step, double clamp) {
  if (!(step > 1.0) || !(clamp >= 1.0)) throw InvalidArgument("pyramid_multipliers: need step > 1 and clamp >= 1");
  const int reach = static_cast<int>(std::floor(std::log(clamp) / std::log(step) + 1e-9));
  std::vector<double> out;
  for (int n = -reach; n <= reach; ++n) out.push_back(std::pow(step, n));
  return out;
}

MultiresEstimate estimate_scale_multires(const DenseMap& image, Point2 center, Size2 target, const FilterBank& f,
                                         const FeaturePipeline& pipeline, std::span<const double> scales) {
  if (scales.empty()) throw InvalidArgument("estimate_scale_multires: empty scale list");
  MultiresEstimate best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (double m : scales) {
    if (!(m > 0.0)) throw InvalidArgument("estimate_scale_multires: multipliers must be positive");
    const Window window = search_window(center, {target.w * m, target.h * m}, pipeline.geometry().padding_factor());
    DenseMap features = pipeline.features(image, window);
    DenseMap response = xcorr2d_valid(features, f.weights);
    const double score = map_stats(response).max_value;
    const bool closer = std::abs(std::log(m)) < std::abs(std::log(best.multiplier));
    if (score > best_score || (score == best_score && closer)) {
      best_score = score;
      best.multiplier = m;
      best.response = std::move(response);
      best.features = std::move(features);
      best.window = window;
    }
  }
  return best;
}

void write_scale_filter(std::ostream& out, const ScaleFilter& filter) {
  binary::write_u32(out, static_cast<std::uint32_t>(filter.count));
  binary::write_f64(out, filter.step);
  binary::write_f64(out, filter.sigma);
  binary::write_u32(out, filter.trained ? 1u : 0u);
  binary::write_u32(out, static_cast<std::uint32_t>(filter.weights.size()));
  for (double w : filter.weights) binary::write_f64(out, w);
}

ScaleFilter read_scale_filter(std::istream& in) {
  ScaleFilter f;
  f.count = binary::read_u32(in);
  f.step = binary::read_f64(in);
  f.sigma = binary::read_f64(in);
  f.trained = binary::read_u32(in) != 0;
  const auto n = binary::read_u32(in);
  if (n > (1u << 24)) throw DataError("scale filter declares " + std::to_string(n) + " weights");
  f.weights.resize(n);
  for (double& w : f.weights) w = binary::read_f64(in);
  if (f.count % 2 == 0 || !(f.step > 1.0)) throw DataError("corrupt scale filter header");
  return f;
}

}  // namespace uct

#include "uct/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "uct/errors.hpp"
#include "uct/features.hpp"
#include "uct/regression.hpp"
#include "uct/scale.hpp"
#include "uct/tensor_ops.hpp"

namespace uct {

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw InvalidArgument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double a = analytic[k];
    const double n = numeric[k];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

namespace {

// Central differences of `loss` with respect to every entry of `params`.
std::vector<double> numeric_gradient(std::span<double> params, const std::function<double()>& loss, double eps) {
  std::vector<double> g(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + eps;
    const double up = loss();
    params[k] = saved - eps;
    const double down = loss();
    params[k] = saved;
    g[k] = (up - down) / (2.0 * eps);
  }
  return g;
}

DenseMap random_map(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  DenseMap m(c, h, w);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

GradcheckSuite filter_suite(const GradcheckOptions& opt) {
  GradcheckSuite s{"filter_bank", 0, 0, 0, 0.0};
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> lambda_dist(0.0, 0.05);
  for (std::size_t n = 0; n < opt.instances; ++n) {
    const std::size_t d = pick(rng, 1, 4);
    const std::size_t fh = pick(rng, 1, 5);
    const std::size_t fw = pick(rng, 1, 5);
    const std::size_t xh = fh + pick(rng, 0, 6);
    const std::size_t xw = fw + pick(rng, 0, 6);
    TrainSample sample{random_map(d, xh, xw, rng), random_map(1, xh - fh + 1, xw - fw + 1, rng)};
    FilterBank f{random_map(d, fh, fw, rng, 0.3)};
    const double lambda = lambda_dist(rng);
    const FilterGradients g = grad_filters(sample, f, lambda);
    auto loss_fn = [&] { return loss(sample, f, lambda); };
    const auto nf = numeric_gradient(f.weights.data(), loss_fn, opt.epsilon);
    const auto nx = numeric_gradient(sample.features.data(), loss_fn, opt.epsilon);
    s.max_relative_error = std::max({s.max_relative_error, max_relative_error(g.filter.data(), nf, opt.floor),
                                     max_relative_error(g.input.data(), nx, opt.floor)});
    s.parameters += nf.size() + nx.size();
    ++s.instances;
  }
  return s;
}

// Smallest patch giving a filter of at least 2 cells and a response of at least 3.
std::size_t reduced_patch(const ConvStack& stack, double padding) {
  for (std::size_t p = 8; p <= 96; ++p) {
    const auto target = static_cast<std::size_t>(std::lround(static_cast<double>(p) / padding));
    if (target < stack.min_input_size()) continue;
    const auto [fh, fw] = stack.output_size(target, target);
    const auto [zh, zw] = stack.output_size(p, p);
    if (fh >= 2 && zh >= fh + 2) return p;
  }
  throw InvalidArgument("gradcheck: cannot size a small instance for this extractor");
}

bool near_kink(const ConvStack& stack, const StackTrace& trace, double margin) {
  const auto layers = stack.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!layers[k].rectify) continue;
    for (double v : trace.pre_activations[k].data()) {
      if (std::abs(v) < margin) return true;
    }
  }
  return false;
}

GradcheckSuite end_to_end_suite(const TrackerConfig& config, const GradcheckOptions& opt) {
  GradcheckSuite s{"end_to_end", 0, 0, 0, 0.0};
  auto specs = parse_layer_specs(config.layers);
  for (auto& spec : specs) spec.out_channels = std::min<std::size_t>(spec.out_channels, 4);
  const std::size_t channels = config.color ? 3 : 1;
  std::mt19937_64 rng(opt.seed + 1);
  std::uniform_real_distribution<double> lambda_dist(0.0, 0.05);

  TrackerConfig small = config;
  small.patch_size = reduced_patch(ConvStack::random(channels, specs, 0), config.padding_factor);

  std::size_t attempts = 0;
  while (s.instances < opt.instances) {
    if (++attempts > 50 * opt.instances) throw NumericalError("gradcheck: too many instances rejected near kinks");
    FeaturePipeline pipeline(ConvStack::random(channels, specs, rng()), small);
    const HeadGeometry& geo = pipeline.geometry();
    const std::size_t p = geo.patch_size();
    const DenseMap pixels = random_map(channels, p, p, rng);
    if (!pipeline.stack().empty() && near_kink(pipeline.stack(), extract_traced(pixels, pipeline.stack()), opt.kink_margin)) {
      ++s.rejected;
      continue;
    }
    std::uniform_real_distribution<double> cell(0.0, static_cast<double>(geo.response_size() - 1));
    const DenseMap label = geo.label({cell(rng), cell(rng)});
    FilterBank f = random_filter_bank(geo, 0.3, rng());
    const double lambda = lambda_dist(rng);
    const double decay = lambda_dist(rng);
    const EndToEndGradients g = end_to_end_gradients(pipeline, f, pixels, label, lambda, decay);
    auto loss_fn = [&] { return end_to_end_loss(pipeline, f, pixels, label, lambda, decay); };

    const auto nf = numeric_gradient(f.weights.data(), loss_fn, opt.epsilon);
    double worst = max_relative_error(g.filter_grad.weights.data(), nf, opt.floor);
    s.parameters += nf.size();
    auto layers = pipeline.mutable_stack().layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto nw = numeric_gradient(layers[k].weights.data(), loss_fn, opt.epsilon);
      worst = std::max(worst, max_relative_error(g.stack_grads[k].data(), nw, opt.floor));
      s.parameters += nw.size();
    }
    s.max_relative_error = std::max(s.max_relative_error, worst);
    ++s.instances;
  }
  return s;
}

GradcheckSuite scale_suite(const GradcheckOptions& opt) {
  GradcheckSuite s{"scale_filter", 0, 0, 0, 0.0};
  std::mt19937_64 rng(opt.seed + 2);
  std::uniform_real_distribution<double> lambda_dist(0.0, 0.05);
  std::uniform_real_distribution<double> center_dist(-1.5, 1.5);
  for (std::size_t n = 0; n < opt.instances; ++n) {
    ScaleFilter filter;
    filter.count = 2 * pick(rng, 1, 6) + 1;
    filter.step = 1.02;
    filter.sigma = static_cast<double>(filter.count) / 16.0;
    const std::size_t dims = pick(rng, 2, 16);
    ScaleSampleSet samples;
    samples.rows = random_map(1, filter.count, dims, rng);
    const DenseMap w = random_map(1, 1, dims, rng, 0.3);
    filter.weights.assign(w.data().begin(), w.data().end());
    filter.trained = true;
    const auto label = scale_label(filter, center_dist(rng));
    const double lambda = lambda_dist(rng);
    const auto g = scale_gradient(samples, filter, label, lambda);
    const auto ng = numeric_gradient(filter.weights, [&] { return scale_loss(samples, filter, label, lambda); },
                                     opt.epsilon);
    s.max_relative_error = std::max(s.max_relative_error, max_relative_error(g, ng, opt.floor));
    s.parameters += ng.size();
    ++s.instances;
  }
  return s;
}

}  // namespace

std::vector<GradcheckSuite> run_gradchecks(const TrackerConfig& config, const GradcheckOptions& options) {
  if (options.instances == 0) throw InvalidArgument("gradcheck: instances must be positive");
  if (!(options.epsilon > 0.0)) throw InvalidArgument("gradcheck: epsilon must be positive");
  return {filter_suite(options), end_to_end_suite(config, options), scale_suite(options)};
}

}  // namespace uct

#include "uct/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "uct/binary_io.hpp"
#include "uct/errors.hpp"

namespace uct {

Patch crop_and_resize(const DenseMap& image, const Window& window, std::size_t out_h, std::size_t out_w) {
  if (image.empty()) throw InvalidArgument("crop_and_resize: empty image");
  if (!(window.size.w > 0.0) || !(window.size.h > 0.0) || !std::isfinite(window.center.x) ||
      !std::isfinite(window.center.y)) {
    throw InvalidArgument("crop_and_resize: window must have positive size and a finite center");
  }
  if (out_h == 0 || out_w == 0) throw InvalidArgument("crop_and_resize: output size must be positive");

  const std::size_t ih = image.height();
  const std::size_t iw = image.width();
  const double sx = window.size.w / static_cast<double>(out_w);
  const double sy = window.size.h / static_cast<double>(out_h);

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto make_taps = [](std::size_t n, double origin, double step, std::size_t limit) {
    std::vector<Tap> taps(n);
    const double max_index = static_cast<double>(limit - 1);
    for (std::size_t k = 0; k < n; ++k) {
      const double f = std::clamp(origin + (static_cast<double>(k) + 0.5) * step - 0.5, 0.0, max_index);
      const auto lo = static_cast<std::size_t>(std::floor(f));
      taps[k] = {lo, std::min(lo + 1, limit - 1), f - static_cast<double>(lo)};
    }
    return taps;
  };
  const auto cols = make_taps(out_w, window.left(), sx, iw);
  const auto rows = make_taps(out_h, window.top(), sy, ih);

  Patch patch{DenseMap(image.channels(), out_h, out_w), window};
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const double* src = image.channel(c).data();
    for (std::size_t r = 0; r < out_h; ++r) {
      const Tap& ry = rows[r];
      const double* top = src + ry.lo * iw;
      const double* bottom = src + ry.hi * iw;
      for (std::size_t k = 0; k < out_w; ++k) {
        const Tap& cx = cols[k];
        const double t = top[cx.lo] + cx.frac * (top[cx.hi] - top[cx.lo]);
        const double b = bottom[cx.lo] + cx.frac * (bottom[cx.hi] - bottom[cx.lo]);
        patch.pixels(c, r, k) = t + ry.frac * (b - t);
      }
    }
  }
  return patch;
}

DenseMap to_grayscale(const DenseMap& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) {
    throw InvalidArgument("to_grayscale: expected 1 or 3 channels, got " + image.shape_string());
  }
  DenseMap gray(1, image.height(), image.width());
  const auto r = image.channel(0);
  const auto g = image.channel(1);
  const auto b = image.channel(2);
  auto out = gray.data();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.299 * r[k] + 0.587 * g[k] + 0.114 * b[k];
  return gray;
}

DenseMap center_intensities(const DenseMap& pixels) {
  DenseMap out = pixels;
  const double mean = pixels.sum() / static_cast<double>(pixels.size());
  for (double& v : out.data()) v -= mean;
  return out;
}

std::vector<LayerSpec> parse_layer_specs(std::string_view text) {
  std::vector<LayerSpec> specs;
  if (text.empty() || text == "raw") return specs;
  std::string item;
  std::stringstream all{std::string(text)};
  while (std::getline(all, item, ',')) {
    std::stringstream fields(item);
    std::string out, kernel, stride, act;
    if (!std::getline(fields, out, ':') || !std::getline(fields, kernel, ':') ||
        !std::getline(fields, stride, ':') || !std::getline(fields, act)) {
      throw InvalidArgument("layer spec '" + item + "' is not out:kernel:stride:activation");
    }
    LayerSpec spec;
    try {
      spec.out_channels = std::stoul(out);
      spec.kernel = std::stoul(kernel);
      spec.stride = std::stoul(stride);
    } catch (const std::exception&) {
      throw InvalidArgument("layer spec '" + item + "' has a non-numeric field");
    }
    if (act == "relu") {
      spec.rectify = true;
    } else if (act != "linear") {
      throw InvalidArgument("layer spec '" + item + "': activation must be relu or linear");
    }
    if (spec.out_channels == 0 || spec.kernel == 0 || spec.stride == 0) {
      throw InvalidArgument("layer spec '" + item + "' has a zero field");
    }
    specs.push_back(spec);
  }
  return specs;
}

std::string format_layer_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) return "raw";
  std::string s;
  for (const auto& spec : specs) {
    if (!s.empty()) s += ',';
    s += std::to_string(spec.out_channels) + ':' + std::to_string(spec.kernel) + ':' +
         std::to_string(spec.stride) + ':' + (spec.rectify ? "relu" : "linear");
  }
  return s;
}

ConvStack::ConvStack(std::vector<ConvLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const ConvLayer& l = layers_[k];
    if (l.out_channels == 0 || l.in_channels == 0 || l.kernel == 0 || l.stride == 0) {
      throw InvalidArgument("conv layer " + std::to_string(k) + " has a zero dimension");
    }
    if (l.weights.channels() != l.out_channels * l.in_channels || l.weights.height() != l.kernel ||
        l.weights.width() != l.kernel) {
      throw InvalidArgument("conv layer " + std::to_string(k) + " weights " + l.weights.shape_string() +
                            " do not match its declared shape");
    }
    if (k > 0 && layers_[k - 1].out_channels != l.in_channels) {
      throw InvalidArgument("conv layer " + std::to_string(k) + " expects " + std::to_string(l.in_channels) +
                            " input channels but the previous layer emits " +
                            std::to_string(layers_[k - 1].out_channels));
    }
  }
}

ConvStack ConvStack::random(std::size_t input_channels, std::span<const LayerSpec> specs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ConvLayer> layers;
  std::size_t in = input_channels;
  for (const auto& spec : specs) {
    ConvLayer layer{DenseMap(spec.out_channels * in, spec.kernel, spec.kernel), spec.out_channels, in,
                    spec.kernel, spec.stride, spec.rectify};
    const double fan_in = static_cast<double>(in * spec.kernel * spec.kernel);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (double& w : layer.weights.data()) w = normal(rng);
    layers.push_back(std::move(layer));
    in = spec.out_channels;
  }
  return ConvStack(std::move(layers));
}

std::vector<LayerSpec> ConvStack::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back({l.out_channels, l.kernel, l.stride, l.rectify});
  return out;
}

std::size_t ConvStack::total_stride() const noexcept {
  std::size_t s = 1;
  for (const auto& l : layers_) s *= l.stride;
  return s;
}

std::size_t ConvStack::output_channels(std::size_t input_channels) const noexcept {
  return layers_.empty() ? input_channels : layers_.back().out_channels;
}

std::pair<std::size_t, std::size_t> ConvStack::output_size(std::size_t h, std::size_t w) const noexcept {
  for (const auto& l : layers_) {
    if (h < l.kernel || w < l.kernel) return {0, 0};
    h = (h - l.kernel) / l.stride + 1;
    w = (w - l.kernel) / l.stride + 1;
  }
  return {h, w};
}

std::size_t ConvStack::min_input_size() const noexcept {
  std::size_t m = 1;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) m = (m - 1) * it->stride + it->kernel;
  return m;
}

double ConvStack::receptive_offset() const noexcept {
  double offset = 0.0;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    offset = static_cast<double>(it->stride) * offset + 0.5 * static_cast<double>(it->kernel - 1);
  }
  return offset;
}

namespace {

DenseMap conv_forward(const ConvLayer& layer, const DenseMap& in) {
  const std::size_t k = layer.kernel;
  const std::size_t s = layer.stride;
  const std::size_t oh = (in.height() - k) / s + 1;
  const std::size_t ow = (in.width() - k) / s + 1;
  const std::size_t iw = in.width();
  const std::size_t cells = oh * ow;
  // Unfold every input window into a column so the accumulation runs over whole output planes.
  std::vector<double> cols(layer.in_channels * k * k * cells);
  double* col = cols.data();
  for (std::size_t c = 0; c < layer.in_channels; ++c) {
    const double* ip = in.channel(c).data();
    for (std::size_t u = 0; u < k; ++u) {
      for (std::size_t v = 0; v < k; ++v) {
        for (std::size_t i = 0; i < oh; ++i) {
          const double* row = ip + (s * i + u) * iw + v;
          for (std::size_t j = 0; j < ow; ++j) *col++ = row[s * j];
        }
      }
    }
  }
  DenseMap out(layer.out_channels, oh, ow);
  const std::size_t taps = layer.in_channels * k * k;
  for (std::size_t o = 0; o < layer.out_channels; ++o) {
    double* op = out.channel(o).data();
    const double* w = layer.weights.channel(o * layer.in_channels).data();
    for (std::size_t q = 0; q < taps; ++q) {
      const double wq = w[q];
      const double* cq = cols.data() + q * cells;
      for (std::size_t p = 0; p < cells; ++p) op[p] += wq * cq[p];
    }
  }
  return out;
}

void check_input(const DenseMap& input, const ConvStack& stack) {
  if (input.empty()) throw InvalidArgument("extract: empty input");
  if (stack.empty()) return;
  if (input.channels() != stack.layers().front().in_channels) {
    throw InvalidArgument("extract: input has " + std::to_string(input.channels()) +
                          " channels, stack expects " + std::to_string(stack.layers().front().in_channels));
  }
  const auto [h, w] = stack.output_size(input.height(), input.width());
  if (h == 0 || w == 0) {
    const auto m = std::to_string(stack.min_input_size());
    throw InvalidArgument("extract: input " + input.shape_string() + " too small for the stack; minimum size is " +
                          m + "x" + m);
  }
}

}  // namespace

StackTrace extract_traced(const DenseMap& input, const ConvStack& stack) {
  check_input(input, stack);
  StackTrace trace;
  DenseMap current = input;
  for (const auto& layer : stack.layers()) {
    DenseMap pre = conv_forward(layer, current);
    DenseMap post = pre;
    if (layer.rectify) {
      for (double& v : post.data()) v = v > 0.0 ? v : 0.0;
    }
    trace.inputs.push_back(std::move(current));
    trace.pre_activations.push_back(std::move(pre));
    current = std::move(post);
  }
  trace.output = std::move(current);
  return trace;
}

DenseMap extract(const DenseMap& input, const ConvStack& stack) {
  check_input(input, stack);
  DenseMap current = input;
  for (const auto& layer : stack.layers()) {
    current = conv_forward(layer, current);
    if (layer.rectify) {
      for (double& v : current.data()) v = v > 0.0 ? v : 0.0;
    }
  }
  return current;
}

DenseMap extract(const Patch& patch, const ConvStack& stack) { return extract(patch.pixels, stack); }

std::vector<DenseMap> backward_stack(const ConvStack& stack, const StackTrace& trace, const DenseMap& upstream) {
  if (!upstream.same_shape(trace.output)) {
    throw InvalidArgument("backward_stack: upstream gradient " + upstream.shape_string() +
                          " does not match feature shape " + trace.output.shape_string());
  }
  const auto layers = stack.layers();
  std::vector<DenseMap> grads(layers.size());
  DenseMap g = upstream;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const ConvLayer& layer = layers[idx];
    const DenseMap& in = trace.inputs[idx];
    const DenseMap& pre = trace.pre_activations[idx];
    if (layer.rectify) {
      auto gd = g.data();
      const auto pd = pre.data();
      for (std::size_t k = 0; k < gd.size(); ++k) {
        if (!(pd[k] > 0.0)) gd[k] = 0.0;
      }
    }
    const std::size_t k = layer.kernel;
    const std::size_t s = layer.stride;
    const std::size_t oh = pre.height();
    const std::size_t ow = pre.width();
    const std::size_t iw = in.width();
    DenseMap dw(layer.weights.channels(), k, k);
    const bool need_input_grad = idx > 0;
    DenseMap din = need_input_grad ? DenseMap(in.channels(), in.height(), in.width()) : DenseMap();
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
      const double* gp = g.channel(o).data();
      for (std::size_t c = 0; c < layer.in_channels; ++c) {
        const double* ip = in.channel(c).data();
        double* dip = need_input_grad ? din.channel(c).data() : nullptr;
        const std::size_t wc = o * layer.in_channels + c;
        for (std::size_t u = 0; u < k; ++u) {
          for (std::size_t v = 0; v < k; ++v) {
            const double w = layer.weights(wc, u, v);
            double acc = 0.0;
            for (std::size_t i = 0; i < oh; ++i) {
              const std::size_t base = (s * i + u) * iw + v;
              const double* grow = gp + i * ow;
              const double* row = ip + base;
              for (std::size_t j = 0; j < ow; ++j) acc += grow[j] * row[s * j];
              if (dip != nullptr) {
                double* drow = dip + base;
                for (std::size_t j = 0; j < ow; ++j) drow[s * j] += w * grow[j];
              }
            }
            dw(wc, u, v) = acc;
          }
        }
      }
    }
    grads[idx] = std::move(dw);
    if (need_input_grad) g = std::move(din);
  }
  return grads;
}

std::vector<DenseMap> backward_stack(const ConvStack& stack, const Patch& patch, const DenseMap& upstream) {
  return backward_stack(stack, extract_traced(patch.pixels, stack), upstream);
}

DenseMap apply_window(const DenseMap& features, const DenseMap& window) {
  if (window.channels() != 1 || window.height() != features.height() || window.width() != features.width()) {
    throw InvalidArgument("apply_window: window " + window.shape_string() + " does not match features " +
                          features.shape_string());
  }
  DenseMap out = features;
  const auto w = window.data();
  for (std::size_t c = 0; c < out.channels(); ++c) {
    auto plane = out.channel(c);
    for (std::size_t k = 0; k < plane.size(); ++k) plane[k] *= w[k];
  }
  return out;
}

EnergyNormalized normalize_energy(const DenseMap& z, double target_mean_square) {
  if (!(target_mean_square > 0.0)) throw InvalidArgument("normalize_energy: target must be positive");
  const double mean_square = z.squared_norm() / static_cast<double>(z.size());
  EnergyNormalized r{z, 1.0};
  if (mean_square > 0.0) {
    r.scale = std::sqrt(target_mean_square / mean_square);
    r.output *= r.scale;
  }
  return r;
}

DenseMap normalize_energy_backward(const EnergyNormalized& forward, const DenseMap& upstream) {
  if (!upstream.same_shape(forward.output)) {
    throw InvalidArgument("normalize_energy_backward: shape mismatch " + upstream.shape_string() + " vs " +
                          forward.output.shape_string());
  }
  // y = k z with k = sqrt(T / mean(z^2)); dL/dz = k g - y (g . y) / (k N mean(z^2))
  // and since y = k z, N mean(z^2) = |y|^2 / k^2, giving k (g - y (g . y) / |y|^2).
  const double k = forward.scale;
  const auto y = forward.output.data();
  const auto g = upstream.data();
  double gy = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    gy += g[i] * y[i];
    yy += y[i] * y[i];
  }
  DenseMap out(upstream.channels(), upstream.height(), upstream.width());
  auto o = out.data();
  const double coef = yy > 0.0 ? gy / yy : 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) o[i] = k * (g[i] - coef * y[i]);
  return out;
}

void write_stack(std::ostream& out, const ConvStack& stack) {
  binary::write_u32(out, static_cast<std::uint32_t>(stack.layers().size()));
  for (const auto& l : stack.layers()) {
    binary::write_u32(out, static_cast<std::uint32_t>(l.out_channels));
    binary::write_u32(out, static_cast<std::uint32_t>(l.in_channels));
    binary::write_u32(out, static_cast<std::uint32_t>(l.kernel));
    binary::write_u32(out, static_cast<std::uint32_t>(l.stride));
    binary::write_u32(out, l.rectify ? 1u : 0u);
    write_map(out, l.weights);
  }
}

ConvStack read_stack(std::istream& in) {
  const auto n = binary::read_u32(in);
  if (n > 64) throw DataError("conv stack declares " + std::to_string(n) + " layers");
  std::vector<ConvLayer> layers;
  for (std::uint32_t k = 0; k < n; ++k) {
    ConvLayer l;
    l.out_channels = binary::read_u32(in);
    l.in_channels = binary::read_u32(in);
    l.kernel = binary::read_u32(in);
    l.stride = binary::read_u32(in);
    l.rectify = binary::read_u32(in) != 0;
    l.weights = read_map(in);
    layers.push_back(std::move(l));
  }
  try {
    return ConvStack(std::move(layers));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("corrupt conv stack: ") + e.what());
  }
}

}  // namespace uct

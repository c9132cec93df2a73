#include "uct/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "uct/errors.hpp"

namespace uct {

namespace {

// Value noise: a grid of uniform random values sampled bilinearly.
class ValueNoise {
 public:
  ValueNoise(std::size_t nodes_x, std::size_t nodes_y, std::mt19937_64& rng, double lo, double hi)
      : nx_(nodes_x), ny_(nodes_y), values_(nodes_x * nodes_y) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : values_) v = u(rng);
  }

  // u, v in node units.
  double sample(double u, double v) const {
    u = std::clamp(u, 0.0, static_cast<double>(nx_ - 1));
    v = std::clamp(v, 0.0, static_cast<double>(ny_ - 1));
    const auto i0 = std::min(static_cast<std::size_t>(v), ny_ - 1);
    const auto j0 = std::min(static_cast<std::size_t>(u), nx_ - 1);
    const std::size_t i1 = std::min(i0 + 1, ny_ - 1);
    const std::size_t j1 = std::min(j0 + 1, nx_ - 1);
    const double a = u - static_cast<double>(j0);
    const double b = v - static_cast<double>(i0);
    const double top = (1 - a) * at(i0, j0) + a * at(i0, j1);
    const double bottom = (1 - a) * at(i1, j0) + a * at(i1, j1);
    return (1 - b) * top + b * bottom;
  }

 private:
  double at(std::size_t i, std::size_t j) const { return values_[i * nx_ + j]; }
  std::size_t nx_, ny_;
  std::vector<double> values_;
};

// Fraction of pixel [p, p+1) covered by [lo, hi).
double coverage(double p, double lo, double hi) {
  return std::clamp(std::min(p + 1.0, hi) - std::max(p, lo), 0.0, 1.0);
}

Box box_at(const SynthSpec& spec, Point2 start, std::size_t k) {
  const double growth = std::pow(spec.zoom, static_cast<double>(k));
  const Size2 size{spec.object_size.w * growth, spec.object_size.h * growth};
  const Point2 c{start.x + spec.velocity.x * static_cast<double>(k), start.y + spec.velocity.y * static_cast<double>(k)};
  return Box::from_center(c, size);
}

bool inside(const Box& b, const SynthSpec& spec) {
  return b.x >= 0.0 && b.y >= 0.0 && b.x + b.w <= static_cast<double>(spec.canvas_width) &&
         b.y + b.h <= static_cast<double>(spec.canvas_height);
}

}  // namespace

SynthSequence generate_synthetic(const SynthSpec& spec) {
  if (spec.frame_count == 0) throw InvalidArgument("synthetic spec: frame_count must be >= 1");
  if (!(spec.zoom > 0.0)) throw InvalidArgument("synthetic spec: zoom must be positive");
  if (spec.canvas_width < 8 || spec.canvas_height < 8) throw InvalidArgument("synthetic spec: canvas too small");
  if (!(spec.object_size.w >= 2.0) || !(spec.object_size.h >= 2.0)) {
    throw InvalidArgument("synthetic spec: object must be at least 2x2 px");
  }
  if (spec.occluder_opacity < 0.0 || spec.occluder_opacity > 1.0) {
    throw InvalidArgument("synthetic spec: occluder opacity must lie in [0, 1]");
  }
  const Point2 start = spec.start_center.value_or(
      Point2{0.5 * static_cast<double>(spec.canvas_width), 0.5 * static_cast<double>(spec.canvas_height)});
  if (!inside(box_at(spec, start, 0), spec)) throw InvalidArgument("synthetic spec: first box leaves the canvas");

  const std::size_t channels = spec.color ? 3 : 1;
  const std::size_t W = spec.canvas_width;
  const std::size_t H = spec.canvas_height;
  std::mt19937_64 rng(spec.seed);

  // Background: two octaves of value noise per channel, low contrast.
  DenseMap background(channels, H, W);
  for (std::size_t c = 0; c < channels; ++c) {
    const double coarse_cell = 16.0;
    const double fine_cell = 5.0;
    ValueNoise coarse(W / 16 + 2, H / 16 + 2, rng, 0.2, 0.6);
    ValueNoise fine(W / 5 + 2, H / 5 + 2, rng, -0.08, 0.08);
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        const double x = static_cast<double>(j) + 0.5;
        const double y = static_cast<double>(i) + 0.5;
        background(c, i, j) = coarse.sample(x / coarse_cell, y / coarse_cell) + fine.sample(x / fine_cell, y / fine_cell);
      }
    }
  }
  // Object texture lives in normalized object coordinates so it zooms with the box.
  std::vector<ValueNoise> object_texture;
  for (std::size_t c = 0; c < channels; ++c) object_texture.emplace_back(7, 7, rng, 0.0, 1.0);
  std::uniform_real_distribution<double> shade(0.35, 0.65);
  const double occluder_value = shade(rng);

  SynthSequence out;
  out.requested_frames = spec.frame_count;
  out.sequence.name = "synthetic_" + std::to_string(spec.seed);
  for (std::size_t k = 0; k < spec.frame_count; ++k) {
    const Box box = box_at(spec, start, k);
    if (!inside(box, spec)) {
      out.truncated = true;
      out.sequence.warnings.push_back("object leaves the canvas at frame " + std::to_string(k + 1) + "; emitted " +
                                      std::to_string(k) + " of " + std::to_string(spec.frame_count) + " frames");
      break;
    }
    const bool occluded = k + 1 >= spec.occlusion_first && k + 1 <= spec.occlusion_last;
    const Box occ = Box::from_center(box.center(), {box.w * spec.occluder_scale, box.h * spec.occluder_scale});
    DenseMap frame = background;
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(box.y, occ.y))));
    const auto i1 = std::min(H, static_cast<std::size_t>(std::ceil(std::max(box.y + box.h, occ.y + occ.h))));
    const auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(box.x, occ.x))));
    const auto j1 = std::min(W, static_cast<std::size_t>(std::ceil(std::max(box.x + box.w, occ.x + occ.w))));
    for (std::size_t i = i0; i < i1; ++i) {
      const double py = static_cast<double>(i);
      const double cy = coverage(py, box.y, box.y + box.h);
      const double oy = coverage(py, occ.y, occ.y + occ.h);
      for (std::size_t j = j0; j < j1; ++j) {
        const double px = static_cast<double>(j);
        const double cover = cy * coverage(px, box.x, box.x + box.w);
        const double u = std::clamp((px + 0.5 - box.x) / box.w, 0.0, 1.0) * 6.0;
        const double v = std::clamp((py + 0.5 - box.y) / box.h, 0.0, 1.0) * 6.0;
        const double occ_cover = occluded ? spec.occluder_opacity * oy * coverage(px, occ.x, occ.x + occ.w) : 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          double value = frame(c, i, j);
          if (cover > 0.0) value = (1.0 - cover) * value + cover * object_texture[c].sample(u, v);
          if (occ_cover > 0.0) value = (1.0 - occ_cover) * value + occ_cover * occluder_value;
          frame(c, i, j) = value;
        }
      }
    }
    out.sequence.frames.push_back(std::move(frame));
    out.sequence.boxes.push_back(box);
    out.occluded.push_back(occluded);
  }
  return out;
}

std::vector<SynthSpec> random_specs(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                    bool with_occlusion, bool color) {
  std::mt19937_64 rng(master_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SynthSpec> specs;
  for (std::size_t n = 0; n < count; ++n) {
    SynthSpec s;
    s.canvas_width = 192;
    s.canvas_height = 144;
    s.frame_count = frames;
    s.color = color;
    s.seed = rng();
    const double side = 22.0 + 12.0 * unit(rng);
    const double aspect = 0.75 + 0.5 * unit(rng);
    s.object_size = {side * std::sqrt(aspect), side / std::sqrt(aspect)};
    s.zoom = 0.99 + 0.025 * unit(rng);
    const double speed = 2.0 * unit(rng);
    const double angle = 2.0 * 3.14159265358979323846 * unit(rng);
    s.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
    if (with_occlusion && n % 2 == 1 && frames >= 20) {
      const std::size_t length = std::max<std::size_t>(3, frames / 8);
      s.occlusion_first = frames / 3 + static_cast<std::size_t>(unit(rng) * static_cast<double>(frames / 3));
      s.occlusion_last = std::min(frames, s.occlusion_first + length - 1);
    }
    // Place the start so the whole trajectory stays on the canvas; slow down until it fits.
    const double margin = 2.0;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const double last = static_cast<double>(frames - 1);
      const double g = std::pow(s.zoom, last);
      const double hw = 0.5 * s.object_size.w * std::max(1.0, g);
      const double hh = 0.5 * s.object_size.h * std::max(1.0, g);
      const double lo_x = margin + hw - std::min(0.0, s.velocity.x * last);
      const double hi_x = static_cast<double>(s.canvas_width) - margin - hw - std::max(0.0, s.velocity.x * last);
      const double lo_y = margin + hh - std::min(0.0, s.velocity.y * last);
      const double hi_y = static_cast<double>(s.canvas_height) - margin - hh - std::max(0.0, s.velocity.y * last);
      if (lo_x <= hi_x && lo_y <= hi_y) {
        s.start_center = Point2{lo_x + (hi_x - lo_x) * unit(rng), lo_y + (hi_y - lo_y) * unit(rng)};
        break;
      }
      s.velocity = {0.7 * s.velocity.x, 0.7 * s.velocity.y};
      s.zoom = 1.0 + 0.7 * (s.zoom - 1.0);
    }
    specs.push_back(s);
  }
  return specs;
}

std::vector<SynthSequence> generate_corpus(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                           bool color) {
  std::vector<SynthSequence> out;
  std::size_t index = 0;
  for (const SynthSpec& s : random_specs(count, frames, master_seed, false, color)) {
    out.push_back(generate_synthetic(s));
    out.back().sequence.name = "corpus_" + std::to_string(index++);
  }
  return out;
}

std::vector<SynthSequence> generate_suite(std::size_t count, std::size_t frames, std::uint64_t master_seed,
                                          bool color) {
  std::vector<SynthSequence> out;
  std::size_t index = 0;
  for (const SynthSpec& s : random_specs(count, frames, master_seed, true, color)) {
    out.push_back(generate_synthetic(s));
    char name[32];
    std::snprintf(name, sizeof(name), "suite_%02zu", index++);
    out.back().sequence.name = name;
  }
  return out;
}

}  // namespace uct

#include <benchmark/benchmark.h>

#include <random>

#include "uct/config.hpp"
#include "uct/features.hpp"
#include "uct/scale.hpp"
#include "uct/synth.hpp"
#include "uct/tensor_ops.hpp"
#include "uct/tracker.hpp"

namespace {

uct::DenseMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  uct::DenseMap m(c, h, w);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Response of a filter-sized template over a search feature map.
void BM_Xcorr(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const uct::DenseMap x = random_map(channels, 14, 14, 1);
  const uct::DenseMap f = random_map(channels, 6, 6, 2);
  for (auto _ : state) benchmark::DoNotOptimize(uct::xcorr2d_valid(x, f));
}
BENCHMARK(BM_Xcorr)->Arg(1)->Arg(16)->Arg(64);

void BM_Extract(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const uct::ConvStack stack = uct::ConvStack::random(1, uct::parse_layer_specs(uct::desk_defaults().layers), 3);
  const uct::DenseMap patch = random_map(1, size, size, 4);
  for (auto _ : state) benchmark::DoNotOptimize(uct::extract(patch, stack));
}
BENCHMARK(BM_Extract)->Arg(32)->Arg(64)->Arg(128);

void BM_ScaleSamples(benchmark::State& state) {
  uct::SynthSpec spec;
  spec.frame_count = 1;
  const auto seq = uct::generate_synthetic(spec).sequence;
  const uct::TrackerConfig config = uct::desk_defaults();
  const uct::ConvStack stack = uct::ConvStack::random(1, uct::parse_layer_specs(config.layers), 5);
  const uct::ScaleFilter filter = uct::make_scale_filter(config);
  const uct::ScaleExtractor extractor{&stack, config.scale_template, config.scale_feature_dims, false};
  for (auto _ : state) {
    benchmark::DoNotOptimize(uct::build_scale_samples(seq.frames[0], seq.boxes[0].center(), seq.boxes[0].size(),
                                                      filter, extractor));
  }
}
BENCHMARK(BM_ScaleSamples);

// One tracking step, by scale mode: filter, multires, none.
void BM_TrackerStep(benchmark::State& state) {
  static const char* modes[] = {"filter", "multires", "none"};
  uct::TrackerConfig config = uct::desk_defaults();
  config.use_pretrained = false;
  config.scale_mode = modes[state.range(0)];
  uct::SynthSpec spec;
  spec.frame_count = 2;
  const auto seq = uct::generate_synthetic(spec).sequence;
  uct::Tracker tracker(config, uct::ConvStack::random(1, uct::parse_layer_specs(config.layers), 6));
  tracker.init(seq.frames[0], seq.boxes[0]);
  for (auto _ : state) benchmark::DoNotOptimize(tracker.step(seq.frames[1]));
  state.SetLabel(config.scale_mode);
}
BENCHMARK(BM_TrackerStep)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uct/dense_map.hpp"
#include "uct/geometry.hpp"

namespace uct {

/// Image crop resampled to a fixed size; pixels are intensities in [0,1].
struct Patch {
  DenseMap pixels;
  Window source_window;
};

/// Bilinear crop of `window` from `image` resampled to out_h x out_w. Samples
/// outside the image replicate the nearest edge pixel.
Patch crop_and_resize(const DenseMap& image, const Window& window, std::size_t out_h, std::size_t out_w);

/// Luminance conversion (0.299, 0.587, 0.114); 1-channel input is returned as-is.
DenseMap to_grayscale(const DenseMap& image);

/// Subtracts the mean over all cells of the map.
DenseMap center_intensities(const DenseMap& pixels);

struct LayerSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  bool rectify = false;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Parses "8:3:2:relu,16:3:2:linear" (out:kernel:stride:activation, comma
/// separated). The empty string and "raw" denote the empty stack.
std::vector<LayerSpec> parse_layer_specs(std::string_view text);
std::string format_layer_specs(std::span<const LayerSpec> specs);

/// One valid-mode convolution layer without bias. Weights are stored as a
/// DenseMap with out*in channels, channel index o*in + c.
struct ConvLayer {
  DenseMap weights;
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  bool rectify = false;

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Ordered convolution layers forming the trainable feature extractor.
/// An empty stack is the raw-channel extractor.
class ConvStack {
 public:
  ConvStack() = default;
  explicit ConvStack(std::vector<ConvLayer> layers);

  /// He-normal initialized stack for `input_channels` inputs.
  static ConvStack random(std::size_t input_channels, std::span<const LayerSpec> specs, std::uint64_t seed);

  bool empty() const noexcept { return layers_.empty(); }
  std::span<const ConvLayer> layers() const noexcept { return layers_; }
  std::span<ConvLayer> layers() noexcept { return layers_; }
  std::vector<LayerSpec> specs() const;

  std::size_t total_stride() const noexcept;
  /// Output channel count for an input with `input_channels` channels.
  std::size_t output_channels(std::size_t input_channels) const noexcept;
  /// Spatial output size for an h x w input; {0,0} if the input is too small.
  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const noexcept;
  /// Smallest square input that yields a 1x1 output.
  std::size_t min_input_size() const noexcept;
  /// Input pixel index at the receptive-field center of output cell 0.
  double receptive_offset() const noexcept;

  friend bool operator==(const ConvStack&, const ConvStack&) = default;

 private:
  std::vector<ConvLayer> layers_;
};

/// Intermediate values of a forward pass, kept for backpropagation.
struct StackTrace {
  std::vector<DenseMap> inputs;          // input of each layer
  std::vector<DenseMap> pre_activations; // conv output before the rectifier
  DenseMap output;
};

DenseMap extract(const DenseMap& input, const ConvStack& stack);
DenseMap extract(const Patch& patch, const ConvStack& stack);
StackTrace extract_traced(const DenseMap& input, const ConvStack& stack);

/// Gradients of sum(upstream * extract(input)) with respect to every layer's
/// weights, one map per layer shaped like that layer's weights.
std::vector<DenseMap> backward_stack(const ConvStack& stack, const StackTrace& trace, const DenseMap& upstream);
std::vector<DenseMap> backward_stack(const ConvStack& stack, const Patch& patch, const DenseMap& upstream);

/// Multiplies every channel cellwise by a single-channel window.
DenseMap apply_window(const DenseMap& features, const DenseMap& window);

/// Rescales `z` so that its mean square equals `target_mean_square`.
struct EnergyNormalized {
  DenseMap output;
  double scale = 1.0;
};
EnergyNormalized normalize_energy(const DenseMap& z, double target_mean_square);
/// Gradient with respect to z given the gradient with respect to the output.
DenseMap normalize_energy_backward(const EnergyNormalized& forward, const DenseMap& upstream);

void write_stack(std::ostream& out, const ConvStack& stack);
ConvStack read_stack(std::istream& in);

}  // namespace uct

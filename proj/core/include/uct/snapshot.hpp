#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "uct/features.hpp"
#include "uct/regression.hpp"
#include "uct/scale.hpp"

namespace uct {

/// Trained model: extractor weights plus the optional filters learned with
/// them. Layout (little-endian):
///
///   8 bytes  "UCTMODEL"
///   u32      format version (1)
///   u32      input channels (1 grayscale, 3 color)
///   stack    see write_stack
///   u32      1 if a filter bank follows, else 0
///   map      filter bank weights (see write_map)
///   u32      1 if a scale filter follows, else 0
///   scale    see write_scale_filter
struct ModelSnapshot {
  std::size_t input_channels = 1;
  ConvStack stack;
  std::optional<FilterBank> filter;
  std::optional<ScaleFilter> scale_filter;

  friend bool operator==(const ModelSnapshot&, const ModelSnapshot&) = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const ModelSnapshot& model);
ModelSnapshot read_model(std::istream& in);

void save_model(const std::string& path, const ModelSnapshot& model);
ModelSnapshot load_model(const std::string& path);

}  // namespace uct

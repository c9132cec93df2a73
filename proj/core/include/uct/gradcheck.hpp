#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uct/config.hpp"

namespace uct {

/// Largest |a - n| / max(|a|, |n|, floor) over paired entries.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor);

struct GradcheckSuite {
  std::string name;
  std::size_t instances = 0;
  std::size_t rejected = 0;  ///< instances redrawn because a rectifier input sat near its kink
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
};

struct GradcheckOptions {
  std::size_t instances = 50;
  double epsilon = 1e-5;    ///< central-difference step
  double floor = 1e-6;      ///< denominator floor of the relative error
  double kink_margin = 1e-3;
  std::uint64_t seed = 1;
};

/// Central-difference checks of every analytic gradient:
///   filter_bank  dL/df and dL/dx of the regression loss
///   end_to_end   extractor and filter weights through Hann windowing and
///                energy normalization, on a reduced copy of the configured
///                extractor (same kernels, strides, rectifiers; at most 4 channels)
///   scale_filter the 1-D scale ridge objective
std::vector<GradcheckSuite> run_gradchecks(const TrackerConfig& config, const GradcheckOptions& options = {});

}  // namespace uct

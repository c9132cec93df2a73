#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uct {

/// Every tunable of the tracker, the trainers and the synthetic corpus.
///
/// Serialized as nested JSON ("features.padding_factor" lives under
/// {"features": {"padding_factor": ...}}). Two presets exist: desk_defaults
/// (the shipped defaults, sized for CPU tracking) and paper_defaults (the
/// published hyperparameters at full patch size).
struct TrackerConfig {
  // features
  std::string layers = "8:5:2:relu,16:3:2:relu";  ///< "raw" for the raw-channel extractor
  bool color = false;
  double padding_factor = 2.0;
  std::size_t patch_size = 64;
  double feature_energy = 1.0;  ///< mean energy of a filter-sized window after normalization

  // regression head and training
  double label_sigma_factor = 0.1;
  double filter_init_std = 0.01;
  double momentum = 0.9;
  double lambda_offline = 0.005;
  double lambda_first_frame = 0.01;
  double lambda_update = 0.005;
  double lr_offline = 1e-3;
  double lr_first_frame = 1e-3;
  double lr_update = 1e-4;
  std::size_t first_frame_steps = 50;
  std::size_t offline_epochs = 30;
  double jitter_translation = 0.05;
  double jitter_scale = 0.03;

  // scale branch
  std::string scale_mode = "filter";  ///< filter | multires | none
  std::size_t scale_count = 33;
  double scale_step = 1.02;
  std::size_t scale_template = 32;
  std::size_t scale_feature_dims = 256;
  double scale_clamp = 1.08243216;  ///< 1.02^4
  double scale_sigma_factor = 1.0 / 16.0;
  double scale_lambda = 0.01;
  double scale_lr_first_frame = 1e-2;
  double scale_lr_update = 1e-3;
  std::size_t scale_steps = 50;
  bool gate_scale_estimation = true;
  std::vector<double> multires_scales;  ///< empty: every pyramid level within scale.clamp

  // update gating
  bool use_pnr = true;
  double beta_pnr = 0.7;
  double beta_rmax = 0.7;
  double pnr_epsilon = 1e-6;
  bool pnr_shift_min = true;  ///< evaluate PNR on the response relative to its minimum
  std::size_t history_window = 0;  ///< 0 keeps the full history
  bool subpixel = true;

  // model
  bool use_pretrained = true;

  // synthetic training corpus
  std::size_t corpus_sequences = 32;
  std::size_t corpus_frames = 40;

  std::uint64_t seed = 1;

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

TrackerConfig desk_defaults();
TrackerConfig paper_defaults();

/// Throws InvalidArgument describing the first violated invariant.
void validate(const TrackerConfig& config);

/// All dotted keys accepted by config files and overrides, sorted.
std::vector<std::string> config_keys();

/// Parses a config document. The optional top-level "preset" selects the base
/// ("desk_defaults" or "paper_defaults"); remaining keys override it. Unknown
/// keys are rejected with the list of valid keys.
TrackerConfig parse_config(std::string_view json_text);
TrackerConfig load_config(const std::string& path);

/// Applies "dotted.key=value". Values are parsed as JSON, falling back to a
/// bare string.
void apply_override(TrackerConfig& config, std::string_view assignment);

/// Full effective config as nested JSON; parse_config(to_json(c)) == c.
std::string to_json(const TrackerConfig& config);

}  // namespace uct

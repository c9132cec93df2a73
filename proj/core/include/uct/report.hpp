#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uct/ablation.hpp"
#include "uct/eval.hpp"

namespace uct {

/// Version of the library, also written as the results schema version.
std::string artifact_version();

/// Everything emit_report writes. Wall-clock figures (fps, seconds) are only
/// ever written to timing.json so the other files are reproducible.
struct Report {
  std::string kind = "ope";  ///< "ope" or "ablation"
  std::uint64_t seed = 0;
  std::string config_json;   ///< effective base config
  std::vector<VariantResult> variants;
};

/// Writes into `directory` (created if needed):
///   results.json             summary, see docs/results-schema.md
///   config.json              effective config echo
///   records/<variant>/<sequence>.txt  per-frame records
///   precision.svg, success.svg        one polyline per variant
///   timing.json              fps and seconds per variant and sequence
/// Throws DataError when a file cannot be written.
void emit_report(const Report& report, const std::string& directory);

std::string results_json(const Report& report);

/// The parts of results.json that re-parse into the in-memory types.
struct ParsedVariant {
  std::string name;
  std::vector<std::string> overrides;
  bool has_aggregate = false;
  EvalCurves aggregate;
  std::vector<std::string> sequence_names;
  std::vector<EvalCurves> sequence_curves;  ///< zeroed for failed sequences
  std::vector<std::string> sequence_errors;  ///< empty string when the sequence succeeded
};
struct ParsedResults {
  std::string schema_version;
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<ParsedVariant> variants;
};
ParsedResults parse_results(const std::string& json_text);

/// Standalone SVG with one polyline per (label, curve) pair.
std::string curve_svg(const std::string& title, const std::string& x_label, std::span<const double> xs,
                      std::span<const std::string> labels, std::span<const std::vector<double>> curves);

std::string records_text(std::span<const FrameRecord> records);

}  // namespace uct

#pragma once

#include <span>
#include <string>
#include <vector>

#include "uct/config.hpp"
#include "uct/dataset.hpp"
#include "uct/eval.hpp"
#include "uct/snapshot.hpp"

namespace uct {

/// A named config delta, applied as "key=value" overrides on the base config.
struct AblationVariant {
  std::string name;
  std::vector<std::string> overrides;
  std::string description;
};

/// full, no_offline, no_pnr, no_scale, mulres_scale, lite (in this order).
const std::vector<AblationVariant>& ablation_variants();
const AblationVariant& find_variant(const std::string& name);

TrackerConfig variant_config(const TrackerConfig& base, const AblationVariant& variant);

struct VariantResult {
  AblationVariant variant;
  TrackerConfig config;
  OpeResult ope;
};

/// Runs every variant over the same sequences. `model` supplies the
/// pretrained extractor for variants that use one.
std::vector<VariantResult> run_ablation(std::span<const Sequence> sequences, const TrackerConfig& base,
                                        const ModelSnapshot* model, std::size_t workers,
                                        std::span<const AblationVariant> variants = ablation_variants());

/// "variant,auc,precision_at_20,frames,failed_sequences" with one row per variant.
std::string ablation_csv(std::span<const VariantResult> results);

}  // namespace uct

#pragma once

#include <vector>

#include "uct/config.hpp"
#include "uct/regression.hpp"
#include "uct/snapshot.hpp"

namespace uct {

struct PretrainResult {
  ModelSnapshot model;
  std::vector<double> epoch_losses;
};

/// Randomly initialized extractor for `config` (He-normal, seeded by config.seed).
ConvStack initial_stack(const TrackerConfig& config);

/// Offline training on the synthetic corpus described by config.corpus_*:
/// context crops of every frame, jittered patches, joint extractor and filter
/// updates.
PretrainResult pretrain(const TrackerConfig& config, const EpochCallback& on_epoch = {});

/// Extractor a tracker should use for `config`: empty for the raw extractor,
/// the model's stack when config.use_pretrained, a fresh random stack
/// otherwise. Throws InvalidArgument when a pretrained stack is required but
/// `model` is null or does not match the configured layers.
ConvStack resolve_stack(const TrackerConfig& config, const ModelSnapshot* model);

}  // namespace uct

#include "uct/pretrain.hpp"

#include "uct/errors.hpp"
#include "uct/synth.hpp"

namespace uct {

ConvStack initial_stack(const TrackerConfig& config) {
  const auto specs = parse_layer_specs(config.layers);
  return ConvStack::random(config.color ? 3 : 1, specs, config.seed);
}

PretrainResult pretrain(const TrackerConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  std::vector<LabeledFrame> corpus;
  for (const SynthSequence& s : generate_corpus(config.corpus_sequences, config.corpus_frames, config.seed, config.color)) {
    for (std::size_t k = 0; k < s.sequence.size(); ++k) {
      corpus.push_back(make_training_crop(s.sequence.frames[k], s.sequence.boxes[k], config));
    }
  }
  ConvStack stack = initial_stack(config);
  const FeaturePipeline pipeline(stack, config);
  FilterBank f = random_filter_bank(pipeline.geometry(), config.filter_init_std, config.seed + 1);
  OfflineResult trained = offline_train(corpus, std::move(stack), std::move(f), config, on_epoch);
  PretrainResult out;
  out.model.input_channels = config.color ? 3 : 1;
  out.model.stack = std::move(trained.stack);
  out.model.filter = std::move(trained.filter);
  out.epoch_losses = std::move(trained.epoch_losses);
  return out;
}

ConvStack resolve_stack(const TrackerConfig& config, const ModelSnapshot* model) {
  const auto specs = parse_layer_specs(config.layers);
  if (specs.empty()) return ConvStack{};
  if (!config.use_pretrained) return initial_stack(config);
  if (model == nullptr) throw InvalidArgument("a pretrained model is required (model.use_pretrained is true)");
  const std::size_t channels = config.color ? 3 : 1;
  if (model->stack.specs() != specs || model->input_channels != channels) {
    throw InvalidArgument("pretrained model layers '" + format_layer_specs(model->stack.specs()) + "' (" +
                          std::to_string(model->input_channels) + " input channels) do not match features.layers '" +
                          config.layers + "'");
  }
  return model->stack;
}

}  // namespace uct

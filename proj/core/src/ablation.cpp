#include "uct/ablation.hpp"

#include <charconv>

#include "uct/errors.hpp"
#include "uct/pretrain.hpp"

namespace uct {

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants{
      {"full", {}, "complete tracker"},
      {"no_offline", {"model.use_pretrained=false"}, "randomly initialized extractor, no offline training"},
      {"no_pnr", {"update.use_pnr=false"}, "updates gated by the response maximum only"},
      {"no_scale", {"scale.mode=none"}, "fixed target size"},
      {"mulres_scale", {"scale.mode=multires"}, "scale by exhaustive multi-resolution search of the translation filter"},
      {"lite", {"features.layers=raw", "features.patch_size=32", "scale.mode=none"},
       "raw-channel features at a small patch, no scale branch"},
  };
  return variants;
}

const AblationVariant& find_variant(const std::string& name) {
  for (const auto& v : ablation_variants()) {
    if (v.name == name) return v;
  }
  std::string valid;
  for (const auto& v : ablation_variants()) valid += (valid.empty() ? "" : ", ") + v.name;
  throw InvalidArgument("unknown variant '" + name + "'; valid variants: " + valid);
}

TrackerConfig variant_config(const TrackerConfig& base, const AblationVariant& variant) {
  TrackerConfig c = base;
  for (const auto& o : variant.overrides) apply_override(c, o);
  return c;
}

std::vector<VariantResult> run_ablation(std::span<const Sequence> sequences, const TrackerConfig& base,
                                        const ModelSnapshot* model, std::size_t workers,
                                        std::span<const AblationVariant> variants) {
  std::vector<VariantResult> out;
  for (const AblationVariant& v : variants) {
    VariantResult r;
    r.variant = v;
    r.config = variant_config(base, v);
    const ConvStack stack = resolve_stack(r.config, model);
    r.ope = run_ope(sequences, make_tracker_factory(r.config, stack), workers);
    out.push_back(std::move(r));
  }
  return out;
}

std::string ablation_csv(std::span<const VariantResult> results) {
  std::string out = "variant,auc,precision_at_20,frames,failed_sequences\n";
  char buf[64];
  for (const VariantResult& r : results) {
    std::size_t failed = 0;
    for (const auto& s : r.ope.sequences) failed += s.failed ? 1 : 0;
    out += r.variant.name;
    for (double v : {r.ope.aggregate.auc, r.ope.aggregate.precision_at_20}) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out += ',';
      out.append(buf, res.ptr);
    }
    out += ',' + std::to_string(r.ope.aggregate.frames) + ',' + std::to_string(failed) + '\n';
  }
  return out;
}

}  // namespace uct

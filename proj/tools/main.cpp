// uct: command-line front end (synth, pretrain, track, eval, ablate, gradcheck).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uct/ablation.hpp"
#include "uct/config.hpp"
#include "uct/dataset.hpp"
#include "uct/errors.hpp"
#include "uct/eval.hpp"
#include "uct/gradcheck.hpp"
#include "uct/image_io.hpp"
#include "uct/pretrain.hpp"
#include "uct/report.hpp"
#include "uct/snapshot.hpp"
#include "uct/synth.hpp"
#include "uct/tracker.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string model_path;
};

void add_common(CLI::App* cmd, Common& c, bool with_workers, bool with_model) {
  cmd->add_option("--config", c.config_path, "JSON config file");
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  if (with_workers) cmd->add_option("--workers", c.workers, "parallel sequences (0 = all cores, 1 = reference path)");
  if (with_model) cmd->add_option("--model", c.model_path, "model snapshot (pretrained automatically when omitted)");
}

uct::TrackerConfig effective_config(const Common& c) {
  uct::TrackerConfig config = c.config_path.empty() ? uct::desk_defaults() : uct::load_config(c.config_path);
  for (const auto& o : c.overrides) uct::apply_override(config, o);
  if (c.seed) config.seed = *c.seed;
  uct::validate(config);
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw uct::DataError("cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw uct::DataError("cannot create output directory " + out + ": " + ec.message());
  return fs::path(out);
}

std::string loss_table(const std::vector<double>& losses) {
  std::ostringstream s;
  s.precision(17);
  s << "epoch,mean_loss\n";
  for (std::size_t k = 0; k < losses.size(); ++k) s << k + 1 << ',' << losses[k] << '\n';
  return s.str();
}

uct::ModelSnapshot run_pretrain(const uct::TrackerConfig& config, const fs::path& out) {
  std::cerr << "pretraining on " << config.corpus_sequences << " x " << config.corpus_frames
            << " synthetic frames for " << config.offline_epochs << " epochs\n";
  const auto t0 = std::chrono::steady_clock::now();
  uct::PretrainResult r = uct::pretrain(config, [](std::size_t epoch, double loss) {
    std::cerr << "  epoch " << epoch + 1 << " mean loss " << loss << "\n";
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  uct::save_model((out / "model.uctm").string(), r.model);
  write_text(out / "losses.csv", loss_table(r.epoch_losses));
  std::cerr << "pretraining took " << seconds << " s; model written to " << (out / "model.uctm").string() << "\n";
  return r.model;
}

// Model for commands that track: loaded, pretrained on the fly, or not needed.
std::optional<uct::ModelSnapshot> obtain_model(const Common& c, const uct::TrackerConfig& config,
                                               const fs::path& out, bool needed) {
  if (!c.model_path.empty()) return uct::load_model(c.model_path);
  if (!needed) return std::nullopt;
  return run_pretrain(config, out);
}

bool needs_model(const uct::TrackerConfig& config) {
  return config.use_pretrained && !uct::parse_layer_specs(config.layers).empty();
}

int cmd_synth(const Common& c, const std::string& kind, std::size_t count, std::size_t frames) {
  const uct::TrackerConfig config = effective_config(c);
  const fs::path out = prepare_out(c.out);
  std::vector<uct::SynthSequence> seqs;
  if (kind == "suite") {
    seqs = uct::generate_suite(count, frames, config.seed, config.color);
  } else {
    seqs = uct::generate_corpus(count, frames, config.seed, config.color);
  }
  for (const auto& s : seqs) {
    uct::export_sequence(s.sequence, (out / s.sequence.name).string());
    for (const auto& w : s.sequence.warnings) std::cerr << s.sequence.name << ": " << w << "\n";
  }
  write_text(out / "config.json", uct::to_json(config));
  std::cout << "wrote " << seqs.size() << " sequences to " << out.string() << "\n";
  return kOk;
}

int cmd_pretrain(const Common& c) {
  const uct::TrackerConfig config = effective_config(c);
  const fs::path out = prepare_out(c.out);
  write_text(out / "config.json", uct::to_json(config));
  if (uct::parse_layer_specs(config.layers).empty()) {
    throw uct::InvalidArgument("pretrain: features.layers is 'raw'; there is nothing to train");
  }
  run_pretrain(config, out);
  return kOk;
}

int cmd_track(const Common& c, const std::string& sequence_dir, bool annotate) {
  const uct::TrackerConfig config = effective_config(c);
  const fs::path out = prepare_out(c.out);
  write_text(out / "config.json", uct::to_json(config));
  const uct::Sequence seq = uct::load_sequence(sequence_dir);
  for (const auto& w : seq.warnings) std::cerr << seq.name << ": " << w << "\n";
  const auto model = obtain_model(c, config, out, needs_model(config));
  uct::Tracker tracker(config, uct::resolve_stack(config, model ? &*model : nullptr));

  if (annotate) fs::create_directories(out / "annotated");
  std::string records;
  const double green[3] = {0.1, 0.9, 0.1};
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const uct::DenseMap frame = seq.frame(k);
    if (k == 0) {
      tracker.init(frame, seq.boxes.at(0));
    } else {
      tracker.step(frame);
    }
    const uct::TargetState& s = tracker.state();
    records += uct::format_record({k + 1, s.box(), s.score, s.pnr, s.updated}) + "\n";
    if (annotate) {
      char name[32];
      std::snprintf(name, sizeof(name), "%04zu.ppm", k + 1);
      uct::write_pnm((out / "annotated" / name).string(), uct::draw_box(frame, s.box(), green, 2));
    }
  }
  write_text(out / "records.txt", records);
  std::cout << "tracked " << seq.size() << " frames; records in " << (out / "records.txt").string() << "\n";
  return kOk;
}

std::vector<uct::Sequence> sequences_for(const std::string& data, const uct::TrackerConfig& config,
                                         std::size_t count, std::size_t frames) {
  if (!data.empty()) return uct::load_dataset(data);
  std::vector<uct::Sequence> seqs;
  for (auto& s : uct::generate_suite(count, frames, config.seed, config.color)) seqs.push_back(std::move(s.sequence));
  return seqs;
}

void print_row(const uct::VariantResult& r) {
  std::printf("%-14s auc %.4f  precision@20 %.4f  fps %.1f\n", r.variant.name.c_str(), r.ope.aggregate.auc,
              r.ope.aggregate.precision_at_20, r.ope.fps);
}

int cmd_eval(const Common& c, const std::string& data, const std::string& variant, std::size_t count,
             std::size_t frames) {
  const uct::TrackerConfig base = effective_config(c);
  const fs::path out = prepare_out(c.out);
  const auto& v = uct::find_variant(variant);
  const uct::TrackerConfig config = uct::variant_config(base, v);
  const auto seqs = sequences_for(data, base, count, frames);
  const auto model = obtain_model(c, base, out, needs_model(config));
  const std::vector<uct::AblationVariant> one{v};
  uct::Report report{"ope", base.seed, uct::to_json(base),
                     uct::run_ablation(seqs, base, model ? &*model : nullptr, c.workers, one)};
  uct::emit_report(report, out.string());
  for (const auto& s : report.variants.front().ope.sequences) {
    if (s.failed) std::cerr << "sequence " << s.name << " failed: " << s.error << "\n";
  }
  print_row(report.variants.front());
  return report.variants.front().ope.has_aggregate ? kOk : kNumerical;
}

int cmd_ablate(const Common& c, const std::string& data, std::size_t count, std::size_t frames) {
  const uct::TrackerConfig base = effective_config(c);
  const fs::path out = prepare_out(c.out);
  const auto seqs = sequences_for(data, base, count, frames);
  const auto model = obtain_model(c, base, out, needs_model(base));
  uct::Report report{"ablation", base.seed, uct::to_json(base),
                     uct::run_ablation(seqs, base, model ? &*model : nullptr, c.workers)};
  uct::emit_report(report, out.string());
  write_text(out / "ablation.csv", uct::ablation_csv(report.variants));
  bool ok = true;
  for (const auto& r : report.variants) {
    print_row(r);
    ok = ok && r.ope.has_aggregate;
    for (const auto& s : r.ope.sequences) {
      if (s.failed) std::cerr << r.variant.name << "/" << s.name << " failed: " << s.error << "\n";
    }
  }
  return ok ? kOk : kNumerical;
}

int cmd_gradcheck(const Common& c, std::size_t instances, double tolerance) {
  const uct::TrackerConfig config = effective_config(c);
  uct::GradcheckOptions opt;
  opt.instances = instances;
  opt.seed = config.seed;
  double worst = 0.0;
  for (const auto& s : uct::run_gradchecks(config, opt)) {
    std::printf("%-13s instances %zu  rejected %zu  parameters %zu  max relative error %.3e\n", s.name.c_str(),
                s.instances, s.rejected, s.parameters, s.max_relative_error);
    worst = std::max(worst, s.max_relative_error);
  }
  std::printf("overall max relative error %.3e (tolerance %.1e): %s\n", worst, tolerance,
              worst < tolerance ? "ok" : "FAILED");
  return worst < tolerance ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uct: convolutional regression tracker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", uct::artifact_version());

  Common common;
  std::string kind = "suite";
  std::size_t count = 12;
  std::size_t frames = 60;
  std::string data;
  std::string sequence_dir;
  std::string variant = "full";
  bool annotate = false;
  std::size_t instances = 50;
  double tolerance = 1e-4;

  auto* synth = app.add_subcommand("synth", "write synthetic sequences in the OTB layout");
  add_common(synth, common, false, false);
  synth->add_option("--kind", kind, "suite (with occlusions) or corpus")->check(CLI::IsMember({"suite", "corpus"}));
  synth->add_option("--count", count, "number of sequences");
  synth->add_option("--frames", frames, "frames per sequence");

  auto* pretrain = app.add_subcommand("pretrain", "offline training on the synthetic corpus");
  add_common(pretrain, common, false, false);

  auto* track = app.add_subcommand("track", "run one sequence and write per-frame records");
  add_common(track, common, false, true);
  track->add_option("--sequence", sequence_dir, "sequence directory (img/ + groundtruth_rect.txt)")->required();
  track->add_flag("--annotate", annotate, "also write frames with the estimated box drawn");

  auto* eval = app.add_subcommand("eval", "one-pass evaluation of one variant");
  add_common(eval, common, true, true);
  eval->add_option("--data", data, "dataset directory (default: generated synthetic suite)");
  eval->add_option("--variant", variant, "tracker variant");
  eval->add_option("--count", count, "synthetic suite size when --data is omitted");
  eval->add_option("--frames", frames, "synthetic suite frames when --data is omitted");

  auto* ablate = app.add_subcommand("ablate", "evaluate every variant and write a comparison table");
  add_common(ablate, common, true, true);
  ablate->add_option("--data", data, "dataset directory (default: generated synthetic suite)");
  ablate->add_option("--count", count, "synthetic suite size when --data is omitted");
  ablate->add_option("--frames", frames, "synthetic suite frames when --data is omitted");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every analytic gradient");
  add_common(gradcheck, common, false, false);
  gradcheck->add_option("--instances", instances, "random instances per suite");
  gradcheck->add_option("--tolerance", tolerance, "maximum accepted relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(common, kind, count, frames);
    if (*pretrain) return cmd_pretrain(common);
    if (*track) return cmd_track(common, sequence_dir, annotate);
    if (*eval) return cmd_eval(common, data, variant, count, frames);
    if (*ablate) return cmd_ablate(common, data, count, frames);
    if (*gradcheck) return cmd_gradcheck(common, instances, tolerance);
  } catch (const uct::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const uct::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const uct::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

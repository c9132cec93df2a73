#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "uct/ablation.hpp"
#include "uct/errors.hpp"
#include "uct/eval.hpp"
#include "uct/report.hpp"
#include "uct/synth.hpp"

namespace fs = std::filesystem;

namespace {

using uct::Box;

TEST(CenterError, Examples) {
  const Box a{10, 10, 4, 6};
  EXPECT_EQ(uct::center_error(a, a), 0.0);
  const Box o = Box::from_center({0, 0}, {2, 2});
  const Box p = Box::from_center({3, 4}, {8, 2});
  EXPECT_DOUBLE_EQ(uct::center_error(o, p), 5.0);
  EXPECT_DOUBLE_EQ(uct::center_error(p, o), 5.0);
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(uct::iou({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0);
  EXPECT_EQ(uct::iou({0, 0, 1, 1}, {5, 5, 1, 1}), 0.0);
  EXPECT_EQ(uct::iou({0, 0, 1, 1}, {1, 0, 1, 1}), 0.0);
  EXPECT_NEAR(uct::iou({0, 0, 2, 2}, {1, 1, 2, 2}), 1.0 / 7.0, 1e-15);
}

TEST(Iou, Properties) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> pos(0, 50), size(0.5, 30);
  for (int n = 0; n < 500; ++n) {
    const Box a{pos(rng), pos(rng), size(rng), size(rng)};
    const Box b{pos(rng), pos(rng), size(rng), size(rng)};
    const double v = uct::iou(a, b);
    EXPECT_EQ(v, uct::iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, std::min(a.area(), b.area()) / std::max(a.area(), b.area()) + 1e-15);
    EXPECT_NEAR(uct::iou(a, a), 1.0, 1e-12);
  }
}

TEST(Curves, Examples) {
  const std::vector<double> err = {5, 15, 25}, ov = {1, 1, 1};
  EXPECT_DOUBLE_EQ(uct::curves(err, ov).precision_at_20, 2.0 / 3.0);
  const auto perfect = uct::curves(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  EXPECT_NEAR(perfect.auc, 20.0 / 21.0, 1e-15);
  EXPECT_EQ(perfect.success.back(), 0.0);
  const auto half = uct::curves(std::vector<double>{0}, std::vector<double>{0.5});
  EXPECT_NEAR(half.auc, 10.0 / 21.0, 1e-15);
  EXPECT_THROW(uct::curves(std::vector<double>{}, std::vector<double>{}), uct::InvalidArgument);
  EXPECT_THROW(uct::curves(std::vector<double>{1}, std::vector<double>{}), uct::InvalidArgument);
}

TEST(Curves, MonotoneAndAucIsMean) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> e(0, 80), o(0, 1);
  for (int n = 0; n < 50; ++n) {
    std::vector<double> err(1 + rng() % 60), ov(err.size());
    for (auto& v : err) v = e(rng);
    for (auto& v : ov) v = o(rng);
    const auto c = uct::curves(err, ov);
    EXPECT_TRUE(std::is_sorted(c.precision.begin(), c.precision.end()));
    EXPECT_TRUE(std::is_sorted(c.success.rbegin(), c.success.rend()));
    double mean = 0.0;
    for (double s : c.success) mean += s;
    EXPECT_NEAR(c.auc, mean / 21.0, 1e-12);
    EXPECT_EQ(c.precision_at_20, c.precision[20]);
  }
}

TEST(Records, FormatParseRoundTrip) {
  const uct::FrameRecord r{7, {9.5, 19, 30.25, 40}, 0.731, 12.5, true};
  const std::string line = uct::format_record(r);
  EXPECT_EQ(line.rfind("7,10.5,20,30.25,40,", 0), 0u) << line;
  EXPECT_EQ(uct::parse_record(line), r);
}

class StubTracker : public uct::SequenceTracker {
 public:
  StubTracker(const uct::Sequence* seq, bool perfect) : seq_(seq), perfect_(perfect) {}
  uct::FrameRecord init(const uct::DenseMap&, const Box& box) override {
    first_ = box;
    k_ = 0;
    return {1, box, 1.0, 1.0, true};
  }
  uct::FrameRecord step(const uct::DenseMap&) override {
    ++k_;
    return {k_ + 1, perfect_ ? seq_->boxes[k_] : first_, 1.0, 1.0, false};
  }

 private:
  const uct::Sequence* seq_;
  bool perfect_;
  Box first_;
  std::size_t k_ = 0;
};

TEST(RunOpe, PerfectAndStaticStubs) {
  uct::SynthSpec spec;
  spec.frame_count = 20;
  spec.velocity = {3, 1.5};
  spec.start_center = uct::Point2{30, 30};
  const std::vector<uct::Sequence> seqs = {uct::generate_synthetic(spec).sequence};
  const auto perfect = uct::run_ope(seqs, [&] { return std::make_unique<StubTracker>(&seqs[0], true); });
  ASSERT_TRUE(perfect.has_aggregate);
  EXPECT_NEAR(perfect.aggregate.auc, 20.0 / 21.0, 1e-15);
  EXPECT_EQ(perfect.aggregate.precision_at_20, 1.0);
  const auto still = uct::run_ope(seqs, [&] { return std::make_unique<StubTracker>(&seqs[0], false); });
  EXPECT_LT(still.aggregate.precision_at_20, perfect.aggregate.precision_at_20);
}

TEST(RunOpe, FailedSequenceExcluded) {
  std::vector<uct::Sequence> seqs(2);
  for (std::size_t k = 0; k < 2; ++k) {
    uct::SynthSpec spec;
    spec.frame_count = 4;
    spec.seed = k + 1;
    seqs[k] = uct::generate_synthetic(spec).sequence;
    seqs[k].name = k == 0 ? "a" : "b";
  }
  struct Throwing : StubTracker {
    using StubTracker::StubTracker;
    uct::FrameRecord step(const uct::DenseMap&) override { throw uct::NumericalError("boom"); }
  };
  const auto r = uct::run_ope(seqs, [&, n = 0]() mutable -> std::unique_ptr<uct::SequenceTracker> {
    if (n++ == 0) return std::make_unique<Throwing>(&seqs[0], true);
    return std::make_unique<StubTracker>(&seqs[1], true);
  });
  ASSERT_EQ(r.sequences.size(), 2u);
  EXPECT_TRUE(r.sequences[0].failed);
  EXPECT_NE(r.sequences[0].error.find("boom"), std::string::npos);
  EXPECT_FALSE(r.sequences[1].failed);
  EXPECT_EQ(r.aggregate.frames, 4u);
}

TEST(RunOpe, ReproducibleWithTracker) {
  const auto suite = uct::generate_suite(2, 8, 5);
  std::vector<uct::Sequence> seqs;
  for (const auto& s : suite) seqs.push_back(s.sequence);
  uct::TrackerConfig c = uct::desk_defaults();
  c.use_pretrained = false;
  const uct::ConvStack stack = uct::ConvStack::random(1, uct::parse_layer_specs(c.layers), 3);
  const auto a = uct::run_ope(seqs, uct::make_tracker_factory(c, stack));
  const auto b = uct::run_ope(seqs, uct::make_tracker_factory(c, stack), 2);
  EXPECT_EQ(a.aggregate, b.aggregate);
  for (std::size_t k = 0; k < a.sequences.size(); ++k) EXPECT_EQ(a.sequences[k].records, b.sequences[k].records);
}

uct::Report sample_report() {
  uct::Report rep;
  rep.kind = "ablation";
  rep.seed = 17;
  rep.config_json = uct::to_json(uct::desk_defaults());
  for (const char* name : {"full", "no_pnr"}) {
    uct::VariantResult v;
    v.variant = uct::find_variant(name);
    v.config = uct::variant_config(uct::desk_defaults(), v.variant);
    uct::SequenceResult s;
    s.name = "seq01";
    s.records = {{1, {1, 2, 3, 4}, 1, 2, true}, {2, {1.5, 2, 3, 4}, 0.5, 1.5, false}};
    s.errors = {0.0, 0.5};
    s.overlaps = {1.0, 0.8};
    s.curves = uct::curves(s.errors, s.overlaps);
    v.ope.sequences.push_back(s);
    v.ope.has_aggregate = true;
    v.ope.aggregate = s.curves;
    v.ope.fps = 100;
    rep.variants.push_back(v);
  }
  return rep;
}

TEST(Report, ResultsRoundTripAndVersion) {
  const uct::Report rep = sample_report();
  const uct::ParsedResults back = uct::parse_results(uct::results_json(rep));
  EXPECT_EQ(back.schema_version, uct::artifact_version());
  EXPECT_EQ(back.kind, "ablation");
  EXPECT_EQ(back.seed, 17u);
  ASSERT_EQ(back.variants.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back.variants[k].name, rep.variants[k].variant.name);
    EXPECT_EQ(back.variants[k].overrides, rep.variants[k].variant.overrides);
    EXPECT_EQ(back.variants[k].aggregate, rep.variants[k].ope.aggregate);
    EXPECT_EQ(back.variants[k].sequence_names, std::vector<std::string>{"seq01"});
  }
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

TEST(Report, EmitsFilesWithOnePolylinePerVariant) {
  const fs::path dir = fs::temp_directory_path() / "uct_report_test";
  fs::remove_all(dir);
  uct::emit_report(sample_report(), dir.string());
  for (const char* f : {"results.json", "config.json", "precision.svg", "success.svg", "timing.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  for (const char* f : {"precision.svg", "success.svg"}) {
    std::ifstream in(dir / f);
    const std::string svg((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(count(svg, "<polyline"), 2u) << f;
  }
  std::ifstream rec(dir / "records" / "full" / "seq01.txt");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(rec, line)) {
    if (line.empty()) continue;
    ++lines;
    EXPECT_NO_THROW(uct::parse_record(line));
  }
  EXPECT_EQ(lines, 2u);
  std::ifstream res(dir / "results.json");
  const std::string results((std::istreambuf_iterator<char>(res)), {});
  EXPECT_EQ(results.find("fps"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Ablation, SixVariantsInOrder) {
  std::vector<std::string> names;
  for (const auto& v : uct::ablation_variants()) names.push_back(v.name);
  EXPECT_EQ(names, (std::vector<std::string>{"full", "no_offline", "no_pnr", "no_scale", "mulres_scale", "lite"}));
  EXPECT_TRUE(uct::find_variant("full").overrides.empty());
  EXPECT_FALSE(uct::variant_config(uct::desk_defaults(), uct::find_variant("no_pnr")).use_pnr);
  EXPECT_EQ(uct::variant_config(uct::desk_defaults(), uct::find_variant("no_scale")).scale_mode, "none");
  EXPECT_THROW(uct::find_variant("bogus"), uct::InvalidArgument);
}

}  // namespace

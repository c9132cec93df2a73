#include "uct/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "uct/errors.hpp"
#include "uct/tracker.hpp"

namespace uct {

double center_error(const Box& pred, const Box& gt) {
  const Point2 a = pred.center();
  const Point2 b = gt.center();
  return std::hypot(a.x - b.x, a.y - b.y);
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return std::min(1.0, inter / (a.w * a.h + b.w * b.h - inter));
}

double success_threshold(std::size_t k) { return 0.05 * static_cast<double>(k); }

EvalCurves curves(std::span<const double> errors, std::span<const double> overlaps) {
  if (errors.empty()) throw InvalidArgument("curves: no frames to score");
  if (errors.size() != overlaps.size()) {
    throw InvalidArgument("curves: " + std::to_string(errors.size()) + " errors but " +
                          std::to_string(overlaps.size()) + " overlaps");
  }
  EvalCurves c;
  c.frames = errors.size();
  const double n = static_cast<double>(errors.size());
  for (std::size_t t = 0; t < kPrecisionPoints; ++t) {
    const double tau = static_cast<double>(t);
    c.precision[t] = static_cast<double>(std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= tau; })) / n;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < kSuccessPoints; ++k) {
    const double theta = success_threshold(k);
    c.success[k] =
        static_cast<double>(std::count_if(overlaps.begin(), overlaps.end(), [&](double o) { return o > theta; })) / n;
    sum += c.success[k];
  }
  c.auc = sum / static_cast<double>(kSuccessPoints);
  c.precision_at_20 = c.precision[20];
  return c;
}

std::string format_record(const FrameRecord& r) {
  const Box b = Box{r.box.x + 1.0, r.box.y + 1.0, r.box.w, r.box.h};
  std::string out = std::to_string(r.frame_index);
  char buf[64];
  for (double v : {b.x, b.y, b.w, b.h, r.score, r.pnr}) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out += ',';
    out.append(buf, res.ptr);
  }
  out += r.updated ? ",1" : ",0";
  return out;
}

FrameRecord parse_record(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 8) throw DataError("record needs 8 fields, got " + std::to_string(fields.size()));
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("bad record field '" + std::string(s) + "'");
    return v;
  };
  FrameRecord r;
  r.frame_index = static_cast<std::size_t>(number(fields[0]));
  r.box = {number(fields[1]) - 1.0, number(fields[2]) - 1.0, number(fields[3]), number(fields[4])};
  r.score = number(fields[5]);
  r.pnr = number(fields[6]);
  r.updated = number(fields[7]) != 0.0;
  return r;
}

namespace {

class ConvTrackerAdapter final : public SequenceTracker {
 public:
  ConvTrackerAdapter(const TrackerConfig& config, const ConvStack& stack) : tracker_(config, stack) {}

  FrameRecord init(const DenseMap& image, const Box& box) override {
    tracker_.init(image, box);
    return record();
  }
  FrameRecord step(const DenseMap& image) override {
    tracker_.step(image);
    return record();
  }

 private:
  FrameRecord record() const {
    const TargetState& s = tracker_.state();
    return FrameRecord{tracker_.frame_index() + 1, s.box(), s.score, s.pnr, s.updated};
  }
  Tracker tracker_;
};

SequenceResult run_one(const Sequence& seq, const TrackerFactory& factory) {
  SequenceResult result;
  result.name = seq.name;
  try {
    if (seq.boxes.empty()) throw DataError("sequence '" + seq.name + "' has no ground truth");
    auto tracker = factory();
    double seconds = 0.0;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const DenseMap frame = seq.frame(k);
      const auto t0 = std::chrono::steady_clock::now();
      FrameRecord r = k == 0 ? tracker->init(frame, seq.boxes[0]) : tracker->step(frame);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.frame_index = k + 1;
      if (k < seq.boxes.size()) {
        result.errors.push_back(center_error(r.box, seq.boxes[k]));
        result.overlaps.push_back(iou(r.box, seq.boxes[k]));
      }
      result.records.push_back(r);
    }
    result.seconds = seconds;
    result.curves = curves(result.errors, result.overlaps);
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
  }
  return result;
}

}  // namespace

TrackerFactory make_tracker_factory(const TrackerConfig& config, const ConvStack& stack) {
  return [config, stack]() -> std::unique_ptr<SequenceTracker> {
    return std::make_unique<ConvTrackerAdapter>(config, stack);
  };
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

OpeResult run_ope(std::span<const Sequence> sequences, const TrackerFactory& factory, std::size_t workers,
                  Aggregation aggregation) {
  if (sequences.empty()) throw InvalidArgument("run_ope: no sequences");
  OpeResult out;
  out.sequences.resize(sequences.size());
  const std::size_t threads = std::min(resolve_workers(workers), sequences.size());
  if (threads <= 1) {
    for (std::size_t k = 0; k < sequences.size(); ++k) out.sequences[k] = run_one(sequences[k], factory);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < sequences.size(); k = next++) {
          out.sequences[k] = run_one(sequences[k], factory);
        }
      });
    }
  }
  std::stable_sort(out.sequences.begin(), out.sequences.end(),
                   [](const SequenceResult& a, const SequenceResult& b) { return a.name < b.name; });

  std::vector<double> errors;
  std::vector<double> overlaps;
  std::size_t frames = 0;
  std::size_t ok = 0;
  double seconds = 0.0;
  EvalCurves mean;
  for (const SequenceResult& s : out.sequences) {
    if (s.failed) continue;
    ++ok;
    errors.insert(errors.end(), s.errors.begin(), s.errors.end());
    overlaps.insert(overlaps.end(), s.overlaps.begin(), s.overlaps.end());
    frames += s.records.size();
    seconds += s.seconds;
    for (std::size_t t = 0; t < kPrecisionPoints; ++t) mean.precision[t] += s.curves.precision[t];
    for (std::size_t t = 0; t < kSuccessPoints; ++t) mean.success[t] += s.curves.success[t];
  }
  if (ok > 0) {
    out.has_aggregate = true;
    if (aggregation == Aggregation::per_frame) {
      out.aggregate = curves(errors, overlaps);
    } else {
      const double n = static_cast<double>(ok);
      double sum = 0.0;
      for (double& p : mean.precision) p /= n;
      for (double& s : mean.success) {
        s /= n;
        sum += s;
      }
      mean.auc = sum / static_cast<double>(kSuccessPoints);
      mean.precision_at_20 = mean.precision[20];
      mean.frames = errors.size();
      out.aggregate = mean;
    }
    out.fps = seconds > 0.0 ? static_cast<double>(frames) / seconds : 0.0;
  }
  return out;
}

}  // namespace uct

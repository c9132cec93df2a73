#include "uct/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "uct/errors.hpp"

namespace uct {

using nlohmann::json;
namespace fs = std::filesystem;

std::string artifact_version() { return UCT_VERSION_STRING; }

namespace {

json curves_json(const EvalCurves& c) {
  return json{{"auc", c.auc},
              {"precision_at_20", c.precision_at_20},
              {"frames", c.frames},
              {"precision", c.precision},
              {"success", c.success}};
}

EvalCurves curves_from(const json& j) {
  EvalCurves c;
  c.auc = j.at("auc").get<double>();
  c.precision_at_20 = j.at("precision_at_20").get<double>();
  c.frames = j.at("frames").get<std::size_t>();
  c.precision = j.at("precision").get<std::array<double, kPrecisionPoints>>();
  c.success = j.at("success").get<std::array<double, kSuccessPoints>>();
  return c;
}

std::string record_path(const std::string& variant, const std::string& sequence) {
  return "records/" + variant + "/" + sequence + ".txt";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string results_json(const Report& report) {
  json doc;
  doc["schema_version"] = artifact_version();
  doc["kind"] = report.kind;
  doc["seed"] = report.seed;
  doc["config"] = report.config_json.empty() ? json::object() : json::parse(report.config_json);
  json variants = json::array();
  for (const VariantResult& v : report.variants) {
    json jv;
    jv["name"] = v.variant.name;
    jv["overrides"] = v.variant.overrides;
    jv["aggregate"] = v.ope.has_aggregate ? curves_json(v.ope.aggregate) : json(nullptr);
    json seqs = json::array();
    for (const SequenceResult& s : v.ope.sequences) {
      json js;
      js["name"] = s.name;
      js["status"] = s.failed ? "failed" : "ok";
      if (s.failed) {
        js["error"] = s.error;
      } else {
        js["curves"] = curves_json(s.curves);
        std::size_t updates = 0;
        for (const auto& r : s.records) updates += r.updated ? 1 : 0;
        js["updates"] = updates;
        js["records"] = record_path(v.variant.name, s.name);
      }
      seqs.push_back(js);
    }
    jv["sequences"] = seqs;
    variants.push_back(jv);
  }
  doc["variants"] = variants;
  return doc.dump(2) + "\n";
}

ParsedResults parse_results(const std::string& json_text) {
  ParsedResults out;
  try {
    const json doc = json::parse(json_text);
    out.schema_version = doc.at("schema_version").get<std::string>();
    out.kind = doc.at("kind").get<std::string>();
    out.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& jv : doc.at("variants")) {
      ParsedVariant v;
      v.name = jv.at("name").get<std::string>();
      v.overrides = jv.at("overrides").get<std::vector<std::string>>();
      if (!jv.at("aggregate").is_null()) {
        v.has_aggregate = true;
        v.aggregate = curves_from(jv.at("aggregate"));
      }
      for (const auto& js : jv.at("sequences")) {
        v.sequence_names.push_back(js.at("name").get<std::string>());
        const bool ok = js.at("status").get<std::string>() == "ok";
        v.sequence_curves.push_back(ok ? curves_from(js.at("curves")) : EvalCurves{});
        v.sequence_errors.push_back(ok ? "" : js.at("error").get<std::string>());
      }
      out.variants.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed results file: ") + e.what());
  }
  return out;
}

std::string records_text(std::span<const FrameRecord> records) {
  std::string out;
  for (const FrameRecord& r : records) out += format_record(r) + "\n";
  return out;
}

std::string curve_svg(const std::string& title, const std::string& x_label, std::span<const double> xs,
                      std::span<const std::string> labels, std::span<const std::vector<double>> curves) {
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                        "#e377c2", "#7f7f7f"};
  const double left = 60, top = 40, width = 480, height = 320;
  const double x0 = xs.front();
  const double x1 = xs.back();
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * width; };
  auto py = [&](double y) { return top + (1.0 - y) * height; };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"420\" viewBox=\"0 0 720 420\">\n";
  s += "<rect width=\"720\" height=\"420\" fill=\"white\"/>\n";
  s += "<text x=\"300\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       xml_escape(title) + "</text>\n";
  s += "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (int k = 0; k <= 10; ++k) {
    const double y = py(k / 10.0);
    s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + width) + "\" y2=\"" +
         fixed(y) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(width) + "\" height=\"" +
       fixed(height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 10; k += 2) {
    s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(py(k / 10.0) + 4) + "\" text-anchor=\"end\">" +
         fixed(k / 10.0) + "</text>\n";
    const double xv = x0 + (x1 - x0) * k / 10.0;
    s += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(top + height + 16) + "\" text-anchor=\"middle\">" +
         fixed(xv) + "</text>\n";
  }
  s += "<text x=\"" + fixed(left + width / 2) + "\" y=\"" + fixed(top + height + 34) + "\" text-anchor=\"middle\">" +
       xml_escape(x_label) + "</text>\n</g>\n";
  for (std::size_t v = 0; v < curves.size(); ++v) {
    const char* color = palette[v % std::size(palette)];
    std::string points;
    for (std::size_t k = 0; k < xs.size() && k < curves[v].size(); ++k) {
      points += (k ? " " : "") + fixed(px(xs[k])) + "," + fixed(py(curves[v][k]));
    }
    s += "<polyline data-variant=\"" + xml_escape(labels[v]) + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    const double ly = top + 14.0 + 18.0 * static_cast<double>(v);
    s += "<text x=\"" + fixed(left + width + 14) + "\" y=\"" + fixed(ly) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color + "\">" + xml_escape(labels[v]) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void emit_report(const Report& report, const std::string& directory) {
  if (report.variants.empty()) throw InvalidArgument("emit_report: no results");
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + directory + ": " + ec.message());

  write_file(dir / "results.json", results_json(report));
  if (!report.config_json.empty()) write_file(dir / "config.json", report.config_json);

  json timing;
  timing["note"] = "wall-clock measurements; not reproducible";
  std::vector<std::string> labels;
  std::vector<std::vector<double>> precision;
  std::vector<std::vector<double>> success;
  for (const VariantResult& v : report.variants) {
    fs::create_directories(dir / "records" / v.variant.name, ec);
    if (ec) throw DataError("cannot create records directory: " + ec.message());
    json tv;
    tv["fps"] = v.ope.fps;
    for (const SequenceResult& s : v.ope.sequences) {
      if (s.failed) continue;
      write_file(dir / record_path(v.variant.name, s.name), records_text(s.records));
      tv["sequences"][s.name] = {{"seconds", s.seconds}, {"frames", s.records.size()}};
    }
    timing["variants"][v.variant.name] = tv;
    if (v.ope.has_aggregate) {
      labels.push_back(v.variant.name);
      precision.emplace_back(v.ope.aggregate.precision.begin(), v.ope.aggregate.precision.end());
      success.emplace_back(v.ope.aggregate.success.begin(), v.ope.aggregate.success.end());
    }
  }
  std::vector<double> px(kPrecisionPoints);
  for (std::size_t k = 0; k < kPrecisionPoints; ++k) px[k] = static_cast<double>(k);
  std::vector<double> sx(kSuccessPoints);
  for (std::size_t k = 0; k < kSuccessPoints; ++k) sx[k] = success_threshold(k);
  write_file(dir / "precision.svg", curve_svg("Precision plot", "center error threshold (px)", px, labels, precision));
  write_file(dir / "success.svg", curve_svg("Success plot", "overlap threshold", sx, labels, success));
  write_file(dir / "timing.json", timing.dump(2) + "\n");
}

}  // namespace uct

#include "uct/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "uct/errors.hpp"
#include "uct/features.hpp"

namespace uct {

using nlohmann::json;

namespace {

struct Entry {
  std::string key;
  std::function<json(const TrackerConfig&)> get;
  std::function<void(TrackerConfig&, const json&)> set;
};

template <typename T>
Entry field(std::string key, T TrackerConfig::*member) {
  return Entry{
      key,
      [member](const TrackerConfig& c) { return json(c.*member); },
      [member, key](TrackerConfig& c, const json& v) {
        try {
          if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw InvalidArgument("expected a boolean");
            c.*member = v.get<bool>();
          } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
              throw InvalidArgument("expected a non-negative integer");
            }
            c.*member = v.get<T>();
          } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw InvalidArgument("expected a number");
            c.*member = v.get<double>();
          } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw InvalidArgument("expected a string");
            c.*member = v.get<std::string>();
          } else {
            if (!v.is_array()) throw InvalidArgument("expected an array of numbers");
            c.*member = v.get<T>();
          }
        } catch (const InvalidArgument& e) {
          throw InvalidArgument("config key '" + key + "': " + e.what() + ", got " + v.dump());
        } catch (const json::exception& e) {
          throw InvalidArgument("config key '" + key + "': " + e.what());
        }
      }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e{
        field("features.layers", &TrackerConfig::layers),
        field("features.color", &TrackerConfig::color),
        field("features.padding_factor", &TrackerConfig::padding_factor),
        field("features.patch_size", &TrackerConfig::patch_size),
        field("features.energy", &TrackerConfig::feature_energy),
        field("train.label_sigma_factor", &TrackerConfig::label_sigma_factor),
        field("train.filter_init_std", &TrackerConfig::filter_init_std),
        field("train.momentum", &TrackerConfig::momentum),
        field("train.lambda_offline", &TrackerConfig::lambda_offline),
        field("train.lambda_first_frame", &TrackerConfig::lambda_first_frame),
        field("train.lambda_update", &TrackerConfig::lambda_update),
        field("train.lr_offline", &TrackerConfig::lr_offline),
        field("train.lr_first_frame", &TrackerConfig::lr_first_frame),
        field("train.lr_update", &TrackerConfig::lr_update),
        field("train.first_frame_steps", &TrackerConfig::first_frame_steps),
        field("train.offline_epochs", &TrackerConfig::offline_epochs),
        field("train.jitter_translation", &TrackerConfig::jitter_translation),
        field("train.jitter_scale", &TrackerConfig::jitter_scale),
        field("scale.mode", &TrackerConfig::scale_mode),
        field("scale.count", &TrackerConfig::scale_count),
        field("scale.step", &TrackerConfig::scale_step),
        field("scale.template", &TrackerConfig::scale_template),
        field("scale.feature_dims", &TrackerConfig::scale_feature_dims),
        field("scale.clamp", &TrackerConfig::scale_clamp),
        field("scale.sigma_factor", &TrackerConfig::scale_sigma_factor),
        field("scale.lambda", &TrackerConfig::scale_lambda),
        field("scale.lr_first_frame", &TrackerConfig::scale_lr_first_frame),
        field("scale.lr_update", &TrackerConfig::scale_lr_update),
        field("scale.steps", &TrackerConfig::scale_steps),
        field("scale.gate_estimation", &TrackerConfig::gate_scale_estimation),
        field("scale.multires_scales", &TrackerConfig::multires_scales),
        field("update.use_pnr", &TrackerConfig::use_pnr),
        field("update.beta_pnr", &TrackerConfig::beta_pnr),
        field("update.beta_rmax", &TrackerConfig::beta_rmax),
        field("update.pnr_epsilon", &TrackerConfig::pnr_epsilon),
        field("update.pnr_shift_min", &TrackerConfig::pnr_shift_min),
        field("update.history_window", &TrackerConfig::history_window),
        field("update.subpixel", &TrackerConfig::subpixel),
        field("model.use_pretrained", &TrackerConfig::use_pretrained),
        field("corpus.sequences", &TrackerConfig::corpus_sequences),
        field("corpus.frames", &TrackerConfig::corpus_frames),
        field("seed", &TrackerConfig::seed),
    };
    std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
    return e;
  }();
  return entries;
}

const Entry* find_entry(std::string_view key) {
  for (const auto& e : registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

[[noreturn]] void unknown_key(std::string_view key) {
  std::string msg = "unknown config key '" + std::string(key) + "'; valid keys:";
  for (const auto& e : registry()) msg += "\n  " + e.key;
  throw InvalidArgument(msg);
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (const auto& [k, v] : node.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      out.emplace_back(key, v);
    }
  }
}

}  // namespace

TrackerConfig desk_defaults() { return TrackerConfig{}; }

TrackerConfig paper_defaults() {
  TrackerConfig c;
  c.patch_size = 224;
  c.lr_offline = 1e-5;
  c.lr_first_frame = 5e-7;
  c.lr_update = 1e-7;
  c.lambda_offline = 0.005;
  c.lambda_first_frame = 0.01;
  c.momentum = 0.9;
  c.first_frame_steps = 50;
  c.offline_epochs = 30;
  c.jitter_translation = 0.05;
  c.jitter_scale = 0.03;
  c.scale_count = 33;
  c.scale_step = 1.02;
  return c;
}

void validate(const TrackerConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("invalid config: " + what);
  };
  parse_layer_specs(c.layers);
  require(c.padding_factor >= 1.0, "features.padding_factor must be >= 1");
  require(c.patch_size >= 8, "features.patch_size must be >= 8");
  require(c.feature_energy > 0.0, "features.energy must be positive");
  require(c.label_sigma_factor > 0.0, "train.label_sigma_factor must be positive");
  require(c.filter_init_std >= 0.0, "train.filter_init_std must be non-negative");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "train.momentum must lie in [0,1)");
  require(c.lambda_offline >= 0.0 && c.lambda_first_frame >= 0.0 && c.lambda_update >= 0.0,
          "train.lambda_* must be non-negative");
  require(c.lr_offline >= 0.0 && c.lr_first_frame >= 0.0 && c.lr_update >= 0.0, "train.lr_* must be non-negative");
  require(c.jitter_translation >= 0.0 && c.jitter_scale >= 0.0, "train.jitter_* must be non-negative");
  require(c.scale_mode == "filter" || c.scale_mode == "multires" || c.scale_mode == "none",
          "scale.mode must be filter, multires or none");
  require(c.scale_count % 2 == 1, "scale.count must be odd");
  require(c.scale_step > 1.0, "scale.step must exceed 1");
  require(c.scale_template >= 4, "scale.template must be >= 4");
  require(c.scale_feature_dims >= 1, "scale.feature_dims must be positive");
  require(c.scale_clamp >= 1.0, "scale.clamp must be >= 1");
  require(c.scale_sigma_factor > 0.0, "scale.sigma_factor must be positive");
  require(c.scale_lambda >= 0.0 && c.scale_lr_first_frame >= 0.0 && c.scale_lr_update >= 0.0,
          "scale rates must be non-negative");
  for (double m : c.multires_scales) require(m > 0.0 && std::isfinite(m), "scale.multires_scales must be positive");
  require(c.beta_pnr > 0.0 && c.beta_rmax > 0.0, "update.beta_* must be positive");
  require(c.pnr_epsilon > 0.0, "update.pnr_epsilon must be positive");
  require(c.corpus_sequences >= 1 && c.corpus_frames >= 1, "corpus sizes must be positive");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.push_back(e.key);
  return keys;
}

TrackerConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");

  TrackerConfig config = desk_defaults();
  if (auto it = doc.find("preset"); it != doc.end()) {
    const std::string preset = it->is_string() ? it->get<std::string>() : "";
    if (preset == "paper_defaults") {
      config = paper_defaults();
    } else if (preset != "desk_defaults") {
      throw InvalidArgument("config preset must be desk_defaults or paper_defaults, got " + it->dump());
    }
    doc.erase(it);
  }
  std::vector<std::pair<std::string, json>> items;
  flatten(doc, "", items);
  for (const auto& [key, value] : items) {
    const Entry* e = find_entry(key);
    if (e == nullptr) unknown_key(key);
    e->set(config, value);
  }
  validate(config);
  return config;
}

TrackerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_override(TrackerConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidArgument("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  const Entry* e = find_entry(key);
  if (e == nullptr) unknown_key(key);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  e->set(config, value);
  validate(config);
}

std::string to_json(const TrackerConfig& config) {
  json doc = json::object();
  for (const auto& e : registry()) {
    std::string pointer = "/" + e.key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    doc[json::json_pointer(pointer)] = e.get(config);
  }
  return doc.dump(2) + "\n";
}

}  // namespace uct

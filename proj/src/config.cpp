#include "graphtrack/config.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "graphtrack/errors.hpp"

namespace graphtrack {

namespace {

using json = nlohmann::ordered_json;

class Section {
public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError("'" + name_ + "' must be a JSON object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : obj_.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw ConfigError("unknown config key '" + qualified(k) + "'");
  }

  template <class T>
  void get(const char* key, T& out) const {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + qualified(key) + "' has the wrong type");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }
  Section sub(const char* key) const { return Section(obj_.at(key), qualified(key)); }

private:
  std::string qualified(std::string_view k) const { return name_.empty() ? std::string(k) : name_ + "." + std::string(k); }

  const json& obj_;
  std::string name_;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0,1)");
  if (epochs < 0) throw ConfigError("train.epochs must be non-negative");
  if (plateau_patience < 1) throw ConfigError("train.plateau_patience must be at least 1");
  if (!(weights.lambda_det >= 0.0 && weights.lambda_track >= 0.0 && weights.lambda_reg >= 0.0))
    throw ConfigError("loss weights must be non-negative");
}

void ExplainConfig::validate() const {
  if (!(flip_budget > 0.0 && flip_budget <= 1.0)) throw ConfigError("explain.flip_budget must lie in (0,1]");
}

void RunConfig::validate() const {
  if (image.width <= 0 || image.height <= 0) throw ConfigError("image size must be positive");
  tracker.validate();
  train.validate();
  explain.validate();
}

TrackerConfig RunConfig::tracker_config() const {
  auto t = tracker;
  t.seed = seed;
  return t;
}

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  const Section top(root, "");
  top.allow({"seed", "image", "format", "detect", "graph", "tracker", "gnn", "train", "explain"});
  top.get("seed", cfg.seed);
  if (top.has("format")) {
    std::string f;
    top.get("format", f);
    cfg.format = parse_format(f);
  }
  if (top.has("image")) {
    const auto s = top.sub("image");
    s.allow({"width", "height"});
    s.get("width", cfg.image.width);
    s.get("height", cfg.image.height);
  }
  auto& t = cfg.tracker;
  if (top.has("detect")) {
    const auto s = top.sub("detect");
    s.allow({"conf_threshold", "nms_iou", "roi", "max_box_size"});
    s.get("conf_threshold", t.conf_threshold);
    s.get("nms_iou", t.nms_iou);
    s.get("max_box_size", t.max_box_size);
    if (s.has("roi")) {
      std::vector<double> r;
      s.get("roi", r);
      if (r.size() != 4) throw ConfigError("detect.roi must be [x0, y0, x1, y1]");
      t.roi = {r[0], r[1], r[2], r[3]};
    }
  }
  if (top.has("graph")) {
    const auto s = top.sub("graph");
    s.allow({"tau_dist", "tau_vel", "edge_gate", "sigma_d", "sigma_v", "use_velocity", "use_appearance",
             "constant_edge_weights", "adjacency"});
    s.get("tau_dist", t.graph.tau_dist);
    s.get("tau_vel", t.graph.tau_vel);
    s.get("sigma_d", t.graph.weight.sigma_d);
    s.get("sigma_v", t.graph.weight.sigma_v);
    s.get("use_velocity", t.graph.weight.use_velocity);
    s.get("use_appearance", t.graph.weight.use_appearance);
    s.get("constant_edge_weights", t.graph.weight.constant);
    std::string name;
    if (s.has("edge_gate")) {
      s.get("edge_gate", name);
      t.graph.gate = parse_edge_gate(name);
    }
    if (s.has("adjacency")) {
      s.get("adjacency", name);
      t.adjacency = parse_adjacency_mode(name);
    }
  }
  if (top.has("tracker")) {
    const auto s = top.sub("tracker");
    s.allow({"use_temporal", "tau_gate", "beta", "t_max", "embedding_alpha", "velocity_alpha"});
    s.get("use_temporal", t.use_temporal);
    s.get("tau_gate", t.tau_gate);
    s.get("beta", t.beta);
    s.get("t_max", t.t_max);
    s.get("embedding_alpha", t.embedding_alpha);
    s.get("velocity_alpha", t.velocity_alpha);
  }
  if (top.has("gnn")) {
    const auto s = top.sub("gnn");
    s.allow({"hidden_dims"});
    s.get("hidden_dims", t.hidden_dims);
  }
  if (top.has("train")) {
    const auto s = top.sub("train");
    s.allow({"lr", "momentum", "epochs", "halve_on_plateau", "plateau_patience", "lambda_det", "lambda_track",
             "lambda_reg"});
    auto& tr = cfg.train;
    s.get("lr", tr.lr);
    s.get("momentum", tr.momentum);
    s.get("epochs", tr.epochs);
    s.get("halve_on_plateau", tr.halve_on_plateau);
    s.get("plateau_patience", tr.plateau_patience);
    s.get("lambda_det", tr.weights.lambda_det);
    s.get("lambda_track", tr.weights.lambda_track);
    s.get("lambda_reg", tr.weights.lambda_reg);
  }
  if (top.has("explain")) {
    const auto s = top.sub("explain");
    s.allow({"mask", "flip_budget"});
    if (s.has("mask")) {
      std::string m;
      s.get("mask", m);
      cfg.explain.mask = parse_mask_mode(m);
    }
    s.get("flip_budget", cfg.explain.flip_budget);
  }
  cfg.validate();
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  const auto& t = cfg.tracker;
  json j;
  j["seed"] = cfg.seed;
  j["image"] = {{"width", cfg.image.width}, {"height", cfg.image.height}};
  j["format"] = format_name(cfg.format);
  j["detect"] = {{"conf_threshold", t.conf_threshold},
                 {"nms_iou", t.nms_iou},
                 {"roi", {t.roi.x0, t.roi.y0, t.roi.x1, t.roi.y1}},
                 {"max_box_size", t.max_box_size}};
  j["graph"] = {{"tau_dist", t.graph.tau_dist},
                {"tau_vel", t.graph.tau_vel},
                {"edge_gate", edge_gate_name(t.graph.gate)},
                {"sigma_d", t.graph.weight.sigma_d},
                {"sigma_v", t.graph.weight.sigma_v},
                {"use_velocity", t.graph.weight.use_velocity},
                {"use_appearance", t.graph.weight.use_appearance},
                {"constant_edge_weights", t.graph.weight.constant},
                {"adjacency", adjacency_mode_name(t.adjacency)}};
  j["tracker"] = {{"use_temporal", t.use_temporal},
                  {"tau_gate", t.tau_gate},
                  {"beta", t.beta},
                  {"t_max", t.t_max},
                  {"embedding_alpha", t.embedding_alpha},
                  {"velocity_alpha", t.velocity_alpha}};
  j["gnn"] = {{"hidden_dims", t.hidden_dims}};
  const auto& tr = cfg.train;
  j["train"] = {{"lr", tr.lr},
                {"momentum", tr.momentum},
                {"epochs", tr.epochs},
                {"halve_on_plateau", tr.halve_on_plateau},
                {"plateau_patience", tr.plateau_patience},
                {"lambda_det", tr.weights.lambda_det},
                {"lambda_track", tr.weights.lambda_track},
                {"lambda_reg", tr.weights.lambda_reg}};
  j["explain"] = {{"mask", mask_mode_name(cfg.explain.mask)}, {"flip_budget", cfg.explain.flip_budget}};
  return j.dump(2) + "\n";
}

}  // namespace graphtrack

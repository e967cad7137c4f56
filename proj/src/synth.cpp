#include "graphtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <json.hpp>

#include "graphtrack/errors.hpp"
#include "graphtrack/rng.hpp"

namespace graphtrack {

namespace {

using json = nlohmann::ordered_json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> random_unit(SplitMix64& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  }
  for (auto& x : v) x /= norm;
  return v;
}

int draw_class(SplitMix64& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (const double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (u < weights[c]) return static_cast<int>(c);
    u -= weights[c];
  }
  // Rounding fallthrough: last class with positive weight.
  for (std::size_t c = weights.size(); c-- > 0;)
    if (weights[c] > 0.0) return static_cast<int>(c);
  return 0;
}

/// Straight-line motion between bounces; positions stay exact until the first bounce.
struct Mover {
  double ax, ay;   // anchor position
  double vx, vy;
  std::int64_t t_anchor = 0;

  std::pair<double, double> at(std::int64_t t) const {
    const double dt = static_cast<double>(t - t_anchor);
    return {ax + vx * dt, ay + vy * dt};
  }
};

void bounce(Mover& m, std::int64_t t, double half_w, double half_h) {
  auto [x, y] = m.at(t);
  bool hit = false;
  if (x < half_w) {
    x = 2.0 * half_w - x;
    m.vx = -m.vx;
    hit = true;
  } else if (x > 1.0 - half_w) {
    x = 2.0 * (1.0 - half_w) - x;
    m.vx = -m.vx;
    hit = true;
  }
  if (y < half_h) {
    y = 2.0 * half_h - y;
    m.vy = -m.vy;
    hit = true;
  } else if (y > 1.0 - half_h) {
    y = 2.0 * (1.0 - half_h) - y;
    m.vy = -m.vy;
    hit = true;
  }
  if (hit) {
    m.ax = x;
    m.ay = y;
    m.t_anchor = t;
  }
}

std::vector<ObjectSpec> sample_objects(const ScenarioConfig& cfg) {
  if (!cfg.objects.empty()) return cfg.objects;
  SplitMix64 rng(derive_seed(cfg.seed, "synth.generate"));
  std::vector<ObjectSpec> out;
  out.reserve(static_cast<std::size_t>(cfg.object_count));
  for (int i = 0; i < cfg.object_count; ++i) {
    ObjectSpec o;
    o.w = rng.uniform(cfg.size_min, cfg.size_max);
    o.h = rng.uniform(cfg.size_min, cfg.size_max);
    o.class_id = draw_class(rng, cfg.class_weights);
    o.cx = rng.uniform(0.5 * o.w, 1.0 - 0.5 * o.w);
    o.cy = rng.uniform(0.5 * o.h, 1.0 - 0.5 * o.h);
    const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    const double angle = rng.uniform(0.0, kTwoPi);
    const bool leftward = rng.bernoulli(0.5);
    const double period_scale = rng.uniform(0.75, 1.25);
    const double phase = rng.uniform(0.0, kTwoPi);
    if (cfg.motion == MotionModel::ConstantVelocity) {
      o.vx = speed * std::cos(angle);
      o.vy = speed * std::sin(angle);
    } else {
      o.vx = leftward ? -speed : speed;
      o.vy = 0.0;
      o.amplitude = cfg.lane_amplitude;
      o.period = cfg.lane_period * period_scale;
      o.phase = phase;
    }
    out.push_back(o);
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

MotionModel parse_motion_model(std::string_view s) {
  if (s == "constant-velocity") return MotionModel::ConstantVelocity;
  if (s == "sinusoidal-lane-change") return MotionModel::SinusoidalLaneChange;
  throw ConfigError("unknown motion model '" + std::string(s) +
                    "' (expected constant-velocity or sinusoidal-lane-change)");
}

std::string_view motion_model_name(MotionModel m) {
  return m == MotionModel::ConstantVelocity ? "constant-velocity" : "sinusoidal-lane-change";
}

void ScenarioConfig::validate() const {
  require(object_count >= 0, "object_count must be non-negative");
  require(frame_count >= 0, "frame_count must be non-negative");
  require(objects.empty() || static_cast<int>(objects.size()) == object_count,
          "object_count must equal the number of listed objects");
  require(speed_min >= 0.0 && speed_max >= speed_min, "speed range must satisfy 0 <= min <= max");
  require(size_min > 0.0 && size_max >= size_min && size_max <= 1.0, "size range must satisfy 0 < min <= max <= 1");
  require(!class_weights.empty(), "class_weights must be non-empty");
  double total = 0.0;
  for (const double w : class_weights) {
    require(w >= 0.0 && std::isfinite(w), "class weights must be finite and non-negative");
    total += w;
  }
  require(total > 0.0, "class weights must not all be zero");
  require(lane_period > 0.0, "lane_period must be positive");
  require(lane_amplitude >= 0.0, "lane_amplitude must be non-negative");
  require(embedding_dim >= 0, "embedding_dim must be non-negative");
  for (const auto& o : objects) {
    require(o.w > 0.0 && o.h > 0.0 && o.w <= 1.0 && o.h <= 1.0, "object sizes must lie in (0,1]");
    require(o.period > 0.0, "object period must be positive");
    require(o.class_id >= 0, "object class must be non-negative");
  }
  for (const auto& occ : occlusions) {
    require(occ.object >= 0 && occ.object < object_count, "occlusion names an unknown object");
    require(occ.start >= 0 && occ.duration >= 0, "occlusion start and duration must be non-negative");
    require(occ.start + occ.duration <= frame_count, "occlusion window must fit within frame_count");
  }
}

GroundTruth generate(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto specs = sample_objects(cfg);
  const auto n = specs.size();
  GroundTruth gt;

  SplitMix64 erng(derive_seed(cfg.seed, "synth.embedding"));
  gt.embeddings.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    gt.embeddings.push_back(cfg.embedding_dim > 0 ? random_unit(erng, cfg.embedding_dim) : std::vector<double>{});

  std::vector<Mover> movers;
  movers.reserve(n);
  for (const auto& s : specs) movers.push_back({s.cx, s.cy, s.vx, s.vy, 0});

  std::vector<std::set<int>> occluded(static_cast<std::size_t>(cfg.frame_count));
  for (const auto& occ : cfg.occlusions)
    for (auto t = occ.start; t < occ.start + occ.duration; ++t) occluded[static_cast<std::size_t>(t)].insert(occ.object);

  gt.min_pairwise_distance = std::numeric_limits<double>::infinity();
  gt.frames.reserve(static_cast<std::size_t>(cfg.frame_count));
  for (std::int64_t t = 0; t < cfg.frame_count; ++t) {
    FrameDetections f{t, {}};
    f.detections.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = specs[i];
      if (cfg.reflect && t > 0) bounce(movers[i], t, 0.5 * s.w, 0.5 * s.h);
      auto [x, y] = movers[i].at(t);
      if (s.amplitude > 0.0) {
        y += s.amplitude * std::sin(kTwoPi * static_cast<double>(t) / s.period + s.phase);
        if (cfg.reflect) y = std::clamp(y, 0.5 * s.h, 1.0 - 0.5 * s.h);
      }
      Detection d;
      d.box = {x, y, s.w, s.h};
      if (!d.box.valid())
        throw ConfigError("object " + std::to_string(i) + " leaves the frame at frame " + std::to_string(t));
      d.confidence = 1.0;
      d.class_id = s.class_id;
      if (static_cast<std::size_t>(s.class_id) < cfg.class_names.size())
        d.class_name = cfg.class_names[static_cast<std::size_t>(s.class_id)];
      if (cfg.embedding_dim > 0) d.embedding = gt.embeddings[i];
      d.id = static_cast<std::int64_t>(i);
      f.detections.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        gt.min_pairwise_distance =
            std::min(gt.min_pairwise_distance, std::hypot(f.detections[i].box.cx - f.detections[j].box.cx,
                                                          f.detections[i].box.cy - f.detections[j].box.cy));
    gt.occluded.emplace_back(occluded[static_cast<std::size_t>(t)].begin(), occluded[static_cast<std::size_t>(t)].end());
    gt.frames.push_back(std::move(f));
  }
  return gt;
}

void DegradationConfig::validate() const {
  require(center_sigma >= 0.0 && size_sigma >= 0.0 && embedding_sigma >= 0.0, "noise sigmas must be non-negative");
  require(dropout >= 0.0 && dropout <= 1.0, "dropout must lie in [0,1]");
  require(false_positive_rate >= 0.0 && std::isfinite(false_positive_rate),
          "false_positive_rate must be finite and non-negative");
}

double modeled_confidence(double noise, double sigma) {
  if (!(sigma > 0.0)) return 1.0;
  return 1.0 - std::clamp(noise / (3.0 * sigma), 0.0, 0.5);
}

DegradeResult degrade(const GroundTruth& gt, const DegradationConfig& deg) {
  deg.validate();
  SplitMix64 rng(derive_seed(deg.seed, "synth.degrade"));
  int max_class = 0;
  int emb_dim = 0;
  for (const auto& f : gt.frames)
    for (const auto& d : f.detections) {
      max_class = std::max(max_class, d.class_id);
      if (d.embedding) emb_dim = static_cast<int>(d.embedding->size());
    }

  DegradeResult out;
  out.frames.reserve(gt.frames.size());
  out.source.reserve(gt.frames.size());
  for (std::size_t fi = 0; fi < gt.frames.size(); ++fi) {
    const auto& f = gt.frames[fi];
    const auto& occ = gt.occluded[fi];
    FrameDetections of{f.frame_index, {}};
    std::vector<int> src;
    for (const auto& d : f.detections) {
      const int obj = static_cast<int>(d.id.value_or(-1));
      if (std::binary_search(occ.begin(), occ.end(), obj)) continue;
      ++out.visible;
      // Every visible object consumes the same draws whether or not it is kept.
      const bool drop = rng.bernoulli(deg.dropout);
      const double nx = rng.normal() * deg.center_sigma;
      const double ny = rng.normal() * deg.center_sigma;
      const double nw = rng.normal() * deg.size_sigma;
      const double nh = rng.normal() * deg.size_sigma;
      std::vector<double> emb;
      if (d.embedding) {
        emb = *d.embedding;
        double norm = 0.0;
        for (auto& x : emb) {
          x += rng.normal() * deg.embedding_sigma;
          norm += x * x;
        }
        norm = std::sqrt(norm);
        // noise-free embeddings are already unit length; leave them bit-exact
        if (norm > 0.0 && deg.embedding_sigma > 0.0)
          for (auto& x : emb) x /= norm;
      }
      if (drop) {
        ++out.dropped;
        continue;
      }
      Detection nd;
      nd.box = {std::clamp(d.box.cx + nx, 0.0, 1.0), std::clamp(d.box.cy + ny, 0.0, 1.0),
                std::max(d.box.w + nw, 1e-3), std::max(d.box.h + nh, 1e-3)};
      nd.confidence = modeled_confidence(std::hypot(nx, ny), deg.center_sigma);
      nd.class_id = d.class_id;
      nd.class_name = d.class_name;
      if (d.embedding && deg.emit_embeddings) nd.embedding = std::move(emb);
      of.detections.push_back(std::move(nd));
      src.push_back(obj);
    }
    const double whole = std::floor(deg.false_positive_rate);
    const auto count = static_cast<std::size_t>(whole) + (rng.bernoulli(deg.false_positive_rate - whole) ? 1u : 0u);
    for (std::size_t k = 0; k < count; ++k) {
      Detection fp;
      fp.box.w = rng.uniform(0.02, 0.08);
      fp.box.h = rng.uniform(0.02, 0.08);
      fp.box.cx = rng.uniform(0.5 * fp.box.w, 1.0 - 0.5 * fp.box.w);
      fp.box.cy = rng.uniform(0.5 * fp.box.h, 1.0 - 0.5 * fp.box.h);
      fp.confidence = rng.uniform(0.25, 0.6);
      fp.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_class) + 1));
      if (emb_dim > 0) {
        auto e = random_unit(rng, emb_dim);
        if (deg.emit_embeddings) fp.embedding = std::move(e);
      }
      of.detections.push_back(std::move(fp));
      src.push_back(-1);
      ++out.injected;
    }
    out.frames.push_back(std::move(of));
    out.source.push_back(std::move(src));
  }
  return out;
}

std::pair<std::int64_t, double> closest_approach(const GroundTruth& gt, int a, int b) {
  std::int64_t best_t = -1;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : gt.frames) {
    const Detection* da = nullptr;
    const Detection* db = nullptr;
    for (const auto& d : f.detections) {
      if (d.id == a) da = &d;
      if (d.id == b) db = &d;
    }
    if (!da || !db) continue;
    const double dist = std::hypot(da->box.cx - db->box.cx, da->box.cy - db->box.cy);
    if (dist < best) {
      best = dist;
      best_t = f.frame_index;
    }
  }
  return {best_t, best};
}

ScenarioConfig separated_preset(std::uint64_t seed, int frame_count) {
  ScenarioConfig cfg;
  cfg.motion = MotionModel::SinusoidalLaneChange;
  cfg.object_count = 20;
  cfg.frame_count = frame_count;
  cfg.seed = seed;
  SplitMix64 rng(derive_seed(seed, "synth.preset.separated"));
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) {
      ObjectSpec o;
      o.cx = 0.1 + 0.2 * c;
      o.cy = 0.125 + 0.25 * r;
      o.w = o.h = 0.05;
      o.amplitude = 0.03;
      o.period = rng.uniform(40.0, 80.0);
      o.phase = rng.uniform(0.0, kTwoPi);
      cfg.objects.push_back(o);
    }
  const auto gt = generate(cfg);
  if (!(gt.min_pairwise_distance > kSeparatedMinDistance))
    throw ConfigError("separated preset violates its minimum-distance fact");
  return cfg;
}

ScenarioConfig crossing_preset(std::uint64_t seed, int meet_frame, int frame_count) {
  ScenarioConfig cfg;
  cfg.object_count = 2;
  cfg.frame_count = frame_count;
  cfg.seed = seed;
  cfg.reflect = false;
  const double mt = static_cast<double>(meet_frame);
  // Slow down when the meet frame sits near either end so both paths stay in view.
  const double span = std::max({mt, static_cast<double>(frame_count - 1) - mt, 1.0});
  const double vx = std::min(0.008, 0.48 / span);
  for (const double vy : {0.5 * vx, -0.5 * vx}) {
    ObjectSpec o;
    o.vx = vx;
    o.vy = vy;
    o.cx = 0.5 - o.vx * mt;
    o.cy = 0.5 - o.vy * mt;
    cfg.objects.push_back(o);
  }
  const auto gt = generate(cfg);
  if (meet_frame < frame_count) {
    const auto& f = gt.frames[static_cast<std::size_t>(meet_frame)].detections;
    if (std::hypot(f[0].box.cx - f[1].box.cx, f[0].box.cy - f[1].box.cy) > 1e-9)
      throw ConfigError("crossing preset objects do not meet at the configured frame");
  }
  return cfg;
}

ScenarioConfig occlusion_preset(std::int64_t gap, std::int64_t start, int frame_count) {
  ScenarioConfig cfg;
  cfg.object_count = 2;
  cfg.frame_count = frame_count;
  cfg.reflect = false;
  ObjectSpec a;
  a.cx = 0.1;
  a.cy = 0.5;
  a.vx = 0.005;
  ObjectSpec b = a;
  b.cy = 0.15;
  cfg.objects = {a, b};
  cfg.occlusions = {{0, start, gap}};
  const auto gt = generate(cfg);
  std::int64_t hidden = 0;
  for (const auto& occ : gt.occluded) hidden += static_cast<std::int64_t>(occ.size());
  if (hidden != gap) throw ConfigError("occlusion preset window does not match the requested gap");
  return cfg;
}

ScenarioConfig dense_preset(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.object_count = 50;
  cfg.frame_count = 200;
  cfg.speed_min = 0.002;
  cfg.speed_max = 0.01;
  cfg.size_min = 0.02;
  cfg.size_max = 0.06;
  cfg.class_weights = {0.6, 0.3, 0.1};
  cfg.class_names = {"car", "truck", "person"};
  cfg.seed = seed;
  const auto gt = generate(cfg);
  if (gt.frames.size() != 200 || gt.object_count() != 50) throw ConfigError("dense preset has the wrong shape");
  return cfg;
}

ScenarioConfig crossing_suite_preset(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.frame_count = 100;
  cfg.seed = seed;
  cfg.reflect = true;
  cfg.class_names = {"car"};
  SplitMix64 rng(derive_seed(seed, "synth.preset.crossing-suite"));
  constexpr int kPairs = 4;
  std::vector<std::pair<std::int64_t, std::pair<double, double>>> meets;
  for (int p = 0; p < kPairs; ++p) {
    const double mx = rng.uniform(0.3, 0.7);
    const double my = rng.uniform(0.3, 0.7);
    const double meet = std::floor(rng.uniform(25.0, 75.0));
    const double theta = rng.uniform(0.0, kTwoPi);
    const double half = rng.uniform(0.6, 1.3);
    const double speed = rng.uniform(0.006, 0.012);
    const double size = rng.uniform(0.04, 0.06);
    for (const double sgn : {1.0, -1.0}) {
      ObjectSpec o;
      o.vx = speed * std::cos(theta + sgn * half);
      o.vy = speed * std::sin(theta + sgn * half);
      o.cx = mx - o.vx * meet;
      o.cy = my - o.vy * meet;
      o.w = o.h = size;
      cfg.objects.push_back(o);
    }
    meets.push_back({static_cast<std::int64_t>(meet), {mx, my}});
  }
  cfg.object_count = static_cast<int>(cfg.objects.size());
  // Each path is laid out backwards from its meeting point (bouncing off the border
  // like the forward simulation does), so the pair still meets on schedule.
  std::vector<ObjectSpec> forward;
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    const auto meet = meets[i / 2].first;
    ObjectSpec back = cfg.objects[i];
    back.cx = meets[i / 2].second.first;
    back.cy = meets[i / 2].second.second;
    back.vx = -cfg.objects[i].vx;
    back.vy = -cfg.objects[i].vy;
    Mover m{back.cx, back.cy, back.vx, back.vy, 0};
    for (std::int64_t t = 1; t <= meet; ++t) bounce(m, t, 0.5 * back.w, 0.5 * back.h);
    const auto [sx, sy] = m.at(meet);
    ObjectSpec start = cfg.objects[i];
    start.cx = sx;
    start.cy = sy;
    start.vx = -m.vx;
    start.vy = -m.vy;
    forward.push_back(start);
  }
  cfg.objects = std::move(forward);
  return cfg;
}

DegradationConfig crossing_suite_degradation(std::uint64_t seed) {
  DegradationConfig deg;
  deg.center_sigma = 0.003;
  deg.size_sigma = 0.002;
  deg.dropout = 0.05;
  deg.false_positive_rate = 0.2;
  deg.embedding_sigma = 0.5;
  deg.seed = seed;
  return deg;
}

std::vector<std::string> preset_names() { return {"separated", "crossing", "occlusion", "dense", "crossing-suite"}; }

ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed) {
  if (name == "separated") return separated_preset(seed);
  if (name == "crossing") return crossing_preset(seed);
  if (name == "occlusion") {
    auto cfg = occlusion_preset(10);
    cfg.seed = seed;
    return cfg;
  }
  if (name == "dense") return dense_preset(seed);
  if (name == "crossing-suite") return crossing_suite_preset(seed);
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected separated, crossing, occlusion, dense or crossing-suite)");
}

// ---------------------------------------------------------------- JSON

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synthetic scenario file is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"scenario", "degradation"}, "scenario file");
  SynthSpec spec;
  if (root.contains("scenario")) {
    const auto& s = root["scenario"];
    const std::string w = "scenario";
    reject_unknown(s,
                   {"object_count", "frame_count", "motion", "speed_min", "speed_max", "size_min", "size_max",
                    "class_weights", "class_names", "lane_amplitude", "lane_period", "reflect", "occlusions",
                    "objects", "embedding_dim", "seed"},
                   w);
    auto& c = spec.scenario;
    read(s, "object_count", c.object_count, w);
    read(s, "frame_count", c.frame_count, w);
    std::string motion(motion_model_name(c.motion));
    read(s, "motion", motion, w);
    c.motion = parse_motion_model(motion);
    read(s, "speed_min", c.speed_min, w);
    read(s, "speed_max", c.speed_max, w);
    read(s, "size_min", c.size_min, w);
    read(s, "size_max", c.size_max, w);
    read(s, "class_weights", c.class_weights, w);
    read(s, "class_names", c.class_names, w);
    read(s, "lane_amplitude", c.lane_amplitude, w);
    read(s, "lane_period", c.lane_period, w);
    read(s, "reflect", c.reflect, w);
    read(s, "embedding_dim", c.embedding_dim, w);
    read(s, "seed", c.seed, w);
    if (s.contains("occlusions")) {
      if (!s["occlusions"].is_array()) throw ConfigError("scenario.occlusions must be an array");
      for (const auto& o : s["occlusions"]) {
        reject_unknown(o, {"object", "start", "duration"}, "occlusion");
        Occlusion occ;
        read(o, "object", occ.object, "occlusion");
        read(o, "start", occ.start, "occlusion");
        read(o, "duration", occ.duration, "occlusion");
        c.occlusions.push_back(occ);
      }
    }
    if (s.contains("objects")) {
      if (!s["objects"].is_array()) throw ConfigError("scenario.objects must be an array");
      for (const auto& o : s["objects"]) {
        reject_unknown(o, {"cx", "cy", "vx", "vy", "w", "h", "class", "amplitude", "period", "phase"}, "object");
        ObjectSpec os;
        read(o, "cx", os.cx, "object");
        read(o, "cy", os.cy, "object");
        read(o, "vx", os.vx, "object");
        read(o, "vy", os.vy, "object");
        read(o, "w", os.w, "object");
        read(o, "h", os.h, "object");
        read(o, "class", os.class_id, "object");
        read(o, "amplitude", os.amplitude, "object");
        read(o, "period", os.period, "object");
        read(o, "phase", os.phase, "object");
        c.objects.push_back(os);
      }
      if (!s.contains("object_count")) c.object_count = static_cast<int>(c.objects.size());
    }
    c.validate();
  }
  if (root.contains("degradation")) {
    const auto& d = root["degradation"];
    const std::string w = "degradation";
    reject_unknown(d,
                   {"center_sigma", "size_sigma", "dropout", "false_positive_rate", "embedding_sigma",
                    "emit_embeddings", "seed"},
                   w);
    auto& g = spec.degradation;
    read(d, "center_sigma", g.center_sigma, w);
    read(d, "size_sigma", g.size_sigma, w);
    read(d, "dropout", g.dropout, w);
    read(d, "false_positive_rate", g.false_positive_rate, w);
    read(d, "embedding_sigma", g.embedding_sigma, w);
    read(d, "emit_embeddings", g.emit_embeddings, w);
    read(d, "seed", g.seed, w);
    g.validate();
  }
  return spec;
}

std::string synth_spec_json(const SynthSpec& spec) {
  const auto& c = spec.scenario;
  json s;
  s["object_count"] = c.object_count;
  s["frame_count"] = c.frame_count;
  s["motion"] = motion_model_name(c.motion);
  s["speed_min"] = c.speed_min;
  s["speed_max"] = c.speed_max;
  s["size_min"] = c.size_min;
  s["size_max"] = c.size_max;
  s["class_weights"] = c.class_weights;
  s["class_names"] = c.class_names;
  s["lane_amplitude"] = c.lane_amplitude;
  s["lane_period"] = c.lane_period;
  s["reflect"] = c.reflect;
  s["occlusions"] = json::array();
  for (const auto& o : c.occlusions)
    s["occlusions"].push_back({{"object", o.object}, {"start", o.start}, {"duration", o.duration}});
  s["objects"] = json::array();
  for (const auto& o : c.objects)
    s["objects"].push_back({{"cx", o.cx},
                            {"cy", o.cy},
                            {"vx", o.vx},
                            {"vy", o.vy},
                            {"w", o.w},
                            {"h", o.h},
                            {"class", o.class_id},
                            {"amplitude", o.amplitude},
                            {"period", o.period},
                            {"phase", o.phase}});
  s["embedding_dim"] = c.embedding_dim;
  s["seed"] = c.seed;
  const auto& g = spec.degradation;
  json d;
  d["center_sigma"] = g.center_sigma;
  d["size_sigma"] = g.size_sigma;
  d["dropout"] = g.dropout;
  d["false_positive_rate"] = g.false_positive_rate;
  d["embedding_sigma"] = g.embedding_sigma;
  d["emit_embeddings"] = g.emit_embeddings;
  d["seed"] = g.seed;
  json root;
  root["scenario"] = std::move(s);
  root["degradation"] = std::move(d);
  return root.dump(2) + "\n";
}

}  // namespace graphtrack

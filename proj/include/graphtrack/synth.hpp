#pragma once

// Deterministic synthetic scenarios: ground-truth trajectories with crossings
// and occlusion windows, and a detection-degradation model on top of them.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphtrack/detect_io.hpp"

namespace graphtrack {

enum class MotionModel { ConstantVelocity, SinusoidalLaneChange };
MotionModel parse_motion_model(std::string_view s);
std::string_view motion_model_name(MotionModel m);

struct Occlusion {
  int object = 0;
  std::int64_t start = 0;
  std::int64_t duration = 0;

  bool operator==(const Occlusion&) const = default;
};

/// Fully specified object; when a scenario lists objects, nothing is drawn at random
/// except the appearance embeddings.
struct ObjectSpec {
  double cx = 0.5, cy = 0.5;  // position at frame 0
  double vx = 0.0, vy = 0.0;  // per frame
  double w = 0.05, h = 0.05;
  int class_id = 0;
  // Lateral sinusoid added to cy (sinusoidal lane-change model only).
  double amplitude = 0.0;
  double period = 50.0;
  double phase = 0.0;

  bool operator==(const ObjectSpec&) const = default;
};

struct ScenarioConfig {
  int object_count = 10;
  int frame_count = 100;
  MotionModel motion = MotionModel::ConstantVelocity;
  double speed_min = 0.002;
  double speed_max = 0.01;
  double size_min = 0.03;
  double size_max = 0.08;
  std::vector<double> class_weights{1.0};  // relative frequency of class 0, 1, ...
  std::vector<std::string> class_names;     // optional labels, indexed by class
  double lane_amplitude = 0.03;             // sinusoidal model, random objects
  double lane_period = 60.0;
  bool reflect = true;                      // bounce random objects off the frame border
  std::vector<Occlusion> occlusions;
  std::vector<ObjectSpec> objects;  // explicit objects override random sampling
  int embedding_dim = 8;
  std::uint64_t seed = 0;

  /// Throws ConfigError on an infeasible or malformed scenario.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

struct GroundTruth {
  std::vector<FrameDetections> frames;  // detections carry object ids and embeddings, conf 1
  std::vector<std::vector<double>> embeddings;   // per object, unit norm
  std::vector<std::vector<int>> occluded;        // per frame, occluded object ids (ascending)
  double min_pairwise_distance = 0.0;            // over all frames, centers
  int object_count() const { return static_cast<int>(embeddings.size()); }
};

GroundTruth generate(const ScenarioConfig& cfg);

struct DegradationConfig {
  double center_sigma = 0.0;
  double size_sigma = 0.0;
  double dropout = 0.0;
  double false_positive_rate = 0.0;  // expected injected detections per frame
  double embedding_sigma = 0.0;
  bool emit_embeddings = true;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DegradationConfig&) const = default;
};

struct DegradeResult {
  std::vector<FrameDetections> frames;        // detector-like stream, no ids
  std::vector<std::vector<int>> source;       // per frame, per detection: object id or -1 for injected
  std::size_t visible = 0;                    // non-occluded (object, frame) pairs
  std::size_t dropped = 0;
  std::size_t injected = 0;
};

/// Confidence of a detection whose center was displaced by `noise`: 1 - clip(noise / 3σ, 0, 0.5).
double modeled_confidence(double noise, double sigma);

DegradeResult degrade(const GroundTruth& gt, const DegradationConfig& deg);

// Presets. Each asserts its own facts at generation time (ConfigError otherwise).

/// 20 objects on a 5 × 4 grid oscillating laterally; min pairwise center
/// distance stays above `min_distance`.
ScenarioConfig separated_preset(std::uint64_t seed, int frame_count = 200);
inline constexpr double kSeparatedMinDistance = 0.16;

/// Two objects on straight lines that meet at `meet_frame` at (0.5, 0.5).
ScenarioConfig crossing_preset(std::uint64_t seed, int meet_frame = 40, int frame_count = 100);

/// Linear-motion object occluded for `gap` frames starting at `start`, plus a distant companion.
ScenarioConfig occlusion_preset(std::int64_t gap, std::int64_t start = 40, int frame_count = 120);

/// 50 random constant-velocity objects × 200 frames.
ScenarioConfig dense_preset(std::uint64_t seed);

/// Several pairs of objects that cross at angles, drawn from `seed`.
ScenarioConfig crossing_suite_preset(std::uint64_t seed);
DegradationConfig crossing_suite_degradation(std::uint64_t seed);

/// Names accepted by scenario_preset: separated, crossing, occlusion, dense, crossing-suite.
ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed);
std::vector<std::string> preset_names();

/// Frame at which objects a and b are closest, and that distance.
std::pair<std::int64_t, double> closest_approach(const GroundTruth& gt, int a, int b);

// JSON files: {"scenario": {...}, "degradation": {...}}; unknown keys rejected.
struct SynthSpec {
  ScenarioConfig scenario;
  DegradationConfig degradation;
  bool operator==(const SynthSpec&) const = default;
};
SynthSpec parse_synth_spec(std::string_view json_text);
std::string synth_spec_json(const SynthSpec& spec);

}  // namespace graphtrack

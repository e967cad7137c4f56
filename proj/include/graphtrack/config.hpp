#pragma once

// Run-wide configuration: every module default in one place, loaded from a
// JSON file whose unknown keys are rejected.

#include <cstdint>
#include <string>
#include <string_view>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/explain.hpp"
#include "graphtrack/gnn.hpp"
#include "graphtrack/tracker.hpp"

namespace graphtrack {

struct TrainConfig {
  double lr = 1e-3;
  double momentum = 0.0;
  int epochs = 20;
  bool halve_on_plateau = false;
  int plateau_patience = 5;
  LossWeights weights;

  void validate() const;
  TrainOptions options() const { return {lr, momentum, halve_on_plateau, plateau_patience, weights}; }
  bool operator==(const TrainConfig&) const = default;
};

struct ExplainConfig {
  MaskMode mask = MaskMode::Zero;
  double flip_budget = 0.25;

  void validate() const;
  bool operator==(const ExplainConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ImageSize image;
  StreamFormat format = StreamFormat::Jsonl;
  TrackerConfig tracker;
  TrainConfig train;
  ExplainConfig explain;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Tracker settings with the run seed applied.
  TrackerConfig tracker_config() const;
  bool operator==(const RunConfig&) const = default;
};

/// Keys absent from the file keep their defaults; unknown keys throw ConfigError.
RunConfig parse_run_config(std::string_view json_text);
std::string run_config_json(const RunConfig& cfg);

}  // namespace graphtrack

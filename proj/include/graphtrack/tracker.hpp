#pragma once

// Per-frame tracking loop: confidence gate -> NMS -> ROI -> box clamp ->
// graph update -> graph convolution -> gated Hungarian association.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/gnn.hpp"
#include "graphtrack/graph.hpp"
#include "graphtrack/hungarian.hpp"

namespace graphtrack {

struct TrackerConfig {
  double conf_threshold = 0.25;
  double nms_iou = 0.5;
  Roi roi;
  double max_box_size = 1.0;

  GraphParams graph;
  AdjacencyMode adjacency = AdjacencyMode::Normalized;
  bool use_temporal = true;  // false: motion features and track velocities frozen at zero

  double tau_gate = 0.2;
  double beta = 0.5;
  int t_max = 10;
  double embedding_alpha = 0.7;  // weight on the previous track embedding
  double velocity_alpha = 0.0;   // weight on the previous velocity estimate

  std::vector<int> hidden_dims{32, 32};
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrackerConfig&) const = default;
};

struct Track {
  std::int64_t track_id = 0;
  BBox last_box;
  std::array<double, 2> velocity{};
  int hits = 1;  // matched observations, including the one that created the track
  Eigen::VectorXd embedding;
  int class_id = 0;
  std::int64_t first_frame = 0;
  std::int64_t last_seen_frame = 0;
  int misses = 0;

  std::int64_t age(std::int64_t frame) const { return frame - first_frame; }
};

/// last_box advanced by velocity over the frames since it was last seen.
BBox predicted_box(const Track& track, std::int64_t frame);

struct CostParams {
  double beta = 0.5;
  double tau_gate = 0.2;
};

/// 1 - IoU(predicted, node) + beta * (1 - cos(track embedding, node embedding)),
/// or +inf when the boxes do not overlap and the centers are farther apart
/// than tau_gate. The embedding term is dropped when either embedding is empty.
double association_cost(const Track& track, const BBox& node_box, const Eigen::VectorXd& node_embedding,
                        const BBox& predicted, const CostParams& params);

struct AssociationResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track index, node index)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_nodes;
};

/// Rows of `cost` are tracks ordered by track id, columns are nodes in frame order.
AssociationResult associate(const Eigen::MatrixXd& cost);

struct TrackedDetection {
  std::int64_t track_id = 0;
  Detection detection;
};

struct FrameResult {
  std::int64_t frame_index = 0;
  std::vector<TrackedDetection> tracks;
  double processing_seconds = 0.0;
};

struct TrackerState {
  std::vector<Track> active;  // ascending track_id
  std::vector<Track> retired;
  std::int64_t next_id = 0;
  std::int64_t last_frame = -1;
  DynamicGraph previous_graph;
};

/// What the tracker saw while processing one frame; kept only on request.
struct FrameDiagnostics {
  FrameDetections filtered;
  DynamicGraph graph;
  AdjacencyMatrix adjacency;
  Activations activations;
  std::vector<Track> tracks_before;  // active tracks entering association
  Eigen::MatrixXd cost;
  std::vector<std::int64_t> node_track_ids;
};

class Tracker {
public:
  explicit Tracker(TrackerConfig config, std::optional<GnnParams> params = std::nullopt);

  /// Processes the next frame. Throws ConfigError if frame_index does not
  /// exceed the last processed frame.
  FrameResult step(const FrameDetections& frame);

  const TrackerState& state() const { return state_; }
  const TrackerConfig& config() const { return config_; }
  const std::optional<GnnParams>& params() const { return params_; }

  void keep_diagnostics(bool on) { keep_diagnostics_ = on; }
  const std::optional<FrameDiagnostics>& diagnostics() const { return diagnostics_; }

private:
  FrameDetections filter(const FrameDetections& frame) const;
  void ensure_params(std::size_t input_dim);

  TrackerConfig config_;
  std::optional<GnnParams> params_;
  std::optional<std::size_t> embedding_dim_;
  TrackerState state_;
  bool keep_diagnostics_ = false;
  std::optional<FrameDiagnostics> diagnostics_;
};

/// Runs a whole stream through a fresh tracker.
std::vector<FrameResult> run_tracker(const std::vector<FrameDetections>& frames, const TrackerConfig& config,
                                     const std::optional<GnnParams>& params = std::nullopt);

/// Tracker output as FrameDetections whose ids are track ids.
std::vector<FrameDetections> to_frames(const std::vector<FrameResult>& results);

/// MOT-style CSV in pixels: "#w,h" header, then
/// frame,track_id,left,top,width,height,conf,class,-1,-1 per tracked detection.
std::string tracks_csv(const std::vector<FrameResult>& results, const ImageSize& img);

}  // namespace graphtrack

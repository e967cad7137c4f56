#pragma once

// Per-frame dynamic graph: nodes are detections, edges connect pairs that
// pass the distance/velocity gate and carry a kernel-product weight.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphtrack/detect_io.hpp"

namespace graphtrack {

struct NodeFeature {
  std::array<double, 4> spatial{};  // cx, cy, w, h
  std::array<double, 2> motion{};   // vx, vy per frame
  std::optional<std::vector<double>> appearance;

  double cx() const { return spatial[0]; }
  double cy() const { return spatial[1]; }
  BBox box() const { return {spatial[0], spatial[1], spatial[2], spatial[3]}; }

  /// spatial ∥ motion ∥ appearance, zero-padded to `embedding_dim` when the
  /// node carries no appearance vector.
  Eigen::VectorXd composite(std::size_t embedding_dim) const;
  Eigen::VectorXd composite() const { return composite(appearance ? appearance->size() : 0); }
};

/// Where the object was last observed and how many frames ago.
struct PrevObservation {
  BBox box;
  int frame_gap = 1;
};

NodeFeature node_feature(const Detection& det, const std::optional<PrevObservation>& prev);

struct EdgeFactors {
  double distance = 0.0;
  double velocity_diff = 0.0;
  double appearance_sim = 1.0;
};

EdgeFactors edge_factors(const NodeFeature& a, const NodeFeature& b);

struct EdgeWeightParams {
  double sigma_d = 0.1;
  double sigma_v = 0.05;
  bool use_velocity = true;
  bool use_appearance = true;
  bool constant = false;  // every surviving edge gets weight 1

  bool operator==(const EdgeWeightParams&) const = default;
};

double edge_weight(const EdgeFactors& f, const EdgeWeightParams& p);

enum class EdgeGate { Or, And };

struct GraphParams {
  double tau_dist = 0.2;
  double tau_vel = 0.05;
  EdgeGate gate = EdgeGate::Or;
  EdgeWeightParams weight;

  void validate() const;
  bool operator==(const GraphParams&) const = default;
};

/// Edge existence rule: d < tau_dist OR (AND) dv < tau_vel.
bool edge_gate(const EdgeFactors& f, const GraphParams& p);

struct GraphEdge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double weight = 0.0;
  EdgeFactors factors;
};

struct DynamicGraph {
  std::int64_t frame_index = -1;
  std::vector<NodeFeature> nodes;
  std::vector<GraphEdge> edges;

  std::size_t embedding_dim() const;
  /// Stacked node composites, n × (6 + embedding_dim).
  Eigen::MatrixXd feature_matrix() const { return feature_matrix(embedding_dim()); }
  Eigen::MatrixXd feature_matrix(std::size_t embedding_dim) const;
};

/// Evaluates every node pair once and keeps the gated edges.
DynamicGraph build_graph(std::int64_t frame_index, std::vector<NodeFeature> nodes, const GraphParams& params);

/// Replaces `prev` with the graph of `frame`: one node per detection, with
/// motion taken from `carryover[k]` for detection k (empty optional: first
/// sighting, zero motion). Nodes of objects absent from `frame` disappear.
DynamicGraph update_graph(const DynamicGraph& prev, const FrameDetections& frame,
                          std::span<const std::optional<PrevObservation>> carryover, const GraphParams& params);

enum class AdjacencyMode { Raw, Normalized };

AdjacencyMode parse_adjacency_mode(std::string_view s);
std::string_view adjacency_mode_name(AdjacencyMode m);
EdgeGate parse_edge_gate(std::string_view s);
std::string_view edge_gate_name(EdgeGate g);

struct AdjacencyMatrix {
  AdjacencyMode mode = AdjacencyMode::Normalized;
  Eigen::MatrixXd entries;

  Eigen::Index n() const { return entries.rows(); }
};

/// Raw: symmetric edge weights, zero diagonal. Normalized: RowNorm(A + I).
AdjacencyMatrix adjacency(const DynamicGraph& g, AdjacencyMode mode);

/// One JSONL line: {"frame": t, "nodes": [[...]], "edges": [[i, j, w], ...]}.
std::string graph_dump_line(const DynamicGraph& g);

}  // namespace graphtrack

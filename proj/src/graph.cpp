#include "graphtrack/graph.hpp"

#include <cmath>

#include <json.hpp>

#include "graphtrack/errors.hpp"
#include "vec_util.hpp"

namespace graphtrack {

Eigen::VectorXd NodeFeature::composite(std::size_t embedding_dim) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(6 + embedding_dim));
  for (int k = 0; k < 4; ++k) x[k] = spatial[k];
  x[4] = motion[0];
  x[5] = motion[1];
  if (appearance) {
    const auto m = std::min(embedding_dim, appearance->size());
    for (std::size_t k = 0; k < m; ++k) x[static_cast<Eigen::Index>(6 + k)] = (*appearance)[k];
  }
  return x;
}

NodeFeature node_feature(const Detection& det, const std::optional<PrevObservation>& prev) {
  NodeFeature n;
  n.spatial = {det.box.cx, det.box.cy, det.box.w, det.box.h};
  if (prev) {
    if (prev->frame_gap < 1) throw ConfigError("node_feature: frame_gap must be >= 1");
    const double gap = prev->frame_gap;
    n.motion = {(det.box.cx - prev->box.cx) / gap, (det.box.cy - prev->box.cy) / gap};
  }
  n.appearance = det.embedding;
  return n;
}

EdgeFactors edge_factors(const NodeFeature& a, const NodeFeature& b) {
  EdgeFactors f;
  f.distance = std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
  f.velocity_diff = std::hypot(a.motion[0] - b.motion[0], a.motion[1] - b.motion[1]);
  if (a.appearance && b.appearance) f.appearance_sim = detail::cosine(*a.appearance, *b.appearance);
  return f;
}

double edge_weight(const EdgeFactors& f, const EdgeWeightParams& p) {
  if (p.constant) return 1.0;
  double w = std::exp(-f.distance / p.sigma_d);
  if (p.use_velocity) w *= std::exp(-f.velocity_diff / p.sigma_v);
  if (p.use_appearance) w *= std::max(0.0, f.appearance_sim);
  return std::clamp(w, 0.0, 1.0);
}

void GraphParams::validate() const {
  if (!(tau_dist > 0.0)) throw ConfigError("tau_dist must be positive");
  if (!(tau_vel > 0.0)) throw ConfigError("tau_vel must be positive");
  if (!(weight.sigma_d > 0.0)) throw ConfigError("sigma_d must be positive");
  if (!(weight.sigma_v > 0.0)) throw ConfigError("sigma_v must be positive");
}

bool edge_gate(const EdgeFactors& f, const GraphParams& p) {
  const bool near = f.distance < p.tau_dist;
  const bool comoving = f.velocity_diff < p.tau_vel;
  return p.gate == EdgeGate::Or ? (near || comoving) : (near && comoving);
}

std::size_t DynamicGraph::embedding_dim() const {
  std::size_t d = 0;
  for (const auto& n : nodes) {
    if (n.appearance) d = std::max(d, n.appearance->size());
  }
  return d;
}

Eigen::MatrixXd DynamicGraph::feature_matrix(std::size_t dim) const {
  Eigen::MatrixXd h(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(6 + dim));
  for (std::size_t i = 0; i < nodes.size(); ++i) h.row(static_cast<Eigen::Index>(i)) = nodes[i].composite(dim);
  return h;
}

DynamicGraph build_graph(std::int64_t frame_index, std::vector<NodeFeature> nodes, const GraphParams& params) {
  DynamicGraph g;
  g.frame_index = frame_index;
  g.nodes = std::move(nodes);
  const auto n = g.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto f = edge_factors(g.nodes[i], g.nodes[j]);
      if (edge_gate(f, params)) g.edges.push_back({i, j, edge_weight(f, params.weight), f});
    }
  }
  return g;
}

DynamicGraph update_graph(const DynamicGraph& prev, const FrameDetections& frame,
                          std::span<const std::optional<PrevObservation>> carryover, const GraphParams& params) {
  params.validate();
  if (prev.frame_index >= 0 && frame.frame_index <= prev.frame_index)
    throw ConfigError("update_graph: frame " + std::to_string(frame.frame_index) + " does not follow frame " +
                      std::to_string(prev.frame_index));
  if (!carryover.empty() && carryover.size() != frame.detections.size())
    throw DimensionError("update_graph: carryover size does not match detection count");

  std::vector<NodeFeature> nodes;
  nodes.reserve(frame.detections.size());
  for (std::size_t k = 0; k < frame.detections.size(); ++k) {
    const auto& prev_obs = carryover.empty() ? std::optional<PrevObservation>{} : carryover[k];
    nodes.push_back(node_feature(frame.detections[k], prev_obs));
  }
  return build_graph(frame.frame_index, std::move(nodes), params);
}

AdjacencyMode parse_adjacency_mode(std::string_view s) {
  if (s == "raw") return AdjacencyMode::Raw;
  if (s == "normalized") return AdjacencyMode::Normalized;
  throw ConfigError("unknown adjacency mode '" + std::string(s) + "' (expected raw or normalized)");
}

std::string_view adjacency_mode_name(AdjacencyMode m) { return m == AdjacencyMode::Raw ? "raw" : "normalized"; }

EdgeGate parse_edge_gate(std::string_view s) {
  if (s == "or") return EdgeGate::Or;
  if (s == "and") return EdgeGate::And;
  throw ConfigError("unknown edge gate '" + std::string(s) + "' (expected and or or)");
}

std::string_view edge_gate_name(EdgeGate g) { return g == EdgeGate::Or ? "or" : "and"; }

AdjacencyMatrix adjacency(const DynamicGraph& g, AdjacencyMode mode) {
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  AdjacencyMatrix a{mode, Eigen::MatrixXd::Zero(n, n)};
  for (const auto& e : g.edges) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    a.entries(i, j) = e.weight;
    a.entries(j, i) = e.weight;
  }
  if (mode == AdjacencyMode::Normalized) {
    a.entries.diagonal().array() += 1.0;
    for (Eigen::Index i = 0; i < n; ++i) a.entries.row(i) /= a.entries.row(i).sum();
  }
  return a;
}

std::string graph_dump_line(const DynamicGraph& g) {
  nlohmann::ordered_json j;
  j["frame"] = g.frame_index;
  j["nodes"] = nlohmann::ordered_json::array();
  const auto dim = g.embedding_dim();
  for (const auto& n : g.nodes) {
    const auto x = n.composite(dim);
    j["nodes"].push_back(std::vector<double>(x.data(), x.data() + x.size()));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : g.edges) j["edges"].push_back({e.i, e.j, e.weight});
  return j.dump();
}

}  // namespace graphtrack

#include "graphtrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "graphtrack/errors.hpp"
#include "graphtrack/rng.hpp"
#include "vec_util.hpp"

namespace graphtrack {

void TrackerConfig::validate() const {
  if (conf_threshold < 0.0 || conf_threshold > 1.0) throw ConfigError("conf_threshold must lie in [0,1]");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("nms_iou must lie in (0,1]");
  if (!roi.valid()) throw ConfigError("roi must have positive area inside the unit square");
  if (!(max_box_size > 0.0)) throw ConfigError("max_box_size must be positive");
  graph.validate();
  if (!(tau_gate > 0.0)) throw ConfigError("tau_gate must be positive");
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  if (t_max < 0) throw ConfigError("t_max must be non-negative");
  if (embedding_alpha < 0.0 || embedding_alpha > 1.0) throw ConfigError("embedding_alpha must lie in [0,1]");
  if (velocity_alpha < 0.0 || velocity_alpha >= 1.0) throw ConfigError("velocity_alpha must lie in [0,1)");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims needs at least one layer");
  for (const int d : hidden_dims)
    if (d <= 0) throw ConfigError("hidden_dims entries must be positive");
}

BBox predicted_box(const Track& track, std::int64_t frame) {
  const double gap = static_cast<double>(frame - track.last_seen_frame);
  BBox b = track.last_box;
  b.cx += track.velocity[0] * gap;
  b.cy += track.velocity[1] * gap;
  return b;
}

double association_cost(const Track& track, const BBox& node_box, const Eigen::VectorXd& node_embedding,
                        const BBox& predicted, const CostParams& params) {
  const double overlap = iou(predicted, node_box);
  if (overlap <= 0.0 && std::hypot(predicted.cx - node_box.cx, predicted.cy - node_box.cy) > params.tau_gate)
    return std::numeric_limits<double>::infinity();
  double cost = 1.0 - overlap;
  if (params.beta > 0.0 && track.embedding.size() > 0 && node_embedding.size() == track.embedding.size()) {
    const double cos = detail::cosine({track.embedding.data(), static_cast<std::size_t>(track.embedding.size())},
                                      {node_embedding.data(), static_cast<std::size_t>(node_embedding.size())});
    cost += params.beta * (1.0 - cos);
  }
  return cost;
}

AssociationResult associate(const Eigen::MatrixXd& cost) {
  auto a = solve_assignment(cost);
  return {std::move(a.pairs), std::move(a.unmatched_rows), std::move(a.unmatched_cols)};
}

Tracker::Tracker(TrackerConfig config, std::optional<GnnParams> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  if (params_) {
    params_->validate();
    if (params_->input_dim() < 6) throw ConfigError("checkpoint input dimension must be at least 6");
    embedding_dim_ = static_cast<std::size_t>(params_->input_dim() - 6);
  }
}

FrameDetections Tracker::filter(const FrameDetections& frame) const {
  const auto gated = confidence_gate(frame, config_.conf_threshold);
  auto kept = nms_indices(gated.detections, config_.nms_iou);
  std::sort(kept.begin(), kept.end());
  FrameDetections survivors{frame.frame_index, {}};
  survivors.detections.reserve(kept.size());
  for (const auto k : kept) survivors.detections.push_back(gated.detections[k]);
  return clamp_box_size(apply_roi(survivors, config_.roi), config_.max_box_size);
}

void Tracker::ensure_params(std::size_t input_dim) {
  if (params_) {
    if (static_cast<std::size_t>(params_->input_dim()) != input_dim)
      throw ConfigError("GNN expects input dimension " + std::to_string(params_->input_dim()) + " but nodes have " +
                        std::to_string(input_dim));
    return;
  }
  std::vector<int> dims{static_cast<int>(input_dim)};
  dims.insert(dims.end(), config_.hidden_dims.begin(), config_.hidden_dims.end());
  params_ = init_params(dims, derive_seed(config_.seed, "gnn.init"));
}

FrameResult Tracker::step(const FrameDetections& frame) {
  const auto start = std::chrono::steady_clock::now();
  if (frame.frame_index <= state_.last_frame)
    throw ConfigError("frame " + std::to_string(frame.frame_index) + " arrived after frame " +
                      std::to_string(state_.last_frame));
  const auto t = frame.frame_index;
  auto filtered = filter(frame);
  const auto n = filtered.detections.size();
  auto& active = state_.active;
  const auto m = active.size();

  std::vector<BBox> predicted(m);
  for (std::size_t r = 0; r < m; ++r) predicted[r] = predicted_box(active[r], t);

  // Provisional geometry-only association supplies each node's previous position.
  std::vector<std::optional<PrevObservation>> carryover(n);
  if (config_.use_temporal && m > 0 && n > 0) {
    Eigen::MatrixXd geo(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd none;
    const CostParams geo_params{0.0, config_.tau_gate};
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c)
        geo(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            association_cost(active[r], filtered.detections[c].box, none, predicted[r], geo_params);
    for (const auto& [r, c] : solve_assignment(geo).pairs)
      carryover[c] = PrevObservation{active[r].last_box, static_cast<int>(t - active[r].last_seen_frame)};
  }

  auto graph = update_graph(state_.previous_graph, filtered, carryover, config_.graph);

  Eigen::MatrixXd embeddings;
  AdjacencyMatrix adj;
  Activations act;
  if (n > 0) {
    if (!embedding_dim_) embedding_dim_ = graph.embedding_dim();
    if (graph.embedding_dim() > *embedding_dim_)
      throw ConfigError("frame " + std::to_string(t) + " carries " + std::to_string(graph.embedding_dim()) +
                        "-dim embeddings but the GNN expects " + std::to_string(*embedding_dim_));
    ensure_params(6 + *embedding_dim_);
    adj = adjacency(graph, config_.adjacency);
    act = gcn_forward(graph.feature_matrix(*embedding_dim_), adj, *params_);
    embeddings = act.output();
  }

  Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const CostParams cost_params{config_.beta, config_.tau_gate};
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const Eigen::VectorXd node_emb = embeddings.row(static_cast<Eigen::Index>(c)).transpose();
      cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          association_cost(active[r], filtered.detections[c].box, node_emb, predicted[r], cost_params);
    }
  const auto assoc = associate(cost);

  if (keep_diagnostics_) {
    diagnostics_ = FrameDiagnostics{filtered, graph, adj, act, active, cost, {}};
  }

  std::vector<std::int64_t> node_track(n, -1);
  const double alpha = config_.embedding_alpha;
  for (const auto& [r, c] : assoc.matches) {
    auto& tr = active[r];
    const auto& det = filtered.detections[c];
    const double gap = static_cast<double>(t - tr.last_seen_frame);
    if (config_.use_temporal) {
      const std::array<double, 2> measured{(det.box.cx - tr.last_box.cx) / gap, (det.box.cy - tr.last_box.cy) / gap};
      // The first displacement is taken as is; later ones are blended into the running estimate.
      const double va = tr.hits > 1 ? config_.velocity_alpha : 0.0;
      tr.velocity = {va * tr.velocity[0] + (1.0 - va) * measured[0], va * tr.velocity[1] + (1.0 - va) * measured[1]};
    } else {
      tr.velocity = {0.0, 0.0};
    }
    tr.last_box = det.box;
    tr.class_id = det.class_id;
    const Eigen::VectorXd node_emb = embeddings.row(static_cast<Eigen::Index>(c)).transpose();
    if (tr.embedding.size() == node_emb.size()) {
      tr.embedding = alpha * tr.embedding + (1.0 - alpha) * node_emb;
    } else {
      tr.embedding = node_emb;
    }
    tr.last_seen_frame = t;
    tr.misses = 0;
    ++tr.hits;
    node_track[c] = tr.track_id;
  }

  std::vector<Track> still_active;
  still_active.reserve(m + assoc.unmatched_nodes.size());
  std::vector<char> matched(m, 0);
  for (const auto& [r, c] : assoc.matches) matched[r] = 1;
  for (std::size_t r = 0; r < m; ++r) {
    auto& tr = active[r];
    if (!matched[r]) {
      tr.misses = static_cast<int>(t - tr.last_seen_frame);
      if (tr.misses > config_.t_max) {
        state_.retired.push_back(std::move(tr));
        continue;
      }
    }
    still_active.push_back(std::move(tr));
  }
  for (const auto c : assoc.unmatched_nodes) {
    const auto& det = filtered.detections[c];
    Track tr;
    tr.track_id = state_.next_id++;
    tr.last_box = det.box;
    tr.class_id = det.class_id;
    tr.embedding = embeddings.row(static_cast<Eigen::Index>(c)).transpose();
    tr.first_frame = t;
    tr.last_seen_frame = t;
    node_track[c] = tr.track_id;
    still_active.push_back(std::move(tr));
  }
  active = std::move(still_active);
  state_.previous_graph = std::move(graph);
  state_.last_frame = t;

  FrameResult result;
  result.frame_index = t;
  result.tracks.reserve(n);
  for (std::size_t c = 0; c < n; ++c) result.tracks.push_back({node_track[c], std::move(filtered.detections[c])});
  if (diagnostics_ && keep_diagnostics_) diagnostics_->node_track_ids = node_track;
  result.processing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<FrameResult> run_tracker(const std::vector<FrameDetections>& frames, const TrackerConfig& config,
                                     const std::optional<GnnParams>& params) {
  Tracker tracker(config, params);
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(tracker.step(f));
  return out;
}

std::vector<FrameDetections> to_frames(const std::vector<FrameResult>& results) {
  std::vector<FrameDetections> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    FrameDetections f{r.frame_index, {}};
    f.detections.reserve(r.tracks.size());
    for (const auto& td : r.tracks) {
      Detection d = td.detection;
      d.id = td.track_id;
      f.detections.push_back(std::move(d));
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string tracks_csv(const std::vector<FrameResult>& results, const ImageSize& img) {
  return serialize_stream(to_frames(results), StreamFormat::MotCsv, img);
}

}  // namespace graphtrack

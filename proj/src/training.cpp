#include "graphtrack/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "graphtrack/errors.hpp"
#include "graphtrack/eval.hpp"

namespace graphtrack {

namespace {

struct LabeledFrame {
  std::int64_t frame_index = 0;
  std::vector<Detection> dets;            // gated detections
  std::vector<std::int64_t> object;       // gt object id per detection, -1 if unmatched
  std::vector<BBox> gt_box;               // matched gt box (valid only when object >= 0)
  std::vector<int> gt_class;
  DynamicGraph graph;
  AdjacencyMatrix adj;
};

Eigen::MatrixXd confidence_logits(std::span<const Detection> dets, int class_count) {
  Eigen::MatrixXd logits(static_cast<Eigen::Index>(dets.size()), class_count);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const double conf = std::clamp(dets[i].confidence, 1e-6, 1.0 - 1e-6);
    const double other = class_count > 1 ? std::log((1.0 - conf) / (class_count - 1)) : 0.0;
    for (int c = 0; c < class_count; ++c)
      logits(static_cast<Eigen::Index>(i), c) = c == dets[i].class_id ? std::log(conf) : other;
  }
  return logits;
}

}  // namespace

std::pair<std::size_t, int> stream_shape(const std::vector<FrameDetections>& stream) {
  std::size_t dim = 0;
  int classes = 1;
  for (const auto& f : stream)
    for (const auto& d : f.detections) {
      if (d.embedding) dim = std::max(dim, d.embedding->size());
      classes = std::max(classes, d.class_id + 1);
    }
  return {dim, classes};
}

std::vector<TrainingSample> make_training_samples(const std::vector<FrameDetections>& stream,
                                                  const std::vector<FrameDetections>& gt, const TrackerConfig& cfg,
                                                  std::size_t embedding_dim, int class_count) {
  cfg.validate();
  if (class_count < 1) throw ConfigError("class_count must be positive");
  std::map<std::int64_t, const FrameDetections*> gt_by_frame;
  for (const auto& f : gt) gt_by_frame[f.frame_index] = &f;

  std::vector<LabeledFrame> frames;
  frames.reserve(stream.size());
  std::map<std::int64_t, std::pair<BBox, std::int64_t>> last_seen;  // object -> (box, frame)
  for (const auto& f : stream) {
    LabeledFrame lf;
    lf.frame_index = f.frame_index;
    const auto gated = confidence_gate(f, cfg.conf_threshold);
    auto kept = nms_indices(gated.detections, cfg.nms_iou);
    std::sort(kept.begin(), kept.end());
    for (const auto k : kept) lf.dets.push_back(gated.detections[k]);
    for (auto& d : lf.dets)
      if (d.class_id >= class_count) throw ConfigError("detection class exceeds class_count");
    lf.object.assign(lf.dets.size(), -1);
    lf.gt_box.resize(lf.dets.size());
    lf.gt_class.assign(lf.dets.size(), 0);
    const auto git = gt_by_frame.find(f.frame_index);
    if (git != gt_by_frame.end()) {
      const auto& gd = git->second->detections;
      for (const auto& [g, d] : identity_matches(gd, lf.dets)) {
        if (!gd[g].id) throw CorrespondenceError("ground-truth records must carry ids");
        lf.object[d] = *gd[g].id;
        lf.gt_box[d] = gd[g].box;
        lf.gt_class[d] = gd[g].class_id;
      }
    }
    std::vector<NodeFeature> nodes;
    nodes.reserve(lf.dets.size());
    for (std::size_t k = 0; k < lf.dets.size(); ++k) {
      std::optional<PrevObservation> prev;
      if (cfg.use_temporal && lf.object[k] >= 0) {
        const auto it = last_seen.find(lf.object[k]);
        if (it != last_seen.end())
          prev = PrevObservation{it->second.first, static_cast<int>(f.frame_index - it->second.second)};
      }
      nodes.push_back(node_feature(lf.dets[k], prev));
    }
    for (std::size_t k = 0; k < lf.dets.size(); ++k)
      if (lf.object[k] >= 0) last_seen[lf.object[k]] = {lf.dets[k].box, f.frame_index};
    lf.graph = build_graph(f.frame_index, std::move(nodes), cfg.graph);
    lf.adj = adjacency(lf.graph, cfg.adjacency);
    frames.push_back(std::move(lf));
  }

  std::vector<TrainingSample> samples;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    const auto& a = frames[i];
    const auto& b = frames[i + 1];
    if (a.dets.empty() || b.dets.empty()) continue;
    TrainingSample s;
    s.h0_t = a.graph.feature_matrix(embedding_dim);
    s.adj_t = a.adj.entries;
    s.edges_t = edge_list(a.graph);
    s.h0_t1 = b.graph.feature_matrix(embedding_dim);
    s.adj_t1 = b.adj.entries;
    for (std::size_t p = 0; p < a.dets.size(); ++p) {
      if (a.object[p] < 0) continue;
      for (std::size_t q = 0; q < b.dets.size(); ++q)
        if (b.object[q] == a.object[p]) s.correspondence.emplace_back(p, q);
    }
    std::vector<Detection> matched;
    for (std::size_t p = 0; p < a.dets.size(); ++p) {
      if (a.object[p] < 0) continue;
      matched.push_back(a.dets[p]);
      s.detection.pred_boxes.push_back(a.dets[p].box);
      s.detection.gt_boxes.push_back(a.gt_box[p]);
      s.detection.gt_classes.push_back(a.gt_class[p]);
    }
    s.detection.logits = confidence_logits(matched, class_count);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace graphtrack

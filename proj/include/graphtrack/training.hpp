#pragma once

// Turns a detection stream plus ground truth into consecutive-graph training
// samples for the graph-convolution trainer.

#include <vector>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/gnn.hpp"
#include "graphtrack/tracker.hpp"

namespace graphtrack {

/// Detections are confidence-gated, paired with ground-truth objects
/// (class-agnostic IoU >= 0.5) and turned into graphs with the tracker's graph
/// settings; motion features come from the same object's detection in the
/// previous frame. Logits for the classification term are derived from the
/// ingested confidence: log(conf) for the detected class, log((1-conf)/(K-1))
/// elsewhere.
std::vector<TrainingSample> make_training_samples(const std::vector<FrameDetections>& stream,
                                                  const std::vector<FrameDetections>& gt, const TrackerConfig& cfg,
                                                  std::size_t embedding_dim, int class_count);

/// Embedding dimension and class count (max class id + 1) seen in a stream.
std::pair<std::size_t, int> stream_shape(const std::vector<FrameDetections>& stream);

}  // namespace graphtrack

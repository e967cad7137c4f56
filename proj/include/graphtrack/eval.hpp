#pragma once

// Detection and tracking metrics: greedy IoU matching, precision/recall,
// enveloped-trapezoid AP, mAP over IoU thresholds, trajectory errors and
// identity switches.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "graphtrack/detect_io.hpp"

namespace graphtrack {

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct ScoredPrediction {
  double confidence = 0.0;
  bool is_tp = false;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> pairs;
  std::vector<ScoredPrediction> scored;  // in prediction input order
};

/// Predictions in descending confidence (ties: lower index) each take the
/// highest-IoU unmatched same-class ground truth with IoU >= threshold.
MatchResult match_frame(std::span<const Detection> preds, std::span<const Detection> gts, double iou_threshold);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_by_convention = false;  // 0/0 -> 1
  bool recall_by_convention = false;     // 0/0 -> 1
};

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);
inline PrecisionRecall precision_recall(const MatchResult& m) { return precision_recall(m.tp, m.fp, m.fn); }

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};
using PrCurve = std::vector<PrPoint>;

/// One point per prediction after sorting by confidence (stable, descending).
PrCurve pr_curve(std::vector<ScoredPrediction> scored, std::size_t gt_count);

/// Monotone precision envelope, then trapezoidal area over recall starting
/// at (0, first enveloped precision). Returns 0 for an empty curve.
double average_precision(const PrCurve& curve);

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

struct MapReport {
  std::vector<int> classes;             // classes present in the ground truth
  std::vector<double> thresholds;
  std::vector<std::vector<double>> ap;  // [class][threshold]
  double map50 = 0.0;
  double map50_95 = 0.0;
};

/// Frames are aligned by frame_index; frames missing on one side count as empty.
MapReport map_over_thresholds(std::span<const FrameDetections> preds, std::span<const FrameDetections> gts,
                              std::span<const double> thresholds);

/// Class-agnostic greedy pairing (gt index, other index) by descending IoU,
/// ties to lower indices, IoU >= 0.5.
std::vector<std::pair<std::size_t, std::size_t>> identity_matches(std::span<const Detection> gts,
                                                                  std::span<const Detection> others);

struct TrajectoryErrors {
  double mae = 0.0;
  double rmse = 0.0;
  double mape_percent = 0.0;
  std::size_t samples = 0;
};

/// Pixel center errors from a list of (estimate, reference) center pairs.
TrajectoryErrors trajectory_errors_from_pairs(std::span<const std::array<double, 4>> est_ref_xy);

struct IdentityFrame {
  std::int64_t frame_index = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // (gt object id, track id), ascending gt
};

/// Per-frame gt <-> track pairing: a pairing from the previous frame is kept
/// while its IoU stays >= 0.5; the remaining boxes are paired by identity_matches.
/// Both files must carry ids (CorrespondenceError otherwise).
std::vector<IdentityFrame> identity_assignments(std::span<const FrameDetections> tracked,
                                                std::span<const FrameDetections> gt);

/// gt object id -> track id, chosen by majority over identity_assignments.
std::map<std::int64_t, std::int64_t> identity_correspondence(std::span<const FrameDetections> tracked,
                                                             std::span<const FrameDetections> gt);

/// Throws CorrespondenceError when no gt object can be paired with a track.
TrajectoryErrors trajectory_errors(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt,
                                   const ImageSize& img);

struct IdentityStats {
  std::size_t id_switches = 0;
  std::size_t transitions = 0;  // matched observations that had an earlier matched frame
  double association_accuracy() const {
    return transitions == 0 ? 1.0 : 1.0 - static_cast<double>(id_switches) / static_cast<double>(transitions);
  }
};

IdentityStats identity_stats(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt);
inline std::size_t id_switches(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt) {
  return identity_stats(tracked, gt).id_switches;
}

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  PrecisionRecall pr;
  MapReport map;
  TrajectoryErrors trajectory;
  IdentityStats identity;
  std::vector<std::string> notes;
};

EvalReport evaluate(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt,
                    const ImageSize& img);

std::string report_json(const EvalReport& r);
std::string report_csv(const EvalReport& r);

}  // namespace graphtrack

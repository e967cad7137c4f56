#pragma once

// Graph-convolution stack H(l+1) = ReLU(A H(l) W(l)), the detection and
// tracking losses, hand-written reverse-mode gradients and a plain
// gradient-descent trainer.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/graph.hpp"

namespace graphtrack {

struct GnnParams {
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is d_l × d_{l+1}

  std::size_t layer_count() const { return weights.size(); }
  /// d_0, d_1, ..., d_L.
  std::vector<int> dims() const;
  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().rows()); }
  int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().cols()); }
  /// Throws DimensionError on a broken chain, DivergenceError on non-finite entries.
  void validate() const;

  bool operator==(const GnnParams& o) const;
};

/// Uniform(-r, r) with r = sqrt(6 / (d_in + d_out)), drawn row-major per layer.
GnnParams init_params(std::span<const int> dims, std::uint64_t seed);

struct Activations {
  std::vector<Eigen::MatrixXd> h;           // H(0) .. H(L)
  std::vector<Eigen::MatrixXd> aggregated;  // A H(l), l = 0 .. L-1
  std::vector<Eigen::MatrixXd> pre;         // Z(l) = A H(l) W(l)

  const Eigen::MatrixXd& output() const { return h.back(); }
};

Activations gcn_forward(const Eigen::MatrixXd& h0, const Eigen::MatrixXd& a, const GnnParams& params);
inline Activations gcn_forward(const Eigen::MatrixXd& h0, const AdjacencyMatrix& a, const GnnParams& params) {
  return gcn_forward(h0, a.entries, params);
}

struct DetectionLoss {
  double bbox = 0.0;
  double cls = 0.0;
};

/// Mean L1 over the four box coordinates and mean softmax cross-entropy.
/// Rows of `logits` are class scores; pairs are matched 1:1 by position.
DetectionLoss detection_loss(std::span<const BBox> pred_boxes, const Eigen::MatrixXd& logits,
                             std::span<const BBox> gt_boxes, std::span<const int> gt_classes);

/// (node index at t, node index at t+1).
using Correspondence = std::vector<std::pair<std::size_t, std::size_t>>;
using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

EdgeList edge_list(const DynamicGraph& g);

struct TrackingLoss {
  double edge = 0.0;
  double temporal = 0.0;
  double total = 0.0;  // edge + lambda_reg * temporal
};

TrackingLoss tracking_loss(const Eigen::MatrixXd& emb_t, const EdgeList& edges_t, const Eigen::MatrixXd& emb_t1,
                           const Correspondence& correspondence, double lambda_reg);

double total_loss(double l_det, double l_track, double lambda_det, double lambda_track);

struct LossWeights {
  double lambda_det = 1.0;
  double lambda_track = 1.0;
  double lambda_reg = 0.1;

  bool operator==(const LossWeights&) const = default;
};

struct LossBreakdown {
  double l_bbox = 0.0;
  double l_cls = 0.0;
  double l_det = 0.0;
  double l_track_edge = 0.0;
  double l_track_temporal = 0.0;
  double l_track = 0.0;
  double l_total = 0.0;
  LossWeights weights;
};

struct DetectionSupervision {
  std::vector<BBox> pred_boxes;
  Eigen::MatrixXd logits;
  std::vector<BBox> gt_boxes;
  std::vector<int> gt_classes;
};

/// A consecutive graph pair with its supervision.
struct TrainingSample {
  Eigen::MatrixXd h0_t;
  Eigen::MatrixXd adj_t;
  EdgeList edges_t;
  Eigen::MatrixXd h0_t1;
  Eigen::MatrixXd adj_t1;
  Correspondence correspondence;
  DetectionSupervision detection;
};

LossBreakdown evaluate_loss(const TrainingSample& s, const GnnParams& params, const LossWeights& w);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;  // same shapes as GnnParams::weights
  LossBreakdown loss;
};

/// Exact gradient of l_total with respect to every W(l). The detection term
/// does not depend on W (predictions are ingested), so it contributes only
/// to the reported loss.
Gradients loss_gradients(const TrainingSample& s, const GnnParams& params, const LossWeights& w);

/// Batch mean of losses and gradients, reduced in sample order.
Gradients batch_gradients(std::span<const TrainingSample> batch, const GnnParams& params, const LossWeights& w);
LossBreakdown batch_loss(std::span<const TrainingSample> batch, const GnnParams& params, const LossWeights& w);

/// One plain gradient-descent step; returns the updated parameters and the
/// post-step batch loss. Throws DivergenceError if the loss is not finite.
std::pair<GnnParams, LossBreakdown> train_step(const GnnParams& params, std::span<const TrainingSample> batch,
                                               double lr, const LossWeights& w);

struct TrainOptions {
  double lr = 1e-3;
  double momentum = 0.0;
  bool halve_on_plateau = false;
  int plateau_patience = 5;
  LossWeights weights;
};

/// Gradient descent with optional heavy-ball momentum and lr halving when the
/// loss has not improved for `plateau_patience` steps.
class Trainer {
public:
  Trainer(GnnParams params, TrainOptions opts);

  LossBreakdown step(std::span<const TrainingSample> batch);

  const GnnParams& params() const { return params_; }
  double lr() const { return lr_; }

private:
  GnnParams params_;
  TrainOptions opts_;
  double lr_;
  std::vector<Eigen::MatrixXd> velocity_;
  double best_loss_;
  int since_best_ = 0;
};

std::string save_checkpoint(const GnnParams& params);
GnnParams load_checkpoint(std::string_view text);

}  // namespace graphtrack

#pragma once

// Class-activation attributions over activation stacks (K channel maps over
// Z units) and the interpretability metrics computed from them.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/gnn.hpp"

namespace graphtrack {

struct ActivationStack {
  Eigen::MatrixXd maps;        // K × Z, row k is channel k flattened
  std::vector<int> unit_shape;  // extents whose product is Z; {Z} for node maps
  std::string source;

  Eigen::Index channels() const { return maps.rows(); }
  Eigen::Index units() const { return maps.cols(); }
};

struct AttributionMap {
  std::vector<double> values;  // one per unit
  std::string method;
  int target = 0;
};

/// A scalar score y^c of an activation stack with exact first derivatives.
class ScoreFn {
public:
  virtual ~ScoreFn() = default;
  virtual double value(const ActivationStack& acts) const = 0;
  /// dy/dA, same shape as acts.maps.
  virtual Eigen::MatrixXd gradient(const ActivationStack& acts) const = 0;
};

/// Several class scores; the predicted class is the argmax (lowest index on ties).
class Classifier {
public:
  virtual ~Classifier() = default;
  virtual Eigen::VectorXd scores(const ActivationStack& acts) const = 0;
  int predict(const ActivationStack& acts) const;
};

/// y = sum_k,u W(k,u) A(k,u) + bias.
class LinearScore final : public ScoreFn {
public:
  explicit LinearScore(Eigen::MatrixXd weights, double bias = 0.0) : w_(std::move(weights)), bias_(bias) {}
  double value(const ActivationStack& acts) const override;
  Eigen::MatrixXd gradient(const ActivationStack& acts) const override;

private:
  Eigen::MatrixXd w_;
  double bias_;
};

class LinearClassifier final : public Classifier {
public:
  explicit LinearClassifier(std::vector<Eigen::MatrixXd> class_weights) : w_(std::move(class_weights)) {}
  Eigen::VectorXd scores(const ActivationStack& acts) const override;
  LinearScore class_score(int c) const { return LinearScore(w_.at(static_cast<std::size_t>(c))); }

private:
  std::vector<Eigen::MatrixXd> w_;
};

/// Association logit of one track for one node, as a function of the
/// penultimate GNN activations: y = -(1 - IoU) - beta * (1 - cos(e, f)),
/// where f is the node's row of ReLU(A H W_last) and e the track embedding.
/// The IoU term is constant with respect to the activations.
class AssociationScore final : public ScoreFn {
public:
  AssociationScore(Eigen::MatrixXd adjacency, Eigen::MatrixXd last_weight, Eigen::VectorXd track_embedding,
                   std::size_t node, double iou, double beta);
  double value(const ActivationStack& acts) const override;
  Eigen::MatrixXd gradient(const ActivationStack& acts) const override;

private:
  Eigen::RowVectorXd node_output(const ActivationStack& acts, Eigen::RowVectorXd* pre) const;

  Eigen::MatrixXd adj_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd track_;
  std::size_t node_;
  double iou_;
  double beta_;
};

/// Association scores of a node against every candidate track.
class AssociationClassifier final : public Classifier {
public:
  explicit AssociationClassifier(std::vector<AssociationScore> per_track) : scores_(std::move(per_track)) {}
  Eigen::VectorXd scores(const ActivationStack& acts) const override;

private:
  std::vector<AssociationScore> scores_;
};

/// Activation stack from layer activations H (n × d): channels are the d
/// columns, units the n nodes.
ActivationStack stack_from_layer(const Eigen::MatrixXd& h, std::string source);

AttributionMap grad_cam(const ActivationStack& acts, const Eigen::MatrixXd& grads);

/// Grad-CAM++ on S = exp(y): alpha = g^2 / (2 g^2 + sum_units(A) g^3) per unit,
/// channel weight = sum of alpha over the channel's units.
AttributionMap grad_cam_pp(const ActivationStack& acts, const ScoreFn& score);
/// Per-channel Grad-CAM++ weights (exposed for tests).
Eigen::VectorXd grad_cam_pp_weights(const ActivationStack& acts, const Eigen::MatrixXd& grads);

struct EigenCamResult {
  AttributionMap map;
  Eigen::VectorXd channel_direction;  // unit eigenvector of MᵀM
  double eigenvalue = 0.0;
  double residual = 0.0;   // ‖MᵀM v − λ v‖₂
  double gram_norm = 0.0;  // ‖MᵀM‖_F
  int iterations = 0;

  /// Residual within 1e-8 of the Gram matrix norm.
  bool accepted() const { return residual <= 1e-8 * gram_norm; }
};

/// M = acts.mapsᵀ (units × channels). Power iteration on the smaller Gram
/// matrix. Throws NumericError("no dominant direction") for a zero matrix.
EigenCamResult eigen_cam(const ActivationStack& acts);

enum class MaskMode { Zero, Mean };
MaskMode parse_mask_mode(std::string_view s);
std::string_view mask_mode_name(MaskMode m);

/// Copy of `acts` with the listed units masked in every channel.
ActivationStack mask_units(const ActivationStack& acts, std::span<const std::size_t> units, MaskMode mode);

/// Pearson correlation between the attribution and the leave-one-out score drop.
double faithfulness(const ScoreFn& score, const ActivationStack& acts, const AttributionMap& attribution,
                    MaskMode mode = MaskMode::Zero);

struct FlipCase {
  const Classifier* classifier = nullptr;
  ActivationStack acts;
  AttributionMap attribution;
};

/// Fraction of cases whose predicted class changes after masking the
/// floor(budget * Z) highest-attribution units.
double flipping(std::span<const FlipCase> cases, double budget, MaskMode mode = MaskMode::Zero);
double flipping(const Classifier& classifier, const ActivationStack& acts, const AttributionMap& attribution,
                double budget, MaskMode mode = MaskMode::Zero);

/// Shannon entropy (nats) of the L1-normalized positive part.
double complexity(const AttributionMap& attribution);

/// 100 * k / n for the smallest k whose top-k normalized mass reaches 0.8.
double comprehension80(const AttributionMap& attribution);

/// Units ordered by descending attribution, ties to the lower index.
std::vector<std::size_t> attribution_ranking(const AttributionMap& attribution);

struct ActivationFile {
  ActivationStack acts;
  std::optional<Eigen::MatrixXd> grads;
};

/// {"shape": [K, ...], "maps": [...], "grads": [...]?}; arrays may be flat or nested.
ActivationFile parse_activation_file(std::string_view text);
std::string activation_file_json(const ActivationStack& acts, const std::optional<Eigen::MatrixXd>& grads);

std::string attribution_json(const AttributionMap& map);
/// Binary-free ASCII PGM (P2); units laid out on `unit_shape` (last two extents), 16 px per unit.
std::string attribution_pgm(const AttributionMap& map, std::span<const int> unit_shape);

}  // namespace graphtrack

#include "graphtrack/gnn.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "graphtrack/errors.hpp"
#include "graphtrack/rng.hpp"

namespace graphtrack {

namespace {

void require_finite(const Eigen::MatrixXd& m, std::size_t layer, const char* what) {
  if (!m.allFinite())
    throw DivergenceError(std::string("non-finite ") + what + " at layer " + std::to_string(layer));
}

}  // namespace

std::vector<int> GnnParams::dims() const {
  std::vector<int> d;
  if (weights.empty()) return d;
  d.push_back(static_cast<int>(weights.front().rows()));
  for (const auto& w : weights) d.push_back(static_cast<int>(w.cols()));
  return d;
}

void GnnParams::validate() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (l > 0 && weights[l].rows() != weights[l - 1].cols())
      throw DimensionError("layer " + std::to_string(l) + ": input dim " + std::to_string(weights[l].rows()) +
                           " does not match previous output dim " + std::to_string(weights[l - 1].cols()));
    require_finite(weights[l], l, "weight");
  }
}

bool GnnParams::operator==(const GnnParams& o) const {
  if (weights.size() != o.weights.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != o.weights[l].rows() || weights[l].cols() != o.weights[l].cols()) return false;
    if (weights[l] != o.weights[l]) return false;
  }
  return true;
}

GnnParams init_params(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("a GNN needs at least one layer (two dims)");
  SplitMix64 rng(seed);
  GnnParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int din = dims[l];
    const int dout = dims[l + 1];
    if (din <= 0 || dout <= 0) throw ConfigError("layer dims must be positive");
    const double r = std::sqrt(6.0 / (din + dout));
    Eigen::MatrixXd w(din, dout);
    for (int i = 0; i < din; ++i)
      for (int j = 0; j < dout; ++j) w(i, j) = rng.uniform(-r, r);
    p.weights.push_back(std::move(w));
  }
  return p;
}

Activations gcn_forward(const Eigen::MatrixXd& h0, const Eigen::MatrixXd& a, const GnnParams& params) {
  if (a.rows() != a.cols() || a.rows() != h0.rows())
    throw DimensionError("adjacency is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " but features have " + std::to_string(h0.rows()) + " rows");
  Activations act;
  act.h.reserve(params.layer_count() + 1);
  act.h.push_back(h0);
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto& w = params.weights[l];
    if (act.h[l].cols() != w.rows())
      throw DimensionError("layer " + std::to_string(l) + ": features have " + std::to_string(act.h[l].cols()) +
                           " columns, weight expects " + std::to_string(w.rows()));
    act.aggregated.push_back(a * act.h[l]);
    act.pre.push_back(act.aggregated.back() * w);
    require_finite(act.pre.back(), l, "pre-activation");
    act.h.push_back(act.pre.back().cwiseMax(0.0));
  }
  return act;
}

DetectionLoss detection_loss(std::span<const BBox> pred_boxes, const Eigen::MatrixXd& logits,
                             std::span<const BBox> gt_boxes, std::span<const int> gt_classes) {
  DetectionLoss out;
  const auto n = pred_boxes.size();
  if (gt_boxes.size() != n || gt_classes.size() != n || static_cast<std::size_t>(logits.rows()) != n)
    throw DimensionError("detection_loss: predictions and ground truth must be matched 1:1");
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pred_boxes[i];
    const auto& g = gt_boxes[i];
    out.bbox += (std::abs(p.cx - g.cx) + std::abs(p.cy - g.cy) + std::abs(p.w - g.w) + std::abs(p.h - g.h)) / 4.0;

    const auto row = logits.row(static_cast<Eigen::Index>(i));
    const auto c = gt_classes[i];
    if (c < 0 || c >= row.size()) throw DimensionError("detection_loss: class index outside logit range");
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    out.cls += lse - row[c];
  }
  out.bbox /= static_cast<double>(n);
  out.cls /= static_cast<double>(n);
  return out;
}

EdgeList edge_list(const DynamicGraph& g) {
  EdgeList e;
  e.reserve(g.edges.size());
  for (const auto& edge : g.edges) e.emplace_back(edge.i, edge.j);
  return e;
}

TrackingLoss tracking_loss(const Eigen::MatrixXd& emb_t, const EdgeList& edges_t, const Eigen::MatrixXd& emb_t1,
                           const Correspondence& correspondence, double lambda_reg) {
  TrackingLoss out;
  for (const auto& [i, j] : edges_t)
    out.edge += (emb_t.row(static_cast<Eigen::Index>(i)) - emb_t.row(static_cast<Eigen::Index>(j))).squaredNorm();
  for (const auto& [i, j] : correspondence)
    out.temporal +=
        (emb_t1.row(static_cast<Eigen::Index>(j)) - emb_t.row(static_cast<Eigen::Index>(i))).squaredNorm();
  out.total = out.edge + lambda_reg * out.temporal;
  return out;
}

double total_loss(double l_det, double l_track, double lambda_det, double lambda_track) {
  return lambda_det * l_det + lambda_track * l_track;
}

namespace {

LossBreakdown assemble(const DetectionLoss& det, const TrackingLoss& trk, const LossWeights& w) {
  LossBreakdown b;
  b.weights = w;
  b.l_bbox = det.bbox;
  b.l_cls = det.cls;
  b.l_det = det.bbox + det.cls;
  b.l_track_edge = trk.edge;
  b.l_track_temporal = trk.temporal;
  b.l_track = trk.total;
  b.l_total = total_loss(b.l_det, b.l_track, w.lambda_det, w.lambda_track);
  return b;
}

DetectionLoss sample_detection_loss(const TrainingSample& s) {
  const auto& d = s.detection;
  return detection_loss(d.pred_boxes, d.logits, d.gt_boxes, d.gt_classes);
}

void backward(const Activations& act, const Eigen::MatrixXd& a, const GnnParams& params, Eigen::MatrixXd d_out,
              std::vector<Eigen::MatrixXd>& grads) {
  for (std::size_t l = params.layer_count(); l-- > 0;) {
    // ReLU subgradient is 0 at 0.
    const Eigen::MatrixXd dz = d_out.cwiseProduct((act.pre[l].array() > 0.0).cast<double>().matrix());
    grads[l].noalias() += act.aggregated[l].transpose() * dz;
    require_finite(grads[l], l, "gradient");
    if (l > 0) d_out = a.transpose() * (dz * params.weights[l].transpose());
  }
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b) {
  acc.l_bbox += b.l_bbox;
  acc.l_cls += b.l_cls;
  acc.l_det += b.l_det;
  acc.l_track_edge += b.l_track_edge;
  acc.l_track_temporal += b.l_track_temporal;
  acc.l_track += b.l_track;
  acc.l_total += b.l_total;
}

void scale(LossBreakdown& b, double s) {
  b.l_bbox *= s;
  b.l_cls *= s;
  b.l_det *= s;
  b.l_track_edge *= s;
  b.l_track_temporal *= s;
  b.l_track *= s;
  b.l_total *= s;
}

std::vector<Eigen::MatrixXd> zeros_like(const GnnParams& p) {
  std::vector<Eigen::MatrixXd> z;
  for (const auto& w : p.weights) z.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  return z;
}

}  // namespace

LossBreakdown evaluate_loss(const TrainingSample& s, const GnnParams& params, const LossWeights& w) {
  const auto act_t = gcn_forward(s.h0_t, s.adj_t, params);
  const auto act_t1 = gcn_forward(s.h0_t1, s.adj_t1, params);
  const auto trk = tracking_loss(act_t.output(), s.edges_t, act_t1.output(), s.correspondence, w.lambda_reg);
  return assemble(sample_detection_loss(s), trk, w);
}

Gradients loss_gradients(const TrainingSample& s, const GnnParams& params, const LossWeights& w) {
  const auto act_t = gcn_forward(s.h0_t, s.adj_t, params);
  const auto act_t1 = gcn_forward(s.h0_t1, s.adj_t1, params);
  const auto& e = act_t.output();
  const auto& f = act_t1.output();

  Gradients g;
  g.loss = assemble(sample_detection_loss(s),
                    tracking_loss(e, s.edges_t, f, s.correspondence, w.lambda_reg), w);

  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(e.rows(), e.cols());
  Eigen::MatrixXd df = Eigen::MatrixXd::Zero(f.rows(), f.cols());
  for (const auto& [i, j] : s.edges_t) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    const Eigen::RowVectorXd diff = 2.0 * (e.row(ii) - e.row(jj));
    de.row(ii) += diff;
    de.row(jj) -= diff;
  }
  for (const auto& [i, j] : s.correspondence) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    const Eigen::RowVectorXd diff = 2.0 * w.lambda_reg * (f.row(jj) - e.row(ii));
    df.row(jj) += diff;
    de.row(ii) -= diff;
  }
  de *= w.lambda_track;
  df *= w.lambda_track;

  g.weights = zeros_like(params);
  backward(act_t, s.adj_t, params, std::move(de), g.weights);
  backward(act_t1, s.adj_t1, params, std::move(df), g.weights);
  return g;
}

Gradients batch_gradients(std::span<const TrainingSample> batch, const GnnParams& params, const LossWeights& w) {
  Gradients out;
  out.weights = zeros_like(params);
  out.loss.weights = w;
  if (batch.empty()) return out;
  for (const auto& s : batch) {
    const auto g = loss_gradients(s, params, w);
    for (std::size_t l = 0; l < out.weights.size(); ++l) out.weights[l] += g.weights[l];
    accumulate(out.loss, g.loss);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& gw : out.weights) gw *= inv;
  scale(out.loss, inv);
  return out;
}

LossBreakdown batch_loss(std::span<const TrainingSample> batch, const GnnParams& params, const LossWeights& w) {
  LossBreakdown acc;
  acc.weights = w;
  if (batch.empty()) return acc;
  for (const auto& s : batch) accumulate(acc, evaluate_loss(s, params, w));
  scale(acc, 1.0 / static_cast<double>(batch.size()));
  return acc;
}

std::pair<GnnParams, LossBreakdown> train_step(const GnnParams& params, std::span<const TrainingSample> batch,
                                               double lr, const LossWeights& w) {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  const auto g = batch_gradients(batch, params, w);
  GnnParams next = params;
  for (std::size_t l = 0; l < next.weights.size(); ++l) next.weights[l] -= lr * g.weights[l];
  const auto loss = batch_loss(batch, next, w);
  if (!std::isfinite(loss.l_total)) throw DivergenceError("training diverged: l_total is not finite");
  return {std::move(next), loss};
}

Trainer::Trainer(GnnParams params, TrainOptions opts)
    : params_(std::move(params)),
      opts_(opts),
      lr_(opts.lr),
      velocity_(zeros_like(params_)),
      best_loss_(std::numeric_limits<double>::infinity()) {
  if (!(opts_.lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (opts_.momentum < 0.0 || opts_.momentum >= 1.0) throw ConfigError("momentum must lie in [0,1)");
}

LossBreakdown Trainer::step(std::span<const TrainingSample> batch) {
  const auto g = batch_gradients(batch, params_, opts_.weights);
  for (std::size_t l = 0; l < params_.weights.size(); ++l) {
    velocity_[l] = opts_.momentum * velocity_[l] + g.weights[l];
    params_.weights[l] -= lr_ * velocity_[l];
  }
  const auto loss = batch_loss(batch, params_, opts_.weights);
  if (!std::isfinite(loss.l_total)) throw DivergenceError("training diverged: l_total is not finite");
  if (loss.l_total < best_loss_) {
    best_loss_ = loss.l_total;
    since_best_ = 0;
  } else if (opts_.halve_on_plateau && ++since_best_ >= opts_.plateau_patience) {
    lr_ *= 0.5;
    since_best_ = 0;
  }
  return loss;
}

std::string save_checkpoint(const GnnParams& params) {
  nlohmann::ordered_json j;
  j["format"] = "graphtrack-gnn";
  j["version"] = 1;
  j["activation"] = "relu";
  j["dims"] = params.dims();
  j["weights"] = nlohmann::ordered_json::array();
  for (const auto& w : params.weights) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    j["weights"].push_back(std::move(flat));
  }
  return j.dump(1) + "\n";
}

GnnParams load_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "graphtrack-gnn") throw ParseError("checkpoint: unexpected format tag");
    if (j.at("version").get<int>() != 1) throw ParseError("checkpoint: unsupported version");
    if (j.at("activation").get<std::string>() != "relu") throw ParseError("checkpoint: only relu is supported");
    const auto dims = j.at("dims").get<std::vector<int>>();
    const auto& weights = j.at("weights");
    if (dims.size() < 2 || weights.size() != dims.size() - 1) throw ParseError("checkpoint: dims/weights mismatch");
    GnnParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const auto flat = weights[l].get<std::vector<double>>();
      if (dims[l] <= 0 || dims[l + 1] <= 0 ||
          flat.size() != static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l + 1]))
        throw ParseError("checkpoint: layer " + std::to_string(l) + " has the wrong number of weights");
      Eigen::MatrixXd w(dims[l], dims[l + 1]);
      std::size_t k = 0;
      for (int r = 0; r < dims[l]; ++r)
        for (int c = 0; c < dims[l + 1]; ++c) w(r, c) = flat[k++];
      p.weights.push_back(std::move(w));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace graphtrack

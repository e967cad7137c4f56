#include "graphtrack/explain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "graphtrack/errors.hpp"

namespace graphtrack {

namespace {

constexpr double kGuard = 1e-12;

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " does not match " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

AttributionMap relu_combination(const ActivationStack& acts, const Eigen::VectorXd& weights, const char* method) {
  const Eigen::RowVectorXd combined = weights.transpose() * acts.maps;
  AttributionMap out;
  out.method = method;
  out.values.resize(static_cast<std::size_t>(combined.size()));
  for (Eigen::Index u = 0; u < combined.size(); ++u) out.values[static_cast<std::size_t>(u)] = std::max(0.0, combined[u]);
  return out;
}

std::vector<double> positive_mass(const AttributionMap& a, const char* what) {
  std::vector<double> p(a.values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::max(0.0, a.values[i]);
    total += p[i];
  }
  if (!(total > 0.0)) throw NumericError(std::string(what) + ": attribution has zero mass");
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

int Classifier::predict(const ActivationStack& acts) const {
  const auto s = scores(acts);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;
  return static_cast<int>(best);
}

double LinearScore::value(const ActivationStack& acts) const {
  require_same_shape(w_, acts.maps, "LinearScore");
  return w_.cwiseProduct(acts.maps).sum() + bias_;
}

Eigen::MatrixXd LinearScore::gradient(const ActivationStack& acts) const {
  require_same_shape(w_, acts.maps, "LinearScore");
  return w_;
}

Eigen::VectorXd LinearClassifier::scores(const ActivationStack& acts) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(w_.size()));
  for (std::size_t c = 0; c < w_.size(); ++c) {
    require_same_shape(w_[c], acts.maps, "LinearClassifier");
    s[static_cast<Eigen::Index>(c)] = w_[c].cwiseProduct(acts.maps).sum();
  }
  return s;
}

AssociationScore::AssociationScore(Eigen::MatrixXd adjacency, Eigen::MatrixXd last_weight,
                                   Eigen::VectorXd track_embedding, std::size_t node, double iou, double beta)
    : adj_(std::move(adjacency)),
      w_(std::move(last_weight)),
      track_(std::move(track_embedding)),
      node_(node),
      iou_(iou),
      beta_(beta) {
  if (static_cast<Eigen::Index>(node_) >= adj_.rows()) throw DimensionError("AssociationScore: node out of range");
  if (track_.size() != w_.cols()) throw DimensionError("AssociationScore: track embedding size mismatch");
}

Eigen::RowVectorXd AssociationScore::node_output(const ActivationStack& acts, Eigen::RowVectorXd* pre) const {
  if (acts.units() != adj_.rows() || acts.channels() != w_.rows())
    throw DimensionError("AssociationScore: activation stack shape does not match the layer");
  // H = mapsᵀ (n × K); row `node` of A H W.
  const Eigen::RowVectorXd aggregated = adj_.row(static_cast<Eigen::Index>(node_)) * acts.maps.transpose();
  const Eigen::RowVectorXd z = aggregated * w_;
  if (pre) *pre = z;
  return z.cwiseMax(0.0);
}

double AssociationScore::value(const ActivationStack& acts) const {
  const auto f = node_output(acts, nullptr);
  const double nf = f.norm();
  const double ne = track_.norm();
  const double cos = (nf > 0.0 && ne > 0.0) ? f.dot(track_.transpose()) / (nf * ne) : 0.0;
  return -(1.0 - iou_) - beta_ * (1.0 - cos);
}

Eigen::MatrixXd AssociationScore::gradient(const ActivationStack& acts) const {
  Eigen::RowVectorXd z;
  const auto f = node_output(acts, &z);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(acts.channels(), acts.units());
  const double nf = f.norm();
  const double ne = track_.norm();
  if (!(nf > 0.0 && ne > 0.0) || beta_ == 0.0) return grad;
  const Eigen::RowVectorXd e = track_.transpose();
  const double cos = f.dot(e) / (nf * ne);
  // dy/df = beta * dcos/df
  const Eigen::RowVectorXd dcos_df = e / (nf * ne) - cos * f / (nf * nf);
  const Eigen::RowVectorXd dz = beta_ * dcos_df.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  const Eigen::RowVectorXd dh_row = dz * w_.transpose();  // 1 × K
  // dH(m, k) = A(node, m) * dh_row(k); maps is Hᵀ.
  grad = dh_row.transpose() * adj_.row(static_cast<Eigen::Index>(node_));
  return grad;
}

Eigen::VectorXd AssociationClassifier::scores(const ActivationStack& acts) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(scores_.size()));
  for (std::size_t k = 0; k < scores_.size(); ++k) s[static_cast<Eigen::Index>(k)] = scores_[k].value(acts);
  return s;
}

ActivationStack stack_from_layer(const Eigen::MatrixXd& h, std::string source) {
  return {h.transpose(), {static_cast<int>(h.rows())}, std::move(source)};
}

AttributionMap grad_cam(const ActivationStack& acts, const Eigen::MatrixXd& grads) {
  require_same_shape(acts.maps, grads, "grad_cam");
  if (acts.units() == 0) throw DimensionError("grad_cam: activation stack has no units");
  const Eigen::VectorXd alpha = grads.rowwise().mean();
  return relu_combination(acts, alpha, "grad-cam");
}

Eigen::VectorXd grad_cam_pp_weights(const ActivationStack& acts, const Eigen::MatrixXd& g) {
  require_same_shape(acts.maps, g, "grad_cam_pp");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(acts.channels());
  for (Eigen::Index k = 0; k < acts.channels(); ++k) {
    const double channel_sum = acts.maps.row(k).sum();
    for (Eigen::Index u = 0; u < acts.units(); ++u) {
      const double gu = g(k, u);
      const double g2 = gu * gu;
      const double den = 2.0 * g2 + channel_sum * g2 * gu;
      if (std::abs(den) > kGuard) w[k] += g2 / den;
    }
  }
  return w;
}

AttributionMap grad_cam_pp(const ActivationStack& acts, const ScoreFn& score) {
  const auto g = score.gradient(acts);
  return relu_combination(acts, grad_cam_pp_weights(acts, g), "grad-cam++");
}

EigenCamResult eigen_cam(const ActivationStack& acts) {
  const Eigen::MatrixXd m = acts.maps.transpose();  // units × channels
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) throw NumericError("no dominant direction");

  const bool channel_side = m.cols() <= m.rows();
  const Eigen::MatrixXd gram = channel_side ? Eigen::MatrixXd(m.transpose() * m) : Eigen::MatrixXd(m * m.transpose());
  const Eigen::Index k = gram.rows();

  auto power = [&](Eigen::VectorXd v, int& iters) {
    v.normalize();
    for (iters = 0; iters < 1000; ++iters) {
      Eigen::VectorXd next = gram * v;
      const double norm = next.norm();
      if (norm == 0.0) return v;
      next /= norm;
      const double delta = (next - v).norm();
      v = std::move(next);
      if (delta < 1e-10) {
        ++iters;
        break;
      }
    }
    return v;
  };

  // All-ones start; a second fixed start covers a dominant direction orthogonal to it.
  int iters_a = 0, iters_b = 0;
  Eigen::VectorXd va = power(Eigen::VectorXd::Ones(k), iters_a);
  Eigen::VectorXd alt(k);
  for (Eigen::Index i = 0; i < k; ++i) alt[i] = (i % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(i + 1);
  Eigen::VectorXd vb = power(alt, iters_b);
  const double la = va.dot(gram * va);
  const double lb = vb.dot(gram * vb);
  const bool use_a = la >= lb;
  const Eigen::VectorXd v = use_a ? va : vb;

  EigenCamResult r;
  r.iterations = use_a ? iters_a : iters_b;
  Eigen::VectorXd scores;
  if (channel_side) {
    r.channel_direction = v;
    scores = m * v;
  } else {
    scores = v;
    r.channel_direction = (m.transpose() * v).normalized();
  }
  const Eigen::MatrixXd channel_gram = channel_side ? gram : Eigen::MatrixXd(m.transpose() * m);
  r.eigenvalue = r.channel_direction.dot(channel_gram * r.channel_direction);
  r.residual = (channel_gram * r.channel_direction - r.eigenvalue * r.channel_direction).norm();
  r.gram_norm = channel_gram.norm();

  const double sn = scores.norm();
  if (!(sn > 0.0)) throw NumericError("no dominant direction");
  scores /= sn;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] != 0.0) {
      if (scores[i] < 0.0) scores = -scores;
      break;
    }
  }
  r.map.method = "eigen-cam";
  r.map.values.assign(scores.data(), scores.data() + scores.size());
  return r;
}

MaskMode parse_mask_mode(std::string_view s) {
  if (s == "zero") return MaskMode::Zero;
  if (s == "mean") return MaskMode::Mean;
  throw ConfigError("unknown mask mode '" + std::string(s) + "' (expected zero or mean)");
}

std::string_view mask_mode_name(MaskMode m) { return m == MaskMode::Zero ? "zero" : "mean"; }

ActivationStack mask_units(const ActivationStack& acts, std::span<const std::size_t> units, MaskMode mode) {
  ActivationStack out = acts;
  const Eigen::VectorXd fill =
      mode == MaskMode::Mean ? Eigen::VectorXd(acts.maps.rowwise().mean()) : Eigen::VectorXd::Zero(acts.channels());
  for (const auto u : units) out.maps.col(static_cast<Eigen::Index>(u)) = fill;
  return out;
}

double faithfulness(const ScoreFn& score, const ActivationStack& acts, const AttributionMap& attribution,
                    MaskMode mode) {
  const auto n = static_cast<std::size_t>(acts.units());
  if (attribution.values.size() != n) throw DimensionError("faithfulness: attribution size does not match units");
  const double base = score.value(acts);
  Eigen::VectorXd drop(static_cast<Eigen::Index>(n));
  Eigen::VectorXd attr(static_cast<Eigen::Index>(n));
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t one[] = {u};
    drop[static_cast<Eigen::Index>(u)] = base - score.value(mask_units(acts, one, mode));
    attr[static_cast<Eigen::Index>(u)] = attribution.values[u];
  }
  const Eigen::VectorXd dc = drop.array() - drop.mean();
  const Eigen::VectorXd ac = attr.array() - attr.mean();
  const double denom = dc.norm() * ac.norm();
  if (!(denom > 0.0)) throw NumericError("undefined correlation");
  return std::clamp(dc.dot(ac) / denom, -1.0, 1.0);
}

std::vector<std::size_t> attribution_ranking(const AttributionMap& attribution) {
  std::vector<std::size_t> idx(attribution.values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return attribution.values[a] > attribution.values[b]; });
  return idx;
}

double flipping(const Classifier& classifier, const ActivationStack& acts, const AttributionMap& attribution,
                double budget, MaskMode mode) {
  const FlipCase c{&classifier, acts, attribution};
  return flipping(std::span<const FlipCase>(&c, 1), budget, mode);
}

double flipping(std::span<const FlipCase> cases, double budget, MaskMode mode) {
  if (!(budget > 0.0 && budget <= 1.0)) throw ConfigError("flipping: budget must lie in (0,1]");
  if (cases.empty()) return 0.0;
  std::size_t flipped = 0;
  for (const auto& c : cases) {
    const auto n = static_cast<std::size_t>(c.acts.units());
    if (c.attribution.values.size() != n) throw DimensionError("flipping: attribution size does not match units");
    const auto k = static_cast<std::size_t>(std::floor(budget * static_cast<double>(n) + 1e-9));
    if (k == 0) continue;
    auto ranking = attribution_ranking(c.attribution);
    ranking.resize(k);
    const int before = c.classifier->predict(c.acts);
    const int after = c.classifier->predict(mask_units(c.acts, ranking, mode));
    if (before != after) ++flipped;
  }
  return static_cast<double>(flipped) / static_cast<double>(cases.size());
}

double complexity(const AttributionMap& attribution) {
  const auto p = positive_mass(attribution, "complexity");
  double h = 0.0;
  for (const double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(0.0, h);
}

double comprehension80(const AttributionMap& attribution) {
  auto p = positive_mass(attribution, "comprehension80");
  std::sort(p.begin(), p.end(), std::greater<>());
  double cum = 0.0;
  std::size_t k = 0;
  while (k < p.size()) {
    cum += p[k++];
    if (cum >= 0.8 - 1e-12) break;
  }
  return 100.0 * static_cast<double>(k) / static_cast<double>(p.size());
}

namespace {

void flatten_into(const nlohmann::json& j, std::vector<double>& out) {
  if (j.is_array()) {
    for (const auto& v : j) flatten_into(v, out);
  } else if (j.is_number()) {
    out.push_back(j.get<double>());
  } else {
    throw ParseError("activation file: arrays must contain only numbers");
  }
}

Eigen::MatrixXd to_matrix(const std::vector<double>& flat, Eigen::Index k, Eigen::Index z, const char* field) {
  if (flat.size() != static_cast<std::size_t>(k * z))
    throw ParseError(std::string("activation file: '") + field + "' has " + std::to_string(flat.size()) +
                     " values, shape needs " + std::to_string(k * z));
  Eigen::MatrixXd m(k, z);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < z; ++c) m(r, c) = flat[i++];
  return m;
}

std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

}  // namespace

ActivationFile parse_activation_file(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("activation file: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("shape") || !j.contains("maps"))
    throw ParseError("activation file: expected an object with 'shape' and 'maps'");
  std::vector<int> shape;
  try {
    shape = j.at("shape").get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("activation file: 'shape' must be an array of integers");
  }
  if (shape.size() < 2 || shape[0] < 1) throw ParseError("activation file: shape must be [K, n, ...] with K >= 1");
  Eigen::Index z = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) {
    if (shape[i] < 1) throw ParseError("activation file: extents must be positive");
    z *= shape[i];
  }
  std::vector<double> flat;
  flatten_into(j.at("maps"), flat);
  ActivationFile out;
  out.acts.maps = to_matrix(flat, shape[0], z, "maps");
  out.acts.unit_shape.assign(shape.begin() + 1, shape.end());
  out.acts.source = "file";
  if (j.contains("grads") && !j.at("grads").is_null()) {
    std::vector<double> g;
    flatten_into(j.at("grads"), g);
    out.grads = to_matrix(g, shape[0], z, "grads");
  }
  return out;
}

std::string activation_file_json(const ActivationStack& acts, const std::optional<Eigen::MatrixXd>& grads) {
  nlohmann::ordered_json j;
  std::vector<int> shape{static_cast<int>(acts.channels())};
  if (acts.unit_shape.empty()) {
    shape.push_back(static_cast<int>(acts.units()));
  } else {
    shape.insert(shape.end(), acts.unit_shape.begin(), acts.unit_shape.end());
  }
  j["shape"] = shape;
  j["maps"] = row_major(acts.maps);
  if (grads) j["grads"] = row_major(*grads);
  return j.dump() + "\n";
}

std::string attribution_json(const AttributionMap& map) {
  nlohmann::ordered_json j;
  j["method"] = map.method;
  j["target"] = map.target;
  j["values"] = map.values;
  return j.dump() + "\n";
}

std::string attribution_pgm(const AttributionMap& map, std::span<const int> unit_shape) {
  constexpr int kCell = 16;
  int rows = 1;
  int cols = static_cast<int>(map.values.size());
  if (unit_shape.size() >= 2) {
    rows = unit_shape[unit_shape.size() - 2];
    cols = unit_shape[unit_shape.size() - 1];
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != map.values.size()) {
      rows = 1;
      cols = static_cast<int>(map.values.size());
    }
  }
  double hi = 0.0;
  for (const double v : map.values) hi = std::max(hi, v);
  std::string out = "P2\n" + std::to_string(cols * kCell) + " " + std::to_string(rows * kCell) + "\n255\n";
  for (int r = 0; r < rows * kCell; ++r) {
    for (int c = 0; c < cols * kCell; ++c) {
      const double v = map.values[static_cast<std::size_t>((r / kCell) * cols + c / kCell)];
      const int level = hi > 0.0 ? static_cast<int>(std::lround(255.0 * std::max(0.0, v) / hi)) : 0;
      out += std::to_string(level);
      out += (c + 1 == cols * kCell) ? '\n' : ' ';
    }
  }
  return out;
}

}  // namespace graphtrack

#include <gtest/gtest.h>

#include <cmath>

#include "gnn_check.hpp"
#include "graphtrack/errors.hpp"
#include "graphtrack/gnn.hpp"

using namespace graphtrack;
using namespace graphtrack::testing;

namespace {

GnnParams identity_params(int d, int layers = 1) {
  GnnParams p;
  for (int l = 0; l < layers; ++l) p.weights.push_back(Eigen::MatrixXd::Identity(d, d));
  return p;
}

}  // namespace

TEST(GcnForward, IdentityCase) {
  Eigen::MatrixXd h(3, 2);
  h << 1, 2, 0, 3, 4, 0.5;
  const auto act = gcn_forward(h, Eigen::MatrixXd::Identity(3, 3), identity_params(2));
  EXPECT_EQ(act.output(), h);
}

TEST(GcnForward, NeighborSwap) {
  Eigen::MatrixXd a(2, 2), h = Eigen::MatrixXd::Identity(2, 2), want(2, 2);
  a << 0, 1, 1, 0;
  want << 0, 1, 1, 0;
  EXPECT_EQ(gcn_forward(h, a, identity_params(2)).output(), want);
}

TEST(GcnForward, ZeroAdjacency) {
  SplitMix64 rng(1);
  const auto h = random_matrix(rng, 4, 3);
  const auto p = init_params(std::vector<int>{3, 5, 2}, 9);
  const auto act = gcn_forward(h, Eigen::MatrixXd::Zero(4, 4), p);
  EXPECT_EQ(act.h[1], Eigen::MatrixXd::Zero(4, 5));
  EXPECT_EQ(act.output(), Eigen::MatrixXd::Zero(4, 2));
}

TEST(GcnForward, DimensionErrorsNameLayer) {
  const auto p = init_params(std::vector<int>{3, 4, 2}, 1);
  EXPECT_THROW(gcn_forward(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Identity(3, 3), p), DimensionError);
  try {
    gcn_forward(Eigen::MatrixXd::Ones(2, 5), Eigen::MatrixXd::Identity(2, 2), p);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
  GnnParams broken;
  broken.weights = {Eigen::MatrixXd::Ones(3, 4), Eigen::MatrixXd::Ones(3, 2)};
  EXPECT_THROW(broken.validate(), DimensionError);
}

TEST(GcnForward, NonNegativeAfterRelu) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto in = random_instance(seed);
    const auto act = gcn_forward(in.sample.h0_t, in.sample.adj_t, in.params);
    for (std::size_t l = 1; l < act.h.size(); ++l) EXPECT_GE(act.h[l].minCoeff(), 0.0);
  }
}

TEST(GcnForward, PermutationEquivariance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) EXPECT_LE(equivariance_gap(seed), 1e-12) << seed;
}

TEST(InitParams, ScaleAndDeterminism) {
  const std::vector<int> dims{6, 32, 32};
  const auto a = init_params(dims, 42);
  EXPECT_EQ(a, init_params(dims, 42));
  EXPECT_FALSE(a == init_params(dims, 43));
  EXPECT_LE(a.weights[0].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 38.0));
  EXPECT_LE(a.weights[1].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 64.0));
  EXPECT_EQ(a.dims(), dims);
  EXPECT_THROW(init_params(std::vector<int>{4}, 1), ConfigError);
}

TEST(DetectionLoss, Examples) {
  const std::vector<BBox> b{{0.5, 0.5, 0.2, 0.2}};
  const std::vector<int> c{0};
  Eigen::MatrixXd logits(1, 3);
  logits << 10, 0, 0;
  const auto perfect = detection_loss(b, logits, b, c);
  EXPECT_EQ(perfect.bbox, 0.0);
  EXPECT_NEAR(perfect.cls, -std::log(std::exp(10.0) / (std::exp(10.0) + 2.0)), 1e-12);

  const std::vector<BBox> shifted{{0.6, 0.6, 0.3, 0.3}};
  EXPECT_NEAR(detection_loss(shifted, logits, b, c).bbox, 0.1, 1e-12);

  for (int k = 1; k <= 5; ++k) {
    const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, k, 0.3);
    EXPECT_NEAR(detection_loss(b, u, b, std::vector<int>{k - 1}).cls, std::log(k), 1e-12);
  }
  const auto empty = detection_loss({}, Eigen::MatrixXd(0, 3), {}, {});
  EXPECT_EQ(empty.bbox, 0.0);
  EXPECT_EQ(empty.cls, 0.0);
}

TEST(TrackingLoss, Examples) {
  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(3, 2, 0.7);
  EXPECT_EQ(tracking_loss(same, {{0, 1}, {1, 2}}, same, {{0, 0}, {2, 1}}, 0.1).total, 0.0);

  Eigen::MatrixXd e(2, 2);
  e << 0, 0, 3, 4;
  EXPECT_EQ(tracking_loss(e, {{0, 1}}, e, {}, 0.1).edge, 25.0);

  Eigen::MatrixXd f(1, 2), g(1, 2);
  f << 0, 0;
  g << 1, 1;
  const auto t = tracking_loss(f, {}, g, {{0, 0}}, 0.1);
  EXPECT_EQ(t.temporal, 2.0);
  EXPECT_NEAR(t.total, 0.2, 1e-15);
}

TEST(TotalLoss, Examples) {
  EXPECT_EQ(total_loss(1, 1, 1, 1), 2.0);
  EXPECT_EQ(total_loss(0.7, 123.0, 1.5, 0.0), 0.7 * 1.5);
  EXPECT_NEAR(total_loss(0.4, 2.0, 1.0, 0.5), 1.4, 1e-15);
}

TEST(LossBreakdown, Identities) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto in = random_instance(seed);
    const auto b = evaluate_loss(in.sample, in.params, in.weights);
    EXPECT_EQ(b.l_det, b.l_bbox + b.l_cls);
    EXPECT_EQ(b.l_total, in.weights.lambda_det * b.l_det + in.weights.lambda_track * b.l_track);
    EXPECT_EQ(b.l_track, b.l_track_edge + in.weights.lambda_reg * b.l_track_temporal);
    EXPECT_GE(b.l_track, 0.0);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 25 && seed < 200; ++seed) {
    const auto r = check_gradients(random_instance(seed));
    if (r.kink) continue;
    ++checked;
    EXPECT_LT(r.max_rel, 1e-4) << "seed " << seed;
  }
  EXPECT_GE(checked, 20);
}

TEST(Gradients, ZeroInFlatRegion) {
  auto in = random_instance(3);
  // identical rows everywhere: every edge and drift term vanishes
  in.sample.h0_t = Eigen::MatrixXd::Constant(in.sample.h0_t.rows(), in.sample.h0_t.cols(), 0.4);
  in.sample.h0_t1 = Eigen::MatrixXd::Constant(in.sample.h0_t.rows(), in.sample.h0_t.cols(), 0.4);
  in.sample.adj_t1 = in.sample.adj_t = Eigen::MatrixXd::Identity(in.sample.h0_t.rows(), in.sample.h0_t.rows());
  in.sample.correspondence.clear();
  for (Eigen::Index i = 0; i < in.sample.h0_t.rows(); ++i) in.sample.correspondence.emplace_back(i, i);
  const auto g = loss_gradients(in.sample, in.params, in.weights);
  for (const auto& w : g.weights) EXPECT_EQ(w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, LinearInLambdaTrack) {
  const auto in = random_instance(11);
  auto w2 = in.weights;
  w2.lambda_track *= 2;
  const auto a = loss_gradients(in.sample, in.params, in.weights);
  const auto b = loss_gradients(in.sample, in.params, w2);
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    EXPECT_LE((b.weights[l] - 2.0 * a.weights[l]).cwiseAbs().maxCoeff(), 1e-12 * (1 + a.weights[l].norm()));
}

TEST(TrainStep, ZeroLearningRateKeepsParams) {
  const auto in = random_instance(2);
  const std::vector<TrainingSample> batch{in.sample};
  const auto [p, loss] = train_step(in.params, batch, 0.0, in.weights);
  EXPECT_EQ(p, in.params);
  EXPECT_EQ(loss.l_total, evaluate_loss(in.sample, in.params, in.weights).l_total);
}

TEST(TrainStep, ConvexToyMonotone) {
  // single linear layer, edge term only: l = sum ||(A H W)_i - (A H W)_j||^2, convex in W
  SplitMix64 rng(17);
  TrainingSample s;
  s.h0_t = random_matrix(rng, 5, 3, 0.1, 1.0);
  s.adj_t = Eigen::MatrixXd::Identity(5, 5);
  s.h0_t1 = s.h0_t;
  s.adj_t1 = s.adj_t;
  s.edges_t = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  s.detection.logits = Eigen::MatrixXd(0, 1);
  GnnParams p;
  p.weights = {random_matrix(rng, 3, 2, 0.1, 1.0)};  // positive inputs and weights keep ReLU in its linear part
  const LossWeights w{1.0, 1.0, 0.0};
  const std::vector<TrainingSample> batch{s};
  double prev = evaluate_loss(s, p, w).l_total;
  const double first = prev;
  for (int k = 0; k < 100; ++k) {
    auto [next, loss] = train_step(p, batch, 1e-3, w);
    EXPECT_LE(loss.l_total, prev + 1e-15);
    prev = loss.l_total;
    p = std::move(next);
  }
  EXPECT_LT(prev, first);
}

TEST(TrainStep, Deterministic) {
  const auto in = random_instance(5);
  const std::vector<TrainingSample> batch{in.sample, random_instance(6).sample};
  auto run = [&] {
    Trainer t(init_params(in.params.dims(), 77), TrainOptions{1e-2, 0.9, true, 2, in.weights});
    for (int k = 0; k < 20; ++k) t.step(std::span<const TrainingSample>(batch.data(), 1));
    return t.params();
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainStep, DivergenceGuard) {
  auto in = random_instance(1);
  const std::vector<TrainingSample> batch{in.sample};
  EXPECT_THROW(train_step(in.params, batch, 1e300, in.weights), DivergenceError);
}

TEST(Trainer, HalvesOnPlateau) {
  const auto in = random_instance(4);
  const std::vector<TrainingSample> batch{in.sample};
  Trainer t(in.params, TrainOptions{0.0, 0.0, true, 3, in.weights});
  for (int k = 0; k < 4; ++k) t.step(batch);
  EXPECT_EQ(t.lr(), 0.0);
  Trainer u(in.params, TrainOptions{1e-3, 0.0, true, 3, in.weights});
  EXPECT_THROW(Trainer(in.params, TrainOptions{1e-3, 1.0, false, 3, in.weights}), ConfigError);
}

TEST(Checkpoint, RoundTripExact) {
  const auto p = init_params(std::vector<int>{14, 32, 32}, 123);
  const auto text = save_checkpoint(p);
  EXPECT_EQ(load_checkpoint(text), p);
  EXPECT_EQ(save_checkpoint(load_checkpoint(text)), text);
}

TEST(Checkpoint, RejectsMalformed) {
  EXPECT_THROW(load_checkpoint("{"), ParseError);
  EXPECT_THROW(load_checkpoint(R"({"format":"x","version":1,"activation":"relu","dims":[1,1],"weights":[[1]]})"),
               ParseError);
  EXPECT_THROW(
      load_checkpoint(R"({"format":"graphtrack-gnn","version":1,"activation":"relu","dims":[2,1],"weights":[[1]]})"),
      ParseError);
  EXPECT_NO_THROW(load_checkpoint(
      R"({"format":"graphtrack-gnn","version":1,"activation":"relu","dims":[2,1],"weights":[[1,2]]})"));
}

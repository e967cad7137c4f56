#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "explain_check.hpp"
#include "gnn_check.hpp"
#include "graphtrack/errors.hpp"
#include "graphtrack/explain.hpp"

using namespace graphtrack;
using graphtrack::testing::random_matrix;

namespace {

ActivationStack stack(const Eigen::MatrixXd& maps) { return {maps, {static_cast<int>(maps.cols())}, "test"}; }

AttributionMap values(std::vector<double> v) {
  AttributionMap m;
  m.values = std::move(v);
  return m;
}

// Per-unit weight vector as a score on a one-channel stack.
LinearScore unit_score(const std::vector<double>& w) {
  return LinearScore(Eigen::Map<const Eigen::RowVectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
}

}  // namespace

TEST(GradCam, HandExampleTwoChannels) {
  Eigen::MatrixXd a(2, 2), g(2, 2);
  a << 1, 2, 3, 1;
  g << 1, 1, -1, -1;
  const auto m = grad_cam(stack(a), g);
  EXPECT_EQ(m.values, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(m.method, "grad-cam");
}

TEST(GradCam, SingleChannelAndZeroGradient) {
  Eigen::MatrixXd a(1, 4);
  a << 0.5, -1.0, 2.0, 0.0;
  const auto ones = grad_cam(stack(a), Eigen::MatrixXd::Ones(1, 4));
  EXPECT_EQ(ones.values, (std::vector<double>{0.5, 0.0, 2.0, 0.0}));
  const auto zero = grad_cam(stack(a), Eigen::MatrixXd::Zero(1, 4));
  for (const double v : zero.values) EXPECT_EQ(v, 0.0);
}

TEST(GradCam, ShapeMismatchThrows) {
  EXPECT_THROW(grad_cam(stack(Eigen::MatrixXd::Ones(2, 3)), Eigen::MatrixXd::Ones(3, 2)), DimensionError);
}

TEST(GradCam, LinearInGradients) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_matrix(rng, 3, 7);
    const auto g = random_matrix(rng, 3, 7);
    const double c = rng.uniform(0.1, 10.0);
    const auto base = grad_cam(stack(a), g);
    const auto scaled = grad_cam(stack(a), c * g);
    for (std::size_t u = 0; u < base.values.size(); ++u)
      EXPECT_NEAR(scaled.values[u], c * base.values[u], 1e-12 * (1 + c * base.values[u]));
  }
}

TEST(GradCamPP, SingleUnitClosedForm) {
  for (const double a : {0.3, 1.0, 2.5})
    for (const double g : {0.2, 1.0, 3.0}) {
      Eigen::MatrixXd maps(1, 1);
      maps << a;
      const LinearScore score(Eigen::MatrixXd::Constant(1, 1, g));
      const double alpha = g * g / (2 * g * g + a * g * g * g);
      const auto m = grad_cam_pp(stack(maps), score);
      ASSERT_EQ(m.values.size(), 1u);
      EXPECT_NEAR(m.values[0], alpha * a, 1e-15);
    }
}

TEST(GradCamPP, ZeroGradientGivesZeroMap) {
  SplitMix64 rng(8);
  const auto a = random_matrix(rng, 3, 5);
  const LinearScore score(Eigen::MatrixXd::Zero(3, 5));
  for (const double v : grad_cam_pp(stack(a), score).values) EXPECT_EQ(v, 0.0);
}

TEST(GradCamPP, IdenticalChannelsGetIdenticalWeights) {
  SplitMix64 rng(9);
  Eigen::MatrixXd a(2, 6), g(2, 6);
  a.row(0) = random_matrix(rng, 1, 6, 0.0, 1.0);
  a.row(1) = a.row(0);
  g.row(0) = random_matrix(rng, 1, 6);
  g.row(1) = g.row(0);
  const auto w = grad_cam_pp_weights(stack(a), g);
  EXPECT_EQ(w[0], w[1]);
}

TEST(Cam, OutputsNonNegative) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<Eigen::Index>(1 + rng.below(4));
    const auto z = static_cast<Eigen::Index>(1 + rng.below(9));
    const auto a = random_matrix(rng, k, z, -2.0, 2.0);
    const auto w = random_matrix(rng, k, z, -2.0, 2.0);
    const LinearScore score(w);
    for (const double v : grad_cam(stack(a), w).values) EXPECT_GE(v, 0.0);
    for (const double v : grad_cam_pp(stack(a), score).values) EXPECT_GE(v, 0.0);
  }
}

TEST(Cam, SpatiallyConstantGradientsAgreeInOrder) {
  // one gradient value shared by every channel and unit, channels with equal
  // sums: both methods weight all channels equally
  SplitMix64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd a = random_matrix(rng, 3, 8, 0.0, 1.0);
    for (Eigen::Index k = 0; k < a.rows(); ++k) a.row(k) *= 4.0 / a.row(k).sum();
    const double g = rng.uniform(0.1, 2.0);
    const Eigen::MatrixXd grads = Eigen::MatrixXd::Constant(3, 8, g);
    const auto cam = grad_cam(stack(a), grads);
    const auto pp = grad_cam_pp(stack(a), LinearScore(grads));
    EXPECT_EQ(attribution_ranking(cam), attribution_ranking(pp));
  }
  // a single channel is trivially a shared combination
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_matrix(rng, 1, 8, 0.0, 1.0);
    const Eigen::MatrixXd grads = Eigen::MatrixXd::Constant(1, 8, rng.uniform(0.1, 2.0));
    EXPECT_EQ(attribution_ranking(grad_cam(stack(a), grads)),
              attribution_ranking(grad_cam_pp(stack(a), LinearScore(grads))));
  }
}

TEST(EigenCam, RankOneRecoversDirection) {
  Eigen::VectorXd u(5), w(3);
  u << 1, -2, 0.5, 3, 1;
  w << 0.2, -1, 0.7;
  const Eigen::MatrixXd m = u * w.transpose();  // units × channels
  const auto r = eigen_cam(stack(m.transpose()));
  EXPECT_NEAR(std::abs(r.channel_direction.dot(w.normalized())), 1.0, 1e-12);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_TRUE(r.accepted());
  // projection is ±u normalized, sign fixed by the first component
  const Eigen::VectorXd un = u.normalized();
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(r.map.values[static_cast<std::size_t>(i)], un[i], 1e-10);
}

TEST(EigenCam, ScaleInvariant) {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(rng, 4, 9);
    const double c = rng.uniform(0.01, 100.0);
    const auto base = eigen_cam(stack(a));
    const auto scaled = eigen_cam(stack(c * a));
    EXPECT_EQ(attribution_ranking(base.map), attribution_ranking(scaled.map));
    for (std::size_t i = 0; i < base.map.values.size(); ++i)
      EXPECT_NEAR(base.map.values[i], scaled.map.values[i], 1e-8);
  }
}

TEST(EigenCam, MatchesDenseEigenSolver) {
  SplitMix64 rng(3);
  const Eigen::MatrixXd m = random_matrix(rng, 6, 4);  // units × channels
  const auto r = eigen_cam(stack(m.transpose()));
  const Eigen::MatrixXd gram = m.transpose() * m;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lambda = es.eigenvalues()[3];
  const Eigen::VectorXd v = es.eigenvectors().col(3);
  EXPECT_NEAR(r.eigenvalue, lambda, 1e-8 * lambda);
  EXPECT_NEAR(std::abs(r.channel_direction.dot(v)), 1.0, 1e-8);
  Eigen::VectorXd proj = m * v;
  proj.normalize();
  if (proj[0] < 0) proj = -proj;
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(r.map.values[static_cast<std::size_t>(i)], proj[i], 1e-8);
}

TEST(EigenCam, WideMatrixUsesUnitGram) {
  SplitMix64 rng(13);
  const Eigen::MatrixXd m = random_matrix(rng, 3, 7);  // fewer units than channels
  const auto r = eigen_cam(stack(m.transpose()));
  EXPECT_TRUE(r.accepted());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  EXPECT_NEAR(r.eigenvalue, es.eigenvalues().maxCoeff(), 1e-8 * es.eigenvalues().maxCoeff());
}

TEST(EigenCam, UnitNormAndSignConvention) {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = eigen_cam(stack(random_matrix(rng, 3, 6)));
    double norm = 0.0;
    for (const double v : r.map.values) norm += v * v;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    for (const double v : r.map.values)
      if (v != 0.0) {
        EXPECT_GT(v, 0.0);
        break;
      }
  }
}

TEST(EigenCam, ZeroMatrixThrows) {
  try {
    eigen_cam(stack(Eigen::MatrixXd::Zero(2, 3)));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("no dominant direction"), std::string::npos);
  }
}

TEST(Faithfulness, LinearModelAttributionCorrelatesPerfectly) {
  SplitMix64 rng(15);
  const auto a = random_matrix(rng, 3, 10, 0.0, 1.0);
  const auto w = random_matrix(rng, 3, 10, 0.1, 2.0);
  AttributionMap attr;
  for (Eigen::Index u = 0; u < 10; ++u) attr.values.push_back(w.col(u).dot(a.col(u)));
  EXPECT_NEAR(faithfulness(LinearScore(w), stack(a), attr), 1.0, 1e-9);
}

TEST(Faithfulness, AntiAlignedIsMinusOne) {
  Eigen::MatrixXd a(1, 2);
  a << 1.0, 1.0;
  const auto score = unit_score({3.0, 1.0});  // drops 3 and 1
  EXPECT_NEAR(faithfulness(score, stack(a), values({0.1, 0.9})), -1.0, 1e-12);
}

TEST(Faithfulness, RandomAttributionAveragesToZero) {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    SplitMix64 rng(seed);
    const auto a = random_matrix(rng, 2, 10, 0.0, 1.0);
    const auto w = random_matrix(rng, 2, 10, 0.1, 2.0);
    AttributionMap attr;
    for (int u = 0; u < 10; ++u) attr.values.push_back(rng.uniform());
    sum += faithfulness(LinearScore(w), stack(a), attr);
  }
  EXPECT_NEAR(sum / 1000.0, 0.0, 0.1);
}

TEST(Faithfulness, ConstantVectorsThrow) {
  Eigen::MatrixXd a(1, 3);
  a << 1, 2, 3;
  EXPECT_THROW(faithfulness(unit_score({1, 1, 1}), stack(a), values({1, 1, 1})), NumericError);
}

TEST(Flipping, TinyBudgetMasksNothing) {
  const auto c = graphtrack::testing::planted_case(1, 4, 200);
  EXPECT_EQ(flipping(c.classifier, c.acts, c.truth, 0.001), 0.0);
}

TEST(Flipping, DecisiveUnitFlips) {
  // class 1 depends only on unit 2; class 0 is a constant floor via unit 0
  Eigen::MatrixXd a(1, 4);
  a << 1.0, 1.0, 1.0, 1.0;
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(1, 4), w1 = Eigen::MatrixXd::Zero(1, 4);
  w0(0, 0) = 0.5;
  w1(0, 2) = 1.0;
  const LinearClassifier clf({w0, w1});
  ASSERT_EQ(clf.predict(stack(a)), 1);
  EXPECT_EQ(flipping(clf, stack(a), values({0, 0, 1, 0}), 0.25), 1.0);
  EXPECT_EQ(flipping(clf, stack(a), values({0, 1, 0, 0}), 0.25), 0.0);
}

TEST(Flipping, BudgetOutOfRangeThrows) {
  const auto c = graphtrack::testing::planted_case(2);
  EXPECT_THROW(flipping(c.classifier, c.acts, c.truth, 0.0), ConfigError);
  EXPECT_THROW(flipping(c.classifier, c.acts, c.truth, 1.5), ConfigError);
}

TEST(Flipping, RateWithinUnitInterval) {
  std::vector<graphtrack::testing::PlantedCase> cases;
  for (std::uint64_t s = 0; s < 10; ++s) cases.push_back(graphtrack::testing::planted_case(s));
  std::vector<FlipCase> flips;
  for (const auto& c : cases) flips.push_back({&c.classifier, c.acts, c.random});
  for (const double b : {0.05, 0.2, 0.5, 1.0}) {
    const double r = flipping(flips, b);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Planted, HarnessPredictsPlantedClass) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = graphtrack::testing::planted_case(seed);
    EXPECT_EQ(c.classifier.predict(c.acts), 1) << "seed " << seed;
    EXPECT_EQ(c.classifier.predict(mask_units(c.acts, c.planted, MaskMode::Zero)), 0) << "seed " << seed;
  }
}

TEST(Planted, GradCamBeatsRandomAttribution) {
  int faith_wins = 0, flip_wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto o = graphtrack::testing::planted_outcome(seed);
    faith_wins += o.faith_cam > o.faith_random;
    flip_wins += o.flip_truth >= o.flip_random;
  }
  EXPECT_GE(faith_wins, 18);
  EXPECT_GE(flip_wins, 18);
}

TEST(Complexity, Examples) {
  EXPECT_EQ(complexity(values({0, 0, 3, 0})), 0.0);
  EXPECT_NEAR(complexity(values({2, 2, 2, 2, 2})), std::log(5.0), 1e-12);
  EXPECT_NEAR(complexity(values({0.5, 0.25, 0.25})), 1.5 * std::numbers::ln2, 1e-12);
  EXPECT_THROW(complexity(values({0, 0})), NumericError);
}

TEST(Comprehension80, Examples) {
  std::vector<double> one_hot(10, 0.0);
  one_hot[4] = 1.0;
  EXPECT_DOUBLE_EQ(comprehension80(values(one_hot)), 10.0);
  EXPECT_DOUBLE_EQ(comprehension80(values(std::vector<double>(10, 0.3))), 80.0);
  EXPECT_DOUBLE_EQ(comprehension80(values({0.5, 0.3, 0.1, 0.1})), 50.0);
  EXPECT_THROW(comprehension80(values({0, 0, 0})), NumericError);
}

TEST(Metrics, BoundsOnRandomAttributions) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(20);
    AttributionMap m;
    for (std::uint64_t i = 0; i < n; ++i) m.values.push_back(rng.bernoulli(0.3) ? 0.0 : rng.uniform());
    m.values[rng.below(n)] = 0.5;
    const double h = complexity(m);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(n)) + 1e-12);
    const double c = comprehension80(m);
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, 100.0);
  }
}

TEST(Masking, ZeroAndMeanFill) {
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const std::size_t u[] = {1};
  const auto z = mask_units(stack(a), u, MaskMode::Zero);
  EXPECT_EQ(z.maps(0, 1), 0.0);
  EXPECT_EQ(z.maps(1, 1), 0.0);
  EXPECT_EQ(z.maps(0, 0), 1.0);
  const auto m = mask_units(stack(a), u, MaskMode::Mean);
  EXPECT_EQ(m.maps(0, 1), 2.0);
  EXPECT_EQ(m.maps(1, 1), 5.0);
  EXPECT_EQ(parse_mask_mode("mean"), MaskMode::Mean);
  EXPECT_THROW(parse_mask_mode("blur"), ConfigError);
}

TEST(AssociationScore, GradientMatchesFiniteDifferences) {
  SplitMix64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 5, k = 3, d = 4;
    const auto adj = graphtrack::testing::random_adjacency(rng, n, true);
    const auto w = random_matrix(rng, k, d);
    const Eigen::VectorXd e = random_matrix(rng, d, 1);
    const auto node = static_cast<std::size_t>(rng.below(n));
    const AssociationScore score(adj, w, e, node, 0.4, 0.8);
    const auto acts = stack(random_matrix(rng, k, n, 0.0, 1.0));
    // skip instances with a pre-activation next to the ReLU kink
    const Eigen::RowVectorXd z = adj.row(static_cast<Eigen::Index>(node)) * acts.maps.transpose() * w;
    if (z.cwiseAbs().minCoeff() < 1e-4 || (z.array() > 0).count() == 0) continue;
    const auto g = score.gradient(acts);
    constexpr double eps = 1e-6;
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        auto p = acts, m = acts;
        p.maps(i, j) += eps;
        m.maps(i, j) -= eps;
        const double fd = (score.value(p) - score.value(m)) / (2 * eps);
        EXPECT_NEAR(g(i, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(AssociationScore, ValueAtPerfectMatch) {
  // node output parallel to the track embedding: y = -(1 - IoU)
  Eigen::MatrixXd adj = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd maps(2, 2);
  maps << 1, 0, 2, 0;  // node 0 has H row (1, 2)
  Eigen::VectorXd e(2);
  e << 2, 4;
  const AssociationScore s(adj, w, e, 0, 0.75, 0.5);
  EXPECT_NEAR(s.value(stack(maps)), -0.25, 1e-15);
  EXPECT_THROW(AssociationScore(adj, w, e, 5, 0.5, 0.5), DimensionError);
}

TEST(ActivationFile, RoundTrip) {
  SplitMix64 rng(5);
  ActivationStack acts{random_matrix(rng, 3, 6), {2, 3}, "file"};
  const Eigen::MatrixXd grads = random_matrix(rng, 3, 6);
  const auto parsed = parse_activation_file(activation_file_json(acts, grads));
  EXPECT_EQ(parsed.acts.maps, acts.maps);
  EXPECT_EQ(parsed.acts.unit_shape, acts.unit_shape);
  ASSERT_TRUE(parsed.grads.has_value());
  EXPECT_EQ(*parsed.grads, grads);
  const auto no_grads = parse_activation_file(activation_file_json(acts, std::nullopt));
  EXPECT_FALSE(no_grads.grads.has_value());
}

TEST(ActivationFile, NestedArraysAccepted) {
  const auto f = parse_activation_file(R"({"shape":[2,2,2],"maps":[[[1,2],[3,4]],[[5,6],[7,8]]]})");
  ASSERT_EQ(f.acts.channels(), 2);
  ASSERT_EQ(f.acts.units(), 4);
  EXPECT_EQ(f.acts.maps(1, 2), 7.0);
}

TEST(ActivationFile, MalformedRejected) {
  EXPECT_THROW(parse_activation_file("{"), ParseError);
  EXPECT_THROW(parse_activation_file(R"({"maps":[1]})"), ParseError);
  EXPECT_THROW(parse_activation_file(R"({"shape":[2,2],"maps":[1,2,3]})"), ParseError);
  EXPECT_THROW(parse_activation_file(R"({"shape":[1,2],"maps":[1,"a"]})"), ParseError);
  EXPECT_THROW(parse_activation_file(R"({"shape":[0,2],"maps":[]})"), ParseError);
}

TEST(AttributionExport, JsonAndPgm) {
  AttributionMap m = values({0.0, 0.5, 1.0});
  m.method = "grad-cam";
  m.target = 2;
  EXPECT_EQ(attribution_json(m), "{\"method\":\"grad-cam\",\"target\":2,\"values\":[0.0,0.5,1.0]}\n");
  const int shape[] = {3};
  const auto pgm = attribution_pgm(m, shape);
  EXPECT_EQ(pgm.rfind("P2\n48 16\n255\n", 0), 0u);
  // first pixel row: 16 zeros, 16 × 128, 16 × 255
  const auto row_start = std::string("P2\n48 16\n255\n").size();
  const auto row = pgm.substr(row_start, pgm.find('\n', row_start) - row_start);
  EXPECT_EQ(row.substr(0, 2), "0 ");
  EXPECT_NE(row.find("128"), std::string::npos);
  EXPECT_EQ(row.substr(row.size() - 3), "255");
}

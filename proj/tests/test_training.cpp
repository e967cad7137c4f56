#include <gtest/gtest.h>

#include "graphtrack/errors.hpp"
#include "graphtrack/synth.hpp"
#include "graphtrack/training.hpp"

using namespace graphtrack;

TEST(Training, SamplesFromCleanStream) {
  const auto gt = generate(separated_preset(0, 10));
  const auto det = degrade(gt, DegradationConfig{});
  const auto [dim, classes] = stream_shape(det.frames);
  EXPECT_EQ(dim, 8u);
  EXPECT_EQ(classes, 1);
  TrackerConfig cfg;
  const auto samples = make_training_samples(det.frames, gt.frames, cfg, dim, classes);
  ASSERT_EQ(samples.size(), 9u);
  for (const auto& s : samples) {
    EXPECT_EQ(s.h0_t.rows(), 20);
    EXPECT_EQ(s.h0_t.cols(), s.h0_t1.cols());
    EXPECT_EQ(s.adj_t.rows(), 20);
    EXPECT_EQ(s.adj_t1.cols(), 20);
    // same object order in consecutive frames on a clean stream
    ASSERT_EQ(s.correspondence.size(), 20u);
    for (const auto& [p, q] : s.correspondence) EXPECT_EQ(p, q);
    EXPECT_EQ(s.detection.pred_boxes.size(), 20u);
    EXPECT_EQ(s.detection.logits.rows(), 20);
    EXPECT_EQ(s.detection.logits.cols(), 1);
    for (const auto& [i, j] : s.edges_t) EXPECT_LT(i, j);
  }
}

TEST(Training, UnmatchedDetectionsHaveNoCorrespondence) {
  const auto gt = generate(crossing_suite_preset(0));
  const auto det = degrade(gt, crossing_suite_degradation(0));
  const auto [dim, classes] = stream_shape(det.frames);
  const auto samples = make_training_samples(det.frames, gt.frames, TrackerConfig{}, dim, classes);
  ASSERT_FALSE(samples.empty());
  for (const auto& s : samples) {
    EXPECT_LE(s.correspondence.size(), static_cast<std::size_t>(std::min(s.h0_t.rows(), s.h0_t1.rows())));
    for (const auto& [p, q] : s.correspondence) {
      EXPECT_LT(p, s.h0_t.rows());
      EXPECT_LT(q, s.h0_t1.rows());
    }
  }
}

TEST(Training, GroundTruthWithoutIdsRejected) {
  const auto gt = generate(crossing_preset(0));
  auto stripped = gt.frames;
  for (auto& f : stripped)
    for (auto& d : f.detections) d.id.reset();
  const auto det = degrade(gt, DegradationConfig{});
  EXPECT_THROW(make_training_samples(det.frames, stripped, TrackerConfig{}, 8, 1), CorrespondenceError);
}

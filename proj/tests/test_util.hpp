#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "graphtrack/detect_io.hpp"
#include "graphtrack/rng.hpp"

namespace graphtrack::testing {

inline Detection make_det(double cx, double cy, double w, double h, double conf = 0.9, int cls = 0) {
  Detection d;
  d.box = {cx, cy, w, h};
  d.confidence = conf;
  d.class_id = cls;
  return d;
}

inline Detection random_det(SplitMix64& rng, int classes = 1, std::size_t emb_dim = 0) {
  Detection d;
  d.box = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2)};
  d.confidence = rng.uniform(0.05, 1.0);
  d.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  if (emb_dim > 0) {
    std::vector<double> e(emb_dim);
    for (auto& v : e) v = rng.normal();
    d.embedding = e;
  }
  return d;
}

inline std::vector<FrameDetections> random_stream(std::uint64_t seed, int frames, int max_dets, int classes = 1,
                                                  std::size_t emb_dim = 0) {
  SplitMix64 rng(seed);
  std::vector<FrameDetections> out;
  for (int t = 0; t < frames; ++t) {
    FrameDetections f{t, {}};
    const auto n = rng.below(static_cast<std::uint64_t>(max_dets) + 1);
    for (std::uint64_t k = 0; k < n; ++k) f.detections.push_back(random_det(rng, classes, emb_dim));
    out.push_back(std::move(f));
  }
  return out;
}

// Ground truth over two classes plus jittered predictions, missed boxes and
// false positives; confidences are drawn from a coarse grid so ties occur.
struct CraftedApCase {
  std::vector<FrameDetections> preds;
  std::vector<FrameDetections> gts;
};

inline CraftedApCase crafted_ap_case(std::uint64_t seed, int frames = 4, int max_objects = 4) {
  SplitMix64 rng(seed);
  CraftedApCase c;
  for (int t = 0; t < frames; ++t) {
    FrameDetections g{t, {}}, p{t, {}};
    const auto n = rng.below(static_cast<std::uint64_t>(max_objects) + 1);
    for (std::uint64_t k = 0; k < n; ++k) {
      auto d = random_det(rng, 2);
      d.confidence = 1.0;
      g.detections.push_back(d);
      if (rng.bernoulli(0.2)) continue;  // missed
      auto q = d;
      q.box.cx += rng.uniform(-0.3, 0.3) * d.box.w;
      q.box.cy += rng.uniform(-0.3, 0.3) * d.box.h;
      q.box.w *= rng.uniform(0.8, 1.25);
      q.confidence = 0.1 * static_cast<double>(1 + rng.below(10));
      p.detections.push_back(q);
    }
    const auto fps = rng.below(3);
    for (std::uint64_t k = 0; k < fps; ++k) {
      auto d = random_det(rng, 2);
      d.confidence = 0.1 * static_cast<double>(1 + rng.below(10));
      p.detections.push_back(d);
    }
    c.gts.push_back(std::move(g));
    c.preds.push_back(std::move(p));
  }
  return c;
}

}  // namespace graphtrack::testing

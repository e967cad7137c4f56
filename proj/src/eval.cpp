#include "graphtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "graphtrack/errors.hpp"
#include "text_util.hpp"

namespace graphtrack {

namespace {

struct AlignedFrame {
  std::int64_t frame = 0;
  std::span<const Detection> a;
  std::span<const Detection> b;
};

std::vector<AlignedFrame> align(std::span<const FrameDetections> a, std::span<const FrameDetections> b) {
  std::map<std::int64_t, AlignedFrame> by;
  for (const auto& f : a) {
    auto& slot = by[f.frame_index];
    slot.frame = f.frame_index;
    slot.a = f.detections;
  }
  for (const auto& f : b) {
    auto& slot = by[f.frame_index];
    slot.frame = f.frame_index;
    slot.b = f.detections;
  }
  std::vector<AlignedFrame> out;
  out.reserve(by.size());
  for (auto& [t, f] : by) out.push_back(f);
  return out;
}

std::int64_t require_id(const Detection& d, const char* side) {
  if (!d.id) throw CorrespondenceError(std::string(side) + " records must carry ids");
  return *d.id;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> identity_matches(std::span<const Detection> gts,
                                                                  std::span<const Detection> trk) {
  struct Cand {
    double iou;
    std::size_t g, t;
  };
  std::vector<Cand> cands;
  for (std::size_t g = 0; g < gts.size(); ++g)
    for (std::size_t t = 0; t < trk.size(); ++t) {
      const double v = iou(gts[g].box, trk[t].box);
      if (v >= 0.5) cands.push_back({v, g, t});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.iou > y.iou; });
  std::vector<char> gu(gts.size(), 0), tu(trk.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : cands) {
    if (gu[c.g] || tu[c.t]) continue;
    gu[c.g] = tu[c.t] = 1;
    out.emplace_back(c.g, c.t);
  }
  return out;
}

MatchResult match_frame(std::span<const Detection> preds, std::span<const Detection> gts, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ConfigError("match_frame: threshold must lie in (0,1]");
  MatchResult r;
  r.scored.resize(preds.size());
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].confidence > preds[b].confidence; });
  std::vector<char> gt_used(gts.size(), 0);
  for (const auto p : order) {
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].class_id != preds[p].class_id) continue;
      const double v = iou(preds[p].box, gts[g].box);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_g = g;
      }
    }
    r.scored[p].confidence = preds[p].confidence;
    if (best >= 0.0) {
      gt_used[best_g] = 1;
      r.pairs.push_back({p, best_g, best});
      r.scored[p].is_tp = true;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = gts.size() - r.tp;
  return r;
}

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrecisionRecall pr;
  if (tp + fp == 0) {
    pr.precision = 1.0;
    pr.precision_by_convention = true;
  } else {
    pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    pr.recall = 1.0;
    pr.recall_by_convention = true;
  } else {
    pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return pr;
}

PrCurve pr_curve(std::vector<ScoredPrediction> scored, std::size_t gt_count) {
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredPrediction& a, const ScoredPrediction& b) { return a.confidence > b.confidence; });
  PrCurve curve;
  curve.reserve(scored.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < scored.size(); ++k) {
    if (scored[k].is_tp) ++tp;
    const double recall = gt_count == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(gt_count);
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(k + 1)});
  }
  return curve;
}

double average_precision(const PrCurve& curve) {
  if (curve.empty()) return 0.0;
  std::vector<double> env(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    env[i] = running;
  }
  // Trapezoids over (0, env[0]), (r_1, env[0]), ..., (r_N, env[N-1]), regrouped by recall
  // value (summation by parts) so that a flat envelope integrates exactly to r_N * p.
  const std::size_t n = curve.size();
  auto p = [&](std::size_t k) { return k == 0 ? env.front() : env[k - 1]; };  // k = 0 .. n
  double area = 0.0;
  for (std::size_t k = 1; k < n; ++k) area += curve[k - 1].recall * 0.5 * (p(k - 1) - p(k + 1));
  area += curve[n - 1].recall * 0.5 * (p(n - 1) + p(n));
  return std::clamp(area, 0.0, 1.0);
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
  return t;
}

MapReport map_over_thresholds(std::span<const FrameDetections> preds, std::span<const FrameDetections> gts,
                              std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("map_over_thresholds: thresholds must be non-empty");
  MapReport rep;
  rep.thresholds.assign(thresholds.begin(), thresholds.end());
  std::set<int> classes;
  for (const auto& f : gts)
    for (const auto& d : f.detections) classes.insert(d.class_id);
  rep.classes.assign(classes.begin(), classes.end());
  const auto frames = align(preds, gts);

  std::map<int, std::size_t> class_row;
  for (std::size_t i = 0; i < rep.classes.size(); ++i) class_row[rep.classes[i]] = i;
  rep.ap.assign(rep.classes.size(), std::vector<double>(thresholds.size(), 0.0));

  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::vector<std::vector<ScoredPrediction>> scored(rep.classes.size());
    std::vector<std::size_t> gt_count(rep.classes.size(), 0);
    for (const auto& f : frames) {
      const auto m = match_frame(f.a, f.b, thresholds[ti]);
      for (std::size_t p = 0; p < f.a.size(); ++p) {
        const auto it = class_row.find(f.a[p].class_id);
        if (it != class_row.end()) scored[it->second].push_back(m.scored[p]);
      }
      for (const auto& g : f.b) ++gt_count[class_row.at(g.class_id)];
    }
    for (std::size_t c = 0; c < rep.classes.size(); ++c)
      rep.ap[c][ti] = average_precision(pr_curve(std::move(scored[c]), gt_count[c]));
  }

  if (rep.classes.empty()) {
    bool any_pred = false;
    for (const auto& f : preds) any_pred = any_pred || !f.detections.empty();
    rep.map50 = rep.map50_95 = any_pred ? 0.0 : 1.0;
    return rep;
  }
  std::size_t t50 = 0;
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti)
    if (std::abs(thresholds[ti] - 0.5) < 1e-12) {
      t50 = ti;
      break;
    }
  double sum50 = 0.0, sum_all = 0.0;
  for (std::size_t c = 0; c < rep.classes.size(); ++c) {
    sum50 += rep.ap[c][t50];
    double row = 0.0;
    for (const double v : rep.ap[c]) row += v;
    sum_all += row / static_cast<double>(thresholds.size());
  }
  rep.map50 = sum50 / static_cast<double>(rep.classes.size());
  rep.map50_95 = sum_all / static_cast<double>(rep.classes.size());
  return rep;
}

TrajectoryErrors trajectory_errors_from_pairs(std::span<const std::array<double, 4>> est_ref_xy) {
  TrajectoryErrors e;
  if (est_ref_xy.empty()) return e;
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  for (const auto& p : est_ref_xy) {
    const double err = std::hypot(p[0] - p[2], p[1] - p[3]);
    const double ref = std::max(std::hypot(p[2], p[3]), 1e-6);
    abs_sum += err;
    sq_sum += err * err;
    pct_sum += 100.0 * err / ref;
  }
  const double n = static_cast<double>(est_ref_xy.size());
  e.mae = abs_sum / n;
  e.rmse = std::sqrt(sq_sum / n);
  e.mape_percent = pct_sum / n;
  e.samples = est_ref_xy.size();
  return e;
}

std::vector<IdentityFrame> identity_assignments(std::span<const FrameDetections> tracked,
                                                std::span<const FrameDetections> gt) {
  std::vector<IdentityFrame> out;
  std::map<std::int64_t, std::int64_t> previous;  // gt id -> track id in its last paired frame
  for (const auto& f : align(tracked, gt)) {
    IdentityFrame frame{f.frame, {}};
    std::vector<char> gu(f.b.size(), 0), tu(f.a.size(), 0);
    // Pairings from the previous frame survive while they still overlap enough.
    for (std::size_t g = 0; g < f.b.size(); ++g) {
      const auto it = previous.find(require_id(f.b[g], "ground-truth"));
      if (it == previous.end()) continue;
      for (std::size_t t = 0; t < f.a.size(); ++t) {
        if (tu[t] || require_id(f.a[t], "tracked") != it->second) continue;
        if (iou(f.b[g].box, f.a[t].box) >= 0.5) {
          gu[g] = tu[t] = 1;
          frame.pairs.emplace_back(g, t);
        }
        break;
      }
    }
    std::vector<Detection> rest_g, rest_t;
    std::vector<std::size_t> gi, ti;
    for (std::size_t g = 0; g < f.b.size(); ++g)
      if (!gu[g]) {
        rest_g.push_back(f.b[g]);
        gi.push_back(g);
      }
    for (std::size_t t = 0; t < f.a.size(); ++t)
      if (!tu[t]) {
        rest_t.push_back(f.a[t]);
        ti.push_back(t);
      }
    for (const auto& [g, t] : identity_matches(rest_g, rest_t)) frame.pairs.emplace_back(gi[g], ti[t]);
    std::sort(frame.pairs.begin(), frame.pairs.end());
    for (auto& [g, t] : frame.pairs) {
      const auto gid = require_id(f.b[g], "ground-truth");
      const auto tid = require_id(f.a[t], "tracked");
      previous[gid] = tid;
      g = static_cast<std::size_t>(gid);
      t = static_cast<std::size_t>(tid);
    }
    out.push_back(std::move(frame));
  }
  return out;
}

std::map<std::int64_t, std::int64_t> identity_correspondence(std::span<const FrameDetections> tracked,
                                                             std::span<const FrameDetections> gt) {
  std::map<std::int64_t, std::map<std::int64_t, std::size_t>> votes;
  for (const auto& f : identity_assignments(tracked, gt))
    for (const auto& [gid, tid] : f.pairs) ++votes[gid][tid];
  std::map<std::int64_t, std::int64_t> out;
  for (const auto& [gid, tally] : votes) {
    std::int64_t best = 0;
    std::size_t best_n = 0;
    for (const auto& [tid, n] : tally)
      if (n > best_n) {
        best = tid;
        best_n = n;
      }
    out[gid] = best;
  }
  return out;
}

TrajectoryErrors trajectory_errors(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt,
                                   const ImageSize& img) {
  const auto corr = identity_correspondence(tracked, gt);
  std::vector<std::array<double, 4>> pairs;
  for (const auto& f : align(tracked, gt)) {
    for (const auto& g : f.b) {
      const auto it = corr.find(require_id(g, "ground-truth"));
      if (it == corr.end()) continue;
      for (const auto& t : f.a) {
        if (require_id(t, "tracked") != it->second) continue;
        pairs.push_back({t.box.cx * img.width, t.box.cy * img.height, g.box.cx * img.width, g.box.cy * img.height});
        break;
      }
    }
  }
  if (pairs.empty()) throw CorrespondenceError("no tracked object could be paired with a ground-truth object");
  return trajectory_errors_from_pairs(pairs);
}

IdentityStats identity_stats(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt) {
  IdentityStats s;
  std::map<std::int64_t, std::int64_t> last_id;
  for (const auto& f : identity_assignments(tracked, gt)) {
    for (const auto& [gid, tid] : f.pairs) {
      const auto it = last_id.find(gid);
      if (it != last_id.end()) {
        ++s.transitions;
        if (it->second != tid) ++s.id_switches;
        it->second = tid;
      } else {
        last_id.emplace(gid, tid);
      }
    }
  }
  return s;
}

EvalReport evaluate(std::span<const FrameDetections> tracked, std::span<const FrameDetections> gt,
                    const ImageSize& img) {
  EvalReport r;
  for (const auto& f : align(tracked, gt)) {
    const auto m = match_frame(f.a, f.b, 0.5);
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
  }
  r.pr = precision_recall(r.tp, r.fp, r.fn);
  if (r.pr.precision_by_convention) r.notes.emplace_back("precision 0/0 reported as 1.0");
  if (r.pr.recall_by_convention) r.notes.emplace_back("recall 0/0 reported as 1.0");
  const auto thr = coco_thresholds();
  r.map = map_over_thresholds(tracked, gt, thr);
  r.trajectory = trajectory_errors(tracked, gt, img);
  r.identity = identity_stats(tracked, gt);
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["precision"] = r.pr.precision;
  j["recall"] = r.pr.recall;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["map50"] = r.map.map50;
  j["map50_95"] = r.map.map50_95;
  j["thresholds"] = r.map.thresholds;
  auto& per_class = j["per_class_ap"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.map.classes.size(); ++c) {
    nlohmann::ordered_json row;
    row["class"] = r.map.classes[c];
    row["ap"] = r.map.ap[c];
    per_class.push_back(std::move(row));
  }
  j["trajectory"] = {{"mae", r.trajectory.mae},
                     {"rmse", r.trajectory.rmse},
                     {"mape_percent", r.trajectory.mape_percent},
                     {"samples", r.trajectory.samples}};
  j["id_switches"] = r.identity.id_switches;
  j["association_accuracy"] = r.identity.association_accuracy();
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

std::string report_csv(const EvalReport& r) {
  using detail::format_double;
  std::string out = "metric,value\n";
  auto row = [&](const std::string& k, const std::string& v) { out += k + "," + v + "\n"; };
  row("precision", format_double(r.pr.precision));
  row("recall", format_double(r.pr.recall));
  row("map50", format_double(r.map.map50));
  row("map50_95", format_double(r.map.map50_95));
  row("mae", format_double(r.trajectory.mae));
  row("rmse", format_double(r.trajectory.rmse));
  row("mape_percent", format_double(r.trajectory.mape_percent));
  row("id_switches", std::to_string(r.identity.id_switches));
  row("association_accuracy", format_double(r.identity.association_accuracy()));
  for (std::size_t c = 0; c < r.map.classes.size(); ++c)
    for (std::size_t t = 0; t < r.map.thresholds.size(); ++t)
      row("ap_class" + std::to_string(r.map.classes[c]) + "@" + format_double(r.map.thresholds[t]),
          format_double(r.map.ap[c][t]));
  return out;
}

}  // namespace graphtrack

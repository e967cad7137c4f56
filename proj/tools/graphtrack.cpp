// graphtrack command-line entry point: track, train, eval, explain, synth, render.
//
// Exit codes: 0 success, 2 unreadable or malformed input, 3 configuration or
// usage error, 4 divergence / numerical failure, 5 identity correspondence failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "graphtrack/config.hpp"
#include "graphtrack/errors.hpp"
#include "graphtrack/eval.hpp"
#include "graphtrack/explain.hpp"
#include "graphtrack/render.hpp"
#include "graphtrack/rng.hpp"
#include "graphtrack/synth.hpp"
#include "graphtrack/tracker.hpp"
#include "graphtrack/training.hpp"

namespace fs = std::filesystem;
using namespace graphtrack;

namespace {

enum Exit { kOk = 0, kParse = 2, kConfig = 3, kDivergence = 4, kCorrespondence = 5 };

/// Unwritable output paths are a configuration problem, unreadable inputs a parse problem.
class OutputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
  out << bytes;
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string format;
  std::string adjacency;
  std::string edge_gate;
  bool no_velocity = false;
  bool no_appearance = false;
  bool no_temporal = false;
  bool constant_edges = false;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_run_config(read_config(config_path));
    if (seed) cfg.seed = *seed;
    if (!format.empty()) cfg.format = parse_format(format);
    if (!adjacency.empty()) cfg.tracker.adjacency = parse_adjacency_mode(adjacency);
    if (!edge_gate.empty()) cfg.tracker.graph.gate = parse_edge_gate(edge_gate);
    if (no_velocity) cfg.tracker.graph.weight.use_velocity = false;
    if (no_appearance) cfg.tracker.graph.weight.use_appearance = false;
    if (no_temporal) cfg.tracker.use_temporal = false;
    if (constant_edges) cfg.tracker.graph.weight.constant = true;
    cfg.validate();
    return cfg;
  }

private:
  static std::string read_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

std::vector<FrameDetections> load_stream(const std::string& path, RunConfig& cfg) {
  const auto bytes = read_file(path);
  if (cfg.format == StreamFormat::MotCsv) {
    if (const auto img = mot_image_size(bytes)) cfg.image = *img;
  }
  return parse_stream(bytes, cfg.format);
}

std::optional<GnnParams> load_params(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_checkpoint(read_file(path));
}

// ------------------------------------------------------------------ track

struct TrackArgs {
  std::string input;
  std::string out_csv = "tracks.csv";
  std::string out_jsonl = "tracks.jsonl";
  std::string checkpoint;
  bool follow = false;
};

int cmd_track(const CommonOptions& common, const TrackArgs& args) {
  auto cfg = common.resolve();
  Tracker tracker(cfg.tracker_config(), load_params(args.checkpoint));
  const auto start = std::chrono::steady_clock::now();
  std::size_t frames = 0;

  if (args.follow) {
    // One JSONL frame in, one JSONL frame of tracks out; nothing is retained beyond tracker state.
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto frame = parse_jsonl_line(line, line_no);
      const auto result = tracker.step(frame);
      std::cout << serialize_jsonl_frame(to_frames({result}).front()) << '\n' << std::flush;
      ++frames;
    }
  } else {
    if (args.input.empty()) throw ConfigError("track needs --input (or --follow to read standard input)");
    const auto stream = load_stream(args.input, cfg);
    std::vector<FrameResult> results;
    results.reserve(stream.size());
    for (const auto& f : stream) results.push_back(tracker.step(f));
    frames = results.size();
    write_file(args.out_csv, tracks_csv(results, cfg.image));
    const auto out = to_frames(results);
    write_file(args.out_jsonl, serialize_stream(out, StreamFormat::Jsonl));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (frames > 0 && secs > 0.0)
    std::cerr << "mean FPS: " << static_cast<double>(frames) / secs << " (" << frames << " frames)\n";
  else
    std::cerr << "mean FPS: n/a (" << frames << " frames)\n";
  return kOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string preset;
  std::string scenario;
  std::string input;
  std::string gt;
  std::string out = "checkpoint.json";
  std::optional<int> epochs;
  std::optional<double> lr;
};

std::string loss_line(int epoch, const LossBreakdown& l) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "epoch %d l_total=%.9g l_det=%.9g l_bbox=%.9g l_cls=%.9g l_track=%.9g "
                "l_edge=%.9g l_temporal=%.9g\n",
                epoch, l.l_total, l.l_det, l.l_bbox, l.l_cls, l.l_track, l.l_track_edge, l.l_track_temporal);
  return buf;
}

int cmd_train(const CommonOptions& common, const TrainArgs& args) {
  auto cfg = common.resolve();
  if (args.epochs) cfg.train.epochs = *args.epochs;
  if (args.lr) cfg.train.lr = *args.lr;
  cfg.validate();

  std::vector<FrameDetections> stream, gt;
  const int sources = !args.preset.empty() + !args.scenario.empty() + !args.input.empty();
  if (sources != 1) throw ConfigError("train needs exactly one of --preset, --scenario or --input/--gt");
  if (!args.input.empty()) {
    if (args.gt.empty()) throw ConfigError("--input needs --gt");
    stream = load_stream(args.input, cfg);
    gt = load_stream(args.gt, cfg);
  } else {
    SynthSpec spec;
    if (!args.preset.empty()) {
      spec.scenario = scenario_preset(args.preset, cfg.seed);
      spec.degradation = crossing_suite_degradation(cfg.seed);
    } else {
      spec = parse_synth_spec(read_file(args.scenario));
    }
    const auto truth = generate(spec.scenario);
    stream = degrade(truth, spec.degradation).frames;
    gt = truth.frames;
  }

  const auto [emb_dim, classes] = stream_shape(stream);
  const auto tcfg = cfg.tracker_config();
  const auto samples = make_training_samples(stream, gt, tcfg, emb_dim, classes);
  if (samples.empty()) throw ConfigError("no supervision: the stream yields no consecutive frame pairs");

  std::vector<int> dims{static_cast<int>(6 + emb_dim)};
  dims.insert(dims.end(), tcfg.hidden_dims.begin(), tcfg.hidden_dims.end());
  Trainer trainer(init_params(dims, derive_seed(cfg.seed, "gnn.init")), cfg.train.options());
  std::cout << loss_line(0, batch_loss(samples, trainer.params(), cfg.train.weights));
  for (int e = 1; e <= cfg.train.epochs; ++e) std::cout << loss_line(e, trainer.step(samples));
  write_file(args.out, save_checkpoint(trainer.params()));
  return kOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string tracked;
  std::string gt;
  std::string out;
  std::string csv;
};

int cmd_eval(const CommonOptions& common, const EvalArgs& args) {
  auto cfg = common.resolve();
  const auto tracked = load_stream(args.tracked, cfg);
  const auto gt = load_stream(args.gt, cfg);
  const auto report = evaluate(tracked, gt, cfg.image);
  const auto json = report_json(report);
  if (args.out.empty())
    std::cout << json;
  else
    write_file(args.out, json);
  if (!args.csv.empty()) write_file(args.csv, report_csv(report));
  return kOk;
}

// ------------------------------------------------------------------ explain

struct ExplainArgs {
  std::string checkpoint;
  std::string input;
  std::int64_t frame = 0;
  std::int64_t track = 0;
  std::string method = "all";
  std::string out_dir = "explain";
};

std::string metric_cell(const std::function<double()>& f) {
  try {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", f());
    return buf;
  } catch (const NumericError&) {
    return "undefined";
  }
}

int cmd_explain(const CommonOptions& common, const ExplainArgs& args) {
  auto cfg = common.resolve();
  std::vector<std::string> methods;
  if (args.method == "all")
    methods = {"gradcam", "gradcampp", "eigencam"};
  else if (args.method == "gradcam" || args.method == "gradcampp" || args.method == "eigencam")
    methods = {args.method};
  else
    throw ConfigError("unknown explanation method '" + args.method + "' (expected gradcam, gradcampp, eigencam or all)");

  const auto stream = load_stream(args.input, cfg);
  Tracker tracker(cfg.tracker_config(), load_params(args.checkpoint));
  tracker.keep_diagnostics(true);
  bool reached = false;
  for (const auto& f : stream) {
    if (f.frame_index > args.frame) break;
    tracker.step(f);
    if (f.frame_index == args.frame) reached = true;
  }
  if (!reached) throw ConfigError("frame " + std::to_string(args.frame) + " is not in the stream");
  const auto& diag = *tracker.diagnostics();
  const auto& tracks = diag.tracks_before;
  std::size_t row = tracks.size();
  for (std::size_t r = 0; r < tracks.size(); ++r)
    if (tracks[r].track_id == args.track) row = r;
  if (row == tracks.size())
    throw ConfigError("track " + std::to_string(args.track) + " is not active at frame " + std::to_string(args.frame));
  std::size_t node = diag.node_track_ids.size();
  for (std::size_t c = 0; c < diag.node_track_ids.size(); ++c)
    if (diag.node_track_ids[c] == args.track) node = c;
  if (node == diag.node_track_ids.size())
    throw ConfigError("track " + std::to_string(args.track) + " has no detection at frame " +
                      std::to_string(args.frame));

  const auto& params = *tracker.params();
  const auto layers = params.layer_count();
  const auto acts = stack_from_layer(diag.activations.h[layers - 1], "layer " + std::to_string(layers - 1));
  std::vector<AssociationScore> per_track;
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    const double overlap = iou(predicted_box(tracks[r], args.frame), diag.filtered.detections[node].box);
    per_track.emplace_back(diag.adjacency.entries, params.weights.back(), tracks[r].embedding, node, overlap,
                           cfg.tracker.beta);
  }
  const AssociationScore& score = per_track[row];
  const AssociationClassifier classifier(per_track);

  const fs::path out_dir(args.out_dir);
  std::string table = "method,faithfulness,flipping,complexity,comprehension80\n";
  for (const auto& m : methods) {
    AttributionMap map;
    if (m == "gradcam") {
      map = grad_cam(acts, score.gradient(acts));
    } else if (m == "gradcampp") {
      map = grad_cam_pp(acts, score);
    } else {
      const auto ec = eigen_cam(acts);
      if (!ec.accepted())
        throw NumericError("eigen-cam residual " + std::to_string(ec.residual) + " exceeds tolerance");
      map = ec.map;
    }
    map.target = static_cast<int>(args.track);
    write_file(out_dir / ("attribution_" + m + ".json"), attribution_json(map));
    write_file(out_dir / ("attribution_" + m + ".pgm"), attribution_pgm(map, acts.unit_shape));
    table += m + "," + metric_cell([&] { return faithfulness(score, acts, map, cfg.explain.mask); }) + "," +
             metric_cell([&] { return flipping(classifier, acts, map, cfg.explain.flip_budget, cfg.explain.mask); }) +
             "," + metric_cell([&] { return complexity(map); }) + "," +
             metric_cell([&] { return comprehension80(map); }) + "\n";
  }
  write_file(out_dir / "metrics.csv", table);
  std::cout << table;
  return kOk;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string preset;
  std::string scenario;
  std::string out_gt = "gt.jsonl";
  std::string out_det = "detections.jsonl";
  bool clean = false;
};

int cmd_synth(const CommonOptions& common, const SynthArgs& args) {
  auto cfg = common.resolve();
  if (args.preset.empty() == args.scenario.empty()) throw ConfigError("synth needs exactly one of --preset or --scenario");
  SynthSpec spec;
  if (!args.preset.empty()) {
    spec.scenario = scenario_preset(args.preset, cfg.seed);
    if (args.preset == "crossing-suite") spec.degradation = crossing_suite_degradation(cfg.seed);
    spec.degradation.seed = cfg.seed;
  } else {
    spec = parse_synth_spec(read_file(args.scenario));
    if (common.seed) spec.scenario.seed = spec.degradation.seed = *common.seed;
  }
  if (args.clean) spec.degradation = DegradationConfig{.seed = spec.degradation.seed};
  const auto truth = generate(spec.scenario);
  const auto det = degrade(truth, spec.degradation);
  write_file(args.out_gt, serialize_stream(truth.frames, cfg.format, cfg.image));
  write_file(args.out_det, serialize_stream(det.frames, cfg.format, cfg.image));
  std::cerr << "objects " << truth.object_count() << ", frames " << truth.frames.size() << ", visible "
            << det.visible << ", dropped " << det.dropped << ", injected " << det.injected << "\n";
  return kOk;
}

// ------------------------------------------------------------------ render

struct RenderArgs {
  std::string input;
  std::string out_dir = "render";
  std::optional<int> width, height;
  std::optional<double> fps;
};

int cmd_render(const CommonOptions& common, const RenderArgs& args) {
  auto cfg = common.resolve();
  const auto stream = load_stream(args.input, cfg);
  if (args.width) cfg.image.width = *args.width;
  if (args.height) cfg.image.height = *args.height;
  if (cfg.image.width <= 0 || cfg.image.height <= 0) throw ConfigError("image size must be positive");
  const fs::path dir(args.out_dir);
  for (const auto& f : stream) write_file(dir / frame_file_name(f.frame_index), render_svg(f, cfg.image, args.fps));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphtrack: graph-based multi-object tracking with attribution maps"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions common;
  app.add_option("--config", common.config_path, "JSON run configuration");
  app.add_option("--seed", common.seed, "Run seed");
  app.add_option("--format", common.format, "Stream format: jsonl or mot");
  app.add_option("--adjacency", common.adjacency, "Adjacency: raw or normalized");
  app.add_option("--edge-gate", common.edge_gate, "Edge gate: and or or");
  app.add_flag("--no-velocity", common.no_velocity, "Drop the velocity factor from edge weights");
  app.add_flag("--no-appearance", common.no_appearance, "Drop the appearance factor from edge weights");
  app.add_flag("--no-temporal", common.no_temporal, "Freeze motion features and track velocities at zero");
  app.add_flag("--constant-edge-weights", common.constant_edges, "Set every edge weight to 1");

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "Track a detection stream");
  track_cmd->add_option("--input,-i", track.input, "Detection stream");
  track_cmd->add_option("--out-csv", track.out_csv, "Track CSV output");
  track_cmd->add_option("--out-jsonl", track.out_jsonl, "Track JSONL output");
  track_cmd->add_option("--checkpoint", track.checkpoint, "GNN checkpoint (default: seeded initialization)");
  track_cmd->add_flag("--follow", track.follow, "Read JSONL frames from standard input, write tracks to standard output");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the graph convolution");
  train_cmd->add_option("--preset", train.preset, "Synthetic preset to train on");
  train_cmd->add_option("--scenario", train.scenario, "Synthetic scenario JSON to train on");
  train_cmd->add_option("--input", train.input, "Detection stream");
  train_cmd->add_option("--gt", train.gt, "Ground-truth stream with object ids");
  train_cmd->add_option("--out,-o", train.out, "Checkpoint output");
  train_cmd->add_option("--epochs", train.epochs, "Full-batch gradient steps");
  train_cmd->add_option("--lr", train.lr, "Learning rate");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate tracks against ground truth");
  eval_cmd->add_option("--tracked", ev.tracked, "Tracker output with track ids")->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground truth with object ids")->required();
  eval_cmd->add_option("--out,-o", ev.out, "JSON report (default: standard output)");
  eval_cmd->add_option("--csv", ev.csv, "CSV report");

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Attribution maps for one association decision");
  explain_cmd->add_option("--checkpoint", ex.checkpoint, "GNN checkpoint (default: seeded initialization)");
  explain_cmd->add_option("--input,-i", ex.input, "Detection stream")->required();
  explain_cmd->add_option("--frame", ex.frame, "Frame index")->required();
  explain_cmd->add_option("--track", ex.track, "Target track id")->required();
  explain_cmd->add_option("--method", ex.method, "gradcam, gradcampp, eigencam or all");
  explain_cmd->add_option("--out-dir", ex.out_dir, "Output directory");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth_cmd->add_option("--preset", sy.preset, "separated, crossing, occlusion, dense or crossing-suite");
  synth_cmd->add_option("--scenario", sy.scenario, "Scenario JSON");
  synth_cmd->add_option("--out-gt", sy.out_gt, "Ground-truth output");
  synth_cmd->add_option("--out-det", sy.out_det, "Degraded detection output");
  synth_cmd->add_flag("--clean", sy.clean, "Skip degradation");

  RenderArgs rd;
  auto* render_cmd = app.add_subcommand("render", "Render frames as SVG overlays");
  render_cmd->add_option("--input,-i", rd.input, "Detection or track stream")->required();
  render_cmd->add_option("--out-dir", rd.out_dir, "Output directory");
  render_cmd->add_option("--width", rd.width, "Image width in pixels");
  render_cmd->add_option("--height", rd.height, "Image height in pixels");
  render_cmd->add_option("--fps", rd.fps, "FPS value for the footer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*track_cmd) return cmd_track(common, track);
    if (*train_cmd) return cmd_train(common, train);
    if (*eval_cmd) return cmd_eval(common, ev);
    if (*explain_cmd) return cmd_explain(common, ex);
    if (*synth_cmd) return cmd_synth(common, sy);
    if (*render_cmd) return cmd_render(common, rd);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const OutputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kDivergence;
  } catch (const CorrespondenceError& e) {
    std::cerr << "correspondence error: " << e.what() << "\n";
    return kCorrespondence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}

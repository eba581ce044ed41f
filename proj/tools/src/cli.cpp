#include "faraway/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "faraway/error.hpp"
#include "faraway/eval.hpp"
#include "faraway/geometry.hpp"
#include "faraway/kitti_io.hpp"
#include "faraway/pipeline.hpp"
#include "faraway/regressor.hpp"
#include "faraway/render.hpp"

namespace faraway::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every verb.
struct Common {
  std::string data = ".";
  std::string config;
  std::string frames;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--data", c.data, "Dataset root")->capture_default_str();
  sub->add_option("--config", c.config,
                  "key=value config file (default: <data>/config.txt when present)");
  sub->add_option("--frames", c.frames,
                  "Frame list file (default: <data>/frames.txt, else every frame found)");
  sub->add_option("overrides", c.overrides, "Config overrides, key=value");
}

// Defaults, then the config file, then command-line overrides.
PipelineConfig resolve_config(const Common& c) {
  PipelineConfig config;
  if (!c.config.empty()) {
    if (!fs::is_regular_file(c.config)) {
      throw Error(ErrorCode::IoError, "config file not found: " + c.config);
    }
    apply_config_text(config, read_text_file(c.config));
  } else if (const fs::path implicit = fs::path(c.data) / "config.txt"; fs::is_regular_file(implicit)) {
    apply_config_text(config, read_text_file(implicit));
  }
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("expected key=value, got '" + kv + "'");
    }
    try {
      apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw UsageError(e.what());
      throw;
    }
  }
  return config;
}

std::vector<std::string> stems_in(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --frames, else <data>/frames.txt, else the stems of `fallback_dir`.
std::vector<std::string> resolve_frames(const Common& c, const fs::path& fallback_dir) {
  if (!c.frames.empty()) return read_frame_list(c.frames);
  const fs::path listed = fs::path(c.data) / "frames.txt";
  if (fs::is_regular_file(listed)) return read_frame_list(listed);
  if (!fs::is_directory(fallback_dir)) {
    throw Error(ErrorCode::MissingFrameData, "missing " + fallback_dir.string());
  }
  return stems_in(fallback_dir);
}

const fs::path& require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFrameData, "missing " + p.string());
  return p;
}

std::vector<LabelObject> load_labels(const DatasetLayout& layout, const std::string& id) {
  return parse_labels(read_text_file(require_file(layout.label(id))));
}

std::vector<Box3D> load_boxes_if_present(const fs::path& path) {
  std::vector<Box3D> out;
  if (!fs::is_regular_file(path)) return out;
  for (auto& l : parse_labels(read_text_file(path))) {
    if (!l.dont_care) out.push_back(std::move(l.box));
  }
  return out;
}

void require_label_dir(const DatasetLayout& layout) {
  if (!fs::is_directory(layout.label_dir())) {
    throw Error(ErrorCode::MissingFrameData, "label directory not found: " + layout.label_dir().string());
  }
}

// ---------------------------------------------------------------------------

struct RunArgs {
  Common common;
  std::string out;
  std::string frustum_mode;
  std::string checkpoint;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  PipelineConfig config = resolve_config(a.common);
  if (!a.frustum_mode.empty()) config.frustum_mode = a.frustum_mode == "box" ? FrustumMode::Box : FrustumMode::Mask;
  if (!a.checkpoint.empty()) config.checkpoint = a.checkpoint;
  config.validate();

  const DatasetLayout layout{a.common.data};
  const auto frames = resolve_frames(a.common, layout.root / "detections_2d");
  const RegressorParams params = resolve_params(config);
  const fs::path out_dir = a.out.empty() ? layout.root / "results" : fs::path(a.out);
  const RunSummary summary = run_dataset(layout, frames, config, params, out_dir);
  out << summary.to_text();
  out << fmt::format("results {}\n", out_dir.string());
  return kExitOk;
}

struct TrainArgs {
  Common common;
  std::string out;
  std::uint64_t seed = 0;
  int epochs = 500;
  int patience = 10;
  int batch = 32;
  double lr = 1e-3;
  std::optional<int> hidden;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const PipelineConfig config = resolve_config(a.common);
  config.validate();
  const DatasetLayout layout{a.common.data};
  require_label_dir(layout);
  const auto ids = resolve_frames(a.common, layout.root / "detections_2d");

  std::vector<TrainingFrame> frames;
  frames.reserve(ids.size());
  for (const std::string& id : ids) {
    FrameData data = load_frame(layout, id, config.image);
    frames.push_back({std::move(data.lidar), std::move(data.calib), load_labels(layout, id),
                      std::move(data.detections)});
  }
  const TrainingSet set = build_training_set(frames, config.chain_options());

  TrainOptions opts;
  opts.hidden = a.hidden.value_or(config.hidden);
  opts.learning_rate = a.lr;
  opts.max_epochs = a.epochs;
  opts.patience = a.patience;
  opts.batch_size = a.batch;
  opts.seed = a.seed;
  TrainResult result = train(set.samples, opts);
  if (result.params.grid != config.raster.grid) {
    throw Error(ErrorCode::ShapeError, "training rasters disagree with raster.grid");
  }

  const fs::path path = a.out.empty() ? layout.root / "checkpoint.bin" : fs::path(a.out);
  save_checkpoint(result.params, path);
  out << fmt::format(
      "samples {}\ntrain {}\nvalidation {}\nunmatched_gt {}\nempty_frustum {}\n"
      "epochs {}\nbest_epoch {}\nbest_validation_loss {:.6f}\ncheckpoint {}\n",
      set.samples.size(), result.train_count, result.validation_count, set.unmatched_gt,
      set.empty_frustum, result.train_loss.size(), result.best_epoch,
      result.best_epoch > 0 ? result.validation_loss[result.best_epoch - 1] : 0.0,
      path.string());
  return kExitOk;
}

struct EvalArgs {
  Common common;
  std::string results;
  double iou = 0.1;
  bool faraway_only = false;
  std::string difficulty;
  std::string format = "table";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const PipelineConfig config = resolve_config(a.common);
  const DatasetLayout layout{a.common.data};
  require_label_dir(layout);
  const auto ids = resolve_frames(a.common, layout.label_dir());
  const fs::path results = a.results.empty() ? layout.root / "results" : fs::path(a.results);

  EvalOptions opts;
  opts.iou_threshold = a.iou;
  opts.faraway_only = a.faraway_only;
  opts.thresholds = config.thresholds;
  if (a.difficulty == "easy") opts.difficulty = Difficulty::Easy;
  if (a.difficulty == "moderate") opts.difficulty = Difficulty::Moderate;
  if (a.difficulty == "hard") opts.difficulty = Difficulty::Hard;

  std::vector<EvalFrame> frames;
  for (const std::string& id : ids) {
    const auto labels = load_labels(layout, id);
    const auto pred = load_boxes_if_present(results / (id + ".txt"));
    frames.push_back(make_eval_frame(id, labels, pred, opts));
  }
  const EvalReport report = evaluate(frames, opts);
  if (a.format != "machine") out << report.to_table();
  if (a.format != "table") out << report.to_machine();
  return kExitOk;
}

struct StatsArgs {
  Common common;
  std::string svg;
  double reference = 10;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  resolve_config(a.common);
  const DatasetLayout layout{a.common.data};
  require_label_dir(layout);
  const auto ids = resolve_frames(a.common, layout.label_dir());

  std::vector<StatsFrame> frames;
  for (const std::string& id : ids) {
    frames.push_back({id, load_pointcloud_file(require_file(layout.velodyne(id))),
                      load_calibration(require_file(layout.calib(id))), load_labels(layout, id)});
  }
  const auto rows = points_per_object_stats(frames);
  out << "frame,class,depth,points\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.3f},{}\n", r.frame_id, r.cls, r.depth, r.points);
  }
  if (!a.svg.empty()) write_text_file(a.svg, render_stats_svg(rows, a.reference));
  return kExitOk;
}

struct PlotArgs {
  Common common;
  std::string frame;
  std::string results;
  std::string out;
  std::string ppm;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  resolve_config(a.common);
  const DatasetLayout layout{a.common.data};
  const CalibrationSet calib = load_calibration(require_file(layout.calib(a.frame)));
  const PointCloud lidar = load_pointcloud_file(require_file(layout.velodyne(a.frame)));

  BevScene scene;
  scene.points = lidar_to_camera(lidar, calib).points();
  scene.gt = load_boxes_if_present(layout.label(a.frame));
  const fs::path results = a.results.empty() ? layout.root / "results" : fs::path(a.results);
  scene.pred = load_boxes_if_present(results / (a.frame + ".txt"));

  const fs::path svg = a.out.empty() ? layout.root / "plots" / (a.frame + ".svg") : fs::path(a.out);
  write_text_file(svg, render_bev_svg(scene));
  out << fmt::format("svg {}\n", svg.string());
  if (!a.ppm.empty()) {
    write_binary_file(a.ppm, render_bev_ppm(scene));
    out << fmt::format("ppm {}\n", a.ppm);
  }
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Faraway-object 3D detection from 2D detections and lidar", "faraway"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline over a dataset");
  add_common(run_cmd, run_args.common);
  run_cmd->add_option("--out", run_args.out, "Result directory (default: <data>/results)");
  run_cmd->add_option("--frustum-mode", run_args.frustum_mode, "mask or box")
      ->check(CLI::IsMember({"mask", "box"}));
  run_cmd->add_option("--checkpoint", run_args.checkpoint, "Regressor checkpoint");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the box regressor");
  add_common(train_cmd, train_args.common);
  train_cmd->add_option("--out", train_args.out, "Checkpoint path (default: <data>/checkpoint.bin)");
  train_cmd->add_option("--seed", train_args.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs, "Maximum epochs")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--patience", train_args.patience, "Early-stopping patience")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch", train_args.batch, "Mini-batch size")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr, "Adam learning rate")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--hidden", train_args.hidden, "Hidden units (default: config 'hidden')")
      ->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate result files against labels");
  add_common(eval_cmd, eval_args.common);
  eval_cmd->add_option("--results", eval_args.results, "Result directory (default: <data>/results)");
  eval_cmd->add_option("--iou", eval_args.iou, "IoU threshold for AP")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  eval_cmd->add_flag("--faraway-only", eval_args.faraway_only,
                     "Keep only objects at or beyond the class thresholds");
  eval_cmd->add_option("--difficulty", eval_args.difficulty, "easy, moderate or hard")
      ->check(CLI::IsMember({"easy", "moderate", "hard"}));
  eval_cmd->add_option("--format", eval_args.format, "table, machine or both")
      ->check(CLI::IsMember({"table", "machine", "both"}))->capture_default_str();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Lidar points per labelled object vs depth");
  add_common(stats_cmd, stats_args.common);
  stats_cmd->add_option("--out", stats_args.svg, "Scatter plot SVG path");
  stats_cmd->add_option("--reference", stats_args.reference, "Reference line (points)")
      ->capture_default_str();

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plot", "Render one frame in bird's-eye view");
  add_common(plot_cmd, plot_args.common);
  plot_cmd->add_option("--frame", plot_args.frame, "Frame id")->required();
  plot_cmd->add_option("--results", plot_args.results, "Result directory (default: <data>/results)");
  plot_cmd->add_option("--out", plot_args.out, "SVG path (default: <data>/plots/<frame>.svg)");
  plot_cmd->add_option("--ppm", plot_args.ppm, "Also write a binary PPM here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_args, out);
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (stats_cmd->parsed()) return cmd_stats(stats_args, out);
    if (plot_cmd->parsed()) return cmd_plot(plot_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace faraway::cli

#include "faraway/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "faraway/error.hpp"
#include "faraway/kitti_io.hpp"

namespace faraway {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double config_double(std::string_view key, std::string_view value) {
  double v = 0;
  if (!parse_double(value, v) || !std::isfinite(v)) {
    throw Error(ErrorCode::ConfigError, fmt::format("{}: '{}' is not a number", key, value));
  }
  return v;
}

long config_int(std::string_view key, std::string_view value) {
  const double v = config_double(key, value);
  if (v != std::floor(v)) {
    throw Error(ErrorCode::ConfigError, fmt::format("{}: '{}' is not an integer", key, value));
  }
  return static_cast<long>(v);
}

}  // namespace

ThresholdMap default_thresholds() { return {{"pedestrian", 60.0}, {"car", 75.0}}; }

ChainOptions PipelineConfig::chain_options() const {
  ChainOptions o;
  o.mode = frustum_mode;
  o.bin_width = bin_width;
  o.raster = raster;
  o.min_points = min_frustum_points;
  o.dims = image;
  return o;
}

void PipelineConfig::validate() const {
  for (const auto& [cls, z] : thresholds) {
    if (!(z > 0)) throw Error(ErrorCode::ConfigError, fmt::format("threshold.{} must be > 0", cls));
  }
  if (min_frustum_points < 1) throw Error(ErrorCode::ConfigError, "min_frustum_points must be >= 1");
  if (!(bin_width > 0)) throw Error(ErrorCode::ConfigError, "bin_width must be > 0");
  if (raster.grid < 1 || !(raster.extent > 0)) {
    throw Error(ErrorCode::ConfigError, "raster.grid must be >= 1 and raster.extent > 0");
  }
  if (image.width < 1 || image.height < 1) throw Error(ErrorCode::ConfigError, "bad image size");
  if (hidden < 1) throw Error(ErrorCode::ConfigError, "hidden must be >= 1");
}

void apply_config_entry(PipelineConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key.starts_with("threshold.")) {
    const auto cls = ObjectClass::parse(key.substr(std::string_view("threshold.").size()));
    if (cls.name.empty()) throw Error(ErrorCode::ConfigError, "threshold needs a class name");
    config.thresholds[cls.name] = config_double(key, value);
  } else if (key == "frustum_mode") {
    if (value == "mask") {
      config.frustum_mode = FrustumMode::Mask;
    } else if (value == "box") {
      config.frustum_mode = FrustumMode::Box;
    } else {
      throw Error(ErrorCode::ConfigError, fmt::format("frustum_mode must be mask or box, got '{}'", value));
    }
  } else if (key == "bin_width") {
    config.bin_width = config_double(key, value);
  } else if (key == "raster.grid") {
    config.raster.grid = static_cast<int>(config_int(key, value));
  } else if (key == "raster.extent") {
    config.raster.extent = config_double(key, value);
  } else if (key == "min_frustum_points") {
    const long v = config_int(key, value);
    if (v < 1) throw Error(ErrorCode::ConfigError, "min_frustum_points must be >= 1");
    config.min_frustum_points = static_cast<std::size_t>(v);
  } else if (key == "checkpoint") {
    config.checkpoint = std::string(value);
  } else if (key == "image.width") {
    config.image.width = static_cast<int>(config_int(key, value));
  } else if (key == "image.height") {
    config.image.height = static_cast<int>(config_int(key, value));
  } else if (key == "hidden") {
    config.hidden = static_cast<int>(config_int(key, value));
  } else {
    throw Error(ErrorCode::ConfigError, fmt::format("unknown config key '{}'", key));
  }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: expected key=value", line_no));
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  for (const auto& [k, v] : parse_key_values(text)) apply_config_entry(config, k, v);
}

bool is_faraway(double depth, const ObjectClass& cls, const ThresholdMap& thresholds) {
  const auto it = thresholds.find(cls.name);
  if (it == thresholds.end()) {
    throw Error(ErrorCode::UnknownClass, fmt::format("no faraway threshold for '{}'", cls.name));
  }
  return depth >= it->second;
}

Box3D assemble_box(const Vec3& centroid, const BoxRegression& reg, double theta,
                   const ObjectClass& cls, double score) {
  const bool finite = centroid.allFinite() && reg.shift.allFinite() && std::isfinite(reg.yaw) &&
                      std::isfinite(reg.size.w) && std::isfinite(reg.size.l) &&
                      std::isfinite(reg.size.h) && std::isfinite(theta);
  if (!finite) throw Error(ErrorCode::NonFiniteBox, "regression produced a non-finite value");
  Box3D box;
  const Vec3 frustum_center(centroid.x(), centroid.y(), centroid.z() + reg.shift.z());
  box.center = rotate_about_y(frustum_center, theta);
  box.yaw = wrap_angle(reg.yaw + theta);
  box.size = reg.size;
  box.cls = cls;
  box.score = score;
  return box;
}

FrameStats& FrameStats::operator+=(const FrameStats& o) {
  detections += o.detections;
  faraway += o.faraway;
  near += o.near;
  skipped_empty_frustum += o.skipped_empty_frustum;
  skipped_unknown_class += o.skipped_unknown_class;
  skipped_error += o.skipped_error;
  fallback_kept += o.fallback_kept;
  fallback_dropped += o.fallback_dropped;
  return *this;
}

FrameResult process_frame(const PointCloud& lidar, std::span<const Detection2D> detections,
                          std::span<const Box3D> fallback, const CalibrationSet& calib,
                          const PipelineConfig& config, const RegressorParams& params) {
  if (lidar.frame() != Frame::Lidar) {
    throw Error(ErrorCode::FrameMismatch, "process_frame expects a lidar cloud");
  }
  for (const auto& det : detections) {
    if (!calib.frame_id.empty() && det.frame_id != calib.frame_id) {
      throw Error(ErrorCode::FrameMismatch,
                  fmt::format("detection for frame '{}' passed with calibration of '{}'",
                              det.frame_id, calib.frame_id));
    }
  }

  FrameResult result;
  const ChainOptions chain = config.chain_options();

  for (const Box3D& box : fallback) {
    const auto it = config.thresholds.find(box.cls.name);
    if (it != config.thresholds.end() && box.center.z() >= it->second) {
      ++result.stats.fallback_dropped;
      continue;
    }
    ++result.stats.fallback_kept;
    result.boxes.push_back(box);
  }

  for (const Detection2D& det : detections) {
    ++result.stats.detections;
    if (!config.thresholds.contains(det.cls.name)) {
      ++result.stats.skipped_unknown_class;
      continue;
    }
    std::optional<ObjectFrustum> obj;
    try {
      obj = build_object_frustum(lidar, det, calib, chain);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::FrameMismatch || e.code() == ErrorCode::UnknownClass) throw;
      ++result.stats.skipped_error;
      continue;
    }
    if (!obj) {
      ++result.stats.skipped_empty_frustum;
      continue;
    }
    if (!is_faraway(obj->centroid.z(), det.cls, config.thresholds)) {
      ++result.stats.near;
      continue;
    }
    const BevRaster raster = rasterize_bev(obj->bev, det.cls, config.raster);
    const BoxRegression reg = forward(params, raster);
    try {
      result.boxes.push_back(assemble_box(obj->centroid, reg, obj->theta, det.cls, det.score));
      ++result.stats.faraway;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteBox) throw;
      ++result.stats.skipped_error;
    }
  }

  std::stable_sort(result.boxes.begin(), result.boxes.end(),
                   [](const Box3D& a, const Box3D& b) { return a.score > b.score; });
  return result;
}

RegressorParams default_params(const PipelineConfig& config) {
  return RegressorParams::zeros(config.raster.grid, config.hidden, default_priors());
}

RegressorParams resolve_params(const PipelineConfig& config) {
  if (config.checkpoint.empty()) return default_params(config);
  if (!fs::exists(config.checkpoint)) {
    throw Error(ErrorCode::MissingFrameData, "checkpoint not found: " + config.checkpoint.string());
  }
  RegressorParams p = load_checkpoint(config.checkpoint);
  if (p.grid != config.raster.grid) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("checkpoint raster grid {} differs from config raster.grid {}", p.grid,
                            config.raster.grid));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Dataset I/O

fs::path DatasetLayout::velodyne(const std::string& id) const { return root / "velodyne" / (id + ".bin"); }
fs::path DatasetLayout::calib(const std::string& id) const { return root / "calib" / (id + ".txt"); }
fs::path DatasetLayout::detections(const std::string& id) const {
  return root / "detections_2d" / (id + ".txt");
}
fs::path DatasetLayout::fallback(const std::string& id) const { return fallback_dir() / (id + ".txt"); }
fs::path DatasetLayout::label(const std::string& id) const { return label_dir() / (id + ".txt"); }
fs::path DatasetLayout::fallback_dir() const { return root / "fallback"; }
fs::path DatasetLayout::label_dir() const { return root / "label_2"; }

namespace {

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::MissingFrameData, "missing " + path.string());
  }
}

}  // namespace

FrameData load_frame(const DatasetLayout& layout, const std::string& id, ImageDims dims) {
  const fs::path velo = layout.velodyne(id);
  const fs::path calib = layout.calib(id);
  const fs::path dets = layout.detections(id);
  require_file(velo);
  require_file(calib);
  require_file(dets);

  FrameData f;
  f.lidar = load_pointcloud_file(velo);
  f.calib = load_calibration(calib);
  f.calib.frame_id = id;
  f.detections = parse_detections(read_text_file(dets), dims, dets.parent_path());
  if (fs::is_directory(layout.fallback_dir())) {
    const fs::path fb = layout.fallback(id);
    require_file(fb);
    for (auto& l : parse_labels(read_text_file(fb))) {
      if (!l.dont_care) f.fallback.push_back(l.box);
    }
  }
  return f;
}

std::vector<std::string> read_frame_list(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::MissingFrameData, "missing frame list " + path.string());
  }
  const std::string text = read_text_file(path);
  std::vector<std::string> out;
  for (auto f : split_fields(text)) out.emplace_back(f);
  return out;
}

std::vector<std::string> discover_frames(const DatasetLayout& layout) {
  const fs::path dir = layout.root / "detections_2d";
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingFrameData, "missing " + dir.string());
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string RunSummary::to_text() const {
  return fmt::format(
      "frames {}\ndetections {}\nfaraway {}\nnear {}\nskipped_empty_frustum {}\n"
      "skipped_unknown_class {}\nskipped_error {}\nfallback_kept {}\nfallback_dropped {}\n"
      "output_boxes {}\n",
      frames, stats.detections, stats.faraway, stats.near, stats.skipped_empty_frustum,
      stats.skipped_unknown_class, stats.skipped_error, stats.fallback_kept,
      stats.fallback_dropped, output_boxes);
}

RunSummary run_dataset(const DatasetLayout& layout, std::span<const std::string> frames,
                       const PipelineConfig& config, const RegressorParams& params,
                       const fs::path& out_dir) {
  config.validate();
  RunSummary summary;
  for (const std::string& id : frames) {
    const FrameData data = load_frame(layout, id, config.image);
    const FrameResult r =
        process_frame(data.lidar, data.detections, data.fallback, data.calib, config, params);
    write_text_file(out_dir / (id + ".txt"), write_results(r.boxes, data.calib, config.image));
    ++summary.frames;
    summary.output_boxes += r.boxes.size();
    summary.stats += r.stats;
  }
  return summary;
}

}  // namespace faraway

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faraway/regressor.hpp"
#include "faraway/types.hpp"

namespace faraway {

// Per-class depth threshold (metres) beyond which an object is faraway.
using ThresholdMap = std::map<std::string, double>;

ThresholdMap default_thresholds();  // pedestrian 60 m, car 75 m

struct PipelineConfig {
  ThresholdMap thresholds = default_thresholds();
  FrustumMode frustum_mode = FrustumMode::Mask;
  double bin_width = 0.1;
  RasterSpec raster;
  std::size_t min_frustum_points = 1;
  std::filesystem::path checkpoint;  // empty: zero weights + default priors
  ImageDims image;
  int hidden = 64;  // only used when no checkpoint is given

  ChainOptions chain_options() const;
  // Throws ConfigError on a violated invariant.
  void validate() const;
};

// Flat "key = value" text, '#' starts a comment. Keys:
//   threshold.<class>, frustum_mode (mask|box), bin_width, raster.grid,
//   raster.extent, min_frustum_points, checkpoint, image.width,
//   image.height, hidden
// Unknown keys raise ConfigError.
void apply_config_entry(PipelineConfig& config, std::string_view key, std::string_view value);
void apply_config_text(PipelineConfig& config, std::string_view text);
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

// z >= z_th(class).
bool is_faraway(double depth, const ObjectClass& cls, const ThresholdMap& thresholds);

// Centre (x, y, z + dz) in the frustum frame rotated back by +theta; dx and
// dy are discarded. Yaw is the regressed frustum-frame yaw plus theta.
Box3D assemble_box(const Vec3& centroid, const BoxRegression& reg, double theta,
                   const ObjectClass& cls, double score);

struct FrameStats {
  std::size_t detections = 0;
  std::size_t faraway = 0;
  std::size_t near = 0;
  std::size_t skipped_empty_frustum = 0;
  std::size_t skipped_unknown_class = 0;
  std::size_t skipped_error = 0;
  std::size_t fallback_kept = 0;
  std::size_t fallback_dropped = 0;

  FrameStats& operator+=(const FrameStats& o);
};

struct FrameResult {
  std::vector<Box3D> boxes;
  FrameStats stats;
};

FrameResult process_frame(const PointCloud& lidar, std::span<const Detection2D> detections,
                          std::span<const Box3D> fallback, const CalibrationSet& calib,
                          const PipelineConfig& config, const RegressorParams& params);

// Zero-weight parameters with default priors, sized from the config.
RegressorParams default_params(const PipelineConfig& config);
// Checkpoint from config.checkpoint, or default_params when unset.
RegressorParams resolve_params(const PipelineConfig& config);

// Dataset layout under `root`:
//   velodyne/<id>.bin, calib/<id>.txt, detections_2d/<id>.txt (masks
//   referenced relative to detections_2d/), fallback/<id>.txt (optional
//   directory), label_2/<id>.txt (eval/stats only).
struct DatasetLayout {
  std::filesystem::path root;

  std::filesystem::path velodyne(const std::string& id) const;
  std::filesystem::path calib(const std::string& id) const;
  std::filesystem::path detections(const std::string& id) const;
  std::filesystem::path fallback(const std::string& id) const;
  std::filesystem::path label(const std::string& id) const;
  std::filesystem::path fallback_dir() const;
  std::filesystem::path label_dir() const;
};

struct FrameData {
  PointCloud lidar;
  CalibrationSet calib;
  std::vector<Detection2D> detections;
  std::vector<Box3D> fallback;
};

// Throws MissingFrameData naming the first absent file.
FrameData load_frame(const DatasetLayout& layout, const std::string& id, ImageDims dims);

// Frame ids: one per line in a list file, or every detections_2d/*.txt stem
// in sorted order.
std::vector<std::string> read_frame_list(const std::filesystem::path& path);
std::vector<std::string> discover_frames(const DatasetLayout& layout);

struct RunSummary {
  std::size_t frames = 0;
  std::size_t output_boxes = 0;
  FrameStats stats;

  std::string to_text() const;
};

// Writes out_dir/<id>.txt for every frame.
RunSummary run_dataset(const DatasetLayout& layout, std::span<const std::string> frames,
                       const PipelineConfig& config, const RegressorParams& params,
                       const std::filesystem::path& out_dir);

}  // namespace faraway

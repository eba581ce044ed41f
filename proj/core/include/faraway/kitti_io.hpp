#pragma once

// Readers and writers for the KITTI-style files the pipeline consumes and
// produces: calib txt, velodyne float32 binaries, label_2/result txt, 2D
// detection lists and their P5 PGM masks.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faraway/types.hpp"

namespace faraway {

CalibrationSet parse_calibration(std::string_view text, std::string frame_id = {});
CalibrationSet load_calibration(const std::filesystem::path& path);
std::string write_calibration(const CalibrationSet& calib);

// Velodyne layout: consecutive little-endian float32 records (x, y, z, intensity).
PointCloud load_pointcloud(std::span<const std::byte> bytes);
PointCloud load_pointcloud_file(const std::filesystem::path& path);
std::vector<std::byte> encode_pointcloud(const PointCloud& cloud);

// One detection per line: frame_id class score u_min v_min u_max v_max [mask_path].
// Relative mask paths resolve against `base_dir`. Only the PGM header is
// read here; pixels are loaded on first use of the mask.
std::vector<Detection2D> parse_detections(std::string_view text, ImageDims dims,
                                          const std::filesystem::path& base_dir = {});
std::string write_detections(std::span<const Detection2D> detections);

std::vector<LabelObject> parse_labels(std::string_view text);
// Label rows verbatim (truncation, occlusion, alpha and 2D box as stored).
std::string write_labels(std::span<const LabelObject> labels, bool with_score = false);

// KITTI result rows: the 2D box is the clamped projection of the 3D box,
// alpha is derived from yaw and viewing direction, and the score trails.
std::string write_results(std::span<const Box3D> boxes, const CalibrationSet& calib,
                          ImageDims dims);

// 2D box of the projected 3D corners, clamped to the image; all-zero when
// every corner lies behind the camera.
BBox2D project_box_to_image(const Box3D& box, const CalibrationSet& calib, ImageDims dims);

Bitmap read_pgm(std::span<const std::byte> bytes);
Bitmap read_pgm_file(const std::filesystem::path& path);
ImageDims read_pgm_dims(const std::filesystem::path& path);
std::vector<std::byte> write_pgm(const Bitmap& bitmap);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::byte> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

// Whitespace tokenizer and decimal parser shared by the text formats.
std::vector<std::string_view> split_fields(std::string_view line);
bool parse_double(std::string_view token, double& out);

}  // namespace faraway

#pragma once

// Deterministic synthetic KITTI-layout scenes: calibration, velodyne sweep,
// labels, 2D detections with PGM masks and near-range fallback results.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faraway/types.hpp"

namespace faraway::synthetic {

// Half-resolution KITTI-like camera with exactly orthonormal rotations.
CalibrationSet calibration(const std::string& frame_id = {});
ImageDims image_dims();

enum class Layout {
  Volume,   // uniform inside the box (shrunk 10% from every face)
  Cluster,  // tight +-0.04 m square in x/z around the box mid-height centre
};

struct ObjectSpec {
  ObjectClass cls;
  Vec3 center = Vec3::Zero();  // bottom-face centre, camera frame
  double yaw = 0;
  BoxSize size;
  std::size_t points = 0;
  Layout layout = Layout::Volume;
  // Extra points 20 m behind the object, shifted 0.3 m to the right; they
  // fall inside the detection's mask but outside the GT box.
  std::size_t outliers = 0;
  bool detected = true;
  double score = 0.9;
  bool with_mask = true;
  bool in_fallback = false;
};

struct ExtraDetection {
  std::string cls;
  double score = 0.5;
  BBox2D bbox;
};

struct SceneSpec {
  std::string id;
  std::vector<ObjectSpec> objects;
  std::vector<Box3D> extra_fallback;
  std::vector<ExtraDetection> extra_detections;
  std::vector<LabelObject> dont_care;
  std::size_t ground_points = 300;
  std::size_t rear_points = 50;
};

struct PlantedObject {
  std::string frame_id;
  LabelObject label;
  std::size_t points = 0;      // points planted inside the GT box
  Vec3 cluster_center;         // centre of the planted points, camera frame
};

struct GeneratedDataset {
  std::vector<std::string> frames;
  std::vector<PlantedObject> objects;
};

// Writes velodyne/, calib/, label_2/, detections_2d/ (+ masks/), fallback/,
// frames.txt and config.txt under `root`.
GeneratedDataset write_dataset(const std::vector<SceneSpec>& scenes,
                               const std::filesystem::path& root, std::uint64_t seed = 7);

// The bundled five-frame scene set.
std::vector<SceneSpec> mini_scenes();

}  // namespace faraway::synthetic

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "faraway/eval.hpp"
#include "faraway/types.hpp"

namespace faraway {

// Bird's-eye view of one frame: x to the right, depth (camera z) upwards.
struct BevScene {
  std::vector<Vec3> points;  // rectified camera frame
  std::vector<Box3D> gt;
  std::vector<Box3D> pred;
};

struct RenderOptions {
  double x_min = -40;
  double x_max = 40;
  double z_min = 0;
  double z_max = 100;
  double pixels_per_meter = 8;
};

// One <rect> per box, rotated by its yaw (degrees) about its centre; GT and
// predictions use the "gt" and "pred" classes. Points are <circle>s.
std::string render_bev_svg(const BevScene& scene, const RenderOptions& options = {});
// Binary PPM (P6) with the same layout.
std::vector<std::byte> render_bev_ppm(const BevScene& scene, const RenderOptions& options = {});

// Depth-vs-point-count scatter with a horizontal reference line.
std::string render_stats_svg(std::span<const ObjectPointCount> rows,
                             double reference_points = 10);

}  // namespace faraway

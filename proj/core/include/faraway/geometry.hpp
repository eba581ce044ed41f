#pragma once

// Coordinate chain from the raw lidar sweep to the BEV input of the box
// regressor:
//
//   lidar --(Tr_velo_to_cam, R0_rect)--> rectified camera
//         --(frustum membership)-------> per-object camera cloud
//         --(rotate by -theta about y)-> frustum frame
//         --(subtract centroid)--------> centroid frame
//         --(drop y)-------------------> BEV (x, z)

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "faraway/types.hpp"

namespace faraway {

using Vec2 = Eigen::Vector2d;

struct ImageProjection {
  double u = 0;
  double v = 0;
  bool valid = false;
};

struct FrustumView {
  PointCloud cloud;  // Frame::Frustum
  double theta = 0;  // yaw of the frustum centre ray, radians
};

PointCloud lidar_to_camera(const PointCloud& cloud, const CalibrationSet& calib);
// Exact inverse of lidar_to_camera: Tr^-1 * R0_rect^-1.
PointCloud camera_to_lidar(const PointCloud& cloud, const CalibrationSet& calib);

// Points are flagged, never dropped, so the output index-aligns with the input.
std::vector<ImageProjection> project_to_image(const PointCloud& cloud,
                                              const CalibrationSet& calib);

// Indices (into the lidar cloud) of points whose projection falls in the
// half-open box [u_min, u_max) x [v_min, v_max). The box is clamped to the
// image first.
std::vector<std::size_t> box_frustum_indices(const PointCloud& lidar, const Detection2D& det,
                                             const CalibrationSet& calib, ImageDims dims);
// Indices of points whose projection lands on a mask pixel > 0, pixel chosen
// by (floor(u), floor(v)).
std::vector<std::size_t> mask_frustum_indices(const PointCloud& lidar, const Detection2D& det,
                                              const CalibrationSet& calib);

PointCloud points_in_box_frustum(const PointCloud& lidar, const Detection2D& det,
                                 const CalibrationSet& calib, ImageDims dims);
PointCloud points_in_mask_frustum(const PointCloud& lidar, const Detection2D& det,
                                  const CalibrationSet& calib);

// Yaw of the ray through the 2D box centre, back-projected with the left
// 3x3 block of P2 at unit depth.
double frustum_angle(const Detection2D& det, const CalibrationSet& calib);
FrustumView frustum_rotation(const PointCloud& camera_cloud, const Detection2D& det,
                             const CalibrationSet& calib);

PointCloud to_centroid_frame(const PointCloud& frustum_cloud, const Vec3& centroid);
std::vector<Vec2> bev_project(const PointCloud& centroid_cloud);

// Rotation about the camera vertical axis in the KITTI rotation_y sense:
// x' = cos(a) x + sin(a) z,  z' = -sin(a) x + cos(a) z.
Vec3 rotate_about_y(const Vec3& p, double angle);

// Corners of a box in the rectified camera frame. The first four form the
// bottom face (y = center.y), the last four the top face.
std::array<Vec3, 8> box_corners(const Box3D& box);
// Ground-plane footprint as (x, z) corners in counter-clockwise order.
std::array<Vec2, 4> bev_corners(const Box3D& box);
// Closed-boundary containment test in the box's own frame.
bool box_contains(const Box3D& box, const Vec3& p);

}  // namespace faraway

#include "faraway/geometry.hpp"

#include <cmath>

#include <Eigen/LU>
#include <fmt/format.h>

#include "faraway/error.hpp"

namespace faraway {

namespace {

void expect_frame(const PointCloud& cloud, Frame expected, std::string_view op) {
  if (cloud.frame() != expected) {
    throw Error(ErrorCode::FrameMismatch,
                fmt::format("{} expects a {} cloud, got {}", op, to_string(expected),
                            to_string(cloud.frame())));
  }
}

PointCloud subset(const PointCloud& cloud, Frame frame, const std::vector<Vec3>& all_points,
                  const std::vector<std::size_t>& indices) {
  std::vector<Vec3> pts;
  pts.reserve(indices.size());
  std::optional<std::vector<double>> inten;
  if (cloud.intensities()) inten.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    pts.push_back(all_points[i]);
    if (inten) inten->push_back((*cloud.intensities())[i]);
  }
  return PointCloud(frame, std::move(pts), std::move(inten));
}

std::vector<Vec3> transform_to_camera(const std::vector<Vec3>& pts, const CalibrationSet& calib) {
  const Mat3 rot = calib.r0_rect * calib.tr_velo_to_cam.leftCols<3>();
  const Vec3 trans = calib.r0_rect * calib.tr_velo_to_cam.col(3);
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(rot * p + trans);
  return out;
}

ImageProjection project_point(const Vec3& p, const Mat34& p2) {
  const Vec3 uvw = p2 * p.homogeneous();
  ImageProjection out;
  out.u = uvw.x() / uvw.z();
  out.v = uvw.y() / uvw.z();
  out.valid = p.z() > 0 && std::isfinite(out.u) && std::isfinite(out.v);
  return out;
}

}  // namespace

PointCloud lidar_to_camera(const PointCloud& cloud, const CalibrationSet& calib) {
  expect_frame(cloud, Frame::Lidar, "lidar_to_camera");
  return PointCloud(Frame::Camera, transform_to_camera(cloud.points(), calib),
                    cloud.intensities());
}

PointCloud camera_to_lidar(const PointCloud& cloud, const CalibrationSet& calib) {
  expect_frame(cloud, Frame::Camera, "camera_to_lidar");
  const Mat3 rot = calib.tr_velo_to_cam.leftCols<3>();
  const Vec3 trans = calib.tr_velo_to_cam.col(3);
  const Eigen::PartialPivLU<Mat3> rect(calib.r0_rect);
  const Eigen::PartialPivLU<Mat3> rigid(rot);
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& q : cloud.points()) out.push_back(rigid.solve(rect.solve(q) - trans));
  return PointCloud(Frame::Lidar, std::move(out), cloud.intensities());
}

std::vector<ImageProjection> project_to_image(const PointCloud& cloud,
                                              const CalibrationSet& calib) {
  expect_frame(cloud, Frame::Camera, "project_to_image");
  std::vector<ImageProjection> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points()) out.push_back(project_point(p, calib.p2));
  return out;
}

std::vector<std::size_t> box_frustum_indices(const PointCloud& lidar, const Detection2D& det,
                                             const CalibrationSet& calib, ImageDims dims) {
  expect_frame(lidar, Frame::Lidar, "box frustum");
  const double u_min = std::clamp(det.bbox.u_min, 0.0, static_cast<double>(dims.width));
  const double u_max = std::clamp(det.bbox.u_max, 0.0, static_cast<double>(dims.width));
  const double v_min = std::clamp(det.bbox.v_min, 0.0, static_cast<double>(dims.height));
  const double v_max = std::clamp(det.bbox.v_max, 0.0, static_cast<double>(dims.height));

  const auto cam = transform_to_camera(lidar.points(), calib);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const auto pr = project_point(cam[i], calib.p2);
    if (pr.valid && pr.u >= u_min && pr.u < u_max && pr.v >= v_min && pr.v < v_max) {
      idx.push_back(i);
    }
  }
  return idx;
}

std::vector<std::size_t> mask_frustum_indices(const PointCloud& lidar, const Detection2D& det,
                                              const CalibrationSet& calib) {
  expect_frame(lidar, Frame::Lidar, "mask frustum");
  if (!det.mask) throw Error(ErrorCode::ShapeError, "mask frustum needs a detection with a mask");
  const Bitmap& mask = det.mask->bitmap();

  const auto cam = transform_to_camera(lidar.points(), calib);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const auto pr = project_point(cam[i], calib.p2);
    if (!pr.valid) continue;
    const double fu = std::floor(pr.u);
    const double fv = std::floor(pr.v);
    if (fu < 0 || fv < 0 || fu >= mask.width || fv >= mask.height) continue;
    if (mask.at(static_cast<int>(fu), static_cast<int>(fv)) > 0) idx.push_back(i);
  }
  return idx;
}

PointCloud points_in_box_frustum(const PointCloud& lidar, const Detection2D& det,
                                 const CalibrationSet& calib, ImageDims dims) {
  const auto idx = box_frustum_indices(lidar, det, calib, dims);
  return subset(lidar, Frame::Camera, transform_to_camera(lidar.points(), calib), idx);
}

PointCloud points_in_mask_frustum(const PointCloud& lidar, const Detection2D& det,
                                  const CalibrationSet& calib) {
  const auto idx = mask_frustum_indices(lidar, det, calib);
  return subset(lidar, Frame::Camera, transform_to_camera(lidar.points(), calib), idx);
}

double frustum_angle(const Detection2D& det, const CalibrationSet& calib) {
  const Mat3 k = calib.p2.leftCols<3>();
  const Eigen::FullPivLU<Mat3> lu(k);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::BadCalibration, "left 3x3 block of P2 is singular");
  }
  const Vec3 pixel(0.5 * (det.bbox.u_min + det.bbox.u_max),
                   0.5 * (det.bbox.v_min + det.bbox.v_max), 1.0);
  const Vec3 ray = lu.solve(pixel);
  return std::atan2(ray.x(), ray.z());
}

FrustumView frustum_rotation(const PointCloud& camera_cloud, const Detection2D& det,
                             const CalibrationSet& calib) {
  expect_frame(camera_cloud, Frame::Camera, "frustum_rotation");
  const double theta = frustum_angle(det, calib);
  std::vector<Vec3> pts;
  pts.reserve(camera_cloud.size());
  for (const auto& p : camera_cloud.points()) pts.push_back(rotate_about_y(p, -theta));
  return {PointCloud(Frame::Frustum, std::move(pts), camera_cloud.intensities()), theta};
}

PointCloud to_centroid_frame(const PointCloud& frustum_cloud, const Vec3& centroid) {
  expect_frame(frustum_cloud, Frame::Frustum, "to_centroid_frame");
  std::vector<Vec3> pts;
  pts.reserve(frustum_cloud.size());
  for (const auto& p : frustum_cloud.points()) pts.push_back(p - centroid);
  return PointCloud(Frame::Centroid, std::move(pts), frustum_cloud.intensities());
}

std::vector<Vec2> bev_project(const PointCloud& centroid_cloud) {
  expect_frame(centroid_cloud, Frame::Centroid, "bev_project");
  std::vector<Vec2> out;
  out.reserve(centroid_cloud.size());
  for (const auto& p : centroid_cloud.points()) out.emplace_back(p.x(), p.z());
  return out;
}

Vec3 rotate_about_y(const Vec3& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() + s * p.z(), p.y(), -s * p.x() + c * p.z()};
}

std::array<Vec3, 8> box_corners(const Box3D& box) {
  const double hl = 0.5 * box.size.l;
  const double hw = 0.5 * box.size.w;
  const double local_x[4] = {hl, -hl, -hl, hl};
  const double local_z[4] = {hw, hw, -hw, -hw};
  std::array<Vec3, 8> out;
  for (int i = 0; i < 4; ++i) {
    const Vec3 bottom = rotate_about_y(Vec3(local_x[i], 0.0, local_z[i]), box.yaw);
    out[static_cast<std::size_t>(i)] = box.center + bottom;
    out[static_cast<std::size_t>(i + 4)] = box.center + bottom - Vec3(0.0, box.size.h, 0.0);
  }
  return out;
}

std::array<Vec2, 4> bev_corners(const Box3D& box) {
  const auto c3 = box_corners(box);
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = Vec2(c3[i].x(), c3[i].z());
  return out;
}

bool box_contains(const Box3D& box, const Vec3& p) {
  const Vec3 local = rotate_about_y(p - box.center, -box.yaw);
  return std::abs(local.x()) <= 0.5 * box.size.l && std::abs(local.z()) <= 0.5 * box.size.w &&
         local.y() <= 0.0 && local.y() >= -box.size.h;
}

}  // namespace faraway

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace faraway {

using Vec3 = Eigen::Vector3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat3 = Eigen::Matrix3d;

// Coordinate frame a point cloud is expressed in. Operations check the frame
// of their input and raise FrameMismatch on the wrong one.
enum class Frame { Lidar, Camera, Frustum, Centroid };

std::string_view to_string(Frame frame);

class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(Frame frame, std::vector<Vec3> points,
             std::optional<std::vector<double>> intensities = std::nullopt);

  Frame frame() const noexcept { return frame_; }
  const std::vector<Vec3>& points() const noexcept { return points_; }
  const std::optional<std::vector<double>>& intensities() const noexcept {
    return intensities_;
  }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

 private:
  Frame frame_ = Frame::Lidar;
  std::vector<Vec3> points_;
  std::optional<std::vector<double>> intensities_;
};

struct ObjectClass {
  enum class Kind { Pedestrian, Car, Other };

  Kind kind = Kind::Other;
  // Lower-case canonical name ("pedestrian", "car", or the raw lower-cased
  // label for other classes).
  std::string name;

  static ObjectClass pedestrian();
  static ObjectClass car();
  // Case-insensitive: "Car", "car" and "CAR" all map to Kind::Car.
  static ObjectClass parse(std::string_view text);

  // Name as written in KITTI label/result files ("Car", "Pedestrian", ...).
  std::string kitti_name() const;

  friend bool operator==(const ObjectClass& a, const ObjectClass& b) {
    return a.name == b.name;
  }
};

struct CalibrationSet {
  Mat34 p2 = Mat34::Zero();
  Mat3 r0_rect = Mat3::Identity();
  Mat34 tr_velo_to_cam = Mat34::Zero();
  std::string frame_id;
};

struct BBox2D {
  double u_min = 0;
  double v_min = 0;
  double u_max = 0;
  double v_max = 0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const;
  double iou(const BBox2D& other) const;
};

struct ImageDims {
  int width = 1242;
  int height = 375;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// 8-bit grayscale bitmap; a pixel > 0 marks the object.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  Bitmap() = default;
  Bitmap(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int u, int v) const {
    return pixels[static_cast<std::size_t>(v) * width + u];
  }
  std::uint8_t& at(int u, int v) {
    return pixels[static_cast<std::size_t>(v) * width + u];
  }
};

// A 2D mask either held in memory or referenced by a PGM path and read on
// first access. Copies share the loaded bitmap.
class MaskRef {
 public:
  explicit MaskRef(Bitmap bitmap);
  MaskRef(std::filesystem::path path, int width, int height);

  const std::filesystem::path& path() const noexcept { return path_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const Bitmap& bitmap() const;

 private:
  struct Lazy;
  std::filesystem::path path_;
  int width_ = 0;
  int height_ = 0;
  std::shared_ptr<Lazy> lazy_;
};

struct Detection2D {
  std::string frame_id;
  ObjectClass cls;
  double score = 0;
  BBox2D bbox;
  std::optional<MaskRef> mask;
};

struct BoxSize {
  double w = 0;
  double l = 0;
  double h = 0;
};

// 7-DoF box in the rectified camera frame. `center` follows the KITTI
// label convention: the centre of the bottom face (camera y points down),
// so the box spans y in [center.y - h, center.y].
struct Box3D {
  Vec3 center = Vec3::Zero();
  double yaw = 0;
  BoxSize size;
  ObjectClass cls;
  double score = 1.0;
};

// One row of a KITTI label_2 file.
struct LabelObject {
  Box3D box;
  BBox2D bbox;
  double truncation = 0;
  int occlusion = 0;
  double alpha = 0;
  bool dont_care = false;
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace faraway

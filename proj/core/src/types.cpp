#include "faraway/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <numbers>

#include "faraway/error.hpp"
#include "faraway/kitti_io.hpp"

namespace faraway {

std::string_view to_string(Frame frame) {
  switch (frame) {
    case Frame::Lidar: return "lidar";
    case Frame::Camera: return "camera";
    case Frame::Frustum: return "frustum";
    case Frame::Centroid: return "centroid";
  }
  return "?";
}

PointCloud::PointCloud(Frame frame, std::vector<Vec3> points,
                       std::optional<std::vector<double>> intensities)
    : frame_(frame),
      points_(std::move(points)),
      intensities_(std::move(intensities)) {
  for (const auto& p : points_) {
    if (!p.allFinite()) {
      throw Error(ErrorCode::NonFinitePoint, "point cloud holds a non-finite coordinate");
    }
  }
  if (intensities_ && intensities_->size() != points_.size()) {
    throw Error(ErrorCode::ShapeError, "intensity count differs from point count");
  }
}

ObjectClass ObjectClass::pedestrian() { return {Kind::Pedestrian, "pedestrian"}; }
ObjectClass ObjectClass::car() { return {Kind::Car, "car"}; }

ObjectClass ObjectClass::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "pedestrian") return pedestrian();
  if (lower == "car") return car();
  return {Kind::Other, lower};
}

std::string ObjectClass::kitti_name() const {
  switch (kind) {
    case Kind::Pedestrian: return "Pedestrian";
    case Kind::Car: return "Car";
    case Kind::Other: break;
  }
  // KITTI capitalises the first letter, with the historical exception of
  // "DontCare" which parse() lower-cases to "dontcare".
  if (name == "dontcare") return "DontCare";
  if (name == "person_sitting") return "Person_sitting";
  std::string out = name;
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

double BBox2D::area() const {
  return std::max(0.0, width()) * std::max(0.0, height());
}

double BBox2D::iou(const BBox2D& other) const {
  const double iw = std::min(u_max, other.u_max) - std::max(u_min, other.u_min);
  const double ih = std::min(v_max, other.v_max) - std::max(v_min, other.v_min);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (area() + other.area() - inter);
}

struct MaskRef::Lazy {
  std::once_flag once;
  std::shared_ptr<const Bitmap> bitmap;
};

MaskRef::MaskRef(Bitmap bitmap)
    : width_(bitmap.width), height_(bitmap.height), lazy_(std::make_shared<Lazy>()) {
  auto shared = std::make_shared<const Bitmap>(std::move(bitmap));
  std::call_once(lazy_->once, [&] { lazy_->bitmap = std::move(shared); });
}

MaskRef::MaskRef(std::filesystem::path path, int width, int height)
    : path_(std::move(path)), width_(width), height_(height), lazy_(std::make_shared<Lazy>()) {}

const Bitmap& MaskRef::bitmap() const {
  std::call_once(lazy_->once, [this] {
    auto loaded = read_pgm_file(path_);
    if (loaded.width != width_ || loaded.height != height_) {
      throw Error(ErrorCode::MaskDimMismatch, path_.string() + " changed size since parsing");
    }
    lazy_->bitmap = std::make_shared<const Bitmap>(std::move(loaded));
  });
  return *lazy_->bitmap;
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

}  // namespace faraway

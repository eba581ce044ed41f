#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "faraway/types.hpp"

namespace testing_support {

namespace fs = std::filesystem;
using faraway::BoxSize;
using faraway::Box3D;
using faraway::CalibrationSet;
using faraway::Mat3;
using faraway::Mat34;
using faraway::ObjectClass;
using faraway::Vec3;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("faraway_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double q[4];
  double norm = 0;
  for (double& v : q) {
    v = n(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline Mat3 small_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  const double rx = a(rng), ry = a(rng), rz = a(rng);
  Mat3 x, y, z;
  x << 1, 0, 0, 0, std::cos(rx), -std::sin(rx), 0, std::sin(rx), std::cos(rx);
  y << std::cos(ry), 0, std::sin(ry), 0, 1, 0, -std::sin(ry), 0, std::cos(ry);
  z << std::cos(rz), -std::sin(rz), 0, std::sin(rz), std::cos(rz), 0, 0, 0, 1;
  return z * y * x;
}

// Pinhole P2 = [f 0 cu 0; 0 f cv 0; 0 0 1 0], identity rectification and a
// lidar->camera rotation that maps (forward, left, up) to (z, -x, -y).
inline CalibrationSet simple_calibration(double f = 700, double cu = 600, double cv = 180) {
  CalibrationSet c;
  c.p2 << f, 0, cu, 0, 0, f, cv, 0, 0, 0, 1, 0;
  c.r0_rect = Mat3::Identity();
  c.tr_velo_to_cam << 0, -1, 0, 0, 0, 0, -1, 0, 1, 0, 0, 0;
  return c;
}

// A KITTI-like calibration with random small perturbations.
inline CalibrationSet random_kitti_calibration(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CalibrationSet c;
  const double f = 700 + 20 * u(rng);
  c.p2 << f, 0, 610 + 10 * u(rng), 45 * u(rng), 0, f, 175 + 5 * u(rng), 0.2 * u(rng), 0, 0, 1,
      0.005 * u(rng);
  c.r0_rect = small_rotation(rng, 0.01);
  Mat3 axes;
  axes << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  c.tr_velo_to_cam.leftCols<3>() = small_rotation(rng, 0.02) * axes;
  c.tr_velo_to_cam.col(3) = Vec3(0.05 * u(rng), -0.08 + 0.02 * u(rng), -0.27 + 0.02 * u(rng));
  return c;
}

inline Box3D make_box(Vec3 center, double yaw, BoxSize size,
                      ObjectClass cls = ObjectClass::car(), double score = 1.0) {
  Box3D b;
  b.center = center;
  b.yaw = yaw;
  b.size = size;
  b.cls = std::move(cls);
  b.score = score;
  return b;
}

inline std::string fixture_dir() { return FARAWAY_FIXTURE_DIR; }

}  // namespace testing_support

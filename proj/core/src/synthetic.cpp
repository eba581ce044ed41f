#include "faraway/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <fmt/format.h>

#include "faraway/geometry.hpp"
#include "faraway/kitti_io.hpp"
#include "faraway/regressor.hpp"

namespace faraway::synthetic {

namespace fs = std::filesystem;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }

 private:
  std::mt19937_64 engine_;
};

Mat3 small_rotation(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Vec3::UnitZ()) * Eigen::AngleAxisd(ry, Vec3::UnitY()) *
          Eigen::AngleAxisd(rx, Vec3::UnitX()))
      .toRotationMatrix();
}

// Offsets (dx, dz) of the cluster layout; the first four pin the extent.
constexpr double kClusterOffsets[][2] = {
    {-0.04, -0.04}, {0.04, 0.04}, {-0.04, 0.04}, {0.04, -0.04}, {0.0, 0.0},
    {0.02, -0.02},  {-0.02, 0.02}, {0.0, 0.03},  {0.03, 0.0},   {-0.03, 0.0}};

struct ObjectPoints {
  std::size_t first = 0;
  std::size_t inside = 0;    // planted inside the box
  std::size_t outliers = 0;  // directly after the inside points
};

Box3D box_of(const ObjectSpec& o) {
  Box3D b;
  b.center = o.center;
  b.yaw = o.yaw;
  b.size = o.size;
  b.cls = o.cls;
  b.score = o.score;
  return b;
}

}  // namespace

CalibrationSet calibration(const std::string& frame_id) {
  CalibrationSet c;
  c.p2 << 360.0, 0.0, 310.0, 22.5, 0.0, 360.0, 94.0, 0.1, 0.0, 0.0, 1.0, 0.0027;
  c.r0_rect = small_rotation(0.004, -0.0074, 0.0098);
  Mat3 axes;
  axes << 0, -1, 0, 0, 0, -1, 1, 0, 0;  // lidar (fwd, left, up) -> camera (right, down, fwd)
  c.tr_velo_to_cam.leftCols<3>() = small_rotation(0.0146, 0.0075, -0.0007) * axes;
  c.tr_velo_to_cam.col(3) = Vec3(-0.004, -0.076, -0.272);
  c.frame_id = frame_id;
  return c;
}

ImageDims image_dims() { return {621, 188}; }

std::vector<SceneSpec> mini_scenes() {
  const auto ped = ObjectClass::pedestrian();
  const auto car = ObjectClass::car();
  const BoxSize ped_size{0.66, 0.84, 1.76};
  const BoxSize car_size{1.63, 3.88, 1.53};

  std::vector<SceneSpec> s(5);

  s[0].id = "000000";
  s[0].objects.push_back({ped, Vec3(3.0, 1.6, 65.0), 0.3, ped_size, 8, Layout::Cluster, 2, true,
                          0.92, true, false});
  s[0].objects.push_back({car, Vec3(-4.0, 1.65, 20.0), -1.5, car_size, 80, Layout::Volume, 0,
                          true, 0.95, true, true});
  {
    Box3D bogus;
    bogus.center = Vec3(6.0, 1.7, 80.0);
    bogus.size = car_size;
    bogus.cls = car;
    bogus.score = 0.7;
    s[0].extra_fallback.push_back(bogus);
  }

  s[1].id = "000001";
  s[1].objects.push_back({car, Vec3(-6.0, 1.7, 80.0), 1.2, car_size, 12, Layout::Volume, 0, true,
                          0.85, true, false});
  s[1].objects.push_back({ped, Vec3(2.0, 1.6, 15.0), 0.5, ped_size, 40, Layout::Volume, 0, true,
                          0.88, true, true});
  {
    LabelObject dc;
    dc.box.cls = ObjectClass::parse("DontCare");
    dc.dont_care = true;
    dc.bbox = {500, 80, 540, 100};
    dc.truncation = -1;
    dc.occlusion = -1;
    dc.alpha = -10;
    dc.box.size = {-1, -1, -1};
    dc.box.center = Vec3(-1000, -1000, -1000);
    dc.box.yaw = -10;
    s[1].dont_care.push_back(dc);
  }

  s[2].id = "000002";
  s[2].objects.push_back({car, Vec3(5.0, 1.7, 40.0), 0.2, car_size, 50, Layout::Volume, 0, true,
                          0.9, true, true});
  s[2].objects.push_back({ped, Vec3(-3.0, 1.6, 25.0), -0.4, ped_size, 30, Layout::Volume, 0, true,
                          0.8, false, true});

  s[3].id = "000003";

  s[4].id = "000004";
  s[4].objects.push_back({car, Vec3(1.5, 1.65, 10.0), 1.57, car_size, 100, Layout::Volume, 0, true,
                          0.97, true, true});
  s[4].extra_detections.push_back({"cyclist", 0.6, {100, 60, 120, 100}});
  s[4].extra_detections.push_back({"pedestrian", 0.4, {300, 0, 320, 10}});
  return s;
}

GeneratedDataset write_dataset(const std::vector<SceneSpec>& scenes, const fs::path& root,
                               std::uint64_t seed) {
  const ImageDims dims = image_dims();
  GeneratedDataset out;
  std::string frame_list;

  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const SceneSpec& scene = scenes[si];
    const CalibrationSet calib = calibration(scene.id);
    Rng rng(seed * 1000003 + si);

    std::vector<Vec3> cam;
    for (std::size_t i = 0; i < scene.ground_points; ++i) {
      cam.emplace_back(rng.uniform(-20, 20), 2.2 + rng.uniform(-0.03, 0.03), rng.uniform(4, 50));
    }

    std::vector<ObjectPoints> spans;
    for (const ObjectSpec& o : scene.objects) {
      ObjectPoints span;
      span.first = cam.size();
      const Vec3 mid = o.center - Vec3(0, 0.5 * o.size.h, 0);
      for (std::size_t k = 0; k < o.points; ++k) {
        if (o.layout == Layout::Cluster) {
          const auto& off = kClusterOffsets[k % std::size(kClusterOffsets)];
          const double dy = o.size.h * 0.6 * (static_cast<double>(k) / std::max<std::size_t>(1, o.points - 1) - 0.5);
          cam.push_back(mid + Vec3(off[0], dy, off[1]));
        } else {
          const Vec3 local(rng.uniform(-0.4, 0.4) * o.size.l, -o.size.h * rng.uniform(0.1, 0.9),
                           rng.uniform(-0.4, 0.4) * o.size.w);
          cam.push_back(o.center + rotate_about_y(local, o.yaw));
        }
      }
      span.inside = o.points;
      for (std::size_t k = 0; k < o.outliers; ++k) {
        const double depth = mid.z() + 20.0;
        cam.emplace_back(mid.x() * depth / mid.z() + 1.0, mid.y() + 0.1 * static_cast<double>(k),
                         depth);
      }
      span.outliers = o.outliers;
      spans.push_back(span);
    }
    for (std::size_t i = 0; i < scene.rear_points; ++i) {
      cam.emplace_back(rng.uniform(-20, 20), rng.uniform(-1, 2), rng.uniform(-30, -2));
    }
    std::vector<double> intensity(cam.size());
    for (double& v : intensity) v = rng.uniform(0, 1);

    // Round-trip through float32 so every derived quantity sees the bytes on disk.
    const PointCloud lidar_exact =
        camera_to_lidar(PointCloud(Frame::Camera, cam, intensity), calib);
    const auto velo_bytes = encode_pointcloud(lidar_exact);
    const PointCloud lidar = load_pointcloud(velo_bytes);
    const auto proj = project_to_image(lidar_to_camera(lidar, calib), calib);

    std::vector<LabelObject> labels;
    std::vector<Detection2D> detections;
    std::vector<Box3D> fallback;
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
      const ObjectSpec& o = scene.objects[oi];
      const ObjectPoints& span = spans[oi];
      LabelObject label;
      label.box = box_of(o);
      label.box.score = 1.0;
      label.bbox = project_box_to_image(label.box, calib, dims);
      label.alpha = wrap_angle(o.yaw - std::atan2(o.center.x(), o.center.z()));
      labels.push_back(label);

      PlantedObject planted;
      planted.frame_id = scene.id;
      planted.label = label;
      planted.points = o.points;
      planted.cluster_center =
          o.layout == Layout::Cluster ? Vec3(o.center - Vec3(0, 0.5 * o.size.h, 0)) : o.center;
      out.objects.push_back(planted);

      if (o.in_fallback) {
        Box3D fb = box_of(o);
        fb.center += Vec3(0.1, 0.0, 0.1);
        fb.score = 0.8;
        fallback.push_back(fb);
      }
      if (!o.detected) continue;

      BBox2D bbox = label.bbox;
      Bitmap mask(dims.width, dims.height);
      for (std::size_t i = span.first; i < span.first + span.inside + span.outliers; ++i) {
        if (!proj[i].valid) continue;
        bbox.u_min = std::min(bbox.u_min, proj[i].u);
        bbox.u_max = std::max(bbox.u_max, proj[i].u);
        bbox.v_min = std::min(bbox.v_min, proj[i].v);
        bbox.v_max = std::max(bbox.v_max, proj[i].v);
        const int pu = static_cast<int>(std::floor(proj[i].u));
        const int pv = static_cast<int>(std::floor(proj[i].v));
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int u = pu + du;
            const int v = pv + dv;
            if (u >= 0 && v >= 0 && u < dims.width && v < dims.height) mask.at(u, v) = 255;
          }
        }
      }
      bbox.u_min = std::max(0.0, std::floor(bbox.u_min) - 1);
      bbox.v_min = std::max(0.0, std::floor(bbox.v_min) - 1);
      bbox.u_max = std::min<double>(dims.width, std::ceil(bbox.u_max) + 1);
      bbox.v_max = std::min<double>(dims.height, std::ceil(bbox.v_max) + 1);

      Detection2D det;
      det.frame_id = scene.id;
      det.cls = o.cls;
      det.score = o.score;
      det.bbox = bbox;
      if (o.with_mask) {
        const std::string rel = fmt::format("masks/{}_{}.pgm", scene.id, oi);
        write_binary_file(root / "detections_2d" / rel, write_pgm(mask));
        det.mask.emplace(rel, dims.width, dims.height);
      }
      detections.push_back(std::move(det));
    }
    for (const auto& extra : scene.extra_detections) {
      Detection2D det;
      det.frame_id = scene.id;
      det.cls = ObjectClass::parse(extra.cls);
      det.score = extra.score;
      det.bbox = extra.bbox;
      detections.push_back(std::move(det));
    }
    for (const auto& b : scene.extra_fallback) fallback.push_back(b);
    for (const auto& dc : scene.dont_care) labels.push_back(dc);

    write_binary_file(root / "velodyne" / (scene.id + ".bin"), velo_bytes);
    write_text_file(root / "calib" / (scene.id + ".txt"), write_calibration(calib));
    write_text_file(root / "label_2" / (scene.id + ".txt"), write_labels(labels));
    write_text_file(root / "detections_2d" / (scene.id + ".txt"), write_detections(detections));
    write_text_file(root / "fallback" / (scene.id + ".txt"), write_results(fallback, calib, dims));
    frame_list += scene.id + '\n';
    out.frames.push_back(scene.id);
  }

  write_text_file(root / "frames.txt", frame_list);
  write_text_file(root / "config.txt",
                  fmt::format("# synthetic mini-dataset\n"
                              "image.width = {}\nimage.height = {}\n"
                              "frustum_mode = mask\nbin_width = 0.1\n"
                              "threshold.pedestrian = 60\nthreshold.car = 75\n"
                              "raster.grid = 32\nraster.extent = 4\n"
                              "min_frustum_points = 1\n",
                              dims.width, dims.height));
  return out;
}

}  // namespace faraway::synthetic

#include "faraway/kitti_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "faraway/error.hpp"
#include "faraway/geometry.hpp"

namespace faraway {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

template <int Rows, int Cols>
Eigen::Matrix<double, Rows, Cols> matrix_from(const std::vector<double>& values) {
  Eigen::Matrix<double, Rows, Cols> m;
  for (int r = 0; r < Rows; ++r) {
    for (int c = 0; c < Cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * Cols + c)];
  }
  return m;
}

std::string format_value(double v) {
  // Integral values stay short; everything else keeps enough digits to
  // reproduce the double exactly.
  return fmt::format("{:.17g}", v);
}

double parse_field(std::string_view token, ErrorCode code, std::string_view what) {
  double v = 0;
  if (!parse_double(token, v)) {
    throw Error(code, fmt::format("cannot parse '{}' in {}", token, what));
  }
  return v;
}

void require_finite(const Box3D& box) {
  const bool ok = box.center.allFinite() && std::isfinite(box.yaw) &&
                  std::isfinite(box.size.w) && std::isfinite(box.size.l) &&
                  std::isfinite(box.size.h) && std::isfinite(box.score);
  if (!ok) throw Error(ErrorCode::NonFiniteBox, "box holds a non-finite field");
}

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PgmHeader parse_pgm_header(std::span<const std::byte> bytes) {
  std::size_t pos = 0;
  auto peek = [&]() -> int {
    return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos]) : -1;
  };
  auto skip_space_and_comments = [&] {
    for (;;) {
      int c = peek();
      if (c == '#') {
        while (peek() != -1 && peek() != '\n') ++pos;
      } else if (c != -1 && std::isspace(c)) {
        ++pos;
      } else {
        return;
      }
    }
  };
  auto read_int = [&]() {
    skip_space_and_comments();
    int value = 0;
    int digits = 0;
    while (peek() >= '0' && peek() <= '9') {
      value = value * 10 + (peek() - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::BadPgm, "expected integer in PGM header");
    return value;
  };

  if (bytes.size() < 2 || peek() != 'P' || static_cast<char>(bytes[1]) != '5') {
    throw Error(ErrorCode::BadPgm, "not a binary (P5) PGM");
  }
  pos = 2;
  PgmHeader h;
  h.width = read_int();
  h.height = read_int();
  h.maxval = read_int();
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 255) {
    throw Error(ErrorCode::BadPgm, "unsupported PGM dimensions or maxval");
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::BadPgm, "missing separator after PGM header");
  }
  h.data_offset = pos + 1;
  return h;
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// ---------------------------------------------------------------------------
// Calibration

CalibrationSet parse_calibration(std::string_view text, std::string frame_id) {
  std::optional<std::vector<double>> p2, r0, tr;
  for (std::string_view line : split_lines(text)) {
    if (is_blank(line)) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::MalformedCalibLine, fmt::format("no key in line '{}'", line));
    }
    const auto key_fields = split_fields(line.substr(0, colon));
    if (key_fields.size() != 1) {
      throw Error(ErrorCode::MalformedCalibLine, fmt::format("bad key in line '{}'", line));
    }
    const std::string_view key = key_fields.front();
    std::optional<std::vector<double>>* slot = nullptr;
    std::size_t expected = 0;
    if (key == "P2") {
      slot = &p2;
      expected = 12;
    } else if (key == "R0_rect") {
      slot = &r0;
      expected = 9;
    } else if (key == "Tr_velo_to_cam") {
      slot = &tr;
      expected = 12;
    } else {
      continue;
    }
    const auto fields = split_fields(line.substr(colon + 1));
    if (fields.size() != expected) {
      throw Error(ErrorCode::MalformedCalibLine,
                  fmt::format("{} needs {} values, got {}", key, expected, fields.size()));
    }
    std::vector<double> values;
    values.reserve(expected);
    for (auto f : fields) values.push_back(parse_field(f, ErrorCode::MalformedCalibLine, key));
    *slot = std::move(values);
  }
  if (!p2) throw Error(ErrorCode::MissingCalibKey, "P2");
  if (!r0) throw Error(ErrorCode::MissingCalibKey, "R0_rect");
  if (!tr) throw Error(ErrorCode::MissingCalibKey, "Tr_velo_to_cam");

  CalibrationSet calib;
  calib.p2 = matrix_from<3, 4>(*p2);
  calib.r0_rect = matrix_from<3, 3>(*r0);
  calib.tr_velo_to_cam = matrix_from<3, 4>(*tr);
  calib.frame_id = std::move(frame_id);
  return calib;
}

CalibrationSet load_calibration(const std::filesystem::path& path) {
  return parse_calibration(read_text_file(path), path.stem().string());
}

std::string write_calibration(const CalibrationSet& calib) {
  auto row = [](std::string_view key, const auto& m) {
    std::string line(key);
    line += ':';
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) line += ' ' + format_value(m(r, c));
    }
    return line + '\n';
  };
  return row("P2", calib.p2) + row("R0_rect", calib.r0_rect) +
         row("Tr_velo_to_cam", calib.tr_velo_to_cam);
}

// ---------------------------------------------------------------------------
// Velodyne binaries

PointCloud load_pointcloud(std::span<const std::byte> bytes) {
  constexpr std::size_t kRecord = 4 * sizeof(float);
  if (bytes.size() % kRecord != 0) {
    throw Error(ErrorCode::TruncatedPointcloud,
                fmt::format("{} bytes is not a multiple of {}", bytes.size(), kRecord));
  }
  const std::size_t n = bytes.size() / kRecord;
  std::vector<Vec3> points;
  std::vector<double> intensities;
  points.reserve(n);
  intensities.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    for (int k = 0; k < 4; ++k) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + i * kRecord + k * 4, 4);
      if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap32(raw);
      v[k] = std::bit_cast<float>(raw);
      if (!std::isfinite(v[k])) {
        throw Error(ErrorCode::NonFinitePoint, fmt::format("record {} field {}", i, k));
      }
    }
    points.emplace_back(v[0], v[1], v[2]);
    intensities.push_back(v[3]);
  }
  return PointCloud(Frame::Lidar, std::move(points), std::move(intensities));
}

PointCloud load_pointcloud_file(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  return load_pointcloud(bytes);
}

std::vector<std::byte> encode_pointcloud(const PointCloud& cloud) {
  std::vector<std::byte> out(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points()[i];
    const float v[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                        static_cast<float>(p.z()),
                        cloud.intensities() ? static_cast<float>((*cloud.intensities())[i]) : 0.f};
    for (int k = 0; k < 4; ++k) {
      auto raw = std::bit_cast<std::uint32_t>(v[k]);
      if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap32(raw);
      std::memcpy(out.data() + i * 16 + k * 4, &raw, 4);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2D detections

std::vector<Detection2D> parse_detections(std::string_view text, ImageDims dims,
                                          const std::filesystem::path& base_dir) {
  std::vector<Detection2D> out;
  for (std::string_view line : split_lines(text)) {
    if (is_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 7 && f.size() != 8) {
      throw Error(ErrorCode::MalformedDetectionLine,
                  fmt::format("expected 7 or 8 fields, got {} in '{}'", f.size(), line));
    }
    Detection2D det;
    det.frame_id = std::string(f[0]);
    det.cls = ObjectClass::parse(f[1]);
    det.score = parse_field(f[2], ErrorCode::MalformedDetectionLine, "score");
    if (!(det.score >= 0.0 && det.score <= 1.0)) {
      throw Error(ErrorCode::BadScore, fmt::format("score {} outside [0,1]", f[2]));
    }
    det.bbox = {parse_field(f[3], ErrorCode::MalformedDetectionLine, "u_min"),
                parse_field(f[4], ErrorCode::MalformedDetectionLine, "v_min"),
                parse_field(f[5], ErrorCode::MalformedDetectionLine, "u_max"),
                parse_field(f[6], ErrorCode::MalformedDetectionLine, "v_max")};
    if (!(det.bbox.u_min < det.bbox.u_max) || !(det.bbox.v_min < det.bbox.v_max)) {
      throw Error(ErrorCode::BadBBox, fmt::format("inverted box in '{}'", line));
    }
    if (f.size() == 8) {
      std::filesystem::path mask_path{std::string(f[7])};
      if (mask_path.is_relative() && !base_dir.empty()) mask_path = base_dir / mask_path;
      const ImageDims mask_dims = read_pgm_dims(mask_path);
      if (mask_dims != dims) {
        throw Error(ErrorCode::MaskDimMismatch,
                    fmt::format("{} is {}x{}, image is {}x{}", mask_path.string(),
                                mask_dims.width, mask_dims.height, dims.width, dims.height));
      }
      det.mask.emplace(mask_path, mask_dims.width, mask_dims.height);
    }
    out.push_back(std::move(det));
  }
  return out;
}

std::string write_detections(std::span<const Detection2D> detections) {
  std::string out;
  for (const auto& d : detections) {
    out += fmt::format("{} {} {} {} {} {} {}", d.frame_id, d.cls.name, format_value(d.score),
                       format_value(d.bbox.u_min), format_value(d.bbox.v_min),
                       format_value(d.bbox.u_max), format_value(d.bbox.v_max));
    if (d.mask && !d.mask->path().empty()) out += ' ' + d.mask->path().generic_string();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels and results

std::vector<LabelObject> parse_labels(std::string_view text) {
  std::vector<LabelObject> out;
  for (std::string_view line : split_lines(text)) {
    if (is_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 15 && f.size() != 16) {
      throw Error(ErrorCode::MalformedLabelLine,
                  fmt::format("expected 15 or 16 fields, got {} in '{}'", f.size(), line));
    }
    double v[15];
    for (std::size_t i = 1; i < f.size(); ++i) {
      v[i - 1] = parse_field(f[i], ErrorCode::MalformedLabelLine, "label");
    }
    LabelObject obj;
    obj.box.cls = ObjectClass::parse(f[0]);
    obj.dont_care = obj.box.cls.name == "dontcare";
    obj.truncation = v[0];
    obj.occlusion = static_cast<int>(v[1]);
    obj.alpha = v[2];
    obj.bbox = {v[3], v[4], v[5], v[6]};
    obj.box.size = {v[8], v[9], v[7]};  // file order h w l
    obj.box.center = Vec3(v[10], v[11], v[12]);
    obj.box.yaw = v[13];
    obj.box.score = f.size() == 16 ? v[14] : 1.0;
    out.push_back(std::move(obj));
  }
  return out;
}

namespace {

std::string label_line(const ObjectClass& cls, double truncation, int occlusion, double alpha,
                       const BBox2D& bbox, const Box3D& box, const double* score) {
  std::string line = fmt::format(
      "{} {:.2f} {} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f} "
      "{:.6f} {:.6f}",
      cls.kitti_name(), truncation, occlusion, alpha, bbox.u_min, bbox.v_min, bbox.u_max,
      bbox.v_max, box.size.h, box.size.w, box.size.l, box.center.x(), box.center.y(),
      box.center.z(), box.yaw);
  if (score) line += fmt::format(" {:.6f}", *score);
  return line + '\n';
}

}  // namespace

std::string write_labels(std::span<const LabelObject> labels, bool with_score) {
  std::string out;
  for (const auto& l : labels) {
    if (!l.dont_care) require_finite(l.box);
    out += label_line(l.box.cls, l.truncation, l.occlusion, l.alpha, l.bbox, l.box,
                      with_score ? &l.box.score : nullptr);
  }
  return out;
}

BBox2D project_box_to_image(const Box3D& box, const CalibrationSet& calib, ImageDims dims) {
  const auto corners = box_corners(box);
  bool any = false;
  BBox2D b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& c : corners) {
    const Vec3 uvw = calib.p2 * c.homogeneous();
    if (!(uvw.z() > 0)) continue;
    any = true;
    const double u = uvw.x() / uvw.z();
    const double v = uvw.y() / uvw.z();
    b.u_min = std::min(b.u_min, u);
    b.v_min = std::min(b.v_min, v);
    b.u_max = std::max(b.u_max, u);
    b.v_max = std::max(b.v_max, v);
  }
  if (!any) return {};
  const double w = dims.width - 1;
  const double h = dims.height - 1;
  b.u_min = std::clamp(b.u_min, 0.0, w);
  b.u_max = std::clamp(b.u_max, 0.0, w);
  b.v_min = std::clamp(b.v_min, 0.0, h);
  b.v_max = std::clamp(b.v_max, 0.0, h);
  return b;
}

std::string write_results(std::span<const Box3D> boxes, const CalibrationSet& calib,
                          ImageDims dims) {
  std::string out;
  for (const auto& box : boxes) {
    require_finite(box);
    const BBox2D bbox = project_box_to_image(box, calib, dims);
    const double alpha = wrap_angle(box.yaw - std::atan2(box.center.x(), box.center.z()));
    out += label_line(box.cls, 0.0, 0, alpha, bbox, box, &box.score);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PGM

Bitmap read_pgm(std::span<const std::byte> bytes) {
  const PgmHeader h = parse_pgm_header(bytes);
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < n) {
    throw Error(ErrorCode::BadPgm, "PGM pixel data truncated");
  }
  Bitmap bmp(h.width, h.height);
  std::memcpy(bmp.pixels.data(), bytes.data() + h.data_offset, n);
  return bmp;
}

Bitmap read_pgm_file(const std::filesystem::path& path) {
  try {
    return read_pgm(read_binary_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BadPgm) throw;
    throw Error(ErrorCode::BadPgm, path.string() + ": " + e.what());
  }
}

ImageDims read_pgm_dims(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> head(256);
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const PgmHeader h = parse_pgm_header(std::as_bytes(std::span(head)));
  return {h.width, h.height};
}

std::vector<std::byte> write_pgm(const Bitmap& bitmap) {
  const std::string header = fmt::format("P5\n{} {}\n255\n", bitmap.width, bitmap.height);
  std::vector<std::byte> out(header.size() + bitmap.pixels.size());
  std::memcpy(out.data(), header.data(), header.size());
  std::memcpy(out.data() + header.size(), bitmap.pixels.data(), bitmap.pixels.size());
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_binary_file(path, std::as_bytes(std::span(text.data(), text.size())));
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace faraway

#include "faraway/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>

#include <fmt/format.h>

#include "faraway/geometry.hpp"

namespace faraway {

namespace {

struct Canvas {
  const RenderOptions& o;
  int width() const {
    return static_cast<int>(std::lround((o.x_max - o.x_min) * o.pixels_per_meter));
  }
  int height() const {
    return static_cast<int>(std::lround((o.z_max - o.z_min) * o.pixels_per_meter));
  }
  double px(double x) const { return (x - o.x_min) * o.pixels_per_meter; }
  double py(double z) const { return (o.z_max - z) * o.pixels_per_meter; }
  bool inside(double x, double z) const {
    return x >= o.x_min && x <= o.x_max && z >= o.z_min && z <= o.z_max;
  }
};

std::string svg_box(const Box3D& b, const Canvas& c, std::string_view cls) {
  const double cx = c.px(b.center.x());
  const double cy = c.py(b.center.z());
  const double w = b.size.l * c.o.pixels_per_meter;
  const double h = b.size.w * c.o.pixels_per_meter;
  const double degrees = b.yaw * 180.0 / std::numbers::pi;
  return fmt::format(
      "<rect class=\"{}\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
      "transform=\"rotate({:.6f} {:.3f} {:.3f})\"/>\n",
      cls, cx - 0.5 * w, cy - 0.5 * h, w, h, degrees, cx, cy);
}

using Rgb = std::array<std::uint8_t, 3>;

struct Raster {
  int w, h;
  std::vector<std::uint8_t> rgb;
  void set(int x, int y, Rgb col) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    std::memcpy(&rgb[(static_cast<std::size_t>(y) * w + x) * 3], col.data(), 3);
  }
  void line(double x0, double y0, double x1, double y1, Rgb col) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      set(static_cast<int>(std::floor(x0 + t * (x1 - x0))),
          static_cast<int>(std::floor(y0 + t * (y1 - y0))), col);
    }
  }
};

}  // namespace

std::string render_bev_svg(const BevScene& scene, const RenderOptions& options) {
  const Canvas c{options};
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" style=\"background:#ffffff\">\n"
      "<style>.gt{{fill:none;stroke:#1a9641;stroke-width:1.5}}"
      ".pred{{fill:none;stroke:#d7191c;stroke-width:1.5;stroke-dasharray:3 2}}"
      "circle{{fill:#404040}}</style>\n",
      c.width(), c.height(), c.width(), c.height());
  out += "<g class=\"points\">\n";
  for (const auto& p : scene.points) {
    if (!c.inside(p.x(), p.z())) continue;
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"0.8\"/>\n", c.px(p.x()), c.py(p.z()));
  }
  out += "</g>\n";
  for (const auto& b : scene.gt) out += svg_box(b, c, "gt");
  for (const auto& b : scene.pred) out += svg_box(b, c, "pred");
  out += "</svg>\n";
  return out;
}

std::vector<std::byte> render_bev_ppm(const BevScene& scene, const RenderOptions& options) {
  const Canvas c{options};
  Raster r{c.width(), c.height(), {}};
  r.rgb.assign(static_cast<std::size_t>(r.w) * r.h * 3, 255);
  for (const auto& p : scene.points) {
    if (!c.inside(p.x(), p.z())) continue;
    r.set(static_cast<int>(std::floor(c.px(p.x()))), static_cast<int>(std::floor(c.py(p.z()))),
          {64, 64, 64});
  }
  auto draw = [&](const Box3D& b, Rgb col) {
    const auto corners = bev_corners(b);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& a = corners[i];
      const auto& d = corners[(i + 1) % 4];
      r.line(c.px(a.x()), c.py(a.y()), c.px(d.x()), c.py(d.y()), col);
    }
  };
  for (const auto& b : scene.gt) draw(b, {26, 150, 65});
  for (const auto& b : scene.pred) draw(b, {215, 25, 28});

  const std::string header = fmt::format("P6\n{} {}\n255\n", r.w, r.h);
  std::vector<std::byte> out(header.size() + r.rgb.size());
  std::memcpy(out.data(), header.data(), header.size());
  std::memcpy(out.data() + header.size(), r.rgb.data(), r.rgb.size());
  return out;
}

std::string render_stats_svg(std::span<const ObjectPointCount> rows, double reference_points) {
  constexpr double kWidth = 640;
  constexpr double kHeight = 400;
  constexpr double kMargin = 40;
  double max_depth = 100;
  double max_points = std::max(20.0, 2 * reference_points);
  for (const auto& r : rows) {
    max_depth = std::max(max_depth, std::ceil(r.depth / 10) * 10);
    max_points = std::max(max_points, static_cast<double>(r.points));
  }
  auto sx = [&](double d) { return kMargin + d / max_depth * (kWidth - 2 * kMargin); };
  auto sy = [&](double n) { return kHeight - kMargin - n / max_points * (kHeight - 2 * kMargin); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n"
      "<style>.car{{fill:#2b83ba}}.pedestrian{{fill:#d7191c}}.other{{fill:#808080}}"
      ".ref{{stroke:#000;stroke-dasharray:4 3}}.axis{{stroke:#000}}</style>\n",
      kWidth, kHeight);
  out += fmt::format("<line class=\"axis\" x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\"/>\n", kMargin,
                     kHeight - kMargin, kWidth - kMargin);
  out += fmt::format("<line class=\"axis\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>\n", kMargin,
                     kHeight - kMargin, kMargin);
  out += fmt::format(
      "<line class=\"ref\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n", sx(0),
      sy(reference_points), sx(max_depth), sy(reference_points));
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">{} points</text>\n",
                     sx(max_depth) - 50, sy(reference_points) - 4, reference_points);
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\">depth (m), 0-{}</text>\n",
                     kWidth / 2 - 40, kHeight - 10, max_depth);
  for (const auto& r : rows) {
    const std::string_view cls =
        (r.cls == "car" || r.cls == "pedestrian") ? std::string_view(r.cls) : "other";
    out += fmt::format("<circle class=\"{}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\"/>\n", cls,
                       sx(r.depth), sy(static_cast<double>(r.points)));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace faraway

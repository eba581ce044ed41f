#include "faraway/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "faraway/error.hpp"

namespace faraway {

std::size_t AxisHistogram::bin_of(double value) const {
  const std::size_t n = counts.size();
  const double raw = std::floor((value - origin) / bin_width);
  std::size_t k = raw <= 0 ? 0 : std::min(static_cast<std::size_t>(raw), n - 1);
  // The division can land one bin off near an edge; settle on the edges.
  while (k + 1 < n && value >= left_edge(k + 1)) ++k;
  while (k > 0 && value < left_edge(k)) --k;
  return k;
}

std::size_t AxisHistogram::modal_bin() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                  counts.begin());
}

AxisHistogram axis_histogram(std::span<const double> values, double bin_width, Axis axis) {
  if (values.empty()) throw Error(ErrorCode::EmptyCluster, "histogram of no values");
  if (!(bin_width > 0) || !std::isfinite(bin_width)) {
    throw Error(ErrorCode::ConfigError, "bin width must be positive and finite");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  AxisHistogram h;
  h.axis = axis;
  h.origin = *lo;
  h.bin_width = bin_width;

  // One bin per left edge not beyond the maximum.
  std::size_t n = static_cast<std::size_t>(std::floor((*hi - *lo) / bin_width)) + 1;
  while (h.left_edge(n) <= *hi) ++n;
  while (n > 1 && h.left_edge(n - 1) > *hi) --n;
  h.counts.assign(n, 0);
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

Vec3 estimate_centroid(const PointCloud& cloud, double bin_width) {
  if (cloud.frame() != Frame::Frustum) {
    throw Error(ErrorCode::FrameMismatch, "centroid estimation runs in the frustum frame");
  }
  if (cloud.empty()) throw Error(ErrorCode::EmptyCluster, "no points in frustum");
  std::vector<double> values(cloud.size());
  Vec3 centroid;
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < cloud.size(); ++i) values[i] = cloud.points()[i][a];
    const auto h = axis_histogram(values, bin_width, static_cast<Axis>(a));
    centroid[a] = h.midpoint(h.modal_bin());
  }
  return centroid;
}

}  // namespace faraway

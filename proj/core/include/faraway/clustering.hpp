#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "faraway/types.hpp"

namespace faraway {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr double kDefaultBinWidth = 0.1;

// Fixed-width histogram anchored at the minimum value. Bin j spans
// [min + j*width, min + (j+1)*width) and there is one bin per left edge not
// beyond the maximum, so the maximum always lands in the last bin.
struct AxisHistogram {
  Axis axis = Axis::X;
  double origin = 0;
  double bin_width = 0;
  std::vector<std::size_t> counts;

  std::size_t bin_count() const { return counts.size(); }
  double left_edge(std::size_t j) const { return origin + static_cast<double>(j) * bin_width; }
  double right_edge(std::size_t j) const { return left_edge(j + 1); }
  double midpoint(std::size_t j) const { return 0.5 * (left_edge(j) + right_edge(j)); }
  // Bin holding `value`, decided by comparisons against the edges above.
  std::size_t bin_of(double value) const;
  // First bin with the largest count.
  std::size_t modal_bin() const;
};

AxisHistogram axis_histogram(std::span<const double> values, double bin_width,
                             Axis axis = Axis::X);

// Per-axis modal-bin midpoints of a frustum cloud.
Vec3 estimate_centroid(const PointCloud& cloud, double bin_width = kDefaultBinWidth);

}  // namespace faraway

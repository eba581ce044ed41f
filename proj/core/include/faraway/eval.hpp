#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faraway/geometry.hpp"
#include "faraway/pipeline.hpp"
#include "faraway/types.hpp"

namespace faraway {

// Intersection area of two convex counter-clockwise polygons.
double convex_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b);
double polygon_area(std::span<const Vec2> poly);

// Rotated-rectangle IoU in the (x, z) ground plane. ZeroAreaBox if either
// footprint is degenerate.
double bev_iou(const Box3D& a, const Box3D& b);
// BEV intersection times vertical overlap, over the union of volumes.
double iou_3d(const Box3D& a, const Box3D& b);

enum class IouKind { Bev, ThreeD };

double box_iou(const Box3D& a, const Box3D& b, IouKind kind);

// Ground truth and predictions of one frame.
struct EvalFrame {
  std::string id;
  std::vector<Box3D> gt;
  std::vector<Box3D> pred;
};

struct MatchRecord {
  std::string frame_id;
  std::size_t gt_index = 0;
  std::optional<std::size_t> pred_index;
  double iou = 0;
};

struct AverageIou {
  std::optional<double> value;  // absent when there is no GT
  std::size_t n = 0;
  std::vector<MatchRecord> matches;
};

// Greedy one-to-one matching on same-class BEV IoU, highest pair first;
// unmatched GT contribute 0. GT outside the faraway range are dropped first
// when `thresholds` is given.
AverageIou average_iou(std::span<const EvalFrame> frames, const ObjectClass& cls,
                       const ThresholdMap* thresholds = nullptr);
AverageIou average_iou(std::span<const Box3D> gt, std::span<const Box3D> pred,
                       const ThresholdMap* thresholds = nullptr);

// 11-recall-point interpolated AP in percent over all frames for one class.
// Absent when the class has no GT.
std::optional<double> ap_11point(std::span<const EvalFrame> frames, const ObjectClass& cls,
                                 double iou_threshold, IouKind kind);
std::optional<double> ap_11point(std::span<const Box3D> gt, std::span<const Box3D> pred,
                                 double iou_threshold, IouKind kind);

enum class Difficulty { Easy, Moderate, Hard };

struct EvalOptions {
  double iou_threshold = 0.1;
  bool faraway_only = false;
  ThresholdMap thresholds = default_thresholds();
  std::optional<Difficulty> difficulty;
};

struct ClassReport {
  std::string cls;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  std::optional<double> aiou;
  std::optional<double> ap_bev;
  std::optional<double> ap_3d;
};

struct EvalReport {
  std::vector<ClassReport> classes;
  std::vector<MatchRecord> matches;

  const ClassReport* find(std::string_view cls) const;
  std::string to_table() const;
  // One "class,metric,value" line per defined metric.
  std::string to_machine() const;
};

// Builds the evaluation frames from label rows: DontCare rows are removed,
// the difficulty filter and (with faraway_only) the depth filter applied.
EvalFrame make_eval_frame(std::string id, std::span<const LabelObject> labels,
                          std::span<const Box3D> predictions, const EvalOptions& options);

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalOptions& options);

struct ObjectPointCount {
  std::string frame_id;
  std::string cls;
  double depth = 0;
  std::size_t points = 0;
};

struct StatsFrame {
  std::string id;
  PointCloud lidar;
  CalibrationSet calib;
  std::vector<LabelObject> labels;
};

// Lidar points inside every non-DontCare GT box (closed boundaries).
std::vector<ObjectPointCount> points_per_object_stats(std::span<const StatsFrame> frames);

}  // namespace faraway

#include "faraway/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "faraway/error.hpp"

namespace faraway {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool same_box(const Box3D& a, const Box3D& b) {
  return a.center == b.center && a.yaw == b.yaw && a.size.w == b.size.w &&
         a.size.l == b.size.l && a.size.h == b.size.h;
}

void require_area(const Box3D& b) {
  if (!(b.size.w > 0) || !(b.size.l > 0)) {
    throw Error(ErrorCode::ZeroAreaBox, "box footprint has zero area");
  }
}

auto box_key(const Box3D& b) {
  return std::tuple(b.center.x(), b.center.y(), b.center.z(), b.yaw, b.size.w, b.size.l, b.size.h);
}

// Clipping is not exactly symmetric in floating point, so always clip in the
// same order; the IoU is then bit-identical with swapped arguments.
double bev_intersection(const Box3D& a, const Box3D& b) {
  if (box_key(b) < box_key(a)) return bev_intersection(b, a);
  const auto pa = bev_corners(a);
  const auto pb = bev_corners(b);
  return convex_intersection_area(pa, pb);
}

}  // namespace

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * twice;
}

double convex_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  // Sutherland-Hodgman: clip `a` by every edge of `b`.
  std::vector<Vec2> out(a.begin(), a.end());
  std::vector<Vec2> in;
  for (std::size_t e = 0; e < b.size() && !out.empty(); ++e) {
    const Vec2& p1 = b[e];
    const Vec2 dir = b[(e + 1) % b.size()] - p1;
    in.swap(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& s = in[i];
      const Vec2& t = in[(i + 1) % in.size()];
      const double ds = cross(dir, s - p1);
      const double dt = cross(dir, t - p1);
      if (ds >= 0 && dt >= 0) {
        out.push_back(t);
      } else if (ds >= 0) {
        out.push_back(s + (t - s) * (ds / (ds - dt)));
      } else if (dt >= 0) {
        out.push_back(s + (t - s) * (ds / (ds - dt)));
        out.push_back(t);
      }
    }
  }
  return std::max(0.0, polygon_area(out));
}

double bev_iou(const Box3D& a, const Box3D& b) {
  require_area(a);
  require_area(b);
  if (same_box(a, b)) return 1.0;
  const double inter = bev_intersection(a, b);
  const double uni = a.size.w * a.size.l + b.size.w * b.size.l - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  require_area(a);
  require_area(b);
  if (!(a.size.h > 0) || !(b.size.h > 0)) throw Error(ErrorCode::ZeroAreaBox, "box has zero height");
  if (same_box(a, b)) return 1.0;
  const double top = std::max(a.center.y() - a.size.h, b.center.y() - b.size.h);
  const double bottom = std::min(a.center.y(), b.center.y());
  const double overlap = bottom - top;
  if (overlap <= 0) return 0.0;
  const double inter = bev_intersection(a, b) * overlap;
  const double uni = a.size.w * a.size.l * a.size.h + b.size.w * b.size.l * b.size.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double box_iou(const Box3D& a, const Box3D& b, IouKind kind) {
  return kind == IouKind::Bev ? bev_iou(a, b) : iou_3d(a, b);
}

// ---------------------------------------------------------------------------
// aIoU

AverageIou average_iou(std::span<const EvalFrame> frames, const ObjectClass& cls,
                       const ThresholdMap* thresholds) {
  AverageIou result;
  double sum = 0;
  for (const EvalFrame& f : frames) {
    std::vector<std::size_t> gt;
    for (std::size_t i = 0; i < f.gt.size(); ++i) {
      if (!(f.gt[i].cls == cls)) continue;
      if (thresholds && !is_faraway(f.gt[i].center.z(), cls, *thresholds)) continue;
      gt.push_back(i);
    }
    std::vector<std::size_t> pred;
    for (std::size_t j = 0; j < f.pred.size(); ++j) {
      if (f.pred[j].cls == cls) pred.push_back(j);
    }

    struct Pair {
      double iou;
      std::size_t g, p;
    };
    std::vector<Pair> pairs;
    for (std::size_t g : gt) {
      for (std::size_t p : pred) {
        const double iou = bev_iou(f.gt[g], f.pred[p]);
        if (iou > 0) pairs.push_back({iou, g, p});
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
      return std::tie(y.iou, x.g, x.p) < std::tie(x.iou, y.g, y.p);
    });
    std::map<std::size_t, MatchRecord> by_gt;
    std::set<std::size_t> used_pred;
    for (const Pair& pr : pairs) {
      if (by_gt.contains(pr.g) || used_pred.contains(pr.p)) continue;
      by_gt[pr.g] = {f.id, pr.g, pr.p, pr.iou};
      used_pred.insert(pr.p);
    }
    for (std::size_t g : gt) {
      auto it = by_gt.find(g);
      MatchRecord rec = it != by_gt.end() ? it->second : MatchRecord{f.id, g, std::nullopt, 0.0};
      sum += rec.iou;
      result.matches.push_back(std::move(rec));
    }
    result.n += gt.size();
  }
  if (result.n > 0) result.value = sum / static_cast<double>(result.n);
  return result;
}

AverageIou average_iou(std::span<const Box3D> gt, std::span<const Box3D> pred,
                       const ThresholdMap* thresholds) {
  // Evaluate each GT class separately, then pool the per-GT IoUs.
  std::vector<ObjectClass> classes;
  for (const auto& b : gt) {
    if (std::find(classes.begin(), classes.end(), b.cls) == classes.end()) classes.push_back(b.cls);
  }
  const EvalFrame frame{"", {gt.begin(), gt.end()}, {pred.begin(), pred.end()}};
  AverageIou pooled;
  double sum = 0;
  for (const auto& c : classes) {
    const AverageIou part = average_iou(std::span(&frame, 1), c, thresholds);
    pooled.n += part.n;
    for (const auto& m : part.matches) {
      sum += m.iou;
      pooled.matches.push_back(m);
    }
  }
  if (pooled.n > 0) pooled.value = sum / static_cast<double>(pooled.n);
  return pooled;
}

// ---------------------------------------------------------------------------
// 11-point AP

std::optional<double> ap_11point(std::span<const EvalFrame> frames, const ObjectClass& cls,
                                 double iou_threshold, IouKind kind) {
  struct Candidate {
    double score;
    std::size_t frame, index;
  };
  std::vector<Candidate> preds;
  std::size_t n_gt = 0;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    for (const auto& g : frames[fi].gt) n_gt += g.cls == cls ? 1 : 0;
    for (std::size_t j = 0; j < frames[fi].pred.size(); ++j) {
      if (frames[fi].pred[j].cls == cls) preds.push_back({frames[fi].pred[j].score, fi, j});
    }
  }
  if (n_gt == 0) return std::nullopt;
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> gt_used(frames.size());
  for (std::size_t fi = 0; fi < frames.size(); ++fi) gt_used[fi].assign(frames[fi].gt.size(), false);

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const EvalFrame& f = frames[preds[k].frame];
    const Box3D& p = f.pred[preds[k].index];
    std::optional<std::size_t> best;
    double best_iou = -1;
    for (std::size_t g = 0; g < f.gt.size(); ++g) {
      if (gt_used[preds[k].frame][g] || !(f.gt[g].cls == cls)) continue;
      const double iou = box_iou(p, f.gt[g], kind);
      if (iou >= iou_threshold && iou > best_iou) {
        best = g;
        best_iou = iou;
      }
    }
    if (best) {
      gt_used[preds[k].frame][*best] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }

  double ap = 0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    double best = 0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      if (recall[k] >= r) best = std::max(best, precision[k]);
    }
    ap += best;
  }
  return 100.0 * ap / 11.0;
}

std::optional<double> ap_11point(std::span<const Box3D> gt, std::span<const Box3D> pred,
                                 double iou_threshold, IouKind kind) {
  if (gt.empty()) return std::nullopt;
  const EvalFrame frame{"", {gt.begin(), gt.end()}, {pred.begin(), pred.end()}};
  // Single-class sets are the common case; mixed sets average over classes.
  std::vector<ObjectClass> classes;
  for (const auto& b : gt) {
    if (std::find(classes.begin(), classes.end(), b.cls) == classes.end()) classes.push_back(b.cls);
  }
  double sum = 0;
  for (const auto& c : classes) sum += *ap_11point(std::span(&frame, 1), c, iou_threshold, kind);
  return sum / static_cast<double>(classes.size());
}

// ---------------------------------------------------------------------------
// Report

namespace {

bool passes_difficulty(const LabelObject& l, Difficulty d) {
  double min_height = 25;
  int max_occ = 2;
  double max_trunc = 0.5;
  switch (d) {
    case Difficulty::Easy:
      min_height = 40;
      max_occ = 0;
      max_trunc = 0.15;
      break;
    case Difficulty::Moderate:
      max_occ = 1;
      max_trunc = 0.3;
      break;
    case Difficulty::Hard: break;
  }
  return l.bbox.height() >= min_height && l.occlusion <= max_occ && l.truncation <= max_trunc;
}

bool in_range(const Box3D& b, const EvalOptions& o) {
  if (!o.faraway_only) return true;
  const auto it = o.thresholds.find(b.cls.name);
  return it != o.thresholds.end() && b.center.z() >= it->second;
}

std::string fmt_opt(const std::optional<double>& v, int precision) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string("-");
}

}  // namespace

EvalFrame make_eval_frame(std::string id, std::span<const LabelObject> labels,
                          std::span<const Box3D> predictions, const EvalOptions& options) {
  EvalFrame f;
  f.id = std::move(id);
  for (const auto& l : labels) {
    if (l.dont_care) continue;
    if (options.difficulty && !passes_difficulty(l, *options.difficulty)) continue;
    if (!in_range(l.box, options)) continue;
    f.gt.push_back(l.box);
  }
  for (const auto& p : predictions) {
    if (in_range(p, options)) f.pred.push_back(p);
  }
  return f;
}

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalOptions& options) {
  std::map<std::string, ObjectClass> classes;
  for (const auto& f : frames) {
    for (const auto& b : f.gt) classes.emplace(b.cls.name, b.cls);
    for (const auto& b : f.pred) classes.emplace(b.cls.name, b.cls);
  }
  if (options.faraway_only) {
    for (const auto& [name, _] : options.thresholds) classes.emplace(name, ObjectClass::parse(name));
  }

  EvalReport report;
  for (const auto& [name, cls] : classes) {
    ClassReport cr;
    cr.cls = name;
    for (const auto& f : frames) {
      cr.n_gt += static_cast<std::size_t>(std::count_if(
          f.gt.begin(), f.gt.end(), [&](const Box3D& b) { return b.cls == cls; }));
      cr.n_pred += static_cast<std::size_t>(std::count_if(
          f.pred.begin(), f.pred.end(), [&](const Box3D& b) { return b.cls == cls; }));
    }
    AverageIou a = average_iou(frames, cls);
    cr.aiou = a.value;
    cr.ap_bev = ap_11point(frames, cls, options.iou_threshold, IouKind::Bev);
    cr.ap_3d = ap_11point(frames, cls, options.iou_threshold, IouKind::ThreeD);
    for (auto& m : a.matches) report.matches.push_back(std::move(m));
    report.classes.push_back(std::move(cr));
  }
  return report;
}

const ClassReport* EvalReport::find(std::string_view cls) const {
  for (const auto& c : classes) {
    if (c.cls == cls) return &c;
  }
  return nullptr;
}

std::string EvalReport::to_table() const {
  std::string out = fmt::format("{:<12} {:>6} {:>6} {:>8} {:>8} {:>8}\n", "class", "n_gt",
                                "n_pred", "aIoU", "AP_bev", "AP_3d");
  for (const auto& c : classes) {
    out += fmt::format("{:<12} {:>6} {:>6} {:>8} {:>8} {:>8}\n", c.cls, c.n_gt, c.n_pred,
                       fmt_opt(c.aiou, 3), fmt_opt(c.ap_bev, 2), fmt_opt(c.ap_3d, 2));
  }
  return out;
}

std::string EvalReport::to_machine() const {
  std::string out;
  auto emit = [&](const std::string& cls, std::string_view metric, const std::optional<double>& v) {
    if (v) out += fmt::format("{},{},{:.6f}\n", cls, metric, *v);
  };
  for (const auto& c : classes) {
    out += fmt::format("{},n_gt,{}\n{},n_pred,{}\n", c.cls, c.n_gt, c.cls, c.n_pred);
    emit(c.cls, "aiou", c.aiou);
    emit(c.cls, "ap_bev", c.ap_bev);
    emit(c.cls, "ap_3d", c.ap_3d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Points per object

std::vector<ObjectPointCount> points_per_object_stats(std::span<const StatsFrame> frames) {
  std::vector<ObjectPointCount> out;
  for (const auto& f : frames) {
    const PointCloud cam = lidar_to_camera(f.lidar, f.calib);
    for (const auto& l : f.labels) {
      if (l.dont_care) continue;
      const auto n = static_cast<std::size_t>(
          std::count_if(cam.points().begin(), cam.points().end(),
                        [&](const Vec3& p) { return box_contains(l.box, p); }));
      out.push_back({f.id, l.box.cls.name, l.box.center.z(), n});
    }
  }
  return out;
}

}  // namespace faraway

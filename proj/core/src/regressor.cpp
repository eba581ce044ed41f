#include "faraway/regressor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "faraway/clustering.hpp"
#include "faraway/error.hpp"
#include "faraway/kitti_io.hpp"

namespace faraway {

namespace {

constexpr double kPi = std::numbers::pi;

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double clamp_yaw(double raw) {
  if (raw >= kPi) return kPi;
  if (raw <= -kPi) return kPi;  // -pi and pi are the same heading
  return raw;
}

// Uniform double in [0, 1) from the top 53 bits; avoids the
// implementation-defined std::uniform_real_distribution.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

struct Activations {
  std::vector<double> hidden;
  std::array<double, kRegressionOutputs> raw{};
};

void check_shape(const RegressorParams& params, const BevRaster& raster) {
  if (raster.grid != params.grid ||
      raster.class_onehot.size() != static_cast<std::size_t>(params.classes) ||
      params.weights.size() != params.parameter_count() ||
      params.priors.size() != static_cast<std::size_t>(params.classes)) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("raster grid {} / {} classes vs params grid {} / {} classes",
                            raster.grid, raster.class_onehot.size(), params.grid,
                            params.classes));
  }
  if (raster.class_index >= static_cast<std::size_t>(params.classes)) {
    throw Error(ErrorCode::UnknownClass, "raster class index out of range");
  }
}

// Visits the non-zero inputs: raster cells first, then the one-hot entry.
template <typename F>
void for_each_input(const BevRaster& raster, F&& f) {
  const std::size_t cells = raster.cells.size();
  for (std::size_t k = 0; k < cells; ++k) {
    if (raster.cells[k] != 0) f(k, static_cast<double>(raster.cells[k]));
  }
  for (std::size_t c = 0; c < raster.class_onehot.size(); ++c) {
    if (raster.class_onehot[c] != 0.0) f(cells + c, raster.class_onehot[c]);
  }
}

Activations activate(const RegressorParams& p, const BevRaster& raster) {
  const auto hidden = static_cast<std::size_t>(p.hidden);
  const double* w = p.weights.data();
  Activations a;
  a.hidden.assign(w + p.b1_offset(), w + p.b1_offset() + hidden);
  for_each_input(raster, [&](std::size_t k, double x) {
    const double* col = w + k * hidden;
    for (std::size_t j = 0; j < hidden; ++j) a.hidden[j] += col[j] * x;
  });
  for (double& h : a.hidden) h = std::tanh(h);
  for (int o = 0; o < kRegressionOutputs; ++o) {
    const double* row = w + p.w2_offset() + static_cast<std::size_t>(o) * hidden;
    double acc = w[p.b2_offset() + static_cast<std::size_t>(o)];
    for (std::size_t j = 0; j < hidden; ++j) acc += row[j] * a.hidden[j];
    a.raw[static_cast<std::size_t>(o)] = acc;
  }
  return a;
}

BoxRegression map_outputs(const std::array<double, kRegressionOutputs>& raw, const BoxSize& prior) {
  BoxRegression r;
  r.shift = Vec3(raw[0], raw[1], raw[2]);
  r.size = {prior.w * std::exp(raw[3]), prior.l * std::exp(raw[4]), prior.h * std::exp(raw[5])};
  r.yaw = clamp_yaw(raw[6]);
  return r;
}

}  // namespace

const std::vector<ObjectClass>& regressor_classes() {
  static const std::vector<ObjectClass> classes{ObjectClass::pedestrian(), ObjectClass::car()};
  return classes;
}

std::size_t regressor_class_index(const ObjectClass& cls) {
  const auto& classes = regressor_classes();
  const auto it = std::find(classes.begin(), classes.end(), cls);
  if (it == classes.end()) {
    throw Error(ErrorCode::UnknownClass, fmt::format("regressor has no class '{}'", cls.name));
  }
  return static_cast<std::size_t>(it - classes.begin());
}

BoxSize default_prior(const ObjectClass& cls) {
  switch (cls.kind) {
    case ObjectClass::Kind::Pedestrian: return {0.66, 0.84, 1.76};
    case ObjectClass::Kind::Car: return {1.63, 3.88, 1.53};
    case ObjectClass::Kind::Other: break;
  }
  throw Error(ErrorCode::UnknownClass, fmt::format("no size prior for '{}'", cls.name));
}

std::vector<BoxSize> default_priors() {
  std::vector<BoxSize> out;
  for (const auto& c : regressor_classes()) out.push_back(default_prior(c));
  return out;
}

std::uint64_t BevRaster::total() const {
  return std::accumulate(cells.begin(), cells.end(), std::uint64_t{0});
}

BevRaster rasterize_bev(std::span<const Vec2> points, const ObjectClass& cls, RasterSpec spec) {
  if (spec.grid < 1 || !(spec.extent > 0)) {
    throw Error(ErrorCode::ShapeError, "raster needs grid >= 1 and extent > 0");
  }
  BevRaster r;
  r.grid = spec.grid;
  r.extent = spec.extent;
  r.class_index = regressor_class_index(cls);
  r.class_onehot.assign(regressor_classes().size(), 0.0);
  r.class_onehot[r.class_index] = 1.0;
  r.cells.assign(static_cast<std::size_t>(spec.grid) * spec.grid, 0);

  const double cell = 2.0 * spec.extent / spec.grid;
  const int g = spec.grid;
  auto edge = [&](int i) { return -spec.extent + i * cell; };
  auto index = [&](double v) -> int {
    if (!(v >= edge(0)) || !(v < edge(g))) return -1;
    int i = std::clamp(static_cast<int>(std::floor((v + spec.extent) / cell)), 0, g - 1);
    while (i + 1 < g && v >= edge(i + 1)) ++i;
    while (i > 0 && v < edge(i)) --i;
    return i;
  };
  for (const Vec2& p : points) {
    const int i = index(p.x());
    const int j = index(p.y());
    if (i < 0 || j < 0) continue;
    ++r.cells[static_cast<std::size_t>(i) * g + j];
  }
  return r;
}

RegressorParams RegressorParams::zeros(int grid, int hidden, std::vector<BoxSize> priors) {
  RegressorParams p;
  p.grid = grid;
  p.classes = static_cast<int>(regressor_classes().size());
  p.hidden = hidden;
  p.priors = std::move(priors);
  if (grid < 1 || hidden < 1 || p.priors.size() != static_cast<std::size_t>(p.classes)) {
    throw Error(ErrorCode::ShapeError, "bad regressor dimensions");
  }
  p.weights.assign(p.parameter_count(), 0.0);
  return p;
}

RegressorParams init_params(int grid, int hidden, std::vector<BoxSize> priors,
                            std::uint64_t seed) {
  RegressorParams p = RegressorParams::zeros(grid, hidden, std::move(priors));
  std::mt19937_64 rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(p.input_dim()));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < p.b1_offset(); ++i) p.weights[i] = a1 * (2.0 * unit_double(rng) - 1.0);
  for (std::size_t i = p.w2_offset(); i < p.b2_offset(); ++i) {
    p.weights[i] = a2 * (2.0 * unit_double(rng) - 1.0);
  }
  return p;
}

BoxRegression prior_regress(const BevRaster& raster, std::span<const BoxSize> priors) {
  if (raster.class_index >= priors.size()) {
    throw Error(ErrorCode::UnknownClass, "no prior for the raster's class");
  }
  BoxRegression r;
  r.size = priors[raster.class_index];
  return r;
}

BoxRegression forward(const RegressorParams& params, const BevRaster& raster) {
  check_shape(params, raster);
  const Activations a = activate(params, raster);
  return map_outputs(a.raw, params.priors[raster.class_index]);
}

MaeLoss mae_loss(const BoxRegression& pred, const BoxRegression& target) {
  MaeLoss l;
  l.terms = {std::abs(pred.shift.x() - target.shift.x()),
             std::abs(pred.shift.y() - target.shift.y()),
             std::abs(pred.shift.z() - target.shift.z()),
             std::abs(pred.size.w - target.size.w),
             std::abs(pred.size.l - target.size.l),
             std::abs(pred.size.h - target.size.h),
             std::abs(wrap_angle(pred.yaw - target.yaw))};
  for (double t : l.terms) l.total += t;
  return l;
}

LossGradient loss_gradient(const RegressorParams& params, const BevRaster& raster,
                           const BoxRegression& target) {
  check_shape(params, raster);
  const Activations a = activate(params, raster);
  const BoxRegression pred = map_outputs(a.raw, params.priors[raster.class_index]);

  LossGradient out;
  out.loss = mae_loss(pred, target);
  out.gradient.assign(params.weights.size(), 0.0);

  // d loss / d raw
  std::array<double, kRegressionOutputs> g{};
  g[0] = sign(pred.shift.x() - target.shift.x());
  g[1] = sign(pred.shift.y() - target.shift.y());
  g[2] = sign(pred.shift.z() - target.shift.z());
  g[3] = sign(pred.size.w - target.size.w) * pred.size.w;
  g[4] = sign(pred.size.l - target.size.l) * pred.size.l;
  g[5] = sign(pred.size.h - target.size.h) * pred.size.h;
  const bool yaw_inside = a.raw[6] > -kPi && a.raw[6] < kPi;
  g[6] = yaw_inside ? sign(wrap_angle(pred.yaw - target.yaw)) : 0.0;

  const auto hidden = static_cast<std::size_t>(params.hidden);
  const double* w = params.weights.data();
  double* grad = out.gradient.data();
  std::vector<double> d_hidden(hidden, 0.0);
  for (std::size_t o = 0; o < kRegressionOutputs; ++o) {
    if (g[o] == 0.0) continue;
    grad[params.b2_offset() + o] = g[o];
    const std::size_t row = params.w2_offset() + o * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      grad[row + j] = g[o] * a.hidden[j];
      d_hidden[j] += g[o] * w[row + j];
    }
  }
  for (std::size_t j = 0; j < hidden; ++j) {
    d_hidden[j] *= 1.0 - a.hidden[j] * a.hidden[j];
    grad[params.b1_offset() + j] = d_hidden[j];
  }
  for_each_input(raster, [&](std::size_t k, double x) {
    double* col = grad + k * hidden;
    for (std::size_t j = 0; j < hidden; ++j) col[j] = d_hidden[j] * x;
  });
  return out;
}

std::vector<BoxSize> fit_priors(std::span<const TrainingSample> samples,
                                std::span<const BoxSize> fallback) {
  std::vector<BoxSize> sums(fallback.size());
  std::vector<std::size_t> counts(fallback.size(), 0);
  for (const auto& s : samples) {
    if (s.raster.class_index >= sums.size()) continue;
    auto& acc = sums[s.raster.class_index];
    acc.w += s.target.size.w;
    acc.l += s.target.size.l;
    acc.h += s.target.size.h;
    ++counts[s.raster.class_index];
  }
  std::vector<BoxSize> out(fallback.begin(), fallback.end());
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (counts[c] == 0) continue;
    const double n = static_cast<double>(counts[c]);
    out[c] = {sums[c].w / n, sums[c].l / n, sums[c].h / n};
  }
  return out;
}

TrainResult train(std::span<const TrainingSample> dataset, const TrainOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  const int grid = dataset.front().raster.grid;

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(
      std::floor(options.validation_fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());

  std::vector<TrainingSample> train_split;
  for (std::size_t i : train_idx) train_split.push_back(dataset[i]);
  std::vector<BoxSize> priors = default_priors();
  if (options.fit_priors) priors = fit_priors(train_split, priors);

  RegressorParams params = init_params(grid, options.hidden, std::move(priors), rng());

  auto mean_loss = [&](const std::vector<std::size_t>& idx) {
    double sum = 0;
    for (std::size_t i : idx) sum += mae_loss(forward(params, dataset[i].raster), dataset[i].target).total;
    return sum / static_cast<double>(idx.size());
  };

  TrainResult result;
  result.train_count = train_idx.size();
  result.validation_count = val_idx.size();
  const auto& monitor = val_idx.empty() ? train_idx : val_idx;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const std::size_t n_params = params.weights.size();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0), batch_grad(n_params);
  std::int64_t step = 0;

  RegressorParams best = params;
  double best_loss = mean_loss(monitor);
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    shuffle(train_idx, rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t end = std::min(train_idx.size(), start + batch);
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = dataset[train_idx[b]];
        const LossGradient lg = loss_gradient(params, s.raster, s.target);
        epoch_loss += lg.loss.total;
        for (std::size_t i = 0; i < n_params; ++i) batch_grad[i] += lg.gradient[i];
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n_params; ++i) {
        const double gi = batch_grad[i] * scale;
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
        params.weights[i] -= options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));
    const double monitored = mean_loss(monitor);
    result.validation_loss.push_back(monitored);
    if (monitored < best_loss) {
      best_loss = monitored;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= options.patience) {
      break;
    }
  }
  result.params = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: 5 x int64 header (grid, classes, hidden, 7, version), then the
// flat weights and the priors (w, l, h per class) as float64, little-endian.

namespace {

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + 8);
}

std::uint64_t get_u64(std::span<const std::byte> bytes, std::size_t& pos) {
  if (pos + 8 > bytes.size()) throw Error(ErrorCode::BadCheckpoint, "checkpoint truncated");
  std::uint64_t v;
  std::memcpy(&v, bytes.data() + pos, 8);
  pos += 8;
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const RegressorParams& params) {
  std::vector<std::byte> out;
  for (std::int64_t h : {std::int64_t{params.grid}, std::int64_t{params.classes},
                         std::int64_t{params.hidden}, std::int64_t{kRegressionOutputs},
                         kCheckpointVersion}) {
    put_u64(out, static_cast<std::uint64_t>(h));
  }
  for (double w : params.weights) put_u64(out, std::bit_cast<std::uint64_t>(w));
  for (const auto& p : params.priors) {
    for (double v : {p.w, p.l, p.h}) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

RegressorParams decode_checkpoint(std::span<const std::byte> bytes) {
  std::size_t pos = 0;
  std::int64_t header[5];
  for (auto& h : header) h = static_cast<std::int64_t>(get_u64(bytes, pos));
  if (header[3] != kRegressionOutputs || header[4] != kCheckpointVersion) {
    throw Error(ErrorCode::BadCheckpoint,
                fmt::format("unsupported checkpoint (outputs {}, version {})", header[3], header[4]));
  }
  if (header[1] != static_cast<std::int64_t>(regressor_classes().size())) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("checkpoint has {} classes, regressor knows {}", header[1],
                            regressor_classes().size()));
  }
  if (header[0] < 1 || header[0] > 4096 || header[2] < 1 || header[2] > 1 << 16) {
    throw Error(ErrorCode::BadCheckpoint, "implausible checkpoint dimensions");
  }
  RegressorParams p = RegressorParams::zeros(static_cast<int>(header[0]),
                                             static_cast<int>(header[2]), default_priors());
  for (double& w : p.weights) w = std::bit_cast<double>(get_u64(bytes, pos));
  for (auto& prior : p.priors) {
    prior.w = std::bit_cast<double>(get_u64(bytes, pos));
    prior.l = std::bit_cast<double>(get_u64(bytes, pos));
    prior.h = std::bit_cast<double>(get_u64(bytes, pos));
  }
  if (pos != bytes.size()) throw Error(ErrorCode::BadCheckpoint, "trailing bytes in checkpoint");
  return p;
}

void save_checkpoint(const RegressorParams& params, const std::filesystem::path& path) {
  write_binary_file(path, encode_checkpoint(params));
}

RegressorParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_binary_file(path));
}

// ---------------------------------------------------------------------------
// Frustum chain and training-set construction

PointCloud extract_frustum(const PointCloud& lidar, const Detection2D& det,
                           const CalibrationSet& calib, FrustumMode mode, ImageDims dims) {
  if (mode == FrustumMode::Mask && det.mask) return points_in_mask_frustum(lidar, det, calib);
  return points_in_box_frustum(lidar, det, calib, dims);
}

std::optional<ObjectFrustum> build_object_frustum(const PointCloud& lidar,
                                                  const Detection2D& det,
                                                  const CalibrationSet& calib,
                                                  const ChainOptions& options) {
  PointCloud members = extract_frustum(lidar, det, calib, options.mode, options.dims);
  if (members.size() < std::max<std::size_t>(1, options.min_points)) return std::nullopt;
  FrustumView view = frustum_rotation(members, det, calib);
  ObjectFrustum out;
  out.theta = view.theta;
  out.centroid = estimate_centroid(view.cloud, options.bin_width);
  out.bev = bev_project(to_centroid_frame(view.cloud, out.centroid));
  out.camera_points = std::move(members);
  return out;
}

TrainingSet build_training_set(std::span<const TrainingFrame> frames,
                               const ChainOptions& options, double match_iou) {
  const auto& classes = regressor_classes();
  auto known = [&](const ObjectClass& c) {
    return std::find(classes.begin(), classes.end(), c) != classes.end();
  };

  TrainingSet out;
  for (const auto& frame : frames) {
    std::vector<std::size_t> gt;
    for (std::size_t i = 0; i < frame.labels.size(); ++i) {
      if (!frame.labels[i].dont_care && known(frame.labels[i].box.cls)) gt.push_back(i);
    }
    std::vector<std::size_t> dets;
    for (std::size_t i = 0; i < frame.detections.size(); ++i) {
      if (known(frame.detections[i].cls)) dets.push_back(i);
    }
    std::stable_sort(dets.begin(), dets.end(), [&](std::size_t a, std::size_t b) {
      return frame.detections[a].score > frame.detections[b].score;
    });

    std::vector<bool> used(frame.labels.size(), false);
    std::size_t matched = 0;
    for (std::size_t d : dets) {
      const Detection2D& det = frame.detections[d];
      std::optional<std::size_t> best;
      double best_iou = match_iou;
      for (std::size_t g : gt) {
        const LabelObject& label = frame.labels[g];
        if (used[g] || !(label.box.cls == det.cls)) continue;
        const double iou = label.bbox.iou(det.bbox);
        if (iou >= best_iou && (!best || iou > best_iou)) {
          best = g;
          best_iou = iou;
        }
      }
      if (!best) continue;
      used[*best] = true;
      ++matched;

      const auto obj = build_object_frustum(frame.lidar, det, frame.calib, options);
      if (!obj) {
        ++out.empty_frustum;
        continue;
      }
      const Box3D& gt_box = frame.labels[*best].box;
      TrainingSample s;
      s.frame_id = frame.calib.frame_id;
      s.raster = rasterize_bev(obj->bev, det.cls, options.raster);
      s.target.shift = rotate_about_y(gt_box.center, -obj->theta) - obj->centroid;
      s.target.size = gt_box.size;
      s.target.yaw = wrap_angle(gt_box.yaw - obj->theta);
      out.samples.push_back(std::move(s));
    }
    out.unmatched_gt += gt.size() - matched;
  }
  return out;
}

}  // namespace faraway

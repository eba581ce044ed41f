#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "faraway/error.hpp"
#include "faraway/regressor.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace faraway;
using testing_support::TempDir;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a faraway::Error";
  return ErrorCode::IoError;
}

BevRaster random_raster(std::mt19937_64& rng, int grid, double extent, const ObjectClass& cls,
                        int points) {
  std::normal_distribution<double> n(0, extent / 3);
  std::vector<Vec2> pts;
  for (int i = 0; i < points; ++i) pts.emplace_back(n(rng), n(rng));
  return rasterize_bev(pts, cls, {grid, extent});
}

BoxRegression random_target(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> s(-1, 1), size(0.4, 4), yaw(-3, 3);
  BoxRegression t;
  t.shift = Vec3(s(rng), s(rng), s(rng));
  t.size = {size(rng), size(rng), size(rng)};
  t.yaw = yaw(rng);
  return t;
}

double total_loss(const RegressorParams& p, const BevRaster& r, const BoxRegression& t) {
  return mae_loss(forward(p, r), t).total;
}

}  // namespace

// --- raster ------------------------------------------------------------------

TEST(RasterizeBev, OriginLandsInTheCentreCell) {
  const std::vector<Vec2> pts{{0, 0}};
  const auto r = rasterize_bev(pts, ObjectClass::pedestrian(), {5, 4});
  EXPECT_EQ(r.total(), 1u);
  EXPECT_EQ(r.at(2, 2), 1u);
  EXPECT_EQ(r.class_index, regressor_class_index(ObjectClass::pedestrian()));
  EXPECT_EQ(r.class_onehot[r.class_index], 1.0);
}

TEST(RasterizeBev, OutOfExtentPointsAreDropped) {
  const std::vector<Vec2> pts{{5, 0}, {0, -4.0001}, {4, 0}};
  const auto r = rasterize_bev(pts, ObjectClass::car(), {8, 4});
  // x = 4 is the open right edge of the last cell.
  EXPECT_EQ(r.total(), 0u);
}

TEST(RasterizeBev, MatchesBruteForceBinning) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> pts;
    std::vector<std::pair<double, double>> raw;
    for (int i = 0; i < 100; ++i) {
      // Every fourth point sits exactly on the cell grid.
      const double x = i % 4 == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
      const double z = u(rng);
      pts.emplace_back(x, z);
      raw.emplace_back(x, z);
    }
    const auto r = rasterize_bev(pts, ObjectClass::car(), {32, 4});
    EXPECT_EQ(r.cells, oracle::raster(raw, 32, 4));
    EXPECT_LE(r.total(), pts.size());
  }
}

TEST(RasterizeBev, UnknownClassAndBadSpec) {
  const std::vector<Vec2> pts{{0, 0}};
  EXPECT_EQ(code_of([&] { rasterize_bev(pts, ObjectClass::parse("cyclist"), {4, 2}); }),
            ErrorCode::UnknownClass);
  EXPECT_EQ(code_of([&] { rasterize_bev(pts, ObjectClass::car(), {0, 2}); }), ErrorCode::ShapeError);
  EXPECT_EQ(code_of([&] { rasterize_bev(pts, ObjectClass::car(), {4, 0}); }), ErrorCode::ShapeError);
}

// --- prior baseline ----------------------------------------------------------

TEST(PriorRegress, ReturnsTheClassPrior) {
  const auto priors = default_priors();
  const std::vector<Vec2> pts{{0.3, -0.2}};
  const auto car = prior_regress(rasterize_bev(pts, ObjectClass::car(), {}), priors);
  EXPECT_EQ(car.shift, Vec3::Zero());
  EXPECT_EQ(car.yaw, 0.0);
  EXPECT_EQ(car.size.w, default_prior(ObjectClass::car()).w);
  EXPECT_EQ(car.size.l, default_prior(ObjectClass::car()).l);
  EXPECT_EQ(car.size.h, default_prior(ObjectClass::car()).h);

  const auto empty = prior_regress(rasterize_bev({}, ObjectClass::pedestrian(), {}), priors);
  EXPECT_EQ(empty.size.h, default_prior(ObjectClass::pedestrian()).h);
}

TEST(PriorRegress, MissingPriorIsUnknownClass) {
  const auto r = rasterize_bev({}, ObjectClass::car(), {});
  const std::vector<BoxSize> too_few;
  EXPECT_EQ(code_of([&] { prior_regress(r, too_few); }), ErrorCode::UnknownClass);
}

TEST(FitPriors, PerClassMeanOfTargets) {
  std::vector<TrainingSample> samples(3);
  samples[0].raster = rasterize_bev({}, ObjectClass::pedestrian(), {4, 2});
  samples[0].target.size = {0.6, 0.8, 1.7};
  samples[1].raster = rasterize_bev({}, ObjectClass::pedestrian(), {4, 2});
  samples[1].target.size = {0.8, 1.0, 1.9};
  samples[2].raster = rasterize_bev({}, ObjectClass::car(), {4, 2});
  samples[2].target.size = {1.6, 4.0, 1.5};
  const auto priors = fit_priors(samples, default_priors());
  const auto ped = priors[regressor_class_index(ObjectClass::pedestrian())];
  EXPECT_DOUBLE_EQ(ped.w, 0.7);
  EXPECT_DOUBLE_EQ(ped.l, 0.9);
  EXPECT_DOUBLE_EQ(ped.h, 1.8);
  EXPECT_DOUBLE_EQ(priors[regressor_class_index(ObjectClass::car())].l, 4.0);

  // A class without samples keeps its fallback.
  const auto only_car = fit_priors(std::span(&samples[2], 1), default_priors());
  EXPECT_EQ(only_car[regressor_class_index(ObjectClass::pedestrian())].h,
            default_prior(ObjectClass::pedestrian()).h);
}

// --- forward -----------------------------------------------------------------

TEST(Forward, ZeroWeightsReturnPriors) {
  std::mt19937_64 rng(1);
  const auto p = RegressorParams::zeros(32, 64, default_priors());
  for (const auto& cls : regressor_classes()) {
    const auto out = forward(p, random_raster(rng, 32, 4, cls, 10));
    EXPECT_EQ(out.shift, Vec3::Zero());
    EXPECT_EQ(out.yaw, 0.0);
    EXPECT_EQ(out.size.w, default_prior(cls).w);
    EXPECT_EQ(out.size.l, default_prior(cls).l);
    EXPECT_EQ(out.size.h, default_prior(cls).h);
  }
}

TEST(Forward, DeterministicAndPositiveSizes) {
  std::mt19937_64 rng(2);
  const auto p = init_params(16, 8, default_priors(), 5);
  for (int i = 0; i < 20; ++i) {
    const auto r = random_raster(rng, 16, 4, ObjectClass::car(), 15);
    const auto a = forward(p, r);
    const auto b = forward(p, r);
    EXPECT_EQ(a.shift, b.shift);
    EXPECT_EQ(a.yaw, b.yaw);
    EXPECT_GT(a.size.w, 0);
    EXPECT_GT(a.size.l, 0);
    EXPECT_GT(a.size.h, 0);
    EXPECT_GT(a.yaw, -std::numbers::pi);
    EXPECT_LE(a.yaw, std::numbers::pi);
  }
}

TEST(Forward, YawIsClampedIntoHalfOpenRange) {
  auto p = RegressorParams::zeros(4, 2, default_priors());
  const auto r = rasterize_bev({}, ObjectClass::car(), {4, 2});
  p.weights[p.b2_offset() + 6] = 10.0;
  EXPECT_EQ(forward(p, r).yaw, std::numbers::pi);
  p.weights[p.b2_offset() + 6] = -10.0;
  EXPECT_EQ(forward(p, r).yaw, std::numbers::pi);
  p.weights[p.b2_offset() + 6] = -3.0;
  EXPECT_EQ(forward(p, r).yaw, -3.0);
}

TEST(Forward, ShapeMismatchIsRejected) {
  const auto p = RegressorParams::zeros(32, 4, default_priors());
  const auto r = rasterize_bev({}, ObjectClass::car(), {16, 4});
  EXPECT_EQ(code_of([&] { forward(p, r); }), ErrorCode::ShapeError);
}

TEST(Forward, OutputJacobianMatchesFiniteDifferences) {
  // Perturb single weights and compare each mapped output with the chain rule
  // written out by hand for the two-layer network.
  std::mt19937_64 rng(3);
  const auto p = init_params(6, 5, default_priors(), 9);
  const auto r = random_raster(rng, 6, 2, ObjectClass::pedestrian(), 12);
  const int hidden = p.hidden;

  std::vector<double> x(static_cast<std::size_t>(p.input_dim()), 0.0);
  for (int i = 0; i < 36; ++i) x[static_cast<std::size_t>(i)] = r.cells[static_cast<std::size_t>(i)];
  for (std::size_t c = 0; c < r.class_onehot.size(); ++c) x[36 + c] = r.class_onehot[c];

  std::vector<double> h(static_cast<std::size_t>(hidden));
  for (int j = 0; j < hidden; ++j) {
    double a = p.weights[p.b1_offset() + j];
    for (std::size_t k = 0; k < x.size(); ++k) a += p.weights[k * hidden + j] * x[k];
    h[static_cast<std::size_t>(j)] = std::tanh(a);
  }
  const auto base = forward(p, r);
  // d(shift.z)/d(W2[2][j]) = h[j]
  for (int j = 0; j < hidden; ++j) {
    auto f = [&](double v) {
      auto q = p;
      q.weights[q.w2_offset() + 2 * hidden + j] = v;
      return forward(q, r).shift.z();
    };
    const double fd = oracle::central_difference(f, p.weights[p.w2_offset() + 2 * hidden + j], 1e-6);
    EXPECT_NEAR(fd, h[static_cast<std::size_t>(j)], 1e-8);
  }
  // d(size.w)/d(b2[3]) = size.w
  auto fw = [&](double v) {
    auto q = p;
    q.weights[q.b2_offset() + 3] = v;
    return forward(q, r).size.w;
  };
  EXPECT_NEAR(oracle::central_difference(fw, p.weights[p.b2_offset() + 3], 1e-6), base.size.w, 1e-8);
  // d(shift.x)/d(W1[k][j]) = W2[0][j] (1 - h_j^2) x_k for an occupied input k
  std::size_t k = 0;
  while (x[k] == 0) ++k;
  for (int j = 0; j < hidden; ++j) {
    auto f = [&](double v) {
      auto q = p;
      q.weights[k * hidden + j] = v;
      return forward(q, r).shift.x();
    };
    const double expected = p.weights[p.w2_offset() + j] * (1 - h[j] * h[j]) * x[k];
    EXPECT_NEAR(oracle::central_difference(f, p.weights[k * hidden + j], 1e-6), expected, 1e-8);
  }
}

// --- loss --------------------------------------------------------------------

TEST(MaeLoss, ZeroForIdenticalAndArithmetic) {
  BoxRegression t;
  t.size = {1, 2, 3};
  EXPECT_EQ(mae_loss(t, t).total, 0.0);
  BoxRegression a = t, b = t;
  a.shift = Vec3(1, 0, 0);
  b.shift = Vec3(2, 0, 0);
  const auto l = mae_loss(a, b);
  EXPECT_DOUBLE_EQ(l.total, 1.0);
  EXPECT_DOUBLE_EQ(l.terms[0], 1.0);
}

TEST(MaeLoss, YawDifferenceWraps) {
  BoxRegression a, b;
  a.yaw = std::numbers::pi - 0.1;
  b.yaw = -std::numbers::pi + 0.1;
  EXPECT_NEAR(mae_loss(a, b).terms[6], 0.2, 1e-12);
}

TEST(MaeLoss, NonNegativeWithZeroOnlyAtEquality) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_target(rng);
    auto b = random_target(rng);
    EXPECT_GT(mae_loss(a, b).total, 0.0);
    b = a;
    b.yaw = a.yaw + 2 * std::numbers::pi;
    EXPECT_NEAR(mae_loss(a, b).total, 0.0, 1e-12);
  }
}

// --- gradient ----------------------------------------------------------------

TEST(LossGradient, MatchesCentralDifferencesOnEveryParameter) {
  std::mt19937_64 rng(5);
  for (int draw = 0; draw < 5; ++draw) {
    const auto p = init_params(6, 5, default_priors(), 100 + draw);
    const auto r = random_raster(rng, 6, 2, regressor_classes()[draw % 2], 15);
    const auto t = random_target(rng);
    const auto lg = loss_gradient(p, r, t);
    EXPECT_DOUBLE_EQ(lg.loss.total, total_loss(p, r, t));
    double worst = 0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      auto f = [&](double v) {
        auto q = p;
        q.weights[i] = v;
        return total_loss(q, r, t);
      };
      const double fd = oracle::central_difference(f, p.weights[i], 1e-6);
      worst = std::max(worst, std::abs(lg.gradient[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    EXPECT_LT(worst, 1e-4) << "draw " << draw;
  }
}

// --- training ----------------------------------------------------------------

TEST(Train, EmptyDatasetIsRejected) {
  EXPECT_EQ(code_of([] { train({}, TrainOptions{}); }), ErrorCode::EmptyDataset);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  std::mt19937_64 rng(6);
  std::vector<TrainingSample> data(1);
  data[0].raster = random_raster(rng, 8, 4, ObjectClass::car(), 10);
  data[0].target = random_target(rng);
  TrainOptions opts;
  opts.hidden = 6;
  opts.max_epochs = 0;
  const auto initial = train(data, opts);
  opts.max_epochs = 2;
  opts.learning_rate = 0;
  const auto after = train(data, opts);
  EXPECT_EQ(after.params.weights, initial.params.weights);
  ASSERT_EQ(after.train_loss.size(), 2u);
  EXPECT_EQ(after.train_loss[0], after.train_loss[1]);
}

TEST(Train, OverfitsASingleSample) {
  std::mt19937_64 rng(7);
  std::vector<TrainingSample> data(1);
  data[0].raster = random_raster(rng, 32, 4, ObjectClass::pedestrian(), 8);
  data[0].target.shift = Vec3(0.1, -0.8, 0.4);
  data[0].target.size = {0.7, 0.9, 1.8};
  data[0].target.yaw = 0.6;
  TrainOptions opts;
  opts.max_epochs = 0;
  const auto init = train(data, opts);
  const double initial = total_loss(init.params, data[0].raster, data[0].target);
  opts.max_epochs = 500;
  // L1 loss plateaus briefly; patience would stop the fit long before 500 epochs.
  opts.patience = opts.max_epochs;
  const auto trained = train(data, opts);
  const double final_loss = total_loss(trained.params, data[0].raster, data[0].target);
  EXPECT_LT(final_loss, 0.05 * initial) << "initial " << initial << " final " << final_loss;
}

TEST(Train, SameSeedGivesIdenticalParameters) {
  std::mt19937_64 rng(8);
  std::vector<TrainingSample> data(30);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].raster = random_raster(rng, 8, 4, regressor_classes()[i % 2], 10);
    data[i].target = random_target(rng);
  }
  TrainOptions opts;
  opts.hidden = 8;
  opts.max_epochs = 20;
  opts.seed = 42;
  const auto a = train(data, opts);
  const auto b = train(data, opts);
  EXPECT_EQ(a.params.weights, b.params.weights);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.train_count, 27u);
  EXPECT_EQ(a.validation_count, 3u);
  opts.seed = 43;
  EXPECT_NE(train(data, opts).params.weights, a.params.weights);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  std::mt19937_64 rng(9);
  std::vector<TrainingSample> data(20);
  for (auto& s : data) {
    s.raster = random_raster(rng, 8, 4, ObjectClass::car(), 10);
    s.target = random_target(rng);  // pure noise: validation loss cannot keep improving
  }
  TrainOptions opts;
  opts.hidden = 8;
  opts.max_epochs = 500;
  opts.patience = 3;
  opts.learning_rate = 0.05;
  const auto r = train(data, opts);
  EXPECT_LT(r.train_loss.size(), 500u);
  EXPECT_EQ(static_cast<int>(r.validation_loss.size()), r.best_epoch + opts.patience);
}

// --- checkpoints -------------------------------------------------------------

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir;
  auto p = init_params(8, 4, default_priors(), 3);
  p.priors[0] = {0.7, 0.9, 1.8};
  save_checkpoint(p, dir / "ck.bin");
  const auto q = load_checkpoint(dir / "ck.bin");
  EXPECT_EQ(q.grid, 8);
  EXPECT_EQ(q.hidden, 4);
  EXPECT_EQ(q.classes, 2);
  EXPECT_EQ(q.weights, p.weights);
  EXPECT_EQ(q.priors[0].h, 1.8);
}

TEST(Checkpoint, HeaderLayout) {
  const auto p = RegressorParams::zeros(3, 2, default_priors());
  const auto bytes = encode_checkpoint(p);
  ASSERT_EQ(bytes.size(), 8 * (5 + p.weights.size() + 3 * 2));
  auto word = [&](std::size_t i) {
    std::int64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | std::to_integer<std::uint8_t>(bytes[i * 8 + b]);
    return v;
  };
  EXPECT_EQ(word(0), 3);
  EXPECT_EQ(word(1), 2);
  EXPECT_EQ(word(2), 2);
  EXPECT_EQ(word(3), 7);
  EXPECT_EQ(word(4), 1);
  EXPECT_EQ(std::bit_cast<double>(word(5 + p.weights.size() + 2)), p.priors[0].h);
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  const auto p = RegressorParams::zeros(3, 2, default_priors());
  auto bytes = encode_checkpoint(p);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { decode_checkpoint(truncated); }), ErrorCode::BadCheckpoint);
  auto extra = bytes;
  extra.push_back(std::byte{0});
  EXPECT_EQ(code_of([&] { decode_checkpoint(extra); }), ErrorCode::BadCheckpoint);
  auto version = bytes;
  version[32] = std::byte{9};
  EXPECT_EQ(code_of([&] { decode_checkpoint(version); }), ErrorCode::BadCheckpoint);
  auto outputs = bytes;
  outputs[24] = std::byte{6};
  EXPECT_EQ(code_of([&] { decode_checkpoint(outputs); }), ErrorCode::BadCheckpoint);
}

// --- training-set construction ----------------------------------------------

namespace {

// Camera point (x, y, z) as a lidar point for simple_calibration().
Vec3 lidar_of(const Vec3& cam) { return {cam.z(), -cam.x(), -cam.y()}; }

struct Scene {
  TrainingFrame frame;
  Vec3 cluster;  // camera-frame location of the identical object points
};

Scene one_object_scene(const Vec3& cluster, const Vec3& gt_center, double gt_yaw, BBox2D box) {
  Scene s;
  s.cluster = cluster;
  s.frame.calib = testing_support::simple_calibration(700, 600, 180);
  s.frame.calib.frame_id = "7";
  std::vector<Vec3> pts(6, lidar_of(cluster));
  s.frame.lidar = PointCloud(Frame::Lidar, pts);

  LabelObject label;
  label.box = testing_support::make_box(gt_center, gt_yaw, {0.7, 0.9, 1.8},
                                        ObjectClass::pedestrian());
  label.bbox = box;
  s.frame.labels.push_back(label);

  Detection2D det;
  det.frame_id = "7";
  det.cls = ObjectClass::pedestrian();
  det.score = 0.8;
  det.bbox = box;
  s.frame.detections.push_back(det);
  return s;
}

ChainOptions box_chain() {
  ChainOptions o;
  o.mode = FrustumMode::Box;
  return o;
}

}  // namespace

TEST(BuildTrainingSet, AlignedCentroidGivesZeroShift) {
  // Box centred on the principal point, so theta = 0; the centroid of the
  // identical points is their bin midpoints, and the GT centre sits there.
  const Vec3 cluster(0.2, 1.0, 65.0);
  const Vec3 centroid = oracle::centroid(std::vector<Vec3>(6, cluster), 0.1);
  const auto s = one_object_scene(cluster, centroid, 0.4, {590, 180, 610, 200});
  const auto set = build_training_set(std::span(&s.frame, 1), box_chain());
  ASSERT_EQ(set.samples.size(), 1u);
  EXPECT_LT(set.samples[0].target.shift.norm(), 1e-12);
  EXPECT_EQ(set.samples[0].frame_id, "7");
  EXPECT_EQ(set.samples[0].raster.total(), 6u);
  EXPECT_NEAR(set.samples[0].target.yaw, 0.4, 1e-12);
  EXPECT_EQ(set.samples[0].target.size.h, 1.8);
}

TEST(BuildTrainingSet, DeeperGroundTruthGivesPositiveDz) {
  const Vec3 cluster(0.2, 1.0, 65.0);
  const Vec3 centroid = oracle::centroid(std::vector<Vec3>(6, cluster), 0.1);
  const auto s = one_object_scene(cluster, centroid + Vec3(0, 0, 0.5), 0.0, {590, 180, 610, 200});
  const auto set = build_training_set(std::span(&s.frame, 1), box_chain());
  ASSERT_EQ(set.samples.size(), 1u);
  EXPECT_NEAR(set.samples[0].target.shift.z(), 0.5, 1e-9);
  EXPECT_NEAR(set.samples[0].target.shift.x(), 0.0, 1e-9);
}

TEST(BuildTrainingSet, TargetsComposeFramesExplicitly) {
  // Off-centre box: theta != 0. Everything is recomputed from scratch here.
  const Vec3 cluster(12.0, 1.2, 60.0);
  const double u = 600 + 700 * 12.0 / 60.0;
  const double v = 180 + 700 * 1.2 / 60.0;
  const BBox2D box{u - 6, v - 6, u + 14, v + 4};
  const Vec3 gt_center(12.3, 1.9, 61.1);
  const double gt_yaw = 2.9;
  const auto s = one_object_scene(cluster, gt_center, gt_yaw, box);
  const auto set = build_training_set(std::span(&s.frame, 1), box_chain());
  ASSERT_EQ(set.samples.size(), 1u);

  const double theta = std::atan2((0.5 * (box.u_min + box.u_max) - 600) / 700, 1.0);
  const Vec3 rotated = oracle::rotate_y(lidar_to_camera(s.frame.lidar, s.frame.calib).points()[0], -theta);
  const Vec3 centroid = oracle::centroid(std::vector<Vec3>(6, rotated), 0.1);
  const Vec3 expected_shift = oracle::rotate_y(gt_center, -theta) - centroid;
  double expected_yaw = gt_yaw - theta;
  if (expected_yaw > std::numbers::pi) expected_yaw -= 2 * std::numbers::pi;
  if (expected_yaw <= -std::numbers::pi) expected_yaw += 2 * std::numbers::pi;

  EXPECT_LT((set.samples[0].target.shift - expected_shift).norm(), 1e-9);
  EXPECT_NEAR(set.samples[0].target.yaw, expected_yaw, 1e-12);
}

TEST(BuildTrainingSet, CountsUnmatchedAndEmptyFrustums) {
  const Vec3 cluster(0.2, 1.0, 65.0);
  auto s = one_object_scene(cluster, cluster, 0.0, {590, 180, 610, 200});
  // A second GT without any detection.
  LabelObject extra = s.frame.labels[0];
  extra.bbox = {100, 100, 120, 140};
  s.frame.labels.push_back(extra);
  // A matched detection whose frustum holds no points.
  LabelObject empty = s.frame.labels[0];
  empty.bbox = {900, 10, 920, 40};
  s.frame.labels.push_back(empty);
  Detection2D det = s.frame.detections[0];
  det.bbox = {900, 10, 920, 40};
  s.frame.detections.push_back(det);
  // DontCare rows and unknown classes never count.
  LabelObject dc = extra;
  dc.dont_care = true;
  dc.box.cls = ObjectClass::parse("DontCare");
  s.frame.labels.push_back(dc);
  LabelObject cyclist = extra;
  cyclist.box.cls = ObjectClass::parse("Cyclist");
  s.frame.labels.push_back(cyclist);

  const auto set = build_training_set(std::span(&s.frame, 1), box_chain());
  EXPECT_EQ(set.samples.size(), 1u);
  EXPECT_EQ(set.unmatched_gt, 1u);
  EXPECT_EQ(set.empty_frustum, 1u);
}

TEST(BuildTrainingSet, LowOverlapDoesNotMatch) {
  const Vec3 cluster(0.2, 1.0, 65.0);
  auto s = one_object_scene(cluster, cluster, 0.0, {590, 180, 610, 200});
  s.frame.labels[0].bbox = {600, 180, 620, 200};  // IoU 1/3 with the detection
  const auto set = build_training_set(std::span(&s.frame, 1), box_chain());
  EXPECT_TRUE(set.samples.empty());
  EXPECT_EQ(set.unmatched_gt, 1u);
}

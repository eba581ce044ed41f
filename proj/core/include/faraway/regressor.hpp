#pragma once

// Box regressor for faraway objects. Input: the class and a G x G count
// raster of the centroid-frame BEV points. Output: centroid-to-box-centre
// shift, box size and yaw (frustum frame). The network is
//
//   hidden = tanh(W1 x + b1),   raw = W2 hidden + b2   (7 outputs)
//
// with sizes emitted as prior * exp(raw) and yaw clamped to (-pi, pi].

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faraway/geometry.hpp"
#include "faraway/types.hpp"

namespace faraway {

inline constexpr int kRegressionOutputs = 7;
inline constexpr std::int64_t kCheckpointVersion = 1;

// Classes the regressor one-hot encodes, in encoding order.
const std::vector<ObjectClass>& regressor_classes();
// Index into regressor_classes(); UnknownClass if absent.
std::size_t regressor_class_index(const ObjectClass& cls);

// Mean KITTI dimensions, used until priors are fitted from training labels.
BoxSize default_prior(const ObjectClass& cls);

struct RasterSpec {
  int grid = 32;
  double extent = 4.0;  // raster spans [-extent, extent] on both BEV axes
};

struct BevRaster {
  int grid = 0;
  double extent = 0;
  // cells[i * grid + j]: i indexes x, j indexes z.
  std::vector<std::uint32_t> cells;
  std::size_t class_index = 0;
  std::vector<double> class_onehot;

  std::uint32_t at(int i, int j) const {
    return cells[static_cast<std::size_t>(i) * grid + j];
  }
  std::uint64_t total() const;
};

BevRaster rasterize_bev(std::span<const Vec2> points, const ObjectClass& cls, RasterSpec spec);

struct BoxRegression {
  Vec3 shift = Vec3::Zero();  // (dx, dy, dz) metres, frustum frame
  BoxSize size;
  double yaw = 0;  // frustum frame
};

struct RegressorParams {
  int grid = 0;
  int classes = 0;
  int hidden = 0;
  // Flat parameter vector:
  //   W1: input_dim() x hidden, input-major (weights[k * hidden + j])
  //   b1: hidden
  //   W2: 7 x hidden, output-major (weights[w2_offset() + o * hidden + j])
  //   b2: 7
  std::vector<double> weights;
  std::vector<BoxSize> priors;  // one per class, regressor_classes() order

  int input_dim() const { return grid * grid + classes; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(input_dim()) * hidden; }
  std::size_t w2_offset() const { return b1_offset() + static_cast<std::size_t>(hidden); }
  std::size_t b2_offset() const {
    return w2_offset() + static_cast<std::size_t>(kRegressionOutputs) * hidden;
  }
  std::size_t parameter_count() const { return b2_offset() + kRegressionOutputs; }

  static RegressorParams zeros(int grid, int hidden, std::vector<BoxSize> priors);
};

// Default priors for every regressor class.
std::vector<BoxSize> default_priors();

// Uniform(+-1/sqrt(fan_in)) weights, zero biases, from a seeded mt19937_64.
RegressorParams init_params(int grid, int hidden, std::vector<BoxSize> priors,
                            std::uint64_t seed);

BoxRegression prior_regress(const BevRaster& raster, std::span<const BoxSize> priors);
BoxRegression forward(const RegressorParams& params, const BevRaster& raster);

struct MaeLoss {
  double total = 0;
  // |pred - target| for dx, dy, dz, w, l, h, yaw (yaw difference wrapped).
  std::array<double, kRegressionOutputs> terms{};
};

MaeLoss mae_loss(const BoxRegression& pred, const BoxRegression& target);

// Loss of one sample and its gradient with respect to params.weights.
struct LossGradient {
  MaeLoss loss;
  std::vector<double> gradient;
};
LossGradient loss_gradient(const RegressorParams& params, const BevRaster& raster,
                           const BoxRegression& target);

struct TrainingSample {
  BevRaster raster;
  BoxRegression target;
  std::string frame_id;
};

struct TrainOptions {
  int hidden = 64;
  double learning_rate = 1e-3;
  int max_epochs = 500;
  int patience = 10;
  int batch_size = 32;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  // Fit per-class size priors as the mean target size of the training split.
  bool fit_priors = true;
};

struct TrainResult {
  RegressorParams params;
  std::vector<double> train_loss;       // mean total loss per epoch
  std::vector<double> validation_loss;  // per epoch; equals train_loss without a split
  int best_epoch = 0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

// Adam with early stopping on the held-out split; keeps the best parameters.
TrainResult train(std::span<const TrainingSample> dataset, const TrainOptions& options);

// Per-class mean (w, l, h) of the given samples; classes with no sample keep
// `fallback`.
std::vector<BoxSize> fit_priors(std::span<const TrainingSample> samples,
                                std::span<const BoxSize> fallback);

void save_checkpoint(const RegressorParams& params, const std::filesystem::path& path);
RegressorParams load_checkpoint(const std::filesystem::path& path);
std::vector<std::byte> encode_checkpoint(const RegressorParams& params);
RegressorParams decode_checkpoint(std::span<const std::byte> bytes);

// ---------------------------------------------------------------------------
// Frustum -> centroid -> raster chain shared by training and inference.

enum class FrustumMode { Mask, Box };

struct ChainOptions {
  FrustumMode mode = FrustumMode::Mask;
  double bin_width = 0.1;
  RasterSpec raster;
  std::size_t min_points = 1;
  ImageDims dims;
};

struct ObjectFrustum {
  PointCloud camera_points;  // frustum members, camera frame
  double theta = 0;
  Vec3 centroid = Vec3::Zero();  // frustum frame
  std::vector<Vec2> bev;         // centroid frame
};

// Mask mode falls back to the box frustum for detections without a mask.
PointCloud extract_frustum(const PointCloud& lidar, const Detection2D& det,
                           const CalibrationSet& calib, FrustumMode mode, ImageDims dims);

// nullopt when the frustum holds fewer than options.min_points points.
std::optional<ObjectFrustum> build_object_frustum(const PointCloud& lidar,
                                                  const Detection2D& det,
                                                  const CalibrationSet& calib,
                                                  const ChainOptions& options);

struct TrainingFrame {
  PointCloud lidar;
  CalibrationSet calib;
  std::vector<LabelObject> labels;
  std::vector<Detection2D> detections;
};

struct TrainingSet {
  std::vector<TrainingSample> samples;
  std::size_t unmatched_gt = 0;
  std::size_t empty_frustum = 0;
};

// Matches detections to same-class GT (2D IoU >= match_iou, greedy by
// descending score) and builds one sample per match.
TrainingSet build_training_set(std::span<const TrainingFrame> frames,
                               const ChainOptions& options, double match_iou = 0.5);

}  // namespace faraway

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aimassist/assist.hpp"
#include "aimassist/geometry.hpp"

namespace aimassist {

/// How cursor history and targets are turned into model input. A checkpoint
/// carries the contract it was trained with and refuses to load under another.
struct EncodingContract {
  std::size_t history_len = 16;  // N samples
  double interval = 0.05;        // seconds between samples
  std::size_t grid = 8;          // G x G target occupancy grid

  std::size_t feature_size() const { return 2 * history_len + grid * grid; }
  void validate() const;
  friend bool operator==(const EncodingContract&, const EncodingContract&) = default;
};

/// Time-stamped cursor positions, queried with linear interpolation. Queries
/// older than the oldest sample return the oldest sample.
class CursorHistory {
 public:
  explicit CursorHistory(double span_seconds = 2.0) : span_(span_seconds) {}

  void push(double t, Vec2 position);
  void clear() { samples_.clear(); }
  bool empty() const { return samples_.empty(); }
  Vec2 latest() const { return samples_.back().second; }
  double latest_time() const { return samples_.back().first; }
  Vec2 at(double t) const;

 private:
  double span_;
  std::deque<std::pair<double, Vec2>> samples_;
};

using FeatureVector = std::vector<double>;

/// Layout: N (dx, dy) pairs oldest first, relative to the newest sample and
/// divided by the viewport diagonal, then G*G occupancy cells in row-major
/// order. Cell index is floor(G * x / width), floor(G * y / height).
FeatureVector encode(const CursorHistory& history, std::span<const ScreenTarget> targets,
                     double width, double height, const EncodingContract& contract,
                     bool bilinear_splat = false);

enum class Activation { tanh, identity };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::tanh;
};

struct Prediction {
  Vec2 direction{1.0, 0.0};  // unit length
  double confidence = 0.5;   // in [0, 1]
};

/// Per-parameter gradient buffers shaped like the model layers.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

/// Dense feed-forward network; the final layer has three linear outputs:
/// a direction (normalized, (1, 0) when degenerate) and a confidence logit
/// squashed with the logistic function.
class PredictorModel {
 public:
  PredictorModel(EncodingContract contract, std::vector<DenseLayer> layers);

  /// Xavier-uniform initialized network: feature_size -> hidden... -> 3.
  static PredictorModel create(const EncodingContract& contract,
                               const std::vector<std::size_t>& hidden, std::uint64_t seed);

  Prediction forward(std::span<const double> features) const;

  /// Loss of one example plus its gradient, accumulated into `grad`.
  double accumulate_gradient(std::span<const double> features, Vec2 label, double lambda,
                             Gradients& grad) const;
  Gradients zero_gradients() const;

  const EncodingContract& contract() const { return contract_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;

 private:
  EncodingContract contract_;
  std::vector<DenseLayer> layers_;
};

/// 1 - cos(direction, label) + lambda * (confidence - (1 + cos) / 2)^2.
double loss(const Prediction& prediction, Vec2 label, double lambda);

struct TrainingExample {
  FeatureVector features;
  Vec2 label;  // unit vector toward the intended target
};

struct TrainingSet {
  std::vector<TrainingExample> examples;
  std::uint64_t seed = 0;
};

struct TrainHyper {
  double learning_rate = 2e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double lambda = 0.1;
};

struct TrainResult {
  PredictorModel model;
  std::vector<double> loss_curve;  // mean loss per epoch
};

/// Mini-batch Adam with seeded shuffling. Throws DivergenceError on a
/// non-finite loss and ConfigError on an empty set.
TrainResult train(PredictorModel model, const TrainingSet& set, const TrainHyper& hyper);

/// Mean cosine similarity between predicted directions and labels.
double mean_cosine(const PredictorModel& model, const TrainingSet& set);

/// v' = (1 - beta * conf) v + beta * conf * |v| * dir.
Vec2 nn_assist(const MoveSample& sample, const Prediction& prediction, double blend);

void save_checkpoint(const PredictorModel& model, const std::filesystem::path& path);
nlohmann::json checkpoint_json(const PredictorModel& model);
/// Throws SchemaError when the stored encoding contract differs from `expected`.
PredictorModel load_checkpoint(const std::filesystem::path& path, const EncodingContract& expected);
PredictorModel model_from_json(const nlohmann::json& j, const EncodingContract& expected);

}  // namespace aimassist

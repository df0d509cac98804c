#include "aimassist/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "aimassist/error.hpp"
#include "aimassist/random.hpp"

namespace aimassist {

void EncodingContract::validate() const {
  if (history_len == 0) throw ConfigError("history length must be >= 1");
  if (!(interval > 0.0)) throw ConfigError("history interval must be > 0");
  if (grid == 0) throw ConfigError("grid size must be >= 1");
}

void CursorHistory::push(double t, Vec2 position) {
  samples_.emplace_back(t, position);
  while (samples_.size() > 2 && samples_[1].first < t - span_) samples_.pop_front();
}

Vec2 CursorHistory::at(double t) const {
  if (samples_.empty()) return {};
  if (t <= samples_.front().first) return samples_.front().second;
  if (t >= samples_.back().first) return samples_.back().second;
  auto hi = std::lower_bound(samples_.begin(), samples_.end(), t,
                             [](const auto& s, double value) { return s.first < value; });
  auto lo = std::prev(hi);
  const double span = hi->first - lo->first;
  if (span <= 0.0) return hi->second;
  const double f = (t - lo->first) / span;
  return lo->second * (1.0 - f) + hi->second * f;
}

FeatureVector encode(const CursorHistory& history, std::span<const ScreenTarget> targets,
                     double width, double height, const EncodingContract& contract,
                     bool bilinear_splat) {
  const std::size_t n = contract.history_len;
  const std::size_t g = contract.grid;
  FeatureVector f(contract.feature_size(), 0.0);
  if (!history.empty()) {
    const double now = history.latest_time();
    const Vec2 current = history.latest();
    const double diag = std::hypot(width, height);
    for (std::size_t k = 0; k < n; ++k) {
      // slot 0 is the oldest sample, slot n-1 the current one
      const double back = static_cast<double>(n - 1 - k) * contract.interval;
      const Vec2 rel = (history.at(now - back) - current) / diag;
      f[2 * k] = rel.x;
      f[2 * k + 1] = rel.y;
    }
  }
  double* grid = f.data() + 2 * n;
  const double gd = static_cast<double>(g);
  for (const ScreenTarget& t : targets) {
    if (!bilinear_splat) {
      const double cx = std::floor(gd * t.position.x / width);
      const double cy = std::floor(gd * t.position.y / height);
      if (cx < 0.0 || cy < 0.0 || cx >= gd || cy >= gd) continue;
      grid[static_cast<std::size_t>(cy) * g + static_cast<std::size_t>(cx)] = 1.0;
      continue;
    }
    // Splat around cell centres.
    const double gx = gd * t.position.x / width - 0.5;
    const double gy = gd * t.position.y / height - 0.5;
    const double x0 = std::floor(gx);
    const double y0 = std::floor(gy);
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const double cx = x0 + dx;
        const double cy = y0 + dy;
        if (cx < 0.0 || cy < 0.0 || cx >= gd || cy >= gd) continue;
        const double w = (dx ? gx - x0 : 1.0 - (gx - x0)) * (dy ? gy - y0 : 1.0 - (gy - y0));
        double& cell = grid[static_cast<std::size_t>(cy) * g + static_cast<std::size_t>(cx)];
        cell = std::min(1.0, cell + w);
      }
    }
  }
  return f;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void activate(Eigen::Ref<Eigen::MatrixXd> z, Activation a) {
  if (a == Activation::tanh) z = z.array().tanh();
}

std::string_view activation_tag(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation parse_activation(const std::string& tag) {
  if (tag == "tanh") return Activation::tanh;
  if (tag == "identity") return Activation::identity;
  throw SchemaError("unknown activation tag '" + tag + "'");
}

struct HeadOutput {
  Prediction prediction;
  double cosine = 0.0;
  double norm = 0.0;
};

HeadOutput read_head(double dx, double dy, double logit, Vec2 label) {
  HeadOutput out;
  out.norm = std::hypot(dx, dy);
  out.prediction.direction = out.norm > 1e-12 ? Vec2{dx / out.norm, dy / out.norm} : Vec2{1.0, 0.0};
  out.prediction.confidence = sigmoid(logit);
  out.cosine = dot(out.prediction.direction, label);
  return out;
}

}  // namespace

PredictorModel::PredictorModel(EncodingContract contract, std::vector<DenseLayer> layers)
    : contract_(contract), layers_(std::move(layers)) {
  contract_.validate();
  if (layers_.empty()) throw ConfigError("predictor needs at least one layer");
  Eigen::Index in = static_cast<Eigen::Index>(contract_.feature_size());
  for (const DenseLayer& l : layers_) {
    if (l.weights.cols() != in || l.bias.size() != l.weights.rows()) {
      throw ConfigError("predictor layer dimensions do not chain");
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw ConfigError("predictor parameters must be finite");
    }
    in = l.weights.rows();
  }
  if (in != 3) throw ConfigError("predictor output layer must have 3 units");
}

PredictorModel PredictorModel::create(const EncodingContract& contract,
                                      const std::vector<std::size_t>& hidden,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = contract.feature_size();
  std::vector<std::size_t> sizes = hidden;
  sizes.push_back(3);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t out = sizes[i];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l;
    l.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    // Fill row-major so the stream order matches the checkpoint layout.
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = dist(rng);
    }
    l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    l.activation = i + 1 == sizes.size() ? Activation::identity : Activation::tanh;
    layers.push_back(std::move(l));
    in = out;
  }
  return PredictorModel(contract, std::move(layers));
}

std::size_t PredictorModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Prediction PredictorModel::forward(std::span<const double> features) const {
  if (features.size() != contract_.feature_size()) {
    throw ConfigError("feature vector has " + std::to_string(features.size()) +
                      " entries, model expects " + std::to_string(contract_.feature_size()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  for (const DenseLayer& l : layers_) {
    Eigen::VectorXd z = l.weights * a + l.bias;
    activate(z, l.activation);
    a = std::move(z);
  }
  return read_head(a(0), a(1), a(2), {1.0, 0.0}).prediction;
}

Gradients PredictorModel::zero_gradients() const {
  Gradients g;
  for (const DenseLayer& l : layers_) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

double PredictorModel::accumulate_gradient(std::span<const double> features, Vec2 label,
                                           double lambda, Gradients& grad) const {
  if (features.size() != contract_.feature_size()) {
    throw ConfigError("feature vector dimension mismatch");
  }
  std::vector<Eigen::VectorXd> acts;
  acts.reserve(layers_.size() + 1);
  acts.emplace_back(Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                      static_cast<Eigen::Index>(features.size())));
  for (const DenseLayer& l : layers_) {
    Eigen::VectorXd z = l.weights * acts.back() + l.bias;
    activate(z, l.activation);
    acts.push_back(std::move(z));
  }
  const Eigen::VectorXd& out = acts.back();
  const HeadOutput head = read_head(out(0), out(1), out(2), label);
  const double c = head.prediction.confidence;
  const double q = 0.5 * (1.0 + head.cosine);
  const double value = 1.0 - head.cosine + lambda * (c - q) * (c - q);

  // dL/dcos = -1 - lambda (c - q); dcos/dd = (label - cos dir) / |d|
  Eigen::VectorXd delta(3);
  if (head.norm > 1e-12) {
    const double dcos = -1.0 - lambda * (c - q);
    const Vec2 dd = (label - head.prediction.direction * head.cosine) * (dcos / head.norm);
    delta(0) = dd.x;
    delta(1) = dd.y;
  } else {
    delta(0) = 0.0;
    delta(1) = 0.0;
  }
  delta(2) = 2.0 * lambda * (c - q) * c * (1.0 - c);

  for (std::size_t i = layers_.size(); i-- > 0;) {
    const DenseLayer& l = layers_[i];
    if (l.activation == Activation::tanh) {
      delta.array() *= 1.0 - acts[i + 1].array().square();
    }
    grad.weights[i].noalias() += delta * acts[i].transpose();
    grad.bias[i] += delta;
    if (i > 0) delta = l.weights.transpose() * delta;
  }
  return value;
}

double loss(const Prediction& prediction, Vec2 label, double lambda) {
  const double cosine = dot(prediction.direction, label);
  const double q = 0.5 * (1.0 + cosine);
  return 1.0 - cosine + lambda * (prediction.confidence - q) * (prediction.confidence - q);
}

TrainResult train(PredictorModel model, const TrainingSet& set, const TrainHyper& hyper) {
  if (set.examples.empty()) throw ConfigError("training set is empty");
  if (hyper.batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  Gradients m = model.zero_gradients();
  Gradients v = model.zero_gradients();
  std::size_t step = 0;

  Rng rng(split_seed(hyper.seed, streams::kTraining));
  std::vector<std::size_t> order(set.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, {}};
  PredictorModel& net = result.model;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      Gradients g = net.zero_gradients();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingExample& ex = set.examples[order[k]];
        batch_loss += net.accumulate_gradient(ex.features, ex.label, hyper.lambda, g);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                              ", batch starting at example " + std::to_string(start));
      }
      epoch_loss += batch_loss;
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto& layers = net.layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto update = [&](auto& param, auto& mm, auto& vv, const auto& gg) {
          mm = kBeta1 * mm + (1.0 - kBeta1) * (gg * scale);
          vv = kBeta2 * vv + (1.0 - kBeta2) * (gg * scale).cwiseAbs2();
          param.array() -= hyper.learning_rate * (mm.array() / c1) /
                           ((vv.array() / c2).sqrt() + kEps);
        };
        update(layers[i].weights, m.weights[i], v.weights[i], g.weights[i]);
        update(layers[i].bias, m.bias[i], v.bias[i], g.bias[i]);
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

double mean_cosine(const PredictorModel& model, const TrainingSet& set) {
  if (set.examples.empty()) return 0.0;
  double total = 0.0;
  for (const TrainingExample& ex : set.examples) {
    total += dot(model.forward(ex.features).direction, ex.label);
  }
  return total / static_cast<double>(set.examples.size());
}

Vec2 nn_assist(const MoveSample& sample, const Prediction& prediction, double blend) {
  const Vec2 v = sample.raw;
  const double mix = blend * prediction.confidence;
  if (mix == 0.0) return v;
  const double speed = norm(v);
  if (speed == 0.0) return v;
  return v * (1.0 - mix) + prediction.direction * (mix * speed);
}

nlohmann::json checkpoint_json(const PredictorModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    layers.push_back({{"in", l.weights.cols()},
                      {"out", l.weights.rows()},
                      {"activation", activation_tag(l.activation)},
                      {"weights", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  const EncodingContract& c = model.contract();
  return {{"format", "aimassist-predictor"},
          {"version", 1},
          {"encoding", {{"history_len", c.history_len}, {"interval", c.interval}, {"grid", c.grid}}},
          {"layers", layers}};
}

void save_checkpoint(const PredictorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out << checkpoint_json(model).dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

PredictorModel model_from_json(const nlohmann::json& j, const EncodingContract& expected) {
  try {
    if (j.value("format", std::string()) != "aimassist-predictor" || j.value("version", 0) != 1) {
      throw SchemaError("not an aimassist-predictor version 1 checkpoint");
    }
    const auto& e = j.at("encoding");
    EncodingContract stored{e.at("history_len").get<std::size_t>(), e.at("interval").get<double>(),
                            e.at("grid").get<std::size_t>()};
    if (!(stored == expected)) {
      throw SchemaError("checkpoint encoding (N=" + std::to_string(stored.history_len) +
                        ", interval=" + std::to_string(stored.interval) +
                        ", G=" + std::to_string(stored.grid) +
                        ") does not match runtime encoding (N=" +
                        std::to_string(expected.history_len) +
                        ", interval=" + std::to_string(expected.interval) +
                        ", G=" + std::to_string(expected.grid) + ")");
    }
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto in = lj.at("in").get<Eigen::Index>();
      const auto out = lj.at("out").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out) {
        throw SchemaError("checkpoint layer size does not match its weights");
      }
      DenseLayer l;
      l.weights.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
      }
      l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
      l.activation = parse_activation(lj.at("activation").get<std::string>());
      layers.push_back(std::move(l));
    }
    return PredictorModel(stored, std::move(layers));
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed checkpoint: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw SchemaError(std::string("invalid checkpoint: ") + ex.what());
  }
}

PredictorModel load_checkpoint(const std::filesystem::path& path, const EncodingContract& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError("checkpoint " + path.string() + " is not valid JSON: " + ex.what());
  }
  try {
    return model_from_json(j, expected);
  } catch (const SchemaError& ex) {
    throw SchemaError(path.string() + ": " + ex.what());
  }
}

}  // namespace aimassist

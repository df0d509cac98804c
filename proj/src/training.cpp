#include "aimassist/training.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "aimassist/error.hpp"
#include "aimassist/harness.hpp"

namespace aimassist {

namespace {

bool has_motion(const FeatureVector& f, std::size_t history_len) {
  for (std::size_t i = 0; i < 2 * history_len; ++i) {
    if (f[i] != 0.0) return true;
  }
  return false;
}

void collect(const TrialSpec& spec, InputSource& source, const EncodingContract& contract,
             std::size_t stride, bool require_motion, std::size_t limit,
             std::vector<TrainingExample>& out) {
  TrialRunner runner(spec, AssistConfig{});
  CursorHistory history(contract.history_len * contract.interval + 1.0);
  while (!runner.finished() && out.size() < limit) {
    const TickView view = runner.view();
    history.push(view.t, view.cursor);
    const auto screen = runner.active_screen();
    if (screen && view.tick % stride == 0) {
      const Vec2 to_target = screen->position - view.cursor;
      const double d = norm(to_target);
      if (d > 1e-6) {
        const std::vector<ScreenTarget> visible{*screen};
        FeatureVector f = encode(history, visible, spec.camera.width, spec.camera.height, contract);
        if (!require_motion || has_motion(f, contract.history_len)) {
          out.push_back({std::move(f), to_target / d});
        }
      }
    }
    runner.advance(source.next(view));
  }
}

}  // namespace

int label_octant(Vec2 label) {
  double a = std::atan2(label.y, label.x);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  const int o = static_cast<int>(a / (std::numbers::pi / 4.0));
  return std::clamp(o, 0, 7);
}

nlohmann::json ClassBalance::to_json() const {
  nlohmann::json devices = nlohmann::json::object();
  for (const auto& [name, n] : by_device) devices[name] = n;
  return {{"by_device", devices}, {"by_octant", by_octant}};
}

GeneratedSet generate_training_set(const TrainingSetOptions& options) {
  if (options.examples == 0) throw ConfigError("training set size must be > 0");
  if (options.devices.empty()) throw ConfigError("training set needs at least one device class");
  if (options.stride == 0) throw ConfigError("sampling stride must be > 0");
  options.contract.validate();

  GeneratedSet result;
  result.set.seed = options.seed;
  auto& examples = result.set.examples;
  examples.reserve(options.examples);
  const std::uint64_t base = split_seed(options.seed, streams::kTraining);
  for (std::size_t trial = 0; examples.size() < options.examples; ++trial) {
    const Device device = options.devices[trial % options.devices.size()];
    const auto it = options.presets.find(device);
    if (it == options.presets.end()) {
      throw ConfigError("no agent parameters for device '" + std::string(to_string(device)) + "'");
    }
    const std::uint64_t trial_seed = split_seed(base, trial);
    const TrialSpec spec = generate_trial(Mode::locate, options.scene, trial_seed);
    const std::size_t before = examples.size();
    AgentSource source(it->second, spec.tick_period(), trial_seed);
    collect(spec, source, options.contract, options.stride, false, options.examples, examples);
    result.balance.by_device[std::string(to_string(device))] += examples.size() - before;
  }
  for (const auto& ex : examples) ++result.balance.by_octant[label_octant(ex.label)];
  return result;
}

Vec2 StraightLineSource::next(const TickView& view) {
  if (!view.target) return {};
  const Vec2 to_target = view.target->position - view.cursor;
  const double d = norm(to_target);
  const double step = speed_ * view.dt;
  if (d <= step) return to_target;
  return to_target * (step / d);
}

TrainingSet generate_straight_set(std::size_t examples, std::uint64_t seed,
                                  const EncodingContract& contract, const SceneGenParams& scene) {
  if (examples == 0) throw ConfigError("held-out set size must be > 0");
  contract.validate();
  SceneGenParams single = scene;
  single.target_count = 1;

  TrainingSet set;
  set.seed = seed;
  set.examples.reserve(examples);
  const std::uint64_t base = split_seed(seed, streams::kTraining);
  for (std::size_t trial = 0; set.examples.size() < examples; ++trial) {
    const std::uint64_t trial_seed = split_seed(base, trial);
    const TrialSpec spec = generate_trial(Mode::locate, single, trial_seed);
    Rng rng(trial_seed);
    StraightLineSource source(std::uniform_real_distribution<double>(400.0, 1600.0)(rng));
    collect(spec, source, contract, 1, true, examples, set.examples);
  }
  return set;
}

}  // namespace aimassist

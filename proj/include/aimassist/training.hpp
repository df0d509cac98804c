#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aimassist/agents.hpp"
#include "aimassist/harness.hpp"
#include "aimassist/predictor.hpp"
#include "aimassist/scene.hpp"

namespace aimassist {

/// Label counts per device class and per label direction octant
/// (octant 0 starts at +x and runs toward +y).
struct ClassBalance {
  std::map<std::string, std::size_t> by_device;
  std::array<std::size_t, 8> by_octant{};

  nlohmann::json to_json() const;
};

int label_octant(Vec2 label);

/// Noise-free agent that moves straight at the current active target with
/// constant speed and no perception delay.
class StraightLineSource final : public InputSource {
 public:
  explicit StraightLineSource(double speed) : speed_(speed) {}
  Vec2 next(const TickView& view) override;

 private:
  double speed_;  // px/s
};

struct TrainingSetOptions {
  std::size_t examples = 10000;
  std::uint64_t seed = 0;
  std::vector<Device> devices{kAllDevices.begin(), kAllDevices.end()};  // round-robin per trial
  PresetTable presets = builtin_presets();
  EncodingContract contract;
  std::size_t stride = 3;  // ticks between samples
  SceneGenParams scene;
};

struct GeneratedSet {
  TrainingSet set;
  ClassBalance balance;
};

/// Samples features and the unit direction to the active target from
/// agent-driven Locate trials without assistance.
GeneratedSet generate_training_set(const TrainingSetOptions& options);

/// Held-out set of straight-to-target trajectories: a straight-line agent
/// starts at rest and heads for a single target. Ticks whose history shows no
/// movement yet are skipped.
TrainingSet generate_straight_set(std::size_t examples, std::uint64_t seed,
                                  const EncodingContract& contract = {},
                                  const SceneGenParams& scene = {});

}  // namespace aimassist

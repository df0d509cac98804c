#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "aimassist/agents.hpp"
#include "aimassist/scene.hpp"

namespace aimassist {

/// Per-class outcomes the agents are fitted to.
struct CalibrationTarget {
  double locate_success = 100.0;  // %
  double select_success = 100.0;  // %
  double locate_score = 1.0;      // s, mean acquisition time
};

/// Locate and Select outcomes reported for the four device classes.
std::map<Device, CalibrationTarget> table_targets();

/// Multiplicative factors applied to the base parameters.
struct CalibrationGrid {
  std::vector<double> noise{0.9, 1.0, 1.1};
  std::vector<double> latency{0.9, 1.0, 1.1};
  std::vector<double> tremor{0.9, 1.0, 1.1};
  std::vector<double> max_speed{1.0};

  std::size_t size() const {
    return noise.size() * latency.size() * tremor.size() * max_speed.size();
  }
};

struct CalibrationOutcome {
  Device device = Device::mouse;
  AgentParams params;
  double locate_success = 0.0;
  double locate_score = 0.0;
  double select_success = 0.0;
  double error = 0.0;
  bool converged = false;  // select success within tolerance of its target
  std::size_t evaluated = 0;
};

struct CalibrationResult {
  PresetTable presets;
  std::vector<CalibrationOutcome> outcomes;

  bool converged() const;
  nlohmann::json report(const std::map<Device, CalibrationTarget>& targets) const;
};

struct CalibrationOptions {
  std::size_t budget = 200;  // trials per mode and evaluation, >= 100
  std::uint64_t seed = 0;
  CalibrationGrid grid;
  double tolerance_pp = 10.0;
  double score_weight = 0.25;  // weight of the relative locate-time error
  SceneGenParams scene;
};

/// Grid search per device class around `base`, scoring each grid point on
/// the same seeded Locate and Select trials. Throws ConfigError for a budget
/// below 100 trials or an empty grid.
CalibrationResult calibrate(const std::map<Device, CalibrationTarget>& targets,
                            const PresetTable& base, const CalibrationOptions& options);

}  // namespace aimassist

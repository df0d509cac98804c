#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aimassist/assist.hpp"
#include "aimassist/geometry.hpp"
#include "aimassist/random.hpp"

namespace aimassist {

enum class Device { head, image, mouse, controller };

inline constexpr std::array<Device, 4> kAllDevices{Device::head, Device::image, Device::mouse,
                                                   Device::controller};

std::string_view to_string(Device device);
Device parse_device(std::string_view text);

/// Closed-loop pursuit model of one input device class.
struct AgentParams {
  double latency = 0.2;       // s, perception delay of the target
  double max_speed = 2000.0;  // px/s
  double gain = 3.0;          // 1/s, proportional pursuit gain
  double noise = 0.05;        // signal-dependent noise, sigma = noise * |velocity|
  double tremor = 10.0;       // px/s, sinusoidal tremor amplitude (jitter sigma is half of it)
  double tremor_freq = 8.0;   // Hz
  double damping = 0.1;       // velocity response time constant, in units of 1/gain
  double anticipation = 0.0;  // target-velocity feed-forward and delay extrapolation, in [0, 1]

  void validate() const;
  friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

/// What the agent sees of the active target this tick.
struct Percept {
  int target_id = 0;
  Vec2 position;
};

class AgentState {
 public:
  AgentState(const AgentParams& params, double dt, std::uint64_t seed);

  std::size_t delay_ticks() const { return delay_ticks_; }
  Vec2 velocity() const { return velocity_; }
  /// Noise sigma used by the most recent step, px/s per axis.
  double last_sigma() const { return last_sigma_; }

 private:
  friend MoveSample step(AgentState&, const AgentParams&, const std::optional<Percept>&, Vec2,
                         double);

  std::size_t delay_ticks_;
  std::deque<std::optional<Percept>> buffer_;
  Vec2 velocity_;
  Rng rng_;
  double time_ = 0.0;
  double phase_x_;
  double phase_y_;
  double last_sigma_ = 0.0;
};

/// Advance the agent one tick: pursue the delayed target percept from the
/// current cursor and emit the raw movement (px/tick) for this tick.
MoveSample step(AgentState& state, const AgentParams& params, const std::optional<Percept>& target,
                Vec2 cursor, double dt);

/// Built-in calibrated parameter set for a device class.
AgentParams preset(Device device);

using PresetTable = std::map<Device, AgentParams>;

PresetTable builtin_presets();
nlohmann::json presets_json(const PresetTable& presets);
PresetTable presets_from_json(const nlohmann::json& j);
void save_presets(const PresetTable& presets, const std::filesystem::path& path);
/// Throws IoError / SchemaError naming the path and expected version.
PresetTable load_presets(const std::filesystem::path& path);
/// Presets from $AIMASSIST_PRESETS when set, else the built-in table.
PresetTable presets_from_environment();

void to_json(nlohmann::json& j, const AgentParams& p);
void from_json(const nlohmann::json& j, AgentParams& p);

inline constexpr int kPresetsVersion = 1;

}  // namespace aimassist

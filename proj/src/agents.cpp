#include "aimassist/agents.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>

#include "aimassist/error.hpp"

namespace aimassist {

namespace {

// Ticks of percept history kept ahead of the delay line for velocity estimates.
constexpr std::size_t kVelocityWindow = 6;
constexpr double kJitterRatio = 0.5;

Vec2 clamp_norm(Vec2 v, double limit) {
  const double n = norm(v);
  return n > limit ? v * (limit / n) : v;
}

}  // namespace

std::string_view to_string(Device device) {
  switch (device) {
    case Device::head: return "head";
    case Device::image: return "image";
    case Device::mouse: return "mouse";
    case Device::controller: return "controller";
  }
  return "mouse";
}

Device parse_device(std::string_view text) {
  if (text == "head") return Device::head;
  if (text == "image") return Device::image;
  if (text == "mouse") return Device::mouse;
  if (text == "controller") return Device::controller;
  throw ConfigError("invalid agent '" + std::string(text) +
                    "' (expected head|image|mouse|controller)");
}

void AgentParams::validate() const {
  const double fields[] = {latency, max_speed, gain, noise, tremor, tremor_freq, damping, anticipation};
  for (double f : fields) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("agent parameters must be finite and >= 0");
  }
  if (!(max_speed > 0.0)) throw ConfigError("agent max_speed must be > 0");
}

AgentState::AgentState(const AgentParams& params, double dt, std::uint64_t seed) : rng_(seed) {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("agent tick period must be > 0");
  delay_ticks_ = static_cast<std::size_t>(std::ceil(params.latency / dt - 1e-9));
  buffer_.assign(delay_ticks_ + kVelocityWindow, std::nullopt);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  phase_x_ = phase(rng_);
  phase_y_ = phase(rng_);
}

MoveSample step(AgentState& state, const AgentParams& params, const std::optional<Percept>& target,
                Vec2 cursor, double dt) {
  if (!(dt > 0.0)) throw ConfigError("agent step requires dt > 0");
  state.buffer_.push_back(target);
  state.buffer_.pop_front();
  const std::optional<Percept>& older = state.buffer_.front();
  const std::optional<Percept>& seen = state.buffer_[kVelocityWindow - 1];

  Vec2 desired;
  if (seen) {
    // Anticipation both extrapolates the stale percept across the delay and
    // feeds the estimated target velocity forward.
    Vec2 target_velocity;
    if (params.anticipation > 0.0 && older && older->target_id == seen->target_id) {
      target_velocity =
          (seen->position - older->position) / (static_cast<double>(kVelocityWindow - 1) * dt);
    }
    const Vec2 aim = seen->position + target_velocity * (params.anticipation * params.latency);
    desired = clamp_norm((aim - cursor) * params.gain + target_velocity * params.anticipation,
                         params.max_speed);
  }

  const double tau = params.gain > 0.0 ? params.damping / params.gain : 0.0;
  const double response = tau > 0.0 ? 1.0 - std::exp(-dt / tau) : 1.0;
  state.velocity_ = clamp_norm(state.velocity_ + (desired - state.velocity_) * response,
                               params.max_speed);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double jx = gauss(state.rng_);
  const double jy = gauss(state.rng_);
  const double nx = gauss(state.rng_);
  const double ny = gauss(state.rng_);

  const double w = 2.0 * std::numbers::pi * params.tremor_freq * state.time_;
  const Vec2 tremor{params.tremor * (std::sin(w + state.phase_x_) + kJitterRatio * jx),
                    params.tremor * (std::sin(w + state.phase_y_) + kJitterRatio * jy)};
  const Vec2 intended = clamp_norm(state.velocity_ + tremor, params.max_speed);

  state.last_sigma_ = params.noise * norm(state.velocity_);
  const Vec2 noise{state.last_sigma_ * nx, state.last_sigma_ * ny};

  MoveSample out;
  out.raw = (intended + noise) * dt;
  out.t = state.time_;
  out.cursor = cursor;
  state.time_ += dt;
  return out;
}

PresetTable builtin_presets() {
  PresetTable t;
  t[Device::mouse] = {0.45, 3000.0, 2.5, 0.05, 18.0, 8.0, 0.10, 0.95};
  t[Device::controller] = {0.605, 700.0, 2.0, 0.088, 280.0, 2.0, 0.20, 0.85};
  t[Device::head] = {0.77, 1000.0, 1.4, 0.165, 300.0, 2.0, 0.30, 0.60};
  t[Device::image] = {0.88, 900.0, 1.3, 0.22, 400.0, 3.0, 0.30, 0.60};
  return t;
}

AgentParams preset(Device device) { return builtin_presets().at(device); }

void to_json(nlohmann::json& j, const AgentParams& p) {
  j = {{"latency", p.latency},         {"max_speed", p.max_speed},
       {"gain", p.gain},               {"noise", p.noise},
       {"tremor", p.tremor},           {"tremor_freq", p.tremor_freq},
       {"damping", p.damping},         {"anticipation", p.anticipation}};
}

void from_json(const nlohmann::json& j, AgentParams& p) {
  p.latency = j.at("latency").get<double>();
  p.max_speed = j.at("max_speed").get<double>();
  p.gain = j.at("gain").get<double>();
  p.noise = j.at("noise").get<double>();
  p.tremor = j.at("tremor").get<double>();
  p.tremor_freq = j.at("tremor_freq").get<double>();
  p.damping = j.at("damping").get<double>();
  p.anticipation = j.value("anticipation", 0.0);
}

nlohmann::json presets_json(const PresetTable& presets) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [device, params] : presets) classes[std::string(to_string(device))] = params;
  return {{"format", "aimassist-presets"}, {"version", kPresetsVersion}, {"presets", classes}};
}

PresetTable presets_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "aimassist-presets") {
      throw SchemaError("not an aimassist-presets document");
    }
    const int version = j.value("version", 0);
    if (version != kPresetsVersion) {
      throw SchemaError("presets version " + std::to_string(version) + ", expected " +
                        std::to_string(kPresetsVersion));
    }
    PresetTable t;
    for (const auto& [name, value] : j.at("presets").items()) {
      AgentParams p = value.get<AgentParams>();
      p.validate();
      t[parse_device(name)] = p;
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed presets: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("invalid presets: ") + e.what());
  }
}

void save_presets(const PresetTable& presets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open presets for writing: " + path.string());
  out << presets_json(presets).dump(2) << '\n';
  if (!out) throw IoError("failed writing presets: " + path.string());
}

PresetTable load_presets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open presets file: " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return presets_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": not valid JSON (expected aimassist-presets version " +
                      std::to_string(kPresetsVersion) + "): " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

PresetTable presets_from_environment() {
  if (const char* env = std::getenv("AIMASSIST_PRESETS"); env && *env) return load_presets(env);
  return builtin_presets();
}

}  // namespace aimassist

#include "aimassist/assist.hpp"

#include <algorithm>
#include <cmath>

#include "aimassist/error.hpp"
#include "aimassist/predictor.hpp"

namespace aimassist {

void LerpParams::validate() const {
  if (!(radius > 0.0)) throw ConfigError("lerp radius must be > 0");
  if (!(max_blend >= 0.0 && max_blend <= 1.0)) throw ConfigError("lerp max_blend must lie in [0, 1]");
  if (!(falloff > 0.0)) throw ConfigError("lerp falloff must be > 0");
}

Vec2 lerp_assist(const MoveSample& sample, Vec2 target, const LerpParams& params) {
  const Vec2 v = sample.raw;
  const double speed = norm(v);
  const Vec2 to_target = target - sample.cursor;
  const double d = norm(to_target);
  if (speed == 0.0 || d == 0.0 || d > params.radius) return v;
  const Vec2 u = to_target / d;
  double alpha = params.max_blend * std::pow(std::clamp(1.0 - d / params.radius, 0.0, 1.0),
                                             params.falloff);
  if (params.align_gate) alpha *= std::max(0.0, dot(v, u) / speed);
  if (alpha == 0.0) return v;
  return v * (1.0 - alpha) + u * (alpha * speed);
}

void GravityField::validate() const {
  if (!(radius > 0.0)) throw ConfigError("gravity radius must be > 0");
  if (!(falloff > 0.0)) throw ConfigError("gravity falloff must be > 0");
  if (!(deviation_cap > 0.0)) throw ConfigError("gravity deviation_cap must be > 0");
  for (const Attractor& a : attractors) {
    if (!(a.weight >= 0.0)) throw ConfigError("attractor weights must be >= 0");
  }
  for (const Rect& r : exclusion_zones) {
    if (!(r.min.x <= r.max.x && r.min.y <= r.max.y)) throw ConfigError("exclusion zone is inverted");
  }
}

bool GravityField::excluded(Vec2 cursor) const {
  return std::any_of(exclusion_zones.begin(), exclusion_zones.end(),
                     [&](const Rect& r) { return r.contains(cursor); });
}

Vec2 GravityField::pull(Vec2 cursor) const {
  Vec2 total;
  for (const Attractor& a : attractors) {
    const Vec2 delta = a.position - cursor;
    const double d = norm(delta);
    if (d >= radius || d == 0.0) continue;
    total += delta * (a.weight * std::pow(1.0 - d / radius, falloff) / d);
  }
  return total;
}

namespace {

Vec2 apply_pull(Vec2 v, Vec2 pull, double cap) {
  const double speed = norm(v);
  if (speed == 0.0) return v;
  const double strength = norm(pull);
  if (strength > cap) pull *= cap / strength;
  return v + pull * speed;
}

}  // namespace

Vec2 gravity_assist(const MoveSample& sample, const GravityField& field) {
  if (field.excluded(sample.cursor)) return sample.raw;
  return apply_pull(sample.raw, field.pull(sample.cursor), field.deviation_cap);
}

void GravityParams::validate() const {
  GravityField probe;
  probe.radius = radius;
  probe.falloff = falloff;
  probe.deviation_cap = deviation_cap;
  probe.exclusion_zones = exclusion_zones;
  probe.validate();
  if (!(weight >= 0.0)) throw ConfigError("gravity weight must be >= 0");
}

GravityField build_gravity_field(std::span<const ScreenTarget> targets,
                                 const GravityParams& params) {
  GravityField field;
  field.radius = params.radius;
  field.falloff = params.falloff;
  field.deviation_cap = params.deviation_cap;
  field.exclusion_zones = params.exclusion_zones;
  field.attractors.reserve(targets.size());
  for (const ScreenTarget& t : targets) field.attractors.push_back({t.id, t.position, params.weight});
  std::stable_sort(field.attractors.begin(), field.attractors.end(),
                   [](const Attractor& a, const Attractor& b) { return a.id < b.id; });
  return field;
}

GravityRaster::GravityRaster(GravityField field, double width, double height, double cell_px)
    : field_(std::move(field)), cell_(cell_px) {
  if (!(cell_ > 0.0)) throw ConfigError("raster cell size must be > 0");
  cols_ = static_cast<std::size_t>(std::ceil(width / cell_)) + 1;
  rows_ = static_cast<std::size_t>(std::ceil(height / cell_)) + 1;
  nodes_.resize(cols_ * rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      nodes_[r * cols_ + c] = field_.pull({static_cast<double>(c) * cell_,
                                           static_cast<double>(r) * cell_});
    }
  }
}

Vec2 GravityRaster::pull(Vec2 cursor) const {
  const double gx = std::clamp(cursor.x / cell_, 0.0, static_cast<double>(cols_ - 1));
  const double gy = std::clamp(cursor.y / cell_, 0.0, static_cast<double>(rows_ - 1));
  const auto c0 = std::min(static_cast<std::size_t>(gx), cols_ - 2);
  const auto r0 = std::min(static_cast<std::size_t>(gy), rows_ - 2);
  const double fx = gx - static_cast<double>(c0);
  const double fy = gy - static_cast<double>(r0);
  const Vec2 top = nodes_[r0 * cols_ + c0] * (1.0 - fx) + nodes_[r0 * cols_ + c0 + 1] * fx;
  const Vec2 bottom =
      nodes_[(r0 + 1) * cols_ + c0] * (1.0 - fx) + nodes_[(r0 + 1) * cols_ + c0 + 1] * fx;
  return top * (1.0 - fy) + bottom * fy;
}

Vec2 GravityRaster::assist(const MoveSample& sample) const {
  if (field_.excluded(sample.cursor)) return sample.raw;
  return apply_pull(sample.raw, pull(sample.cursor), field_.deviation_cap);
}

std::string_view to_string(AssistMethod method) {
  switch (method) {
    case AssistMethod::none: return "none";
    case AssistMethod::lerp: return "lerp";
    case AssistMethod::gravity: return "gravity";
    case AssistMethod::predictor: return "predictor";
  }
  return "none";
}

AssistMethod parse_assist_method(std::string_view text) {
  if (text == "none") return AssistMethod::none;
  if (text == "lerp") return AssistMethod::lerp;
  if (text == "gravity") return AssistMethod::gravity;
  if (text == "predictor") return AssistMethod::predictor;
  throw ConfigError("invalid assist method '" + std::string(text) +
                    "' (expected none|lerp|gravity|predictor)");
}

void AssistConfig::validate() const {
  switch (method) {
    case AssistMethod::none: break;
    case AssistMethod::lerp: lerp.validate(); break;
    case AssistMethod::gravity: gravity.validate(); break;
    case AssistMethod::predictor:
      if (!(blend >= 0.0 && blend <= 1.0)) throw ConfigError("predictor blend must lie in [0, 1]");
      break;
  }
}

Vec2 apply_assist(const AssistConfig& config, const MoveSample& sample, const AssistWorld& world) {
  switch (config.method) {
    case AssistMethod::none: return sample.raw;
    case AssistMethod::lerp: {
      const ScreenTarget* chosen = nullptr;
      for (const ScreenTarget& t : world.targets) {
        if (!config.lerp_target || t.id == *config.lerp_target) {
          chosen = &t;
          break;
        }
      }
      return chosen ? lerp_assist(sample, chosen->position, config.lerp) : sample.raw;
    }
    case AssistMethod::gravity:
      return gravity_assist(sample, build_gravity_field(world.targets, config.gravity));
    case AssistMethod::predictor: {
      if (!config.model) throw ConfigError("predictor assist selected but no model is loaded");
      if (!world.history || world.history->empty()) {
        throw ConfigError("predictor assist needs a cursor history");
      }
      const FeatureVector f = encode(*world.history, world.targets, world.width, world.height,
                                     config.model->contract());
      return nn_assist(sample, config.model->forward(f), config.blend);
    }
  }
  return sample.raw;
}

void to_json(nlohmann::json& j, const AssistConfig& c) {
  j = {{"method", to_string(c.method)}};
  switch (c.method) {
    case AssistMethod::none: break;
    case AssistMethod::lerp:
      j["target_id"] = c.lerp_target ? nlohmann::json(*c.lerp_target) : nlohmann::json(nullptr);
      j["radius"] = c.lerp.radius;
      j["max_blend"] = c.lerp.max_blend;
      j["falloff"] = c.lerp.falloff;
      j["align_gate"] = c.lerp.align_gate;
      break;
    case AssistMethod::gravity: {
      j["radius"] = c.gravity.radius;
      j["falloff"] = c.gravity.falloff;
      j["weight"] = c.gravity.weight;
      j["deviation_cap"] = c.gravity.deviation_cap;
      auto zones = nlohmann::json::array();
      for (const Rect& r : c.gravity.exclusion_zones) {
        zones.push_back({r.min.x, r.min.y, r.max.x, r.max.y});
      }
      j["exclusion_zones"] = zones;
      break;
    }
    case AssistMethod::predictor:
      j["model"] = c.model_path;
      j["blend"] = c.blend;
      break;
  }
}

void from_json(const nlohmann::json& j, AssistConfig& c) {
  try {
    c = AssistConfig{};
    c.method = parse_assist_method(j.at("method").get<std::string>());
    switch (c.method) {
      case AssistMethod::none: break;
      case AssistMethod::lerp:
        if (j.contains("target_id") && !j.at("target_id").is_null()) {
          c.lerp_target = j.at("target_id").get<int>();
        }
        c.lerp.radius = j.value("radius", c.lerp.radius);
        c.lerp.max_blend = j.value("max_blend", c.lerp.max_blend);
        c.lerp.falloff = j.value("falloff", c.lerp.falloff);
        c.lerp.align_gate = j.value("align_gate", c.lerp.align_gate);
        break;
      case AssistMethod::gravity:
        c.gravity.radius = j.value("radius", c.gravity.radius);
        c.gravity.falloff = j.value("falloff", c.gravity.falloff);
        c.gravity.weight = j.value("weight", c.gravity.weight);
        c.gravity.deviation_cap = j.value("deviation_cap", c.gravity.deviation_cap);
        if (j.contains("exclusion_zones")) {
          for (const auto& z : j.at("exclusion_zones")) {
            if (!z.is_array() || z.size() != 4) {
              throw ConfigError("exclusion zone must be [x0, y0, x1, y1]");
            }
            c.gravity.exclusion_zones.push_back(
                {{z[0].get<double>(), z[1].get<double>()}, {z[2].get<double>(), z[3].get<double>()}});
          }
        }
        break;
      case AssistMethod::predictor:
        c.model_path = j.value("model", std::string());
        c.blend = j.value("blend", c.blend);
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed assist config: ") + e.what());
  }
  c.validate();
}

}  // namespace aimassist

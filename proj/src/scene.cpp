#include "aimassist/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "aimassist/error.hpp"
#include "aimassist/random.hpp"

namespace aimassist {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(std::string("field '") + field + "' must be a 3-element array");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

void Camera::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("camera viewport must be positive");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("camera fov must lie in (0, 180)");
  if (!is_finite(position)) throw ConfigError("camera position must be finite");
  if (!(norm(forward) > 1e-12) || !(norm(up) > 1e-12)) {
    throw ConfigError("camera forward/up must be nonzero");
  }
  if (norm(cross(forward, up)) < 1e-9 * norm(forward) * norm(up)) {
    throw ConfigError("camera forward and up are parallel");
  }
}

double Camera::focal_px() const { return (height / 2.0) / std::tan(fov_deg * kDegToRad / 2.0); }

double Camera::diagonal() const { return std::hypot(width, height); }

CameraBasis camera_basis(const Camera& camera) {
  const Vec3 f = normalized(camera.forward);
  const Vec3 r = normalized(cross(camera.up, f));
  return {r, cross(f, r), f};
}

Projection project(const Camera& camera, Vec3 point) {
  const CameraBasis b = camera_basis(camera);
  const Vec3 rel = point - camera.position;
  const double depth = dot(rel, b.forward);
  Projection out;
  out.depth = depth;
  if (!(depth > 0.0)) {
    out.screen = camera.center();
    out.visible = false;
    return out;
  }
  const double f = camera.focal_px();
  out.screen = {camera.width / 2.0 + f * dot(rel, b.right) / depth,
                camera.height / 2.0 - f * dot(rel, b.up) / depth};
  out.visible = out.screen.x >= 0.0 && out.screen.x <= camera.width && out.screen.y >= 0.0 &&
                out.screen.y <= camera.height;
  return out;
}

Vec3 unproject(const Camera& camera, Vec2 screen, double distance) {
  const CameraBasis b = camera_basis(camera);
  const double f = camera.focal_px();
  const Vec3 ray = b.forward * f + b.right * (screen.x - camera.width / 2.0) +
                   b.up * (camera.height / 2.0 - screen.y);
  return camera.position + normalized(ray) * distance;
}

void Target::validate() const {
  if (!(screen_radius > 0.0)) throw ConfigError("target screen_radius must be > 0");
  if (!(availability_window > 0.0)) throw ConfigError("target availability_window must be > 0");
  if (!is_finite(position)) throw ConfigError("target position must be finite");
  if (motion) {
    if (!(motion->speed > 0.0)) throw ConfigError("moving target speed must be > 0");
    if (!is_finite(motion->end) || motion->end == position) {
      throw ConfigError("moving target end must differ from its start");
    }
  }
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::locate: return "locate";
    case Mode::select: return "select";
    case Mode::follow: return "follow";
  }
  return "locate";
}

Mode parse_mode(std::string_view text) {
  if (text == "locate") return Mode::locate;
  if (text == "select") return Mode::select;
  if (text == "follow") return Mode::follow;
  throw ConfigError("invalid mode '" + std::string(text) + "' (expected locate|select|follow)");
}

void TrialSpec::validate() const {
  camera.validate();
  if (targets.empty()) throw ConfigError("trial spec needs at least one target");
  if (!(tick_rate > 0.0)) throw ConfigError("tick_rate must be > 0");
  if (mode == Mode::select && !(dwell_time > 0.0)) {
    throw ConfigError("dwell_time must be > 0 in select mode");
  }
  for (const Target& t : targets) {
    t.validate();
    if (mode == Mode::follow && !t.is_moving()) {
      throw ConfigError("follow mode requires moving targets");
    }
  }
}

double trip_time(const Target& target) {
  if (!target.motion) throw ConfigError("trip_time of a static target");
  return norm(target.motion->end - target.position) / target.motion->speed;
}

Vec3 follow_position(const Target& target, double t) {
  if (!target.motion) throw ConfigError("follow_position of a static target");
  if (t < 0.0) throw ConfigError("follow_position requires t >= 0");
  const Vec3 path = target.motion->end - target.position;
  const double length = norm(path);
  const double travelled = target.motion->speed * t;
  if (travelled >= length) return target.motion->end;
  return target.position + path * (travelled / length);
}

double effective_window(const Target& target) {
  if (target.motion) return std::min(target.availability_window, trip_time(target));
  return target.availability_window;
}

std::optional<ActiveTarget> active_target(const TrialSpec& spec, double t,
                                          std::span<const std::optional<double>> completions) {
  double activated = 0.0;
  for (std::size_t k = 0; k < spec.targets.size(); ++k) {
    const double expires = activated + effective_window(spec.targets[k]);
    double end = expires;
    if (k < completions.size() && completions[k] && *completions[k] >= activated &&
        *completions[k] < expires) {
      end = *completions[k];
    }
    if (t < end) {
      if (t < activated) return std::nullopt;
      return ActiveTarget{k, spec.targets[k].id, activated, expires};
    }
    activated = end;
  }
  return std::nullopt;
}

TrialSpec generate_trial(Mode mode, const SceneGenParams& params, std::uint64_t seed) {
  Rng rng(split_seed(seed, streams::kScene));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Camera& cam = params.camera;
  const double margin = std::min(params.screen_margin, std::min(cam.width, cam.height) / 4.0);
  auto inside = [&](Vec2 p) {
    return p.x >= margin && p.x <= cam.width - margin && p.y >= margin &&
           p.y <= cam.height - margin;
  };

  // Next appearance point: an offset from `from` whose length is
  // max_offset * u^exponent, so short hops dominate and long ones stay possible.
  auto near_point = [&](Vec2 from) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double r = params.max_offset * std::pow(unit(rng), params.offset_exponent);
      const double a = 2.0 * std::numbers::pi * unit(rng);
      const Vec2 p = from + Vec2{std::cos(a), std::sin(a)} * r;
      if (inside(p)) return p;
    }
    return Vec2{margin + unit(rng) * (cam.width - 2.0 * margin),
                margin + unit(rng) * (cam.height - 2.0 * margin)};
  };
  auto offscreen_point = [&] {
    const double over = 0.25 * unit(rng) + 0.01;
    const int side = static_cast<int>(unit(rng) * 4.0) % 4;
    const double along = unit(rng);
    switch (side) {
      case 0: return Vec2{-over * cam.width, along * cam.height};
      case 1: return Vec2{(1.0 + over) * cam.width, along * cam.height};
      case 2: return Vec2{along * cam.width, -over * cam.height};
      default: return Vec2{along * cam.width, (1.0 + over) * cam.height};
    }
  };
  auto distance = [&] {
    return params.min_distance + unit(rng) * (params.max_distance - params.min_distance);
  };

  TrialSpec spec;
  spec.mode = mode;
  spec.camera = cam;
  spec.dwell_time = params.dwell_time;
  spec.tick_rate = params.tick_rate;
  spec.seed = seed;
  spec.targets.reserve(params.target_count);
  Vec2 anchor = cam.center();
  for (std::size_t i = 0; i < params.target_count; ++i) {
    Target t;
    t.id = static_cast<int>(i);
    t.screen_radius = params.screen_radius;
    t.availability_window = params.availability_window;
    const bool offscreen = unit(rng) < params.offscreen_fraction;
    const Vec2 appear = offscreen ? offscreen_point() : near_point(anchor);
    t.position = unproject(cam, appear, distance());
    if (!offscreen) anchor = appear;
    if (mode == Mode::follow) {
      // Travel within a plane facing the camera (small depth component) and
      // keep the end mark on screen.
      const CameraBasis b = camera_basis(cam);
      Vec3 end = t.position;
      bool found = false;
      for (int attempt = 0; attempt < 128 && !found; ++attempt) {
        const double length = params.min_path + unit(rng) * (params.max_path - params.min_path);
        const double a = 2.0 * std::numbers::pi * unit(rng);
        const double dz = 0.6 * (unit(rng) - 0.5);
        const Vec3 dir = normalized(b.right * std::cos(a) + b.up * std::sin(a) + b.forward * dz);
        const Vec3 candidate = t.position + dir * length;
        const Projection p = project(cam, candidate);
        if (p.visible && inside(p.screen)) {
          end = candidate;
          found = true;
        }
      }
      if (!found) {
        // Aim at the screen centre at the same distance.
        const Vec3 centre = unproject(cam, cam.center(), norm(t.position - cam.position));
        const Vec3 dir = normalized(centre - t.position + Vec3{1e-6, 0.0, 0.0});
        end = t.position + dir * params.min_path;
      }
      t.motion = Motion{end, params.follow_speed};
      t.availability_window = trip_time(t);
      const Projection pe = project(cam, end);
      if (pe.visible) anchor = pe.screen;
    }
    spec.targets.push_back(t);
  }
  return spec;
}

void to_json(nlohmann::json& j, const Camera& c) {
  j = {{"position", vec_json(c.position)},
       {"forward", vec_json(c.forward)},
       {"up", vec_json(c.up)},
       {"fov_deg", c.fov_deg},
       {"viewport", {c.width, c.height}}};
}

void from_json(const nlohmann::json& j, Camera& c) {
  c = Camera{};
  if (j.contains("position")) c.position = vec_from(j.at("position"), "position");
  if (j.contains("forward")) c.forward = vec_from(j.at("forward"), "forward");
  if (j.contains("up")) c.up = vec_from(j.at("up"), "up");
  if (j.contains("fov_deg")) c.fov_deg = j.at("fov_deg").get<double>();
  if (j.contains("viewport")) {
    const auto& vp = j.at("viewport");
    if (!vp.is_array() || vp.size() != 2) throw ConfigError("viewport must be [width, height]");
    c.width = vp.at(0).get<double>();
    c.height = vp.at(1).get<double>();
  }
}

void to_json(nlohmann::json& j, const Target& t) {
  j = {{"id", t.id},
       {"position", vec_json(t.position)},
       {"screen_radius", t.screen_radius},
       {"availability_window", t.availability_window}};
  if (t.motion) {
    j["kind"] = "moving";
    j["end"] = vec_json(t.motion->end);
    j["speed"] = t.motion->speed;
  } else {
    j["kind"] = "static";
  }
}

void from_json(const nlohmann::json& j, Target& t) {
  t = Target{};
  t.id = j.at("id").get<int>();
  t.position = vec_from(j.at("position"), "position");
  t.screen_radius = j.value("screen_radius", 40.0);
  t.availability_window = j.value("availability_window", 10.0);
  const std::string kind = j.value("kind", std::string("static"));
  if (kind == "moving") {
    t.motion = Motion{vec_from(j.at("end"), "end"), j.at("speed").get<double>()};
  } else if (kind != "static") {
    throw ConfigError("invalid target kind '" + kind + "' (expected static|moving)");
  }
}

void to_json(nlohmann::json& j, const TrialSpec& s) {
  j = {{"mode", to_string(s.mode)},
       {"camera", s.camera},
       {"targets", s.targets},
       {"dwell_time", s.dwell_time},
       {"seed", s.seed},
       {"tick_rate", s.tick_rate}};
}

void from_json(const nlohmann::json& j, TrialSpec& s) {
  try {
    s = TrialSpec{};
    s.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("camera")) s.camera = j.at("camera").get<Camera>();
    s.targets = j.at("targets").get<std::vector<Target>>();
    s.dwell_time = j.value("dwell_time", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.tick_rate = j.value("tick_rate", 60.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed trial spec: ") + e.what());
  }
  s.validate();
}

}  // namespace aimassist

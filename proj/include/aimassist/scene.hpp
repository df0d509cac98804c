#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aimassist/geometry.hpp"

namespace aimassist {

/// Pinhole camera looking along `forward`. Screen y grows downward.
struct Camera {
  Vec3 position{0.0, 0.0, 0.0};
  Vec3 forward{0.0, 0.0, 1.0};
  Vec3 up{0.0, 1.0, 0.0};
  double fov_deg = 60.0;  // vertical
  double width = 1920.0;
  double height = 1080.0;

  /// Throws ConfigError on degenerate axes, fov outside (0, 180) or an empty viewport.
  void validate() const;

  /// Focal length in pixels.
  double focal_px() const;
  Vec2 center() const { return {width / 2.0, height / 2.0}; }
  double diagonal() const;
};

/// Orthonormal camera basis: right, up, forward (left-handed, +x right on screen).
struct CameraBasis {
  Vec3 right;
  Vec3 up;
  Vec3 forward;
};
CameraBasis camera_basis(const Camera& camera);

struct Projection {
  Vec2 screen;
  bool visible = false;
  double depth = 0.0;  // along the forward axis, meters
};

/// Perspective projection to viewport pixels. Points at or behind the camera
/// plane, or outside the viewport, come back with visible = false.
Projection project(const Camera& camera, Vec3 point);

/// Inverse of `project` for a pixel at the given distance from the camera.
Vec3 unproject(const Camera& camera, Vec2 screen, double distance);

struct Motion {
  Vec3 end;
  double speed = 0.0;  // m/s
  friend bool operator==(const Motion&, const Motion&) = default;
};

struct Target {
  int id = 0;
  Vec3 position;                      // start position for moving targets
  double screen_radius = 40.0;        // px
  double availability_window = 10.0;  // s
  std::optional<Motion> motion;       // empty = static

  bool is_moving() const { return motion.has_value(); }
  void validate() const;
  friend bool operator==(const Target&, const Target&) = default;
};

enum class Mode { locate, select, follow };

std::string_view to_string(Mode mode);
/// Throws ConfigError naming the offending string.
Mode parse_mode(std::string_view text);

struct TrialSpec {
  Mode mode = Mode::locate;
  Camera camera;
  std::vector<Target> targets;
  double dwell_time = 1.0;  // select only
  std::uint64_t seed = 0;
  double tick_rate = 60.0;

  void validate() const;
  double tick_period() const { return 1.0 / tick_rate; }
};

/// Time for a moving target to travel from its start to its end.
double trip_time(const Target& target);

/// Position of a moving target `t` seconds after its activation. Clamps at
/// the end point. Throws ConfigError for static targets or t < 0.
Vec3 follow_position(const Target& target, double t);

/// Seconds a target stays active before it is deleted. Moving targets are
/// also removed once they reach their end mark.
double effective_window(const Target& target);

/// Activation schedule: target k becomes active when target k-1 completes or
/// expires, whichever comes first. `completions[k]` is the completion time of
/// target k, if any; completions recorded after expiry are ignored.
struct ActiveTarget {
  std::size_t index = 0;
  int id = 0;
  double activated_at = 0.0;
  double expires_at = 0.0;
};

std::optional<ActiveTarget> active_target(const TrialSpec& spec, double t,
                                          std::span<const std::optional<double>> completions);

/// Knobs for procedural trial generation.
struct SceneGenParams {
  std::size_t target_count = 10;
  double min_distance = 20.0;  // m, from the camera
  double max_distance = 40.0;
  double screen_margin = 40.0;       // px kept clear of the viewport edge
  double max_offset = 1000.0;        // px, longest hop from the previous target
  double offset_exponent = 1.6;      // hop = max_offset * u^exponent
  double offscreen_fraction = 0.0;   // share of spawns placed outside the viewport
  double screen_radius = 40.0;
  double availability_window = 10.0;
  double dwell_time = 1.0;
  double tick_rate = 60.0;
  double follow_speed = 2.0;  // m/s
  double min_path = 15.0;     // m
  double max_path = 30.0;
  Camera camera;
};

/// Deterministic trial generation from `seed`.
TrialSpec generate_trial(Mode mode, const SceneGenParams& params, std::uint64_t seed);

void to_json(nlohmann::json& j, const Camera& c);
void from_json(const nlohmann::json& j, Camera& c);
void to_json(nlohmann::json& j, const Target& t);
void from_json(const nlohmann::json& j, Target& t);
void to_json(nlohmann::json& j, const TrialSpec& s);
/// Validates after parsing; malformed documents raise ConfigError.
void from_json(const nlohmann::json& j, TrialSpec& s);

}  // namespace aimassist

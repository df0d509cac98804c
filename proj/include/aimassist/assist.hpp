#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aimassist/geometry.hpp"

namespace aimassist {

class PredictorModel;
class CursorHistory;
struct EncodingContract;

/// One raw input movement: `raw` is the displacement requested this tick and
/// `cursor` the crosshair position before it is applied.
struct MoveSample {
  Vec2 raw;
  double t = 0.0;
  Vec2 cursor;
};

struct LerpParams {
  double radius = 250.0;     // px
  double max_blend = 0.6;    // in [0, 1]
  double falloff = 1.0;      // exponent, > 0
  bool align_gate = true;    // no assist when moving away from the target

  void validate() const;
};

/// Blend the movement toward a single target. Leaves the input untouched
/// when the cursor is stationary, on the target centre, or out of range.
Vec2 lerp_assist(const MoveSample& sample, Vec2 target, const LerpParams& params);

struct Attractor {
  int id = 0;
  Vec2 position;
  double weight = 0.5;
  friend bool operator==(const Attractor&, const Attractor&) = default;
};

/// Immutable multi-target attraction field. Inside any exclusion zone the
/// input passes through unmodified.
struct GravityField {
  std::vector<Attractor> attractors;
  double radius = 250.0;
  double falloff = 1.0;
  std::vector<Rect> exclusion_zones;
  double deviation_cap = 0.75;

  void validate() const;
  bool excluded(Vec2 cursor) const;
  /// Sum of weighted unit pulls at `cursor`, before the deviation cap.
  Vec2 pull(Vec2 cursor) const;
  friend bool operator==(const GravityField&, const GravityField&) = default;
};

Vec2 gravity_assist(const MoveSample& sample, const GravityField& field);

struct ScreenTarget {
  int id = 0;
  Vec2 position;
  double radius = 40.0;
};

struct GravityParams {
  double radius = 250.0;
  double falloff = 1.0;
  double weight = 0.5;
  double deviation_cap = 0.75;
  std::vector<Rect> exclusion_zones;

  void validate() const;
};

/// One equal-weight attractor per target, ordered by target id.
GravityField build_gravity_field(std::span<const ScreenTarget> targets,
                                 const GravityParams& params);

/// Pull field sampled on a regular grid with bilinear lookup. Agrees with the
/// analytic field to within the variation of the pull across one cell.
class GravityRaster {
 public:
  GravityRaster(GravityField field, double width, double height, double cell_px = 1.0);

  Vec2 pull(Vec2 cursor) const;
  Vec2 assist(const MoveSample& sample) const;
  const GravityField& field() const { return field_; }
  double cell() const { return cell_; }

 private:
  GravityField field_;
  double cell_;
  std::size_t cols_;
  std::size_t rows_;
  std::vector<Vec2> nodes_;
};

enum class AssistMethod { none, lerp, gravity, predictor };

std::string_view to_string(AssistMethod method);
AssistMethod parse_assist_method(std::string_view text);

struct AssistConfig {
  AssistMethod method = AssistMethod::none;
  std::optional<int> lerp_target;  // empty: the currently active target
  LerpParams lerp;
  GravityParams gravity;
  std::string model_path;                       // informational
  std::shared_ptr<const PredictorModel> model;  // required for predictor
  double blend = 0.5;                           // predictor blend beta

  void validate() const;
};

/// What the assist layer may know about the scene this tick.
struct AssistWorld {
  std::span<const ScreenTarget> targets;  // active targets, sorted by id
  double width = 1920.0;
  double height = 1080.0;
  const CursorHistory* history = nullptr;  // predictor only
};

/// Dispatch to the configured method. Throws ConfigError when the predictor
/// is selected without a loaded model or without a cursor history.
Vec2 apply_assist(const AssistConfig& config, const MoveSample& sample, const AssistWorld& world);

void to_json(nlohmann::json& j, const AssistConfig& c);
void from_json(const nlohmann::json& j, AssistConfig& c);

}  // namespace aimassist

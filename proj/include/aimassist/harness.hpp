#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aimassist/agents.hpp"
#include "aimassist/assist.hpp"
#include "aimassist/predictor.hpp"
#include "aimassist/scene.hpp"

namespace aimassist {

enum class FailureCause { none, expired, never_visible };

std::string_view to_string(FailureCause cause);
FailureCause parse_failure_cause(std::string_view text);

/// Outcome of one target's activation window. Only the score field of the
/// trial mode is populated.
struct SubtaskRecord {
  int trial = 0;
  std::string device;
  Mode mode = Mode::locate;
  double speed = 0.0;  // m/s, follow only
  int target_id = 0;
  bool success = false;
  FailureCause cause = FailureCause::none;
  Vec2 appear_position;                 // target on screen at activation
  std::optional<double> appear_distance;  // crosshair -> target at activation, px
  double camera_distance = 0.0;         // m
  std::optional<double> acquisition_time;  // locate
  std::optional<double> overshoot_time;    // select: on-target time beyond the dwell
  std::optional<double> extra_time;        // select: completion time minus the dwell
  std::optional<double> follow_fraction;   // follow
  std::optional<double> fly_time;          // follow
  std::optional<double> fly_distance;      // follow

  /// The mode score: acquisition time, overshoot time or follow fraction.
  std::optional<double> score() const;
  friend bool operator==(const SubtaskRecord&, const SubtaskRecord&) = default;
};

/// One fixed-timestep tick as seen by the scorer: the crosshair and the
/// target both move linearly from their `0` to their `1` positions.
struct TickLogEntry {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec2 cursor0;
  Vec2 cursor1;
  Vec2 target0;
  Vec2 target1;
  double radius = 40.0;
  bool visible = true;
};

/// Time sub-interval of a tick with the crosshair inside the target disc.
std::optional<std::pair<double, double>> on_target_interval(const TickLogEntry& tick);

/// Incremental scoring of one subtask; the same rules back the batch
/// score_* functions and the live trial loop.
class SubtaskScorer {
 public:
  SubtaskScorer(Mode mode, double activated_at, double expires_at, double dwell_time);

  void consume(const TickLogEntry& tick);
  /// Locate/select success reached; follow subtasks run to the end of the trip.
  bool complete() const { return complete_; }
  /// Fill the outcome fields of `record` from what has been consumed.
  void finish(SubtaskRecord& record) const;

 private:
  Mode mode_;
  double activated_;
  double expires_;
  double dwell_;
  bool complete_ = false;
  bool touched_ = false;
  bool ever_visible_ = false;
  double first_entry_ = 0.0;
  double on_time_ = 0.0;
  std::optional<double> run_start_;
  double completed_at_ = 0.0;
};

SubtaskRecord score_locate(std::span<const TickLogEntry> log, double activated_at,
                           double window);
SubtaskRecord score_select(std::span<const TickLogEntry> log, double activated_at, double window,
                           double dwell_time);
SubtaskRecord score_follow(std::span<const TickLogEntry> log, double activated_at,
                           double trip_time);

/// What an input source may observe before producing this tick's movement.
struct TickView {
  std::uint64_t tick = 0;
  double t = 0.0;
  double dt = 0.0;
  Vec2 cursor;
  std::optional<Percept> target;  // active and visible target
};

class InputSource {
 public:
  virtual ~InputSource() = default;
  /// Raw movement for this tick, px/tick.
  virtual Vec2 next(const TickView& view) = 0;
};

class AgentSource final : public InputSource {
 public:
  AgentSource(const AgentParams& params, double dt, std::uint64_t trial_seed);
  Vec2 next(const TickView& view) override;

 private:
  AgentParams params_;
  AgentState state_;
};

/// Plays back a recorded raw-movement log; zero movement once exhausted.
class ReplaySource final : public InputSource {
 public:
  explicit ReplaySource(std::vector<Vec2> moves) : moves_(std::move(moves)) {}
  Vec2 next(const TickView& view) override;

 private:
  std::vector<Vec2> moves_;
  std::size_t index_ = 0;
};

/// Everything that happened in one tick.
struct TickResult {
  Vec2 raw;
  Vec2 assisted;
  std::size_t finished_records = 0;  // records emitted by this tick
};

/// Fixed-timestep trial loop: input -> assist -> integrate -> score. The
/// cursor starts at the viewport centre and is clamped to the viewport.
class TrialRunner {
 public:
  TrialRunner(TrialSpec spec, AssistConfig assist);

  bool finished() const { return !active_.has_value(); }
  TickView view() const;
  TickResult advance(Vec2 raw);

  const TrialSpec& spec() const { return spec_; }
  const std::vector<SubtaskRecord>& records() const { return records_; }
  Vec2 cursor() const { return cursor_; }
  std::uint64_t tick() const { return tick_; }
  double time() const { return tick_time(tick_); }
  const std::optional<ActiveTarget>& active() const { return active_; }
  /// Active target on screen, when visible.
  std::optional<ScreenTarget> active_screen() const;
  Vec2 last_raw() const { return last_raw_; }
  Vec2 last_assisted() const { return last_assisted_; }
  const std::vector<Vec2>& input_log() const { return input_log_; }

 private:
  double tick_time(std::uint64_t k) const { return static_cast<double>(k) / spec_.tick_rate; }
  Projection target_projection(double t) const;
  void sync_active();
  void close_subtask(std::size_t index, const SubtaskScorer* scorer);

  TrialSpec spec_;
  AssistConfig assist_;
  Vec2 cursor_;
  std::uint64_t tick_ = 0;
  std::vector<std::optional<double>> completions_;
  std::optional<ActiveTarget> active_;
  std::optional<SubtaskScorer> scorer_;
  std::size_t next_index_ = 0;  // first target without a record
  SubtaskRecord pending_;
  std::vector<SubtaskRecord> records_;
  CursorHistory history_;
  Vec2 last_raw_;
  Vec2 last_assisted_;
  std::vector<Vec2> input_log_;
};

std::vector<SubtaskRecord> run_trial(const TrialSpec& spec, InputSource& source,
                                     const AssistConfig& assist);
std::vector<SubtaskRecord> run_agent_trial(const TrialSpec& spec, const AgentParams& params,
                                           const AssistConfig& assist, std::uint64_t seed);

/// A batch of generated trials for one device class.
struct BatchConfig {
  Mode mode = Mode::locate;
  Device device = Device::mouse;
  AgentParams agent = preset(Device::mouse);
  AssistConfig assist;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  SceneGenParams scene;
  std::vector<double> speeds{2.0, 5.0, 10.0};  // follow: trial i uses speeds[i % n]
  std::size_t jobs = 1;
};

/// Trial i uses seed split_seed(seed, i); output order is trial order
/// regardless of `jobs`.
std::vector<SubtaskRecord> run_batch(const BatchConfig& config);

struct SummaryRow {
  std::string device;
  std::optional<double> speed;  // follow bands; empty for the pooled row
  std::size_t subtasks = 0;
  double success_pct = 0.0;  // one decimal, half-up
  std::optional<double> min_screen;
  std::optional<double> max_screen;
  std::optional<double> avg_screen;
  std::optional<double> avg_score;  // locate/select: successful only; follow: all
  std::optional<double> avg_extra;  // select only
  double avg_camera_distance = 0.0;
};

struct SummaryTable {
  Mode mode = Mode::locate;
  std::vector<SummaryRow> rows;
};

double round_percent(double fraction);

/// Group by device (in first-seen order) and, for follow mode, by speed band
/// with an extra pooled "Average" row per device.
SummaryTable aggregate(std::span<const SubtaskRecord> records);
const SummaryRow* find_row(const SummaryTable& table, std::string_view device,
                           std::optional<double> speed = std::nullopt);

/// Table-shaped text rendering, one column per device.
void print_table(std::ostream& out, const SummaryTable& table);

inline constexpr int kRecordsSchemaVersion = 1;

void write_records_csv(std::ostream& out, std::span<const SubtaskRecord> records);
void export_records_csv(std::span<const SubtaskRecord> records, const std::filesystem::path& path);
std::vector<SubtaskRecord> read_records_csv(std::istream& in, const std::string& origin);
/// Throws IoError / SchemaError naming the path and the expected version.
std::vector<SubtaskRecord> import_records_csv(const std::filesystem::path& path);

nlohmann::json records_json(std::span<const SubtaskRecord> records);
nlohmann::json summary_json(const SummaryTable& table);
void export_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Scatter series for external plotting, one CSV per figure family. Returns
/// the files written.
std::vector<std::filesystem::path> write_plot_data(std::span<const SubtaskRecord> records,
                                                   const std::filesystem::path& dir);

}  // namespace aimassist

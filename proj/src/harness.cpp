#include "aimassist/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "aimassist/error.hpp"
#include "aimassist/random.hpp"

namespace aimassist {

std::string_view to_string(FailureCause cause) {
  switch (cause) {
    case FailureCause::none: return "none";
    case FailureCause::expired: return "expired";
    case FailureCause::never_visible: return "never-visible";
  }
  return "none";
}

FailureCause parse_failure_cause(std::string_view text) {
  if (text == "none") return FailureCause::none;
  if (text == "expired") return FailureCause::expired;
  if (text == "never-visible") return FailureCause::never_visible;
  throw SchemaError("unknown failure cause '" + std::string(text) + "'");
}

std::optional<double> SubtaskRecord::score() const {
  switch (mode) {
    case Mode::locate: return acquisition_time;
    case Mode::select: return overshoot_time;
    case Mode::follow: return follow_fraction;
  }
  return std::nullopt;
}

namespace {

double at_fraction(double t0, double t1, double s) {
  if (s <= 0.0) return t0;
  if (s >= 1.0) return t1;
  return t0 + s * (t1 - t0);
}

}  // namespace

std::optional<std::pair<double, double>> on_target_interval(const TickLogEntry& tick) {
  const Vec2 r0 = tick.cursor0 - tick.target0;
  const Vec2 dr = (tick.cursor1 - tick.cursor0) - (tick.target1 - tick.target0);
  const double a = dot(dr, dr);
  const double b = 2.0 * dot(r0, dr);
  const double c = dot(r0, r0) - tick.radius * tick.radius;
  double lo = 0.0;
  double hi = 1.0;
  if (a <= 1e-18) {
    if (c > 0.0) return std::nullopt;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    lo = std::max(0.0, (-b - root) / (2.0 * a));
    hi = std::min(1.0, (-b + root) / (2.0 * a));
    if (c <= 0.0) lo = 0.0;
    if (lo > hi) return std::nullopt;
  }
  return std::make_pair(at_fraction(tick.t0, tick.t1, lo), at_fraction(tick.t0, tick.t1, hi));
}

SubtaskScorer::SubtaskScorer(Mode mode, double activated_at, double expires_at, double dwell_time)
    : mode_(mode), activated_(activated_at), expires_(expires_at), dwell_(dwell_time) {}

void SubtaskScorer::consume(const TickLogEntry& tick) {
  if (tick.t0 >= expires_ || tick.t1 <= activated_) return;
  if (!tick.visible) {
    run_start_.reset();
    return;
  }
  ever_visible_ = true;
  auto interval = on_target_interval(tick);
  if (interval) {
    interval->first = std::max(interval->first, activated_);
    interval->second = std::min(interval->second, expires_);
    if (interval->first > interval->second) interval.reset();
  }
  switch (mode_) {
    case Mode::locate:
      if (interval && !complete_) {
        complete_ = true;
        first_entry_ = interval->first;
      }
      break;
    case Mode::select: {
      if (complete_) break;
      if (!interval) {
        run_start_.reset();
        break;
      }
      const auto [a, b] = *interval;
      if (!(run_start_ && a == tick.t0)) run_start_ = a;
      // Tolerance absorbs accumulated rounding in tick times.
      if (*run_start_ + dwell_ <= b + 1e-9) {
        completed_at_ = *run_start_ + dwell_;
        on_time_ += completed_at_ - a;
        complete_ = true;
      } else {
        on_time_ += b - a;
        if (b < tick.t1) run_start_.reset();
      }
      break;
    }
    case Mode::follow:
      if (interval) {
        touched_ = true;
        on_time_ += interval->second - interval->first;
      }
      break;
  }
}

void SubtaskScorer::finish(SubtaskRecord& record) const {
  record.mode = mode_;
  switch (mode_) {
    case Mode::locate:
      record.success = complete_;
      if (complete_) record.acquisition_time = first_entry_ - activated_;
      break;
    case Mode::select:
      record.success = complete_;
      if (complete_) {
        record.overshoot_time = std::max(0.0, on_time_ - dwell_);
        record.extra_time = std::max(0.0, completed_at_ - activated_ - dwell_);
      }
      break;
    case Mode::follow: {
      record.success = touched_;
      const double trip = expires_ - activated_;
      record.follow_fraction = trip > 0.0 ? std::clamp(on_time_ / trip, 0.0, 1.0) : 0.0;
      break;
    }
  }
  if (record.success) {
    record.cause = FailureCause::none;
  } else {
    record.cause = ever_visible_ ? FailureCause::expired : FailureCause::never_visible;
  }
}

namespace {

SubtaskRecord score_log(Mode mode, std::span<const TickLogEntry> log, double activated_at,
                        double window, double dwell) {
  SubtaskScorer scorer(mode, activated_at, activated_at + window, dwell);
  for (const TickLogEntry& tick : log) {
    scorer.consume(tick);
    if (scorer.complete()) break;
  }
  SubtaskRecord record;
  scorer.finish(record);
  return record;
}

}  // namespace

SubtaskRecord score_locate(std::span<const TickLogEntry> log, double activated_at, double window) {
  return score_log(Mode::locate, log, activated_at, window, 0.0);
}

SubtaskRecord score_select(std::span<const TickLogEntry> log, double activated_at, double window,
                           double dwell_time) {
  return score_log(Mode::select, log, activated_at, window, dwell_time);
}

SubtaskRecord score_follow(std::span<const TickLogEntry> log, double activated_at,
                           double trip_time) {
  return score_log(Mode::follow, log, activated_at, trip_time, 0.0);
}

AgentSource::AgentSource(const AgentParams& params, double dt, std::uint64_t trial_seed)
    : params_(params), state_(params, dt, split_seed(trial_seed, streams::kAgent)) {}

Vec2 AgentSource::next(const TickView& view) {
  return step(state_, params_, view.target, view.cursor, view.dt).raw;
}

Vec2 ReplaySource::next(const TickView&) {
  return index_ < moves_.size() ? moves_[index_++] : Vec2{};
}

TrialRunner::TrialRunner(TrialSpec spec, AssistConfig assist)
    : spec_(std::move(spec)), assist_(std::move(assist)) {
  spec_.validate();
  assist_.validate();
  if (assist_.method == AssistMethod::predictor && !assist_.model) {
    throw ConfigError("predictor assist selected but no model is loaded");
  }
  double span = 1.0;
  if (assist_.model) {
    const EncodingContract& c = assist_.model->contract();
    span += static_cast<double>(c.history_len) * c.interval;
  }
  history_ = CursorHistory(span);
  cursor_ = spec_.camera.center();
  completions_.assign(spec_.targets.size(), std::nullopt);
  sync_active();
}

Projection TrialRunner::target_projection(double t) const {
  const Target& target = spec_.targets[active_->index];
  if (target.is_moving()) {
    return project(spec_.camera,
                   follow_position(target, std::max(0.0, t - active_->activated_at)));
  }
  return project(spec_.camera, target.position);
}

std::optional<ScreenTarget> TrialRunner::active_screen() const {
  if (!active_) return std::nullopt;
  const Projection p = target_projection(time());
  if (!p.visible) return std::nullopt;
  return ScreenTarget{active_->id, p.screen, spec_.targets[active_->index].screen_radius};
}

TickView TrialRunner::view() const {
  TickView v;
  v.tick = tick_;
  v.t = time();
  v.dt = spec_.tick_period();
  v.cursor = cursor_;
  if (auto s = active_screen()) v.target = Percept{s->id, s->position};
  return v;
}

void TrialRunner::close_subtask(std::size_t index, const SubtaskScorer* scorer) {
  SubtaskRecord record;
  if (scorer) {
    record = pending_;
    scorer->finish(record);
  } else {
    // Target expired between two ticks without ever being observed.
    const Target& t = spec_.targets[index];
    record.mode = spec_.mode;
    record.target_id = t.id;
    record.cause = FailureCause::never_visible;
    record.camera_distance = norm(t.position - spec_.camera.position);
    if (spec_.mode == Mode::follow) record.follow_fraction = 0.0;
  }
  records_.push_back(std::move(record));
  next_index_ = index + 1;
}

void TrialRunner::sync_active() {
  const std::optional<ActiveTarget> now = active_target(spec_, time(), completions_);
  const bool changed = !now || !active_ || now->index != active_->index;
  if (!changed) return;
  if (active_ && scorer_) close_subtask(active_->index, &*scorer_);
  scorer_.reset();
  const std::size_t until = now ? now->index : spec_.targets.size();
  while (next_index_ < until) close_subtask(next_index_, nullptr);
  active_ = now;
  if (!active_) return;

  const Target& target = spec_.targets[active_->index];
  scorer_.emplace(spec_.mode, active_->activated_at, active_->expires_at, spec_.dwell_time);
  pending_ = SubtaskRecord{};
  pending_.mode = spec_.mode;
  pending_.target_id = target.id;
  pending_.camera_distance = norm(target.position - spec_.camera.position);
  const Projection p = project(spec_.camera, target.position);
  pending_.appear_position = p.screen;
  if (p.visible) pending_.appear_distance = norm(p.screen - cursor_);
  if (target.motion) {
    pending_.speed = target.motion->speed;
    pending_.fly_time = effective_window(target);
    pending_.fly_distance = norm(target.motion->end - target.position);
  }
}

TickResult TrialRunner::advance(Vec2 raw) {
  TickResult result;
  if (finished()) return result;
  const double t0 = time();
  const double t1 = tick_time(tick_ + 1);
  const Target& target = spec_.targets[active_->index];
  const Projection p0 = target_projection(t0);
  const Projection p1 = target.is_moving() ? target_projection(t1) : p0;

  history_.push(t0, cursor_);
  const MoveSample sample{raw, t0, cursor_};
  std::vector<ScreenTarget> visible;
  if (p0.visible) visible.push_back({active_->id, p0.screen, target.screen_radius});
  const AssistWorld world{visible, spec_.camera.width, spec_.camera.height, &history_};
  const Vec2 assisted = apply_assist(assist_, sample, world);

  Vec2 next = cursor_ + assisted;
  next.x = std::clamp(next.x, 0.0, spec_.camera.width);
  next.y = std::clamp(next.y, 0.0, spec_.camera.height);

  TickLogEntry entry{t0, t1, cursor_, next, p0.screen, p1.screen, target.screen_radius, p0.visible};
  scorer_->consume(entry);
  if (scorer_->complete() && !completions_[active_->index]) completions_[active_->index] = t1;

  cursor_ = next;
  ++tick_;
  last_raw_ = raw;
  last_assisted_ = assisted;
  input_log_.push_back(raw);
  result.raw = raw;
  result.assisted = assisted;
  const std::size_t before = records_.size();
  sync_active();
  result.finished_records = records_.size() - before;
  return result;
}

std::vector<SubtaskRecord> run_trial(const TrialSpec& spec, InputSource& source,
                                     const AssistConfig& assist) {
  TrialRunner runner(spec, assist);
  while (!runner.finished()) runner.advance(source.next(runner.view()));
  return runner.records();
}

std::vector<SubtaskRecord> run_agent_trial(const TrialSpec& spec, const AgentParams& params,
                                           const AssistConfig& assist, std::uint64_t seed) {
  AgentSource source(params, spec.tick_period(), seed);
  return run_trial(spec, source, assist);
}

std::vector<SubtaskRecord> run_batch(const BatchConfig& config) {
  if (config.trials == 0) throw ConfigError("trial count must be > 0");
  if (config.mode == Mode::follow && config.speeds.empty()) {
    throw ConfigError("follow mode needs at least one speed band");
  }
  std::vector<std::vector<SubtaskRecord>> per_trial(config.trials);
  auto run_one = [&](std::size_t i) {
    const std::uint64_t trial_seed = split_seed(config.seed, i);
    SceneGenParams scene = config.scene;
    if (config.mode == Mode::follow) scene.follow_speed = config.speeds[i % config.speeds.size()];
    const TrialSpec spec = generate_trial(config.mode, scene, trial_seed);
    auto records = run_agent_trial(spec, config.agent, config.assist, trial_seed);
    for (SubtaskRecord& r : records) {
      r.trial = static_cast<int>(i);
      r.device = std::string(to_string(config.device));
    }
    per_trial[i] = std::move(records);
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, config.trials);
  if (jobs == 1) {
    for (std::size_t i = 0; i < config.trials; ++i) run_one(i);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < config.trials; i += jobs) run_one(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<SubtaskRecord> out;
  for (auto& v : per_trial) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

double round_percent(double fraction) { return std::floor(fraction * 1000.0 + 0.5) / 10.0; }

namespace {

SummaryRow summarize(std::string device, std::optional<double> speed,
                     const std::vector<const SubtaskRecord*>& group, Mode mode) {
  SummaryRow row;
  row.device = std::move(device);
  row.speed = speed;
  row.subtasks = group.size();
  std::size_t successes = 0;
  double screen_sum = 0.0;
  std::size_t screen_n = 0;
  double score_sum = 0.0;
  std::size_t score_n = 0;
  double extra_sum = 0.0;
  std::size_t extra_n = 0;
  double cam_sum = 0.0;
  for (const SubtaskRecord* r : group) {
    if (r->success) ++successes;
    if (r->appear_distance) {
      const double d = *r->appear_distance;
      row.min_screen = row.min_screen ? std::min(*row.min_screen, d) : d;
      row.max_screen = row.max_screen ? std::max(*row.max_screen, d) : d;
      screen_sum += d;
      ++screen_n;
    }
    const bool counts = mode == Mode::follow || r->success;
    if (counts && r->score()) {
      score_sum += *r->score();
      ++score_n;
    }
    if (r->success && r->extra_time) {
      extra_sum += *r->extra_time;
      ++extra_n;
    }
    cam_sum += r->camera_distance;
  }
  if (!group.empty()) {
    row.success_pct = round_percent(static_cast<double>(successes) / static_cast<double>(group.size()));
    row.avg_camera_distance = cam_sum / static_cast<double>(group.size());
  }
  if (screen_n) row.avg_screen = screen_sum / static_cast<double>(screen_n);
  if (score_n) row.avg_score = score_sum / static_cast<double>(score_n);
  if (extra_n) row.avg_extra = extra_sum / static_cast<double>(extra_n);
  return row;
}

}  // namespace

SummaryTable aggregate(std::span<const SubtaskRecord> records) {
  SummaryTable table;
  if (records.empty()) return table;
  table.mode = records.front().mode;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SubtaskRecord*>> by_device;
  for (const SubtaskRecord& r : records) {
    auto [it, inserted] = by_device.try_emplace(r.device);
    if (inserted) order.push_back(r.device);
    it->second.push_back(&r);
  }
  for (const std::string& device : order) {
    const auto& group = by_device[device];
    if (table.mode == Mode::follow) {
      std::map<double, std::vector<const SubtaskRecord*>> bands;
      for (const SubtaskRecord* r : group) bands[r->speed].push_back(r);
      for (const auto& [speed, band] : bands) {
        table.rows.push_back(summarize(device, speed, band, table.mode));
      }
    }
    table.rows.push_back(summarize(device, std::nullopt, group, table.mode));
  }
  return table;
}

const SummaryRow* find_row(const SummaryTable& table, std::string_view device,
                           std::optional<double> speed) {
  for (const SummaryRow& row : table.rows) {
    if (row.device != device) continue;
    if (speed.has_value() != row.speed.has_value()) continue;
    if (speed && std::abs(*speed - *row.speed) > 1e-9) continue;
    return &row;
  }
  return nullptr;
}

namespace {

std::string fixed(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

std::string opt_fixed(const std::optional<double>& value, int precision,
                      std::string_view suffix = "") {
  return value ? fixed(*value, precision) + std::string(suffix) : std::string("-");
}

std::string speed_label(double speed) {
  std::string s = fixed(speed, 1);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s + "m/s";
}

}  // namespace

void print_table(std::ostream& out, const SummaryTable& table) {
  std::vector<std::string> devices;
  for (const SummaryRow& r : table.rows) {
    if (std::find(devices.begin(), devices.end(), r.device) == devices.end()) {
      devices.push_back(r.device);
    }
  }
  constexpr int kLabel = 22;
  constexpr int kCol = 12;
  auto header = [&](std::string_view first) {
    out << std::left << std::setw(kLabel) << first;
    for (const auto& d : devices) out << std::right << std::setw(kCol) << d;
    out << '\n';
  };
  auto line = [&](std::string_view label, auto&& cell, std::optional<double> speed) {
    out << std::left << std::setw(kLabel) << label;
    for (const auto& d : devices) {
      const SummaryRow* r = find_row(table, d, speed);
      out << std::right << std::setw(kCol) << (r ? cell(*r) : std::string("-"));
    }
    out << '\n';
  };
  auto success = [](const SummaryRow& r) { return fixed(r.success_pct, 1) + "%"; };

  if (table.mode == Mode::follow) {
    header("Speed / Label");
    std::vector<double> speeds;
    for (const SummaryRow& r : table.rows) {
      if (r.speed && std::find(speeds.begin(), speeds.end(), *r.speed) == speeds.end()) {
        speeds.push_back(*r.speed);
      }
    }
    std::sort(speeds.begin(), speeds.end());
    auto score = [](const SummaryRow& r) {
      return r.avg_score ? fixed(*r.avg_score * 100.0, 1) + "%" : std::string("-");
    };
    for (double s : speeds) {
      line(speed_label(s) + " Success", success, s);
      line(speed_label(s) + " Score", score, s);
    }
    line("Average Success", success, std::nullopt);
    line("Average Score", score, std::nullopt);
    return;
  }
  header("");
  line("Success", success, std::nullopt);
  line("Min. Screen Dist.", [](const SummaryRow& r) { return opt_fixed(r.min_screen, 0, "px"); },
       std::nullopt);
  line("Max. Screen Dist.", [](const SummaryRow& r) { return opt_fixed(r.max_screen, 0, "px"); },
       std::nullopt);
  line("Avg. Screen Dist.", [](const SummaryRow& r) { return opt_fixed(r.avg_screen, 0, "px"); },
       std::nullopt);
  const int score_digits = table.mode == Mode::select ? 3 : 2;
  line("Avg. Score",
       [&](const SummaryRow& r) { return opt_fixed(r.avg_score, score_digits, " s"); },
       std::nullopt);
  if (table.mode == Mode::select) {
    line("Avg. Extra Time", [](const SummaryRow& r) { return opt_fixed(r.avg_extra, 3, " s"); },
         std::nullopt);
  }
  line("Avg. Distance",
       [](const SummaryRow& r) { return fixed(r.avg_camera_distance, 2) + "m"; }, std::nullopt);
}

namespace {

constexpr std::string_view kRecordsColumns =
    "trial,device,mode,speed,target_id,success,failure_cause,appear_x,appear_y,"
    "appear_screen_distance,camera_distance,acquisition_time,overshoot_time,extra_time,"
    "follow_fraction,fly_time,fly_distance";

std::string records_preamble() {
  return "#aimassist-records," + std::to_string(kRecordsSchemaVersion);
}

std::string csv_opt(const std::optional<double>& v) { return v ? fixed(*v, 6) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_opt(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const SubtaskRecord> records) {
  out << records_preamble() << '\n' << kRecordsColumns << '\n';
  for (const SubtaskRecord& r : records) {
    out << r.trial << ',' << r.device << ',' << to_string(r.mode) << ',' << fixed(r.speed, 6) << ','
        << r.target_id << ',' << (r.success ? 1 : 0) << ',' << to_string(r.cause) << ','
        << fixed(r.appear_position.x, 6) << ',' << fixed(r.appear_position.y, 6) << ','
        << csv_opt(r.appear_distance) << ',' << fixed(r.camera_distance, 6) << ','
        << csv_opt(r.acquisition_time) << ',' << csv_opt(r.overshoot_time) << ','
        << csv_opt(r.extra_time) << ',' << csv_opt(r.follow_fraction) << ','
        << csv_opt(r.fly_time) << ',' << csv_opt(r.fly_distance) << '\n';
  }
}

void export_records_csv(std::span<const SubtaskRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_records_csv(out, records);
  if (!out) throw IoError("failed writing: " + path.string());
}

std::vector<SubtaskRecord> read_records_csv(std::istream& in, const std::string& origin) {
  std::vector<SubtaskRecord> records;
  std::string line;
  const std::string expected = "expected " + records_preamble() + " (records schema version " +
                               std::to_string(kRecordsSchemaVersion) + ")";
  if (!std::getline(in, line)) return records;  // empty file: no records
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != records_preamble()) {
    throw SchemaError(origin + ": unrecognized header '" + line + "', " + expected);
  }
  if (!std::getline(in, line) || line != kRecordsColumns) {
    throw SchemaError(origin + ": column header mismatch, " + expected);
  }
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 17) {
      throw SchemaError(origin + ":" + std::to_string(line_no) + ": expected 17 columns, got " +
                        std::to_string(c.size()));
    }
    try {
      SubtaskRecord r;
      r.trial = std::stoi(c[0]);
      r.device = c[1];
      r.mode = parse_mode(c[2]);
      r.speed = std::stod(c[3]);
      r.target_id = std::stoi(c[4]);
      r.success = c[5] == "1";
      r.cause = parse_failure_cause(c[6]);
      r.appear_position = {std::stod(c[7]), std::stod(c[8])};
      r.appear_distance = parse_opt(c[9]);
      r.camera_distance = std::stod(c[10]);
      r.acquisition_time = parse_opt(c[11]);
      r.overshoot_time = parse_opt(c[12]);
      r.extra_time = parse_opt(c[13]);
      r.follow_fraction = parse_opt(c[14]);
      r.fly_time = parse_opt(c[15]);
      r.fly_distance = parse_opt(c[16]);
      records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw SchemaError(origin + ":" + std::to_string(line_no) + ": bad value (" + e.what() + ")");
    }
  }
  return records;
}

std::vector<SubtaskRecord> import_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open records file: " + path.string());
  return read_records_csv(in, path.string());
}

nlohmann::json records_json(std::span<const SubtaskRecord> records) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const SubtaskRecord& r : records) {
    rows.push_back({{"trial", r.trial},
                    {"device", r.device},
                    {"mode", to_string(r.mode)},
                    {"speed", r.speed},
                    {"target_id", r.target_id},
                    {"success", r.success},
                    {"failure_cause", to_string(r.cause)},
                    {"appear_position", {r.appear_position.x, r.appear_position.y}},
                    {"appear_screen_distance", opt(r.appear_distance)},
                    {"camera_distance", r.camera_distance},
                    {"acquisition_time", opt(r.acquisition_time)},
                    {"overshoot_time", opt(r.overshoot_time)},
                    {"extra_time", opt(r.extra_time)},
                    {"follow_fraction", opt(r.follow_fraction)},
                    {"fly_time", opt(r.fly_time)},
                    {"fly_distance", opt(r.fly_distance)}});
  }
  return {{"format", "aimassist-records"}, {"version", kRecordsSchemaVersion}, {"records", rows}};
}

nlohmann::json summary_json(const SummaryTable& table) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const SummaryRow& r : table.rows) {
    rows.push_back({{"device", r.device},
                    {"speed", opt(r.speed)},
                    {"subtasks", r.subtasks},
                    {"success_pct", r.success_pct},
                    {"min_screen_distance", opt(r.min_screen)},
                    {"max_screen_distance", opt(r.max_screen)},
                    {"avg_screen_distance", opt(r.avg_screen)},
                    {"avg_score", opt(r.avg_score)},
                    {"avg_extra_time", opt(r.avg_extra)},
                    {"avg_camera_distance", r.avg_camera_distance}});
  }
  return {{"format", "aimassist-summary"},
          {"version", kRecordsSchemaVersion},
          {"mode", to_string(table.mode)},
          {"rows", rows}};
}

void export_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing: " + path.string());
}

std::vector<std::filesystem::path> write_plot_data(std::span<const SubtaskRecord> records,
                                                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  struct Series {
    const char* file;
    const char* header;
    bool follow_only;
    std::string (*row)(const SubtaskRecord&);
  };
  static const Series series[] = {
      {"screen_position_success.csv", "device,mode,appear_x,appear_y,success", false,
       [](const SubtaskRecord& r) {
         return r.device + ',' + std::string(to_string(r.mode)) + ',' +
                fixed(r.appear_position.x, 3) + ',' + fixed(r.appear_position.y, 3) + ',' +
                (r.success ? "1" : "0");
       }},
      {"distance_score.csv", "device,mode,camera_distance,score,success", false,
       [](const SubtaskRecord& r) {
         return r.device + ',' + std::string(to_string(r.mode)) + ',' +
                fixed(r.camera_distance, 3) + ',' + csv_opt(r.score()) + ',' +
                (r.success ? "1" : "0");
       }},
      {"flytime_success.csv", "device,speed,fly_time,fly_distance,success", true,
       [](const SubtaskRecord& r) {
         return r.device + ',' + fixed(r.speed, 3) + ',' + csv_opt(r.fly_time) + ',' +
                csv_opt(r.fly_distance) + ',' + (r.success ? "1" : "0");
       }},
      {"flytime_score.csv", "device,speed,fly_time,follow_fraction,success", true,
       [](const SubtaskRecord& r) {
         return r.device + ',' + fixed(r.speed, 3) + ',' + csv_opt(r.fly_time) + ',' +
                csv_opt(r.follow_fraction) + ',' + (r.success ? "1" : "0");
       }},
  };
  std::vector<std::filesystem::path> written;
  for (const Series& s : series) {
    const auto path = dir / s.file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << s.header << '\n';
    for (const SubtaskRecord& r : records) {
      if (s.follow_only && r.mode != Mode::follow) continue;
      out << s.row(r) << '\n';
    }
    if (!out) throw IoError("failed writing: " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace aimassist

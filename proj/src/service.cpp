#include "aimassist/service.hpp"

#include <sstream>

#include "aimassist/error.hpp"

namespace aimassist {

namespace {

const char* const kKinds[] = {"hello",          "start",           "tick_state", "input_move",
                              "subtask_result", "session_summary", "error"};

bool known_kind(std::string_view kind) {
  for (const char* k : kKinds) {
    if (kind == k) return true;
  }
  return false;
}

nlohmann::json vec(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

Vec2 parse_vec(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw SchemaError(std::string("field '") + field + "' must be [x, y]");
  }
  const Vec2 v{j[0].get<double>(), j[1].get<double>()};
  if (!is_finite(v)) throw SchemaError(std::string("field '") + field + "' must be finite");
  return v;
}

}  // namespace

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::lobby: return "lobby";
    case SessionStatus::running: return "running";
    case SessionStatus::finished: return "finished";
  }
  return "lobby";
}

Session::Session(std::string id, TrialSpec spec, AssistConfig assist, std::string device)
    : id_(std::move(id)), device_(std::move(device)), runner_(std::move(spec), std::move(assist)) {}

void Session::start() {
  if (status_ != SessionStatus::lobby) {
    throw ConfigError("session " + id_ + " is already " + std::string(to_string(status_)));
  }
  status_ = runner_.finished() ? SessionStatus::finished : SessionStatus::running;
}

bool Session::ingest(const InputMove& move) {
  if (status_ != SessionStatus::running || !is_finite(move.raw)) {
    ++warnings_;
    return false;
  }
  pending_ = move.raw;
  return true;
}

std::vector<SubtaskRecord> Session::advance() {
  if (status_ != SessionStatus::running) return {};
  const Vec2 raw = pending_.value_or(Vec2{});
  pending_.reset();
  const TickResult r = runner_.advance(raw);
  if (runner_.finished()) status_ = SessionStatus::finished;
  std::vector<SubtaskRecord> done;
  const auto& all = runner_.records();
  for (std::size_t i = all.size() - r.finished_records; i < all.size(); ++i) {
    SubtaskRecord rec = all[i];
    rec.device = device_;
    done.push_back(std::move(rec));
  }
  return done;
}

std::vector<SubtaskRecord> Session::records() const {
  std::vector<SubtaskRecord> out = runner_.records();
  for (SubtaskRecord& r : out) r.device = device_;
  return out;
}

nlohmann::json Session::snapshot() const {
  nlohmann::json target = nullptr;
  double remaining = 0.0;
  if (const auto& active = runner_.active()) {
    remaining = std::max(0.0, active->expires_at - runner_.time());
    const auto screen = runner_.active_screen();
    const Target& t = spec().targets[active->index];
    target = {{"id", active->id},
              {"visible", screen.has_value()},
              {"radius", t.screen_radius},
              {"moving", t.is_moving()},
              {"position", screen ? vec(screen->position) : nlohmann::json(nullptr)}};
  }
  nlohmann::json j = {{"session", id_},
                      {"status", to_string(status_)},
                      {"mode", to_string(spec().mode)},
                      {"tick", runner_.tick()},
                      {"t", runner_.time()},
                      {"cursor", vec(runner_.cursor())},
                      {"viewport", {spec().camera.width, spec().camera.height}},
                      {"target", target},
                      {"time_remaining", remaining},
                      {"raw", vec(runner_.last_raw())},
                      {"assisted", vec(runner_.last_assisted())},
                      {"deviation", vec(runner_.last_assisted() - runner_.last_raw())},
                      {"completed", runner_.records().size()},
                      {"targets", spec().targets.size()}};
  if (status_ == SessionStatus::finished) j["summary"] = summary();
  return j;
}

nlohmann::json Session::summary() const {
  const auto recs = records();
  std::ostringstream csv;
  write_records_csv(csv, recs);
  nlohmann::json inputs = nlohmann::json::array();
  for (Vec2 v : runner_.input_log()) inputs.push_back(vec(v));
  return {{"session", id_},
          {"status", to_string(status_)},
          {"ticks", runner_.tick()},
          {"warnings", warnings_},
          {"records", records_json(recs)},
          {"records_csv", csv.str()},
          {"summary", summary_json(aggregate(recs))},
          {"input_log", inputs}};
}

nlohmann::json WireMessage::to_json() const {
  nlohmann::json j = payload.is_object() ? payload : nlohmann::json::object();
  j["kind"] = kind;
  j["seq"] = seq;
  return j;
}

WireMessage parse_wire(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SchemaError("message is not a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError("message lacks a 'kind'");
  WireMessage m;
  m.kind = j["kind"].get<std::string>();
  if (!known_kind(m.kind)) throw SchemaError("unknown message kind '" + m.kind + "'");
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) {
    throw SchemaError("message lacks a non-negative integer 'seq'");
  }
  m.seq = j["seq"].get<std::uint64_t>();
  j.erase("kind");
  j.erase("seq");
  m.payload = std::move(j);
  return m;
}

void Outbox::push(std::string kind, nlohmann::json payload) {
  queue_.push_back({std::move(kind), std::move(payload), false});
}

void Outbox::push_state(nlohmann::json payload) {
  for (auto it = queue_.begin(); it != queue_.end(); ++it) {
    if (it->state) {
      queue_.erase(it);
      ++dropped_;
      break;
    }
  }
  queue_.push_back({"tick_state", std::move(payload), true});
}

std::optional<WireMessage> Outbox::pop() {
  if (queue_.empty()) return std::nullopt;
  Item item = std::move(queue_.front());
  queue_.pop_front();
  return WireMessage{std::move(item.kind), ++seq_, std::move(item.payload)};
}

std::unique_ptr<Session> session_from_start(const nlohmann::json& payload,
                                            const ServiceContext& context, std::string id) {
  try {
    TrialSpec spec;
    if (payload.contains("spec")) {
      spec = payload.at("spec").get<TrialSpec>();
    } else {
      const Mode mode = parse_mode(payload.at("mode").get<std::string>());
      const auto seed = payload.value("seed", std::uint64_t{0});
      spec = generate_trial(mode, context.scene, split_seed(seed, streams::kScene));
    }
    AssistConfig assist;
    if (payload.contains("assist") && !payload.at("assist").is_null()) {
      assist = payload.at("assist").get<AssistConfig>();
    }
    if (assist.method == AssistMethod::predictor) {
      if (!context.model) throw ConfigError("predictor assist requested but the server has no model");
      assist.model = context.model;
    }
    const std::string device = payload.value("device", std::string("live"));
    return std::make_unique<Session>(std::move(id), std::move(spec), std::move(assist), device);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid start message: ") + e.what());
  }
}

Connection::Connection(std::shared_ptr<const ServiceContext> context, std::string id)
    : context_(std::move(context)), id_(std::move(id)) {}

double Connection::tick_rate() const {
  return session_ ? session_->spec().tick_rate : 60.0;
}

void Connection::open() {
  nlohmann::json presets = presets_json(context_->presets);
  outbox_.push("hello", {{"protocol", kProtocolVersion},
                         {"connection", id_},
                         {"modes", {"locate", "select", "follow"}},
                         {"assist_methods", {"none", "lerp", "gravity", "predictor"}},
                         {"predictor_available", context_->model != nullptr},
                         {"presets", presets}});
}

void Connection::error(const std::string& reason) { outbox_.push("error", {{"reason", reason}}); }

void Connection::receive(std::string_view text) {
  WireMessage msg;
  try {
    msg = parse_wire(text);
  } catch (const SchemaError& e) {
    error(e.what());
    return;
  }
  if (last_in_seq_ && msg.seq <= *last_in_seq_) {
    error("sequence number " + std::to_string(msg.seq) + " is not above " +
          std::to_string(*last_in_seq_));
    return;
  }
  last_in_seq_ = msg.seq;

  if (msg.kind == "start") {
    handle_start(msg);
  } else if (msg.kind == "input_move") {
    if (!session_) {
      error("input_move before start");
      return;
    }
    InputMove move;
    move.seq = msg.seq;
    try {
      move.client_time = msg.payload.value("t", 0.0);
      move.raw = parse_vec(msg.payload.at("raw"), "raw");
    } catch (const nlohmann::json::exception&) {
      error("input_move needs 'raw': [dx, dy]");
      return;
    } catch (const SchemaError& e) {
      error(e.what());
      return;
    }
    session_->ingest(move);
  } else if (msg.kind == "hello") {
    // Client greeting; nothing to do.
  } else {
    error("unexpected message kind '" + msg.kind + "' from client");
  }
}

void Connection::handle_start(const WireMessage& msg) {
  if (running()) {
    error("a session is already running on this connection");
    return;
  }
  try {
    auto session = session_from_start(msg.payload, *context_,
                                      id_ + "-" + std::to_string(++sessions_started_));
    session->start();
    session_ = std::move(session);
  } catch (const ConfigError& e) {
    error(e.what());
    return;
  }
  outbox_.push_state(session_->snapshot());
}

void Connection::tick() {
  if (!running()) return;
  for (const SubtaskRecord& r : session_->advance()) {
    const SubtaskRecord one[] = {r};
    outbox_.push("subtask_result", {{"session", session_->id()}, {"record", records_json(one)["records"][0]}});
  }
  outbox_.push_state(session_->snapshot());
  if (session_->status() == SessionStatus::finished) {
    outbox_.push("session_summary", session_->summary());
  }
}

}  // namespace aimassist

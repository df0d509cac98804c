#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aimassist/agents.hpp"
#include "aimassist/assist.hpp"
#include "aimassist/harness.hpp"
#include "aimassist/scene.hpp"

namespace aimassist {

inline constexpr int kProtocolVersion = 1;

enum class SessionStatus { lobby, running, finished };

std::string_view to_string(SessionStatus status);

/// Raw movement reported by a client. Any cursor position the client claims
/// is never read.
struct InputMove {
  std::uint64_t seq = 0;
  double client_time = 0.0;
  Vec2 raw;  // px
};

/// Server-authoritative trial session. The owner serializes all calls.
class Session {
 public:
  Session(std::string id, TrialSpec spec, AssistConfig assist, std::string device = "live");

  const std::string& id() const { return id_; }
  SessionStatus status() const { return status_; }
  const TrialSpec& spec() const { return runner_.spec(); }

  /// lobby -> running. Throws ConfigError from any other state.
  void start();
  /// Latest input wins within a tick. Returns false, and counts a warning,
  /// when the session is not running.
  bool ingest(const InputMove& move);
  /// Advance one tick using the pending input (zero when none). Returns the
  /// subtask records completed by this tick.
  std::vector<SubtaskRecord> advance();

  /// tick_state payload.
  nlohmann::json snapshot() const;
  /// session_summary payload: records, records CSV, summary table, input log.
  nlohmann::json summary() const;

  std::uint64_t tick() const { return runner_.tick(); }
  Vec2 cursor() const { return runner_.cursor(); }
  std::size_t warnings() const { return warnings_; }
  /// Raw movement applied at each tick so far.
  const std::vector<Vec2>& input_log() const { return runner_.input_log(); }
  std::vector<SubtaskRecord> records() const;

 private:
  std::string id_;
  std::string device_;
  SessionStatus status_ = SessionStatus::lobby;
  TrialRunner runner_;
  std::optional<Vec2> pending_;
  std::size_t warnings_ = 0;
};

/// A decoded wire message: `kind`, `seq` and the remaining fields as payload.
struct WireMessage {
  std::string kind;
  std::uint64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string dump() const { return to_json().dump(); }
};

/// Throws SchemaError for malformed JSON, an unknown kind or a missing seq.
WireMessage parse_wire(std::string_view text);

/// Outgoing queue. State messages are coalesced so only the newest pending
/// one survives; every other message is kept. Sequence numbers are stamped
/// when a message leaves the queue so they stay strictly increasing.
class Outbox {
 public:
  void push(std::string kind, nlohmann::json payload);
  /// Replace any pending state message.
  void push_state(nlohmann::json payload);
  std::optional<WireMessage> pop();
  bool empty() const { return queue_.empty(); }
  std::size_t dropped_states() const { return dropped_; }
  std::uint64_t last_seq() const { return seq_; }

 private:
  struct Item {
    std::string kind;
    nlohmann::json payload;
    bool state = false;
  };
  std::deque<Item> queue_;
  std::uint64_t seq_ = 0;
  std::size_t dropped_ = 0;
};

/// Immutable artifacts shared by every connection.
struct ServiceContext {
  PresetTable presets = builtin_presets();
  std::shared_ptr<const PredictorModel> model;
  SceneGenParams scene;
};

/// Transport-independent protocol state of one client connection, holding at
/// most one session at a time.
class Connection {
 public:
  Connection(std::shared_ptr<const ServiceContext> context, std::string id);

  /// Queues the hello message.
  void open();
  /// Handle one incoming text frame; replies go to the outbox.
  void receive(std::string_view text);
  /// One server tick for the running session, if any.
  void tick();

  Outbox& outbox() { return outbox_; }
  const Session* session() const { return session_.get(); }
  bool running() const { return session_ && session_->status() == SessionStatus::running; }
  double tick_rate() const;

 private:
  void error(const std::string& reason);
  void handle_start(const WireMessage& msg);

  std::shared_ptr<const ServiceContext> context_;
  std::string id_;
  std::unique_ptr<Session> session_;
  std::size_t sessions_started_ = 0;
  std::optional<std::uint64_t> last_in_seq_;
  Outbox outbox_;
};

/// Build a session from a start payload: either a full "spec" or a "mode"
/// plus "seed" for a generated trial, and an optional "assist" object.
std::unique_ptr<Session> session_from_start(const nlohmann::json& payload,
                                            const ServiceContext& context, std::string id);

}  // namespace aimassist

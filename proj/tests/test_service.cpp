#include <doctest.h>

#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "aimassist/error.hpp"
#include "aimassist/server.hpp"
#include "aimassist/service.hpp"

using namespace aimassist;

namespace {

std::unique_ptr<Session> locate_session(std::uint64_t seed, AssistConfig assist = {}) {
  auto s = std::make_unique<Session>("s", generate_trial(Mode::locate, SceneGenParams{}, seed),
                                     std::move(assist));
  s->start();
  return s;
}

// Scripted input: head for the active target with a fixed gain.
Vec2 scripted_move(const nlohmann::json& state, std::uint64_t tick) {
  const auto& target = state.at("target");
  if (target.is_null() || target.at("position").is_null()) return {0.0, 0.0};
  const Vec2 goal{target["position"][0].get<double>(), target["position"][1].get<double>()};
  const Vec2 cursor{state["cursor"][0].get<double>(), state["cursor"][1].get<double>()};
  const double wobble = (tick % 7 == 0) ? 3.0 : -1.0;
  return (goal - cursor) * 0.08 + Vec2{wobble, 0.5 * wobble};
}

std::string input_message(std::uint64_t seq, Vec2 raw) {
  return nlohmann::json{{"kind", "input_move"}, {"seq", seq}, {"t", seq * 0.016}, {"raw", {raw.x, raw.y}}}
      .dump();
}

std::vector<WireMessage> drain(Connection& c) {
  std::vector<WireMessage> out;
  while (auto m = c.outbox().pop()) out.push_back(*m);
  return out;
}

}  // namespace

TEST_CASE("a new session starts at tick 0 with the cursor centred") {
  auto s = locate_session(1);
  const nlohmann::json snap = s->snapshot();
  CHECK(snap["tick"] == 0);
  CHECK(snap["status"] == "running");
  CHECK(snap["cursor"][0] == 960.0);
  CHECK(snap["cursor"][1] == 540.0);
  CHECK(snap["time_remaining"].get<double>() == doctest::Approx(10.0));
  CHECK(snap["deviation"][0] == 0.0);
}

TEST_CASE("status moves only forward") {
  Session s("x", generate_trial(Mode::locate, SceneGenParams{}, 1), AssistConfig{});
  CHECK(s.status() == SessionStatus::lobby);
  CHECK_FALSE(s.ingest({1, 0.0, {1.0, 0.0}}));
  s.start();
  CHECK_THROWS_AS(s.start(), ConfigError);
}

TEST_CASE("no input leaves the cursor where it was") {
  auto s = locate_session(2);
  const Vec2 before = s->cursor();
  s->advance();
  CHECK(s->cursor() == before);
  CHECK(s->tick() == 1);
}

TEST_CASE("only the latest input within a tick is applied") {
  auto s = locate_session(3);
  s->ingest({1, 0.0, {50.0, 0.0}});
  s->ingest({2, 0.0, {-7.0, 3.0}});
  const Vec2 before = s->cursor();
  s->advance();
  CHECK(s->cursor() == before + Vec2{-7.0, 3.0});
  CHECK(s->input_log().back() == Vec2{-7.0, 3.0});
}

TEST_CASE("method none never deviates the input") {
  auto s = locate_session(4);
  s->ingest({1, 0.0, {12.0, -4.0}});
  s->advance();
  const nlohmann::json snap = s->snapshot();
  CHECK(snap["deviation"][0] == 0.0);
  CHECK(snap["deviation"][1] == 0.0);
  CHECK(snap["raw"][0] == 12.0);
}

TEST_CASE("finished sessions ignore input and count warnings") {
  auto s = locate_session(5);
  while (s->status() == SessionStatus::running) s->advance();
  const nlohmann::json snap = s->snapshot();
  CHECK(snap["status"] == "finished");
  CHECK(snap.contains("summary"));
  CHECK_FALSE(s->ingest({99, 0.0, {1.0, 1.0}}));
  CHECK(s->warnings() == 1);
}

TEST_CASE("identical seeds and scripted inputs give identical summaries") {
  AssistConfig gravity;
  gravity.method = AssistMethod::gravity;
  auto run = [&] {
    auto s = locate_session(6, gravity);
    while (s->status() == SessionStatus::running) {
      s->ingest({s->tick() + 1, 0.0, scripted_move(s->snapshot(), s->tick())});
      s->advance();
    }
    return s->summary();
  };
  CHECK(run() == run());
}

TEST_CASE("session replay matches the headless harness") {
  AssistConfig gravity;
  gravity.method = AssistMethod::gravity;
  const TrialSpec spec = generate_trial(Mode::select, SceneGenParams{}, 8);
  Session s("r", spec, gravity, "live");
  s.start();
  while (s.status() == SessionStatus::running) {
    s.ingest({s.tick() + 1, 0.0, scripted_move(s.snapshot(), s.tick())});
    s.advance();
  }
  ReplaySource replay(s.input_log());
  auto records = run_trial(spec, replay, gravity);
  for (auto& r : records) r.device = "live";
  CHECK(records == s.records());
}

TEST_CASE("wire messages carry kind and seq") {
  const WireMessage m = parse_wire(R"({"kind":"input_move","seq":4,"raw":[1,2]})");
  CHECK(m.kind == "input_move");
  CHECK(m.seq == 4);
  CHECK(m.payload["raw"][1] == 2);
  CHECK(parse_wire(m.dump()).payload == m.payload);
  CHECK_THROWS_AS(parse_wire("{"), SchemaError);
  CHECK_THROWS_AS(parse_wire(R"({"kind":"teleport","seq":1})"), SchemaError);
  CHECK_THROWS_AS(parse_wire(R"({"kind":"start"})"), SchemaError);
}

TEST_CASE("outbox coalesces state and keeps sequence numbers increasing") {
  Outbox box;
  box.push_state({{"tick", 1}});
  box.push("subtask_result", {{"n", 1}});
  box.push_state({{"tick", 2}});
  box.push_state({{"tick", 3}});
  std::vector<WireMessage> out;
  while (auto m = box.pop()) out.push_back(*m);
  REQUIRE(out.size() == 2);
  CHECK(out[0].kind == "subtask_result");
  CHECK(out[1].payload["tick"] == 3);
  CHECK(out[0].seq < out[1].seq);
  CHECK(box.dropped_states() == 2);
}

TEST_CASE("connection protocol") {
  auto ctx = std::make_shared<ServiceContext>();
  Connection c(ctx, "c1");
  c.open();
  auto msgs = drain(c);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].kind == "hello");
  CHECK(msgs[0].payload["presets"]["format"] == "aimassist-presets");

  SUBCASE("invalid mode is rejected with a reason") {
    c.receive(R"({"kind":"start","seq":1,"mode":"hover","seed":1})");
    msgs = drain(c);
    REQUIRE(msgs.size() == 1);
    CHECK(msgs[0].kind == "error");
    CHECK(msgs[0].payload["reason"].get<std::string>().find("hover") != std::string::npos);
    CHECK(c.session() == nullptr);
  }
  SUBCASE("sequence numbers must increase") {
    c.receive(R"({"kind":"start","seq":5,"mode":"locate","seed":1})");
    c.receive(input_message(5, {1.0, 0.0}));
    msgs = drain(c);
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].kind == "tick_state");
    CHECK(msgs[1].kind == "error");
  }
  SUBCASE("client cursor claims are ignored") {
    c.receive(R"({"kind":"start","seq":1,"mode":"locate","seed":3})");
    c.receive(R"({"kind":"input_move","seq":2,"t":0.1,"raw":[4,0],"cursor":[5,5]})");
    c.tick();
    CHECK(c.session()->cursor() == Vec2{964.0, 540.0});
  }
  SUBCASE("predictor needs a server-side model") {
    c.receive(R"({"kind":"start","seq":1,"mode":"locate","seed":3,"assist":{"method":"predictor"}})");
    msgs = drain(c);
    REQUIRE(msgs.size() == 1);
    CHECK(msgs[0].kind == "error");
  }
  SUBCASE("a session runs to its summary") {
    c.receive(R"({"kind":"start","seq":1,"mode":"locate","seed":3})");
    std::uint64_t seq = 2;
    std::size_t results = 0;
    bool summary = false;
    for (int i = 0; i < 20000 && !summary; ++i) {
      const auto* s = c.session();
      c.receive(input_message(seq++, scripted_move(s->snapshot(), s->tick())));
      c.tick();
      for (const auto& m : drain(c)) {
        results += m.kind == "subtask_result";
        summary = summary || m.kind == "session_summary";
      }
    }
    CHECK(summary);
    CHECK(results == 10);
  }
}

TEST_CASE("websocket server end to end") {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  auto ctx = std::make_shared<ServiceContext>();
  ServerOptions opts;
  opts.address = "127.0.0.1";
  opts.port = 0;
  opts.heartbeat = 0.2;
  Server server(ctx, opts);
  const auto port = server.port();
  std::thread loop([&] { server.run(); });

  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  websocket::stream<tcp::socket> ws(ioc);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
  ws.handshake("127.0.0.1", "/");

  auto read = [&] {
    beast::flat_buffer b;
    ws.read(b);
    return parse_wire(beast::buffers_to_string(b.data()));
  };
  const WireMessage hello = read();
  CHECK(hello.kind == "hello");

  const TrialSpec spec = generate_trial(Mode::locate, SceneGenParams{}, 4);
  nlohmann::json start = {{"kind", "start"}, {"seq", 1}, {"spec", spec}, {"device", "live"}};
  ws.write(boost::asio::buffer(start.dump()));

  std::uint64_t seq = 2;
  std::uint64_t last_in = hello.seq;
  std::optional<nlohmann::json> summary;
  std::size_t results = 0;
  while (!summary) {
    const WireMessage m = read();
    CHECK(m.seq > last_in);
    last_in = m.seq;
    if (m.kind == "tick_state" && m.payload["status"] == "running") {
      const Vec2 move = scripted_move(m.payload, m.payload["tick"].get<std::uint64_t>());
      ws.write(boost::asio::buffer(input_message(seq++, move)));
    } else if (m.kind == "subtask_result") {
      ++results;
    } else if (m.kind == "session_summary") {
      summary = m.payload;
    }
    REQUIRE(m.kind != "error");
  }
  CHECK(results == 10);

  // The server-side record of applied inputs replays to the same records.
  std::vector<Vec2> inputs;
  for (const auto& v : (*summary)["input_log"]) inputs.push_back({v[0].get<double>(), v[1].get<double>()});
  ReplaySource replay(inputs);
  auto records = run_trial(spec, replay, AssistConfig{});
  for (auto& r : records) r.device = "live";
  CHECK(records_json(records) == (*summary)["records"]);

  ws.close(websocket::close_code::normal);
  server.stop();
  loop.join();
}

TEST_CASE("binding an occupied port names the port") {
  auto ctx = std::make_shared<ServiceContext>();
  ServerOptions opts;
  opts.address = "127.0.0.1";
  opts.port = 0;
  Server first(ctx, opts);
  opts.port = first.port();
  try {
    Server second(ctx, opts);
    FAIL("expected the second bind to fail");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(std::to_string(opts.port)) != std::string::npos);
  }
}

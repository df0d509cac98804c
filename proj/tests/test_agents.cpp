#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "aimassist/agents.hpp"
#include "aimassist/calibrate.hpp"
#include "aimassist/error.hpp"

using namespace aimassist;

namespace {

AgentParams quiet(AgentParams p) {
  p.noise = 0.0;
  p.tremor = 0.0;
  return p;
}

}  // namespace

TEST_CASE("presets are stable and ordered as the device classes") {
  CHECK(preset(Device::mouse) == preset(Device::mouse));
  const auto all = builtin_presets();
  REQUIRE(all.size() == 4);
  const AgentParams& mouse = all.at(Device::mouse);
  for (Device d : kAllDevices) {
    CHECK_NOTHROW(all.at(d).validate());
    if (d == Device::mouse) continue;
    CHECK(mouse.noise < all.at(d).noise);
    CHECK(mouse.latency < all.at(d).latency);
    if (d != Device::image) CHECK(all.at(Device::image).tremor > all.at(d).tremor);
  }
}

TEST_CASE("shipped presets file equals the built-in table") {
  const auto path = std::filesystem::path(AIMASSIST_SOURCE_DIR) / "presets" / "agents.json";
  CHECK(load_presets(path) == builtin_presets());
}

TEST_CASE("presets JSON round trip and version check") {
  const auto path = std::filesystem::temp_directory_path() / "aimassist_presets_test.json";
  save_presets(builtin_presets(), path);
  CHECK(load_presets(path) == builtin_presets());
  nlohmann::json j = presets_json(builtin_presets());
  j["version"] = 9;
  std::ofstream(path) << j.dump();
  try {
    load_presets(path);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    CHECK(what.find(path.string()) != std::string::npos);
    CHECK(what.find("expected 1") != std::string::npos);
  }
  CHECK_THROWS_AS(load_presets(path.string() + ".missing"), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("AIMASSIST_PRESETS overrides the built-in table") {
  const auto path = std::filesystem::temp_directory_path() / "aimassist_env_presets.json";
  PresetTable t = builtin_presets();
  t[Device::mouse].noise = 0.5;
  save_presets(t, path);
  ::setenv("AIMASSIST_PRESETS", path.c_str(), 1);
  CHECK(presets_from_environment().at(Device::mouse).noise == 0.5);
  ::unsetenv("AIMASSIST_PRESETS");
  CHECK(presets_from_environment() == builtin_presets());
  std::filesystem::remove(path);
}

TEST_CASE("device names") {
  for (Device d : kAllDevices) CHECK(parse_device(to_string(d)) == d);
  CHECK_THROWS_AS(parse_device("trackball"), ConfigError);
}

TEST_CASE("delay buffer length follows the latency") {
  AgentParams p;
  p.latency = 0.2;
  CHECK(AgentState(p, 1.0 / 60.0, 1).delay_ticks() == 12);
  p.latency = 0.21;
  CHECK(AgentState(p, 1.0 / 60.0, 1).delay_ticks() == 13);
  p.latency = 0.0;
  CHECK(AgentState(p, 1.0 / 60.0, 1).delay_ticks() == 0);
}

TEST_CASE("quiet agent at rest on its target does not move") {
  const AgentParams p = quiet(preset(Device::head));
  AgentState s(p, 1.0 / 60.0, 3);
  const Vec2 cursor{500.0, 400.0};
  for (int i = 0; i < 120; ++i) {
    const MoveSample m = step(s, p, Percept{1, cursor}, cursor, 1.0 / 60.0);
    CHECK(m.raw == Vec2{0.0, 0.0});
  }
}

TEST_CASE("quiet agent pursues along +x") {
  AgentParams p = quiet(preset(Device::mouse));
  p.latency = 0.0;
  AgentState s(p, 1.0 / 60.0, 3);
  const MoveSample m = step(s, p, Percept{1, {600.0, 400.0}}, {500.0, 400.0}, 1.0 / 60.0);
  CHECK(m.raw.x > 0.0);
  CHECK(m.raw.y == 0.0);
}

TEST_CASE("agent trajectories are reproducible from the seed") {
  const AgentParams p = preset(Device::image);
  auto run = [&](std::uint64_t seed) {
    AgentState s(p, 1.0 / 60.0, seed);
    Vec2 cursor{100.0, 100.0};
    std::vector<Vec2> out;
    for (int i = 0; i < 100; ++i) {
      const MoveSample m = step(s, p, Percept{1, {700.0, 500.0}}, cursor, 1.0 / 60.0);
      cursor += m.raw;
      out.push_back(m.raw);
    }
    return out;
  };
  const auto a = run(5);
  const auto b = run(5);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(Vec2)) == 0);
  CHECK_FALSE(a == run(6));
}

TEST_CASE("zero-noise agents depend only on the target trajectory") {
  const AgentParams p = quiet(preset(Device::controller));
  auto run = [&](std::uint64_t seed) {
    AgentState s(p, 1.0 / 60.0, seed);
    Vec2 cursor{900.0, 100.0};
    std::vector<Vec2> out;
    for (int i = 0; i < 200; ++i) {
      const Vec2 target{300.0 + 2.0 * i, 600.0};
      const MoveSample m = step(s, p, Percept{1, target}, cursor, 1.0 / 60.0);
      cursor += m.raw;
      out.push_back(m.raw);
    }
    return out;
  };
  CHECK(run(1) == run(987654321));
}

TEST_CASE("emitted speed stays below max speed plus a six-sigma noise tail") {
  const double dt = 1.0 / 60.0;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int steps = 0;
  for (Device d : kAllDevices) {
    const AgentParams p = preset(d);
    AgentState s(p, dt, static_cast<std::uint64_t>(d) + 1);
    Vec2 cursor{960.0, 540.0};
    Vec2 target{u(rng) * 1920.0, u(rng) * 1080.0};
    for (int i = 0; i < 25000; ++i) {
      if (i % 90 == 0) target = {u(rng) * 1920.0, u(rng) * 1080.0};
      const MoveSample m = step(s, p, Percept{i / 90, target}, cursor, dt);
      CHECK(norm(m.raw) / dt <= p.max_speed + 6.0 * s.last_sigma() + 1e-9);
      cursor += m.raw;
      ++steps;
    }
  }
  CHECK(steps == 100000);
}

TEST_CASE("agent parameter validation") {
  AgentParams p;
  p.max_speed = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AgentParams{};
  p.noise = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(AgentState(AgentParams{}, 0.0, 1), ConfigError);
}

TEST_CASE("calibration targets come from the reference tables") {
  const auto t = table_targets();
  CHECK(t.at(Device::head).select_success == 65.4);
  CHECK(t.at(Device::image).select_success == 49.0);
  CHECK(t.at(Device::mouse).select_success == 100.0);
  CHECK(t.at(Device::controller).select_success == 95.8);
  CHECK(t.at(Device::mouse).locate_score == 0.89);
  CHECK(t.at(Device::image).locate_score == 2.04);
}

TEST_CASE("calibration refuses a degenerate budget") {
  CalibrationOptions o;
  o.budget = 0;
  CHECK_THROWS_AS(calibrate(table_targets(), builtin_presets(), o), ConfigError);
  o.budget = 99;
  CHECK_THROWS_AS(calibrate(table_targets(), builtin_presets(), o), ConfigError);
}

TEST_CASE("small calibration run reports achieved metrics") {
  CalibrationOptions o;
  o.budget = 100;
  o.seed = 2;
  o.grid.noise = {0.5, 1.0};
  o.grid.latency = {1.0};
  o.grid.tremor = {1.0};
  o.grid.max_speed = {1.0};
  std::map<Device, CalibrationTarget> targets{{Device::mouse, table_targets().at(Device::mouse)}};
  const CalibrationResult r = calibrate(targets, builtin_presets(), o);
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].evaluated == 2);
  CHECK(r.outcomes[0].select_success >= 90.0);
  CHECK(r.converged());
  const nlohmann::json report = r.report(targets);
  CHECK(report.at("classes").at(0).at("achieved").contains("select_success"));
  CHECK(report.at("classes").at(0).at("target").at("select_success") == 100.0);
  CHECK(r.presets.at(Device::head) == builtin_presets().at(Device::head));

  targets[Device::mouse].select_success = 10.0;
  targets[Device::mouse].locate_success = 10.0;
  CHECK_FALSE(calibrate(targets, builtin_presets(), o).converged());
}

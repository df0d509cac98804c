#include <doctest.h>

#include <cstring>
#include <random>

#include "aimassist/assist.hpp"
#include "aimassist/error.hpp"
#include "aimassist/predictor.hpp"
#include "oracles.hpp"

using namespace aimassist;

namespace {

Vec2 rot90(Vec2 v) { return {-v.y, v.x}; }

MoveSample sample_at(Vec2 cursor, Vec2 raw) { return {raw, 0.0, cursor}; }

}  // namespace

TEST_CASE("lerp keeps a movement aimed straight at the target") {
  LerpParams p;
  const MoveSample s = sample_at({100.0, 100.0}, {3.0, 4.0});
  const Vec2 out = lerp_assist(s, {160.0, 180.0}, p);
  CHECK(std::abs(cross(out, s.raw)) < 1e-12);
  CHECK(dot(out, s.raw) > 0.0);
}

TEST_CASE("lerp never moves a stationary cursor") {
  const Vec2 out = lerp_assist(sample_at({100.0, 100.0}, {0.0, 0.0}), {120.0, 100.0}, LerpParams{});
  CHECK(out == Vec2{0.0, 0.0});
}

TEST_CASE("lerp with perpendicular input is the identity") {
  LerpParams p;
  p.radius = 200.0;
  p.falloff = 1.0;
  p.max_blend = 0.5;
  const MoveSample s = sample_at({0.0, 0.0}, {0.0, 5.0});
  CHECK(lerp_assist(s, {100.0, 0.0}, p) == s.raw);
}

TEST_CASE("lerp blend against a hand computation") {
  LerpParams p;
  p.radius = 200.0;
  p.max_blend = 0.5;
  p.falloff = 2.0;
  const MoveSample s = sample_at({0.0, 0.0}, {4.0, 3.0});
  const Vec2 out = lerp_assist(s, {100.0, 0.0}, p);
  // alpha = 0.5 * (1 - 0.5)^2 * cos(theta) = 0.125 * 0.8 = 0.1
  CHECK(out.x == doctest::Approx(0.9 * 4.0 + 0.1 * 5.0).epsilon(1e-12));
  CHECK(out.y == doctest::Approx(0.9 * 3.0).epsilon(1e-12));
}

TEST_CASE("lerp is the identity out of range and at the target centre") {
  LerpParams p;
  const Vec2 raw{2.0, 1.0};
  CHECK(lerp_assist(sample_at({0.0, 0.0}, raw), {300.0, 0.0}, p) == raw);
  CHECK(lerp_assist(sample_at({5.0, 5.0}, raw), {5.0, 5.0}, p) == raw);
}

TEST_CASE("lerp output is bounded by (1 + max_blend)|v|") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LerpParams p;
  p.align_gate = false;
  for (int i = 0; i < 10000; ++i) {
    const MoveSample s = sample_at({u(rng) * 300.0, u(rng) * 300.0}, {u(rng) * 20.0, u(rng) * 20.0});
    const Vec2 out = lerp_assist(s, {0.0, 0.0}, p);
    CHECK(norm(out) <= norm(s.raw) * (1.0 + p.max_blend) + 1e-12);
  }
}

TEST_CASE("gravity with no attractors is the identity") {
  const GravityField field;
  const MoveSample s = sample_at({10.0, 20.0}, {1.5, -2.0});
  CHECK(gravity_assist(s, field) == s.raw);
}

TEST_CASE("symmetric attractors cancel") {
  GravityField field;
  field.attractors = {{1, {400.0, 300.0}, 0.5}, {2, {200.0, 300.0}, 0.5}};
  const MoveSample s = sample_at({300.0, 300.0}, {3.0, 7.0});
  const Vec2 out = gravity_assist(s, field);
  CHECK(norm(out - s.raw) < 1e-12);
}

TEST_CASE("gravity matches the direct-summation oracle") {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const oracle::Case c = oracle::random_case(rng);
    const oracle::Point want = oracle::gravity(c.field, c.cursor, c.v);
    const Vec2 got = gravity_assist(sample_at({c.cursor.x, c.cursor.y}, {c.v.x, c.v.y}),
                                    oracle::to_library(c.field));
    worst = std::max({worst, std::abs(got.x - want.x), std::abs(got.y - want.y)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("gravity deviation is bounded by the cap") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 10000; ++i) {
    const oracle::Case c = oracle::random_case(rng);
    const GravityField f = oracle::to_library(c.field);
    const Vec2 v{c.v.x, c.v.y};
    const Vec2 out = gravity_assist(sample_at({c.cursor.x, c.cursor.y}, v), f);
    CHECK(norm(out - v) <= f.deviation_cap * norm(v) * (1.0 + 1e-12) + 1e-15);
  }
}

TEST_CASE("gravity ignores attractors beyond the radius") {
  GravityField field;
  field.radius = 100.0;
  field.attractors = {{1, {100.0, 0.0}, 1.0}, {2, {0.0, 150.0}, 1.0}};
  const MoveSample s = sample_at({0.0, 0.0}, {1.0, 1.0});
  CHECK(gravity_assist(s, field) == s.raw);
}

TEST_CASE("single-attractor deviation shrinks with distance") {
  GravityField field;
  field.radius = 250.0;
  const Vec2 v{3.0, -1.0};
  double last = std::numeric_limits<double>::infinity();
  for (double d = 1.0; d <= 300.0; d += 1.0) {
    field.attractors = {{1, {d, 0.0}, 0.5}};
    const double dev = norm(gravity_assist(sample_at({0.0, 0.0}, v), field) - v);
    CHECK(dev <= last + 1e-15);
    if (d >= field.radius) CHECK(dev == 0.0);
    last = dev;
  }
}

TEST_CASE("gravity is scale equivariant") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const oracle::Case c = oracle::random_case(rng);
    const GravityField f = oracle::to_library(c.field);
    const double k = scale(rng);
    const Vec2 cursor{c.cursor.x, c.cursor.y};
    const Vec2 v{c.v.x, c.v.y};
    const Vec2 a = gravity_assist(sample_at(cursor, v * k), f);
    const Vec2 b = gravity_assist(sample_at(cursor, v), f) * k;
    CHECK(norm(a - b) <= 1e-12 * (1.0 + norm(b)));
  }
}

TEST_CASE("gravity is rotation equivariant at quarter turns") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 2000; ++i) {
    const oracle::Case c = oracle::random_case(rng, false);
    GravityField f = oracle::to_library(c.field);
    Vec2 cursor{c.cursor.x, c.cursor.y};
    Vec2 v{c.v.x, c.v.y};
    Vec2 expected = gravity_assist(sample_at(cursor, v), f);
    for (int turn = 0; turn < 3; ++turn) {
      for (Attractor& a : f.attractors) a.position = rot90(a.position);
      cursor = rot90(cursor);
      v = rot90(v);
      expected = rot90(expected);
      CHECK(norm(gravity_assist(sample_at(cursor, v), f) - expected) < 1e-9);
    }
  }
}

TEST_CASE("exclusion zones pass input through bitwise") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GravityParams params;
  params.exclusion_zones = {{{0.0, 0.0}, {400.0, 300.0}}};
  for (int i = 0; i < 10000; ++i) {
    const Vec2 cursor{u(rng) * 400.0, u(rng) * 300.0};
    const std::vector<ScreenTarget> targets{{1, cursor + Vec2{30.0, 10.0}, 40.0},
                                            {2, cursor - Vec2{5.0, 60.0}, 40.0}};
    const GravityField field = build_gravity_field(targets, params);
    const MoveSample s = sample_at(cursor, {u(rng) * 10.0 - 5.0, u(rng) * 10.0 - 5.0});
    const Vec2 out = gravity_assist(s, field);
    CHECK(std::memcmp(&out, &s.raw, sizeof out) == 0);
  }
}

TEST_CASE("build_gravity_field orders attractors by id and is deterministic") {
  const std::vector<ScreenTarget> targets{{7, {10.0, 10.0}, 40.0},
                                          {2, {20.0, 10.0}, 40.0},
                                          {5, {30.0, 10.0}, 40.0}};
  const GravityField a = build_gravity_field(targets, GravityParams{});
  const GravityField b = build_gravity_field(targets, GravityParams{});
  REQUIRE(a.attractors.size() == 3);
  CHECK(a.attractors[0].id == 2);
  CHECK(a.attractors[1].id == 5);
  CHECK(a.attractors[2].id == 7);
  CHECK(a == b);
  CHECK(a.attractors[0].weight == 0.5);
  const MoveSample s = sample_at({100.0, 100.0}, {1.0, 2.0});
  CHECK(gravity_assist(s, build_gravity_field({}, GravityParams{})) == s.raw);
}

TEST_CASE("raster agrees with the analytic field within one cell") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<ScreenTarget> targets{{1, {600.0, 400.0}, 40.0}, {2, {700.0, 450.0}, 40.0}};
  const GravityField field = build_gravity_field(targets, GravityParams{});
  const GravityRaster raster(field, 1920.0, 1080.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 p{400.0 + u(rng) * 500.0, 200.0 + u(rng) * 450.0};
    const Vec2 exact = field.pull(p);
    const double x0 = std::floor(p.x);
    const double y0 = std::floor(p.y);
    double bound = 0.0;
    for (Vec2 corner : {Vec2{x0, y0}, Vec2{x0 + 1, y0}, Vec2{x0, y0 + 1}, Vec2{x0 + 1, y0 + 1}}) {
      bound = std::max(bound, norm(field.pull(corner) - exact));
    }
    CHECK(norm(raster.pull(p) - exact) <= bound + 1e-12);
  }
}

TEST_CASE("apply_assist dispatch") {
  const std::vector<ScreenTarget> targets{{3, {500.0, 500.0}, 40.0}};
  const AssistWorld world{targets, 1920.0, 1080.0, nullptr};
  const MoveSample s = sample_at({420.0, 480.0}, {4.0, 1.0});

  SUBCASE("none is the identity") {
    AssistConfig c;
    CHECK(apply_assist(c, s, world) == s.raw);
  }
  SUBCASE("lerp dispatches transparently") {
    AssistConfig c;
    c.method = AssistMethod::lerp;
    CHECK(apply_assist(c, s, world) == lerp_assist(s, targets[0].position, c.lerp));
    c.lerp_target = 9;
    CHECK(apply_assist(c, s, world) == s.raw);
  }
  SUBCASE("gravity inside an exclusion zone returns the raw input") {
    AssistConfig c;
    c.method = AssistMethod::gravity;
    CHECK_FALSE(apply_assist(c, s, world) == s.raw);
    c.gravity.exclusion_zones = {{{400.0, 400.0}, {450.0, 500.0}}};
    CHECK(apply_assist(c, s, world) == s.raw);
  }
  SUBCASE("predictor without a model is a configuration error") {
    AssistConfig c;
    c.method = AssistMethod::predictor;
    CHECK_THROWS_AS(apply_assist(c, s, world), ConfigError);
  }
}

TEST_CASE("assist config JSON round trip") {
  AssistConfig c;
  c.method = AssistMethod::gravity;
  c.gravity.weight = 0.7;
  c.gravity.exclusion_zones = {{{0.0, 0.0}, {100.0, 50.0}}};
  const nlohmann::json j = c;
  const AssistConfig back = j.get<AssistConfig>();
  CHECK(back.method == AssistMethod::gravity);
  CHECK(back.gravity.weight == 0.7);
  REQUIRE(back.gravity.exclusion_zones.size() == 1);
  CHECK(back.gravity.exclusion_zones[0] == c.gravity.exclusion_zones[0]);
  CHECK_THROWS_AS(nlohmann::json({{"method", "magnet"}}).get<AssistConfig>(), ConfigError);
}

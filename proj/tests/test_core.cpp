#include <cmath>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "nop/env.hpp"
#include "nop/geometry.hpp"
#include "nop/instance.hpp"
#include "nop/rng.hpp"
#include "nop/verify.hpp"

using namespace nop;

TEST_SUITE("core") {

TEST_CASE("segment against disc") {
  CHECK(segment_hits_obstacle({0.5, 0.5}, {0.5, 0.5}, {{0.55, 0.5}, 0.06}));
  CHECK_FALSE(segment_hits_obstacle({0, 0}, {1, 0}, {{0.5, 0.5}, 0.1}));
  CHECK(segment_hits_obstacle({0, 0.5}, {1, 0.5}, {{0.5, 0.5}, 0.1}));
  // Tangent contact counts: the disc is closed.
  CHECK(segment_hits_obstacle({0, 0.4}, {1, 0.4}, {{0.5, 0.5}, 0.1}));
}

TEST_CASE("segment test is symmetric and monotone in radius") {
  Rng rng(11);
  for (int k = 0; k < 2000; ++k) {
    const Point p{rng.uniform(), rng.uniform()}, q{rng.uniform(), rng.uniform()};
    const Obstacle o{{rng.uniform(), rng.uniform()}, rng.uniform(0.01, 0.2)};
    const bool hit = segment_hits_obstacle(p, q, o);
    CHECK(hit == segment_hits_obstacle(q, p, o));
    if (hit) CHECK(segment_hits_obstacle(p, q, {o.center, o.radius + rng.uniform(0.0, 0.1)}));
  }
}

TEST_CASE("path length") {
  CHECK(path_length(Polyline{{0, 0}}) == 0.0);
  CHECK(path_length(Polyline{{0, 0}, {0.02, 0}}) == doctest::Approx(0.02));
  Polyline p{{0, 0}};
  for (int i = 1; i <= 150; ++i) p.push_back({0.02 * i, 0.0});
  CHECK(path_length(p) == doctest::Approx(3.0).epsilon(1e-12));

  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    Polyline q;
    for (int i = 0; i < 10; ++i) q.push_back({rng.uniform(), rng.uniform()});
    Polyline r(q.rbegin(), q.rend());
    CHECK(path_length(q) == doctest::Approx(path_length(r)).epsilon(1e-12));
  }
}

TEST_CASE("resampled polylines have exact step lengths") {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    Polyline q{{rng.uniform(), rng.uniform()}};
    for (int i = 0; i < 6; ++i) q.push_back({rng.uniform(), rng.uniform()});
    const auto r = resample_polyline(q, 0.02);
    REQUIRE(r.size() >= 2);
    CHECK(r.front() == q.front());
    CHECK(r.back() == q.back());
    for (std::size_t i = 1; i + 1 < r.size(); ++i) CHECK(std::abs(distance(r[i - 1], r[i]) - 0.02) < 1e-9);
    CHECK(distance(r[r.size() - 2], r.back()) <= 0.02 + 1e-9);
  }
}

TEST_CASE("instance invariants") {
  const auto inst = make_instance({{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}}, {{{0.3, 0.7}, 0.05}}, 2.0, 0.02);
  CHECK(inst.max_steps() == 100);
  CHECK(inst.rewards().front() == 0.0);
  CHECK(inst.rewards().back() == 0.0);
  CHECK(inst.rewards()[1] == 1.0);
  CHECK(steps_for_budget(3.0, 0.02) == 150);
  CHECK(steps_for_budget(0.05, 0.02) == 2);

  CHECK_THROWS_AS(make_instance({{0.5, 0.5}, {0.9, 0.9}}, {{{0.5, 0.5}, 0.1}}, 2.0, 0.02), StructuralError);
  CHECK_THROWS_AS(make_instance({{1.5, 0.5}, {0.9, 0.9}}, {}, 2.0, 0.02), StructuralError);
  CHECK_THROWS_AS(make_instance({{0.5, 0.5}, {0.9, 0.9}}, {{{0.1, 0.1}, 0.0}}, 2.0, 0.02), StructuralError);
  CHECK_THROWS_AS(NopInstance({{0.1, 0.1}, {0.9, 0.9}}, {1.0, 0.0}, {}, 2.0, 0.02), StructuralError);
  CHECK_THROWS_AS(make_instance({{0.1, 0.1}}, {}, 2.0, 0.02), StructuralError);
}

TEST_CASE("serialization round trip and fixed key order") {
  GenConfig g = testing::small_gen(42, 20);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto inst = generate_instance(g, i);
    const auto line = serialize_instance(inst);
    CHECK(parse_instance(line) == inst);
    CHECK(line.find("\"nodes\"") < line.find("\"rewards\""));
    CHECK(line.find("\"rewards\"") < line.find("\"obstacles\""));
    CHECK(line.find("\"obstacles\"") < line.find("\"budget_T\""));
    CHECK(line.find("\"budget_T\"") < line.find("\"step_len\""));
  }
  const auto padded = pad_with_dummies(generate_instance(g, 0), 25);
  CHECK(padded.interior_slots() == 25);
  CHECK(padded.interior_count() == 20);
  CHECK(parse_instance(serialize_instance(padded)) == padded);
  CHECK_THROWS_AS(parse_instance("{\"nodes\": 3}"), StructuralError);
  CHECK_THROWS_AS(parse_instance("not json"), StructuralError);
}

TEST_CASE("verifier flags each constraint") {
  // Depots at the left and right, two interior nodes on the way.
  const auto inst = make_instance({{0.1, 0.5}, {0.3, 0.5}, {0.5, 0.5}, {0.7, 0.5}, {0.9, 0.5}},
                                  {{{0.5, 0.9}, 0.05}}, 2.0, 0.02);
  const int end = inst.end_index();
  auto straight = [&](const Route& r) {
    Polyline raw;
    for (int v : r) raw.push_back(inst.nodes()[static_cast<std::size_t>(v)]);
    return resample_polyline(raw, 0.02);
  };

  SUBCASE("empty tour is feasible") {
    const auto rep = verify_solution(inst, {0, end}, straight({0, end}));
    CHECK(rep.all_pass());
    // Two interior nodes lie on the straight line, so the path passes them
    // but they are not part of the route; prize counts routed nodes only.
    CHECK(rep.prize == 0.0);
  }
  SUBCASE("full route") {
    const Route r{0, 1, 2, 3, end};
    const auto rep = verify_solution(inst, r, straight(r));
    CHECK(rep.all_pass());
    CHECK(rep.prize == 3.0);
  }
  SUBCASE("immediate revisit") {
    const Route r{0, 2, 2, 3, end};
    const auto rep = verify_solution(inst, r, straight({0, 2, 3, end}));
    CHECK_FALSE(rep.ok(Constraint::NoImmediateRevisit));
  }
  SUBCASE("collision") {
    const Route r{0, end};
    const Polyline raw{inst.nodes()[0], {0.5, 0.9}, inst.nodes()[4]};
    const auto rep = verify_solution(inst, r, resample_polyline(raw, 0.02));
    CHECK_FALSE(rep.ok(Constraint::CollisionFree));
  }
  SUBCASE("budget") {
    const auto tight = make_instance({{0.1, 0.5}, {0.9, 0.5}}, {{{0.5, 0.9}, 0.05}}, 0.5, 0.02);
    Polyline raw{tight.nodes()[0], tight.nodes()[1]};
    const auto rep = verify_solution(tight, {0, 1}, resample_polyline(raw, 0.02));
    CHECK_FALSE(rep.ok(Constraint::Budget));
  }
  SUBCASE("wrong start and end") {
    const auto rep = verify_solution(inst, {1, 2}, straight({1, 2}));
    CHECK_FALSE(rep.ok(Constraint::StartAtDepot));
    CHECK_FALSE(rep.ok(Constraint::EndAtDepot));
  }
  SUBCASE("end depot reached mid-move") {
    // Last move (0.88,0.5)->(0.92,0.53) passes 0.012 from the depot at
    // (0.9,0.5) but stops 0.036 away.
    Polyline p = resample_polyline(Polyline{inst.nodes()[0], {0.88, 0.5}}, 0.02);
    p.push_back({0.92, 0.53});
    CHECK(verify_solution(inst, {0, end}, p).ok(Constraint::EndAtDepot));
    const auto stop = verify_solution(inst, {0, end}, resample_polyline(Polyline{inst.nodes()[0], {0.85, 0.5}}, 0.02));
    CHECK_FALSE(stop.ok(Constraint::EndAtDepot));
  }
  SUBCASE("repeated entry is a subtour") {
    const Route r{0, 1, 2, 1, end};
    const auto rep = verify_solution(inst, r, straight(r));
    CHECK_FALSE(rep.ok(Constraint::SingleEntry));
    CHECK_FALSE(rep.ok(Constraint::SingleExit));
  }
  SUBCASE("malformed routes are structural errors") {
    CHECK_THROWS_AS(verify_solution(inst, {0, 99}, straight({0, end})), StructuralError);
    CHECK_THROWS_AS(verify_solution(inst, {}, straight({0, end})), StructuralError);
  }
}

TEST_CASE("dataset files load back") {
  const auto dir = testing::temp_dir("core_io");
  std::vector<NopInstance> v;
  for (std::uint64_t i = 0; i < 5; ++i) v.push_back(generate_instance(testing::small_gen(1), i));
  save_instances(v, (dir / "d.jsonl").string());
  CHECK(load_instances((dir / "d.jsonl").string()) == v);
  std::ofstream((dir / "bad.jsonl").string()) << serialize_instance(v[0]) << "\n{oops\n";
  CHECK_THROWS_AS(load_instances((dir / "bad.jsonl").string()), StructuralError);
}

}

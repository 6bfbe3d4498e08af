#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "nop/baselines/astar.hpp"
#include "nop/baselines/route.hpp"
#include "nop/baselines/two_step.hpp"
#include "nop/verify.hpp"
#include "oracles/brute_force.hpp"
#include "suites/astar_suite.hpp"

using namespace nop;
using namespace nop::baselines;

namespace {

NopInstance open_instance(std::vector<Point> nodes, double budget) {
  return make_instance(std::move(nodes), {}, budget, 0.02);
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("octile costs compare exactly") {
  CHECK(OctileCost{3, 0} > OctileCost{0, 2});  // 3 > 2.83
  CHECK(OctileCost{2, 0} < OctileCost{0, 2});
  CHECK(OctileCost{1, 1} == OctileCost{1, 1});
  CHECK(OctileCost{7, 0} < OctileCost{0, 5});  // 7 < 7.07
  CHECK(OctileCost{0, 5} < OctileCost{8, 0});
  CHECK(octile({0, 0}, {3, 5}) == OctileCost{2, 3});
  CHECK(OctileCost{2, 3}.value() == doctest::Approx(2 + 3 * std::sqrt(2.0)));
}

TEST_CASE("grid construction") {
  GridSpec g(50, 50, 0.02);
  CHECK(g.cell_of({0.0, 0.0}) == Cell{0, 0});
  CHECK(g.cell_of({1.0, 1.0}) == Cell{49, 49});
  CHECK(g.cell_of({0.031, 0.5}) == Cell{25, 1});
  CHECK_FALSE(g.cell_of({1.01, 0.5}).has_value());
  CHECK(default_inflation(0.02, 0.02) == doctest::Approx(0.02 * std::sqrt(2.0) / 2 + 0.01));

  const auto inst = make_instance({{0.1, 0.1}, {0.5, 0.9}, {0.9, 0.9}}, {{{0.5, 0.5}, 0.1}}, 2.0, 0.02);
  const auto grid = make_grid(inst);
  CHECK(grid.rows() == 50);
  CHECK(grid.blocked(*grid.cell_of({0.5, 0.5})));
  CHECK_FALSE(grid.blocked(*grid.cell_of({0.1, 0.1})));
  // Every cell touching the disc is blocked.
  for (int r = 0; r < 50; ++r) {
    for (int c = 0; c < 50; ++c) {
      const auto ctr = grid.center({r, c});
      const double dx = std::max(std::abs(ctr.x - 0.5) - 0.01, 0.0);
      const double dy = std::max(std::abs(ctr.y - 0.5) - 0.01, 0.0);
      if (std::hypot(dx, dy) < 0.1) CHECK(grid.blocked({r, c}));
    }
  }
}

TEST_CASE("astar on an empty grid") {
  GridSpec g(50, 50, 0.02);
  const auto r = astar(g, {0.0, 0.0}, {0.1, 0.0});
  REQUIRE(r.has_value());
  CHECK(r->cost == OctileCost{5, 0});
  CHECK(path_length(r->path) == doctest::Approx(0.1));
  const auto d = astar(g, {0.01, 0.01}, {0.51, 0.31});
  REQUIRE(d.has_value());
  CHECK(d->cost == OctileCost{10, 15});
}

TEST_CASE("astar fails on an enclosed goal and blocked endpoints") {
  GridSpec g(50, 50, 0.02);
  for (int r = 19; r <= 21; ++r) {
    for (int c = 19; c <= 21; ++c) {
      if (r != 20 || c != 20) g.set_blocked({r, c}, true);
    }
  }
  CHECK_FALSE(astar(g, {0.01, 0.01}, g.center({20, 20})).has_value());
  CHECK_FALSE(astar(g, g.center({19, 19}), {0.9, 0.9}).has_value());
  CHECK_FALSE(astar(g, {0.01, 0.01}, {1.5, 0.5}).has_value());
}

TEST_CASE("astar does not cut corners") {
  GridSpec g(3, 3, 1.0 / 3);
  g.set_blocked({0, 1}, true);
  const auto p = astar_cells(g, {0, 0}, {1, 1});
  REQUIRE(p.has_value());
  CHECK(p->cost == OctileCost{2, 0});
}

TEST_CASE("astar agrees with dijkstra") {
  const auto st = suites::run_astar_suite(20, 4);
  INFO(st.first_error);
  CHECK(st.grids == 20);
  CHECK(st.ok());
}

TEST_CASE("greedy route examples") {
  const auto inst = open_instance({{0.1, 0.5}, {0.5, 0.5}, {0.2, 0.9}, {0.9, 0.5}}, 2.0);
  const auto dist = euclidean_distances(inst);
  CHECK(dist[0][3] == doctest::Approx(0.8));
  SUBCASE("budget equal to the depot distance") {
    const auto r = greedy_route(inst, dist, dist[0][3]);
    REQUIRE(r.has_value());
    CHECK(route_length(*r, dist) <= dist[0][3] + 1e-12);
  }
  SUBCASE("ample budget") {
    const auto r = greedy_route(inst, dist, 5.0);
    REQUIRE(r.has_value());
    CHECK(r->size() == 4);
    CHECK(r->front() == 0);
    CHECK(r->back() == 3);
  }
  SUBCASE("too little budget") { CHECK_FALSE(greedy_route(inst, dist, 0.5).has_value()); }
  SUBCASE("excluded nodes") {
    const auto r = greedy_route(inst, dist, 5.0, {0, 1, 1, 0});
    REQUIRE(r.has_value());
    CHECK(*r == Route{0, 3});
  }
  const auto off = open_instance({{0.1, 0.5}, {0.5, 0.9}, {0.9, 0.5}}, 2.0);
  const auto d2 = euclidean_distances(off);
  CHECK(*greedy_route(off, d2, d2[0][2]) == Route{0, 2});
  const auto on_line = open_instance({{0.1, 0.5}, {0.5, 0.5}, {0.9, 0.5}}, 2.0);
  CHECK(*greedy_route(on_line, euclidean_distances(on_line), 2.0) == Route{0, 1, 2});
}

TEST_CASE("greedy prize lies between the direct route and the optimum") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto gen = testing::small_gen(seed, 6);
    gen.budget = 1.5;
    const auto inst = generate_instance(gen);
    const auto dist = euclidean_distances(inst);
    const double budget = inst.budget() - 0.3;
    const auto r = greedy_route(inst, dist, budget);
    if (!r) {
      CHECK(dist[0][static_cast<std::size_t>(inst.end_index())] > budget);
      continue;
    }
    double prize = 0.0;
    for (int v : *r) prize += inst.rewards()[static_cast<std::size_t>(v)];
    CHECK(route_length(*r, dist) <= budget + 1e-9);
    CHECK(prize >= 0.0);
    CHECK(prize <= oracle::best_prize(inst, budget) + 1e-12);
  }
}

TEST_CASE("two-step with no slack left for detours") {
  const auto inst = make_instance({{0.1, 0.1}, {0.5, 0.8}, {0.9, 0.1}}, {{{0.5, 0.4}, 0.05}}, 1.2, 0.02);
  TwoStepConfig cfg;
  cfg.epsilon = inst.budget() - distance(inst.nodes()[0], inst.nodes()[2]);
  const auto r = two_step_plan(inst, cfg);
  REQUIRE(r.feasible);
  CHECK(r.route == Route{0, 2});
  CHECK(r.path.front() == inst.nodes()[0]);
  CHECK(r.path.back() == inst.nodes()[2]);
}

TEST_CASE("two-step on open ground stays within the octile bound") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = generate_instance(testing::small_gen(seed));
    const auto inst = make_instance(g.nodes(), {}, g.budget(), g.step_len());
    const auto r = two_step_plan(inst);
    REQUIRE(r.feasible);
    double euclid = 0.0;
    for (std::size_t i = 1; i < r.route.size(); ++i) {
      euclid += distance(inst.nodes()[static_cast<std::size_t>(r.route[i - 1])],
                         inst.nodes()[static_cast<std::size_t>(r.route[i])]);
    }
    const double len = path_length(r.path);
    CHECK(len >= euclid - 1e-9);
    CHECK(len <= 1.08 * euclid + 2 * inst.step_len());
  }
}

TEST_CASE("two-step paths are collision-free and budget problems are reported") {
  int feasible = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = generate_instance(testing::small_gen(100 + seed));
    const auto r = two_step_plan(inst);
    if (!r.feasible) {
      CHECK_FALSE(r.reason.empty());
      continue;
    }
    ++feasible;
    const auto rep = verify_solution(inst, r.route, r.path);
    CHECK(rep.ok(Constraint::CollisionFree));
    CHECK(rep.ok(Constraint::StartAtDepot));
    CHECK(rep.ok(Constraint::EndAtDepot));
    if (!rep.ok(Constraint::Budget)) CHECK_FALSE(r.reason.empty());
    for (int v : r.excluded) CHECK(std::find(r.route.begin(), r.route.end(), v) == r.route.end());
  }
  CHECK(feasible >= 25);
}

TEST_CASE("two-step with a blocked depot is infeasible") {
  const auto inst = make_instance({{0.5, 0.5}, {0.2, 0.8}, {0.9, 0.9}}, {{{0.5, 0.62}, 0.1}}, 2.0, 0.02);
  const auto r = two_step_plan(inst);
  CHECK_FALSE(r.feasible);
  CHECK_FALSE(r.reason.empty());
}

}

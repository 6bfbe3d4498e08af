#pragma once

#include <optional>
#include <vector>

#include "nop/instance.hpp"

namespace nop::baselines {

using Route = std::vector<int>;
using DistanceMatrix = std::vector<std::vector<double>>;

DistanceMatrix euclidean_distances(const NopInstance& inst);

/// Total distance along a route.
double route_length(const Route& route, const DistanceMatrix& dist);

/// Repeatedly appends the unvisited interior node with the best
/// reward/distance ratio whose detour still leaves enough budget to reach
/// the end depot. Dummy nodes and nodes flagged in `excluded` are skipped.
/// Empty when the budget cannot cover the depot-to-depot distance.
std::optional<Route> greedy_route(const NopInstance& inst, const DistanceMatrix& dist, double budget,
                                  const std::vector<std::uint8_t>& excluded = {});

}  // namespace nop::baselines

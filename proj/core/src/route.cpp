#include "nop/baselines/route.hpp"

#include <limits>
#include <stdexcept>

namespace nop::baselines {

DistanceMatrix euclidean_distances(const NopInstance& inst) {
  const auto n = static_cast<std::size_t>(inst.size());
  DistanceMatrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = distance(inst.nodes()[i], inst.nodes()[j]);
    }
  }
  return d;
}

double route_length(const Route& route, const DistanceMatrix& dist) {
  double total = 0.0;
  for (std::size_t i = 1; i < route.size(); ++i) {
    total += dist.at(static_cast<std::size_t>(route[i - 1])).at(static_cast<std::size_t>(route[i]));
  }
  return total;
}

std::optional<Route> greedy_route(const NopInstance& inst, const DistanceMatrix& dist, double budget,
                                  const std::vector<std::uint8_t>& excluded) {
  const int end = inst.end_index();
  if (dist.size() != static_cast<std::size_t>(inst.size())) {
    throw std::invalid_argument("greedy_route: distance matrix does not match the instance");
  }
  if (!excluded.empty() && excluded.size() != dist.size()) {
    throw std::invalid_argument("greedy_route: exclusion mask does not match the instance");
  }
  constexpr double kTol = 1e-12;
  auto d = [&](int a, int b) { return dist[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; };
  if (d(0, end) > budget + kTol) return std::nullopt;

  std::vector<std::uint8_t> used(dist.size(), 0);
  Route route{0};
  int cur = 0;
  double left = budget;
  for (;;) {
    int best = -1;
    double best_ratio = -1.0;
    for (int j = 1; j < end; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (used[ju] || inst.is_dummy(j) || (!excluded.empty() && excluded[ju])) continue;
      if (d(cur, j) + d(j, end) > left + kTol) continue;
      const double reward = inst.rewards()[ju];
      const double ratio = d(cur, j) > 0.0 ? reward / d(cur, j) : std::numeric_limits<double>::infinity();
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = j;
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = 1;
    left -= d(cur, best);
    route.push_back(best);
    cur = best;
  }
  route.push_back(end);
  return route;
}

}  // namespace nop::baselines

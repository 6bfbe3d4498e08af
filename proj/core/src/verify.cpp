#include "nop/verify.hpp"

#include <algorithm>
#include <map>

namespace nop {

std::string_view constraint_name(Constraint c) {
  switch (c) {
    case Constraint::StartAtDepot: return "start_at_depot";
    case Constraint::EndAtDepot: return "end_at_depot";
    case Constraint::SingleEntry: return "single_entry";
    case Constraint::SingleExit: return "single_exit";
    case Constraint::NoImmediateRevisit: return "no_immediate_revisit";
    case Constraint::Budget: return "budget";
    case Constraint::CollisionFree: return "collision_free";
    case Constraint::NoSubtour: return "no_subtour";
  }
  return "unknown";
}

bool VerificationReport::all_pass() const {
  return path_follows_route && std::all_of(passed.begin(), passed.end(), [](bool b) { return b; });
}

std::vector<std::string> VerificationReport::failures() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kConstraintCount; ++i) {
    if (!passed[i]) out.emplace_back(constraint_name(static_cast<Constraint>(i)));
  }
  if (!path_follows_route) out.emplace_back("path_follows_route");
  return out;
}

VerificationReport verify_solution(const NopInstance& inst, const Route& route,
                                   const Polyline& path, std::optional<double> visit_radius) {
  if (route.empty()) throw StructuralError("route is empty");
  if (path.empty()) throw StructuralError("path is empty");
  const int size = inst.size();
  const int end = inst.end_index();
  for (int v : route) {
    if (v < 0 || v >= size) {
      throw StructuralError("route index " + std::to_string(v) + " out of range [0, " +
                            std::to_string(size - 1) + "]");
    }
  }
  const double radius = visit_radius.value_or(inst.step_len());

  VerificationReport rep;
  // Same segment visit rule as the environment: the episode ends on the move
  // that comes within the radius, not necessarily at its endpoint.
  auto final_move_reaches = [](const std::vector<Point>& p, const Point& c, double r) {
    if (p.size() == 1) return distance(p[0], c) <= r;
    return point_segment_distance(p[p.size() - 2], p.back(), c) <= r + 1e-12;
  };
  auto set = [&](Constraint c, bool v) { rep.passed[static_cast<std::size_t>(c)] = v; };

  // Successor pairs; entry/exit degree per node.
  std::vector<int> in_degree(static_cast<std::size_t>(size), 0);
  std::vector<int> out_degree(static_cast<std::size_t>(size), 0);
  bool self_loop = false;
  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    const int i = route[k];
    const int j = route[k + 1];
    ++out_degree[static_cast<std::size_t>(i)];
    ++in_degree[static_cast<std::size_t>(j)];
    if (i == j) self_loop = true;
    if (j != 0) rep.prize += inst.rewards()[static_cast<std::size_t>(j)];
  }

  const bool start_ok = route.front() == 0 && out_degree[0] == (route.size() > 1 ? 1 : 0) &&
                        in_degree[0] == 0 && distance(path.front(), inst.nodes().front()) <= 1e-9;
  set(Constraint::StartAtDepot, start_ok);

  const bool end_ok = route.size() > 1 && route.back() == end &&
                      in_degree[static_cast<std::size_t>(end)] == 1 &&
                      out_degree[static_cast<std::size_t>(end)] == 0 &&
                      final_move_reaches(path, inst.nodes().back(), radius);
  set(Constraint::EndAtDepot, end_ok);

  bool entry_ok = true;
  bool exit_ok = true;
  for (int i = 1; i < end; ++i) {
    entry_ok = entry_ok && in_degree[static_cast<std::size_t>(i)] <= 1;
    exit_ok = exit_ok && out_degree[static_cast<std::size_t>(i)] <= 1;
  }
  set(Constraint::SingleEntry, entry_ok);
  set(Constraint::SingleExit, exit_ok);
  set(Constraint::NoImmediateRevisit, !self_loop);

  rep.path_length = path_length(path);
  rep.path_steps = static_cast<int>(path.size()) - 1;
  const int max_steps = inst.max_steps();
  set(Constraint::Budget, rep.path_steps <= max_steps &&
                              rep.path_length <= max_steps * inst.step_len() + 1e-9);
  rep.lower_bound = distance(inst.nodes().front(), inst.nodes().back());
  rep.lower_bound_met = rep.path_length + 1e-9 >= rep.lower_bound;

  bool free = std::all_of(path.begin(), path.end(), inside_unit_square);
  for (std::size_t k = 0; free && k + 1 < path.size(); ++k) {
    free = !segment_hits_any(path[k], path[k + 1], inst.obstacles());
  }
  if (path.size() == 1) {
    for (const auto& o : inst.obstacles()) free = free && distance(path[0], o.center) > o.radius;
  }
  set(Constraint::CollisionFree, free);

  // Positional order: walk successors from 0. A node seen twice or a routed
  // node never reached from 0 means no consistent order u exists.
  std::map<int, std::vector<int>> successors;
  for (std::size_t k = 0; k + 1 < route.size(); ++k) successors[route[k]].push_back(route[k + 1]);
  bool order_ok = route.front() == 0;
  if (order_ok) {
    std::vector<int> order(static_cast<std::size_t>(size), -1);
    int cur = 0;
    int pos = 0;
    order[0] = pos;
    while (true) {
      auto it = successors.find(cur);
      if (it == successors.end()) break;
      if (it->second.size() != 1) {
        order_ok = false;
        break;
      }
      const int nxt = it->second.front();
      if (order[static_cast<std::size_t>(nxt)] != -1) {
        order_ok = false;  // cycle
        break;
      }
      order[static_cast<std::size_t>(nxt)] = ++pos;
      cur = nxt;
    }
    for (int v : route) order_ok = order_ok && order[static_cast<std::size_t>(v)] != -1;
  }
  set(Constraint::NoSubtour, order_ok);

  // Path visits routed nodes in order.
  std::size_t seg = 0;
  bool follows = distance(path.front(), inst.nodes()[static_cast<std::size_t>(route.front())]) <= radius;
  for (std::size_t k = 1; follows && k < route.size(); ++k) {
    const Point target = inst.nodes()[static_cast<std::size_t>(route[k])];
    bool hit = false;
    if (path.size() == 1) {
      hit = distance(path[0], target) <= radius;
    } else {
      for (; seg + 1 < path.size(); ++seg) {
        if (point_segment_distance(path[seg], path[seg + 1], target) <= radius + 1e-12) {
          hit = true;
          break;
        }
      }
    }
    follows = hit;
  }
  rep.path_follows_route = follows;
  return rep;
}

}  // namespace nop

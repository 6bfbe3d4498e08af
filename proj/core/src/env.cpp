#include "nop/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nop {

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::InProgress: return "in_progress";
    case Outcome::Success: return "success";
    case Outcome::CollisionFail: return "collision";
    case Outcome::TimeoutFail: return "timeout";
    case Outcome::OutOfBoundsFail: return "out_of_bounds";
  }
  return "unknown";
}

Outcome outcome_from_name(std::string_view name) {
  for (auto o : {Outcome::InProgress, Outcome::Success, Outcome::CollisionFail,
                 Outcome::TimeoutFail, Outcome::OutOfBoundsFail}) {
    if (outcome_name(o) == name) return o;
  }
  throw std::invalid_argument("unknown outcome '" + std::string(name) + "'");
}

Point direction_vector(int k) {
  static constexpr double s = 0.70710678118654752440;
  static constexpr std::array<Point, kDirectionCount> kDirs = {
      Point{1, 0}, Point{s, s}, Point{0, 1}, Point{-s, s},
      Point{-1, 0}, Point{-s, -s}, Point{0, -1}, Point{s, -s}};
  if (k < 0 || k >= kDirectionCount) throw std::out_of_range("direction index must be in 0..7");
  return kDirs[static_cast<std::size_t>(k)];
}

AgentState reset(const NopInstance& inst) {
  AgentState s;
  s.position = inst.nodes().front();
  s.steps_left = inst.max_steps();
  s.visited.assign(static_cast<std::size_t>(inst.size()), 0);
  for (int i = 0; i < inst.size(); ++i) s.visited[static_cast<std::size_t>(i)] = inst.is_dummy(i) ? 1 : 0;
  s.visited[0] = 1;
  s.last_goal = 0;
  s.visit_order = {0};
  return s;
}

AgentState move_to(const AgentState& state, const NopInstance& inst, const Point& next,
                   const EnvConfig& cfg) {
  if (state.done) throw std::logic_error("step called on a finished episode");
  AgentState s = state;
  const Point from = s.position;
  s.position = next;
  s.steps_left -= 1;

  if (segment_hits_any(from, next, inst.obstacles())) {
    s.done = true;
    s.outcome = Outcome::CollisionFail;
    return s;
  }
  if (!inside_unit_square(next)) {
    s.done = true;
    s.outcome = Outcome::OutOfBoundsFail;
    return s;
  }

  const double radius = cfg.radius_for(inst);
  std::vector<std::pair<double, int>> hits;
  for (int i = 1; i < inst.size(); ++i) {
    if (s.visited[static_cast<std::size_t>(i)]) continue;
    const Point& p = inst.nodes()[static_cast<std::size_t>(i)];
    if (point_segment_distance(from, next, p) <= radius) {
      hits.emplace_back(closest_parameter(from, next, p), i);
    }
  }
  std::sort(hits.begin(), hits.end());
  for (const auto& [t, i] : hits) {
    s.visited[static_cast<std::size_t>(i)] = 1;
    s.visit_order.push_back(i);
    if (i == inst.end_index()) {
      s.done = true;
      s.outcome = Outcome::Success;
      return s;
    }
  }
  if (s.steps_left <= 0) {
    s.done = true;
    s.outcome = Outcome::TimeoutFail;
  }
  return s;
}

AgentState step(const AgentState& state, const NopInstance& inst, int dir, const EnvConfig& cfg) {
  if (state.done) throw std::logic_error("step called on a finished episode");
  return move_to(state, inst, state.position + direction_vector(dir) * inst.step_len(), cfg);
}

RewardBreakdown combine_reward(double prize, double distance_sum, int interior_visited,
                               bool success, int interior_count, const RewardConfig& cfg) {
  RewardBreakdown r;
  r.prize = prize;
  r.distance_sum = distance_sum;
  r.interior_visited = interior_visited;
  const double expected = interior_count / 2.0;
  r.prize_term = expected > 0.0 ? cfg.gamma * prize / expected : 0.0;
  r.distance_term = -cfg.beta * distance_sum;
  r.terminal = success ? cfg.success_bonus : cfg.failure_penalty;
  r.total = r.prize_term + r.distance_term + r.terminal;
  return r;
}

RewardBreakdown episode_reward(const EpisodeTrace& trace, const NopInstance& inst,
                               const RewardConfig& cfg) {
  if (!trace.finished()) throw std::logic_error("episode_reward: trace is not finished");
  double prize = 0.0;
  int visited = 0;
  for (int v : trace.visit_order) {
    if (inst.is_depot(v) || inst.is_dummy(v)) continue;
    prize += inst.rewards()[static_cast<std::size_t>(v)];
    ++visited;
  }
  double dist = 0.0;
  for (const auto& s : trace.steps) {
    dist += distance(s.from, inst.nodes()[static_cast<std::size_t>(s.goal)]);
  }
  return combine_reward(prize, dist, visited, trace.success(), inst.interior_count(), cfg);
}

Episode::Episode(const NopInstance& inst, EnvConfig env, RewardConfig reward)
    : inst_(&inst), env_(env), reward_cfg_(reward), state_(reset(inst)) {
  trace_.positions.push_back(state_.position);
  trace_.visit_order = state_.visit_order;
}

void Episode::record(int goal, int direction, double logp_goal, double logp_direction,
                     const AgentState& next) {
  distance_sum_ += distance(state_.position, inst_->nodes()[static_cast<std::size_t>(goal)]);
  for (std::size_t k = state_.visit_order.size(); k < next.visit_order.size(); ++k) {
    const int v = next.visit_order[k];
    if (!inst_->is_depot(v)) {
      prize_ += inst_->rewards()[static_cast<std::size_t>(v)];
      ++interior_visited_;
    }
  }
  trace_.steps.push_back({state_.position, next.position, goal, direction, logp_goal, logp_direction});
  trace_.positions.push_back(next.position);
  trace_.visit_order = next.visit_order;
  trace_.outcome = next.outcome;
  state_ = next;
  state_.last_goal = goal;
  if (state_.done) trace_.reward = reward();
}

void Episode::step(int goal, int direction, double logp_goal, double logp_direction) {
  if (goal < 0 || goal >= inst_->size()) throw std::out_of_range("goal index out of range");
  record(goal, direction, logp_goal, logp_direction, nop::step(state_, *inst_, direction, env_));
}

void Episode::move(int goal, const Point& next) {
  if (goal < 0 || goal >= inst_->size()) throw std::out_of_range("goal index out of range");
  record(goal, -1, 0.0, 0.0, move_to(state_, *inst_, next, env_));
}

RewardBreakdown Episode::reward() const {
  return combine_reward(prize_, distance_sum_, interior_visited_,
                        state_.outcome == Outcome::Success, inst_->interior_count(), reward_cfg_);
}

EpisodeTrace Episode::finish() const {
  EpisodeTrace t = trace_;
  t.reward = reward();
  return t;
}

EpisodeTrace replay_path(const NopInstance& inst, const std::vector<int>& route,
                         const Polyline& path, const EnvConfig& env, const RewardConfig& reward) {
  Episode ep(inst, env, reward);
  std::size_t next_target = 1;
  for (std::size_t k = 1; k < path.size() && !ep.done(); ++k) {
    const auto& visited = ep.state().visited;
    while (next_target < route.size() &&
           visited[static_cast<std::size_t>(route[next_target])]) {
      ++next_target;
    }
    const int goal = next_target < route.size() ? route[next_target] : inst.end_index();
    ep.move(goal, path[k]);
  }
  EpisodeTrace t = ep.finish();
  if (!t.finished()) {
    // The plan stopped short of the end depot.
    t.outcome = Outcome::TimeoutFail;
    t.reward = episode_reward(t, inst, reward);
  }
  return t;
}

}  // namespace nop

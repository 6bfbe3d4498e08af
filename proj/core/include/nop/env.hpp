#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nop/geometry.hpp"
#include "nop/instance.hpp"

namespace nop {

enum class Outcome { InProgress, Success, CollisionFail, TimeoutFail, OutOfBoundsFail };

std::string_view outcome_name(Outcome o);
Outcome outcome_from_name(std::string_view name);

inline constexpr int kDirectionCount = 8;

/// Unit vector of direction k, at angle k * pi / 4 (k = 0 is east,
/// k = 2 north).
Point direction_vector(int k);

struct EnvConfig {
  /// Nodes within this distance of a move segment are visited. Defaults to
  /// the instance step length.
  std::optional<double> visit_radius;

  double radius_for(const NopInstance& inst) const { return visit_radius.value_or(inst.step_len()); }
};

struct AgentState {
  Point position;
  int steps_left = 0;
  std::vector<std::uint8_t> visited;
  /// Goal selected at the previous step; the start depot before the first.
  int last_goal = 0;
  bool done = false;
  Outcome outcome = Outcome::InProgress;
  /// Nodes in the order they were reached, starting with 0.
  std::vector<int> visit_order;
};

/// Agent at the start depot with the full step budget. Dummy nodes are
/// marked visited so no policy can select them.
AgentState reset(const NopInstance& inst);

/// Moves one step of length t_s along direction `dir`. A segment touching
/// an obstacle ends the episode as a collision, leaving [0,1]^2 as
/// out-of-bounds; otherwise nodes within the visit radius of the segment
/// are visited in order along it, reaching the end depot ends the episode
/// successfully, and running out of steps ends it as a timeout.
///
/// Throws std::logic_error when the episode is already finished.
AgentState step(const AgentState& state, const NopInstance& inst, int dir,
                const EnvConfig& cfg = {});

/// Same transition rules as step() for an arbitrary move target; used to
/// replay externally planned polylines.
AgentState move_to(const AgentState& state, const NopInstance& inst, const Point& next,
                   const EnvConfig& cfg = {});

// ---------------------------------------------------------------------------

struct RewardConfig {
  double gamma = 10.0;
  double beta = 0.3;
  double success_bonus = 20.0;
  double failure_penalty = -10.0;
};

struct RewardBreakdown {
  /// Sum of rewards over visited interior nodes.
  double prize = 0.0;
  /// Sum over steps of the pre-move distance to that step's goal.
  double distance_sum = 0.0;
  double prize_term = 0.0;
  double distance_term = 0.0;
  double terminal = 0.0;
  double total = 0.0;
  int interior_visited = 0;
};

struct StepRecord {
  Point from;
  Point to;
  int goal = 0;
  int direction = 0;
  double logp_goal = 0.0;
  double logp_direction = 0.0;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  Polyline positions;
  std::vector<int> visit_order;
  Outcome outcome = Outcome::InProgress;
  RewardBreakdown reward;

  bool finished() const { return outcome != Outcome::InProgress; }
  bool success() const { return outcome == Outcome::Success; }
};

/// Combines prize, distance and terminal components into the episode
/// return: gamma * prize / (n/2) - beta * distance_sum + terminal.
RewardBreakdown combine_reward(double prize, double distance_sum, int interior_visited,
                               bool success, int interior_count, const RewardConfig& cfg);

/// Recomputes the episode return from the recorded steps and visits.
/// Throws std::logic_error on an unfinished trace.
RewardBreakdown episode_reward(const EpisodeTrace& trace, const NopInstance& inst,
                               const RewardConfig& cfg = {});

/// Drives one episode and records its trace. Reward components are
/// accumulated incrementally as steps are taken.
class Episode {
 public:
  explicit Episode(const NopInstance& inst, EnvConfig env = {}, RewardConfig reward = {});

  const AgentState& state() const { return state_; }
  bool done() const { return state_.done; }

  void step(int goal, int direction, double logp_goal = 0.0, double logp_direction = 0.0);
  /// Moves toward an arbitrary point with `goal` as the active goal.
  void move(int goal, const Point& next);

  RewardBreakdown reward() const;
  const EpisodeTrace& trace() const { return trace_; }
  EpisodeTrace finish() const;

 private:
  void record(int goal, int direction, double logp_goal, double logp_direction,
              const AgentState& next);

  const NopInstance* inst_;
  EnvConfig env_;
  RewardConfig reward_cfg_;
  AgentState state_;
  EpisodeTrace trace_;
  double prize_ = 0.0;
  double distance_sum_ = 0.0;
  int interior_visited_ = 0;
};

/// Replays a planned polyline through the environment, with each step's
/// goal being the next unreached node of `route`. Stops at the first
/// terminal event or when the polyline ends.
EpisodeTrace replay_path(const NopInstance& inst, const std::vector<int>& route,
                         const Polyline& path, const EnvConfig& env = {},
                         const RewardConfig& reward = {});

}  // namespace nop

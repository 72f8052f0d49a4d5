#pragma once

#include <span>

#include "diffplan/planner.hpp"

namespace diffplan::reward {

struct RewardConfig {
  double bonus = 1.0;        // reward scale of the sequential bonus
  double omega = 1.0 / 20.0; // adaptive dense-reward scale
  double shift = 0.01;       // positive constant subtracted from the dense term
  int total_steps = 1;       // episode step budget
};

/// Tracks progress through one plan within one episode. The pointer only
/// ever advances; reset() re-arms it for the next episode.
struct RewardTracker {
  planner::Plan plan;
  std::size_t next_move = 0;  // index into plan.moves of the awaited move
  int num_steps = 0;          // env steps elapsed this episode

  void reset() {
    next_move = 0;
    num_steps = 0;
  }
  bool plan_complete() const { return next_move >= plan.moves.size(); }
};

struct StaticRewardResult {
  double reward = 0.0;
  bool advanced = false;  // the awaited post-state was reached
};

/// One env step of the sequential reward: if the observed progress atom
/// equals the awaited move's post-state, pay max(bonus - steps/total, 0) and
/// advance; anything else (wrong state, out-of-order arrival, re-visit of an
/// already-consumed post-state) pays 0 and leaves the pointer alone.
StaticRewardResult static_reasoner_reward(RewardTracker& tracker,
                                          const planner::SymbolicState& state,
                                          const RewardConfig& config);

inline double shaped_reward(double env_reward, double reasoner_reward) {
  return env_reward + reasoner_reward;
}

/// log sum_j p_j computed max-shifted over log-probabilities; inputs are
/// floored at 1e-12 before the log.
double adaptive_reward(std::span<const double> plan_probabilities);

/// The per-step combined reward: omega * adaptive - shift + env (+ reasoner
/// bonus on a successful planned transition). Returns the total; if the
/// dense term omega*adaptive - shift is not negative, `dense_warning` (when
/// given) is set — the negativity assumption only holds on this
/// environment family.
double combined_adaptive_reward(double env_reward, double reasoner_reward,
                                bool transitioned, double adaptive,
                                const RewardConfig& config,
                                bool* dense_warning = nullptr);

}  // namespace diffplan::reward

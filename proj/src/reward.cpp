#include "diffplan/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffplan::reward {

StaticRewardResult static_reasoner_reward(RewardTracker& tracker,
                                          const planner::SymbolicState& state,
                                          const RewardConfig& config) {
  tracker.num_steps += 1;
  StaticRewardResult out;
  if (tracker.plan_complete()) return out;
  const auto& awaited = tracker.plan.moves[tracker.next_move];
  if (!(state.progress == awaited.post_state)) return out;
  out.reward = std::max(
      config.bonus - static_cast<double>(tracker.num_steps) / config.total_steps,
      0.0);
  out.advanced = true;
  tracker.next_move += 1;
  return out;
}

double adaptive_reward(std::span<const double> plan_probabilities) {
  if (plan_probabilities.empty())
    throw std::invalid_argument("adaptive reward needs at least one plan");
  double m = -std::numeric_limits<double>::infinity();
  for (double p : plan_probabilities)
    m = std::max(m, std::log(std::max(p, 1e-12)));
  double s = 0.0;
  for (double p : plan_probabilities)
    s += std::exp(std::log(std::max(p, 1e-12)) - m);
  return m + std::log(s);
}

double combined_adaptive_reward(double env_reward, double reasoner_reward,
                                bool transitioned, double adaptive,
                                const RewardConfig& config,
                                bool* dense_warning) {
  const double dense = config.omega * adaptive - config.shift;
  if (dense_warning) *dense_warning = !(dense < 0.0);
  double total = dense + env_reward;
  if (transitioned) total += reasoner_reward;
  return total;
}

}  // namespace diffplan::reward

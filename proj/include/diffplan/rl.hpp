#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "diffplan/doorkey.hpp"
#include "diffplan/reward.hpp"
#include "diffplan/rng.hpp"

namespace diffplan::rl {

// ---------------------------------------------------------------------------
// Policy/value network
// ---------------------------------------------------------------------------

/// 2x64 tanh MLP over the 15-feature observation, 5-way softmax action head
/// and scalar value head. Batches are columns.
struct PolicyValueNet {
  Eigen::MatrixXd w1, w2, wp, wv;
  Eigen::VectorXd b1, b2, bp, bv;

  static PolicyValueNet init(std::uint64_t seed);

  int parameter_count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);

  struct Forward {
    Eigen::MatrixXd x, h1, h2, logits, logp;  // logp: log-softmax of logits
    Eigen::VectorXd value;
  };
  Forward forward(const Eigen::MatrixXd& obs) const;

  /// Reverse-mode pass: gradients of a scalar loss given dL/dlogits and
  /// dL/dvalue, returned flat in the same order as flatten().
  Eigen::VectorXd backward(const Forward& f, const Eigen::MatrixXd& dlogits,
                           const Eigen::VectorXd& dvalue) const;
};

void save_checkpoint(const std::string& path, const PolicyValueNet& net);
PolicyValueNet load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Optimizers (per Appendix-style hyperparameters: Adam for the clipped
// surrogate, RMSprop with alpha smoothing for the single-pass update)
// ---------------------------------------------------------------------------

class AdamOptimizer {
 public:
  AdamOptimizer(int dim, double lr, double eps);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

class RmsPropOptimizer {
 public:
  RmsPropOptimizer(int dim, double lr, double alpha, double eps);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, alpha_, eps_;
  Eigen::VectorXd sq_;
};

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

struct TrainerConfig {
  int epochs = 4;
  int batch_size = 256;
  int frames_per_proc = 128;
  double discount = 0.99;
  double lr = 1e-4;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double value_loss_coef = 0.5;
  double max_grad_norm = 0.5;
  double clip_eps = 0.2;
  double optim_eps = 1e-8;
  double optim_alpha = 0.99;
  int workers = 4;
  long total_frames = 300000;
  std::uint64_t seed = 1;
};

enum class Algo { Ppo, A2c };
enum class RewardModelKind { None, Static, Adaptive };

std::string to_string(Algo a);
std::string to_string(RewardModelKind k);

struct RolloutBuffer {
  Eigen::MatrixXd obs;        // 15 x N
  std::vector<int> actions;   // N
  Eigen::VectorXd logp;       // behavior log-probs
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;    // shaped
  Eigen::VectorXd env_rewards;
  Eigen::VectorXd reasoner_rewards;
  Eigen::VectorXd adaptive_terms;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd bootstrap;  // value of the observation after the last frame, per worker
  std::vector<std::uint8_t> bootstrap_done;
  int workers = 0, frames_per_proc = 0;

  Eigen::VectorXd advantages;  // normalized per update
  Eigen::VectorXd returns;

  int size() const { return static_cast<int>(actions.size()); }
};

/// Shapes env rewards through one of the reward models. Holds the fixed
/// best plan (chosen once from the reset-time symbolic state) and one
/// tracker per worker; the adaptive kind additionally rescores all candidate
/// plans against every step's symbolic state.
class RewardModel {
 public:
  RewardModel(RewardModelKind kind, const logic::LogicProgram* rules,
              const doorkey::EnvConfig& env_config,
              const reward::RewardConfig& config, int workers,
              double gamma = 0.01);

  struct Shaped {
    double total = 0.0;
    double env = 0.0;
    double reasoner = 0.0;
    double adaptive_term = 0.0;  // omega * r_adaptive - shift (0 for non-adaptive)
  };
  Shaped shape(int worker, double env_reward,
               const planner::SymbolicState& symbols);
  void reset_worker(int worker);

  RewardModelKind kind() const { return kind_; }
  const planner::Plan& plan() const { return best_plan_; }
  bool dense_warning_seen() const { return dense_warning_; }

 private:
  RewardModelKind kind_;
  reward::RewardConfig config_;
  planner::Plan best_plan_;
  std::vector<reward::RewardTracker> trackers_;
  std::unique_ptr<planner::PlannerDomain> domain_;
  std::unique_ptr<planner::PlanScorer> scorer_;
  bool dense_warning_ = false;
};

/// The goal atom and rule program a task variant plans toward.
logic::GroundAtom variant_goal_atom(doorkey::TaskVariant variant);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct UpdateRecord {
  long frames = 0;
  int update = 0;
  double return_mean = 0.0, return_min = 0.0, return_max = 0.0;
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  double reasoner_reward_sum = 0.0;
};

struct LossStats {
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;

  double total(const TrainerConfig& c) const {
    return policy_loss + c.value_loss_coef * value_loss -
           c.entropy_coef * entropy;
  }
};

struct LossAndGrad {
  LossStats stats;
  Eigen::VectorXd grad;  // flat, same layout as PolicyValueNet::flatten()
};

/// Losses and exact gradients of the surrogate objective over the indexed
/// transitions: clipped PPO surrogate when `clipped`, plain policy gradient
/// otherwise, plus the value and entropy terms.
LossAndGrad policy_loss_and_grad(const PolicyValueNet& net,
                                 const RolloutBuffer& buffer,
                                 const std::vector<int>& index,
                                 const TrainerConfig& config, bool clipped);

class Trainer {
 public:
  Trainer(const doorkey::EnvConfig& env_config, Algo algo,
          RewardModelKind reward_kind, const TrainerConfig& config,
          const reward::RewardConfig& reward_config,
          const logic::LogicProgram* rules);

  RolloutBuffer collect_rollouts();
  void compute_gae(RolloutBuffer& buffer) const;
  LossStats ppo_update(const RolloutBuffer& buffer);
  LossStats a2c_update(const RolloutBuffer& buffer);

  /// Alternate collect/update until total_frames; records per-update raw env
  /// return statistics (shaping never leaks into the curve).
  std::vector<UpdateRecord> train();

  const PolicyValueNet& net() const { return net_; }
  PolicyValueNet& net() { return net_; }
  const RewardModel& reward_model() const { return *reward_model_; }

 private:
  LossStats minibatch_update(const RolloutBuffer& buffer,
                             const std::vector<int>& index, bool clipped);
  void optimizer_step(const Eigen::VectorXd& grad);

  doorkey::EnvConfig env_config_;
  Algo algo_;
  TrainerConfig config_;
  PolicyValueNet net_;
  std::vector<std::unique_ptr<doorkey::DoorKeyEnv>> envs_;
  std::vector<Eigen::Matrix<double, 15, 1>> current_obs_;
  std::vector<double> episode_env_return_;
  std::deque<double> recent_returns_;
  std::unique_ptr<RewardModel> reward_model_;
  std::unique_ptr<AdamOptimizer> adam_;
  std::unique_ptr<RmsPropOptimizer> rmsprop_;
  Pcg32 action_rng_;
  Pcg32 shuffle_rng_;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
  double success_rate = 0.0;  // percent
  double stddev = 0.0;        // percent
  int episodes = 0;
};

/// Success = the task variant's post-condition achieved before timeout/trap.
EvalResult evaluate_policy(const PolicyValueNet& net,
                           const doorkey::EnvConfig& env_config, int episodes,
                           std::uint64_t seed);

/// The planner agent: enumerate plans over the variant's rules, score them
/// with the reset-time subtask distances, execute the best plan's primitives
/// in order.
EvalResult evaluate_planner(const doorkey::EnvConfig& env_config,
                            const logic::LogicProgram& rules, int episodes);

/// One planner episode; exposed for tests.
bool planner_episode(doorkey::DoorKeyEnv& env, const logic::LogicProgram& rules,
                     doorkey::TaskVariant variant);

}  // namespace diffplan::rl

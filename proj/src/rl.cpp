#include "diffplan/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace diffplan::rl {

using doorkey::Action;
using doorkey::DoorKeyEnv;
using doorkey::kNumActions;

namespace {

constexpr int kObsDim = 15;
constexpr int kHidden = 64;

Eigen::MatrixXd gaussian_matrix(Pcg32& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.next_gaussian();
  return m;
}

Eigen::MatrixXd log_softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    const double lse =
        m + std::log((logits.col(c).array() - m).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

}  // namespace

std::string to_string(Algo a) { return a == Algo::Ppo ? "ppo" : "a2c"; }

std::string to_string(RewardModelKind k) {
  switch (k) {
    case RewardModelKind::None: return "none";
    case RewardModelKind::Static: return "static";
    case RewardModelKind::Adaptive: return "adaptive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

PolicyValueNet PolicyValueNet::init(std::uint64_t seed) {
  Pcg32 rng(seed, 7);
  PolicyValueNet net;
  net.w1 = gaussian_matrix(rng, kHidden, kObsDim, 1.0 / std::sqrt(kObsDim));
  net.b1 = Eigen::VectorXd::Zero(kHidden);
  net.w2 = gaussian_matrix(rng, kHidden, kHidden, 1.0 / std::sqrt(kHidden));
  net.b2 = Eigen::VectorXd::Zero(kHidden);
  // Zero heads: the initial policy is exactly uniform and the initial value
  // exactly zero, so normalized advantages carry no gradient until real
  // reward shows up.
  net.wp = Eigen::MatrixXd::Zero(kNumActions, kHidden);
  net.bp = Eigen::VectorXd::Zero(kNumActions);
  net.wv = Eigen::MatrixXd::Zero(1, kHidden);
  net.bv = Eigen::VectorXd::Zero(1);
  return net;
}

int PolicyValueNet::parameter_count() const {
  return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size() +
                          wp.size() + bp.size() + wv.size() + bv.size());
}

Eigen::VectorXd PolicyValueNet::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  int at = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    std::copy(m.data(), m.data() + m.size(), flat.data() + at);
    at += static_cast<int>(m.size());
  };
  auto putv = [&](const Eigen::VectorXd& v) {
    std::copy(v.data(), v.data() + v.size(), flat.data() + at);
    at += static_cast<int>(v.size());
  };
  put(w1); putv(b1); put(w2); putv(b2); put(wp); putv(bp); put(wv); putv(bv);
  return flat;
}

void PolicyValueNet::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("parameter vector size mismatch");
  int at = 0;
  auto take = [&](Eigen::MatrixXd& m) {
    std::copy(flat.data() + at, flat.data() + at + m.size(), m.data());
    at += static_cast<int>(m.size());
  };
  auto takev = [&](Eigen::VectorXd& v) {
    std::copy(flat.data() + at, flat.data() + at + v.size(), v.data());
    at += static_cast<int>(v.size());
  };
  take(w1); takev(b1); take(w2); takev(b2); take(wp); takev(bp); take(wv); takev(bv);
}

PolicyValueNet::Forward PolicyValueNet::forward(const Eigen::MatrixXd& obs) const {
  Forward f;
  f.x = obs;
  f.h1 = ((w1 * obs).colwise() + b1).array().tanh();
  f.h2 = ((w2 * f.h1).colwise() + b2).array().tanh();
  f.logits = (wp * f.h2).colwise() + bp;
  f.logp = log_softmax_cols(f.logits);
  f.value = ((wv * f.h2).colwise() + bv).transpose();
  return f;
}

Eigen::VectorXd PolicyValueNet::backward(const Forward& f,
                                         const Eigen::MatrixXd& dlogits,
                                         const Eigen::VectorXd& dvalue) const {
  // Heads.
  const Eigen::MatrixXd dwp = dlogits * f.h2.transpose();
  const Eigen::VectorXd dbp = dlogits.rowwise().sum();
  const Eigen::MatrixXd dwv = dvalue.transpose() * f.h2.transpose();
  Eigen::VectorXd dbv(1);
  dbv[0] = dvalue.sum();

  // Trunk.
  Eigen::MatrixXd dh2 = wp.transpose() * dlogits;
  dh2.noalias() += wv.transpose() * dvalue.transpose();
  dh2.array() *= (1.0 - f.h2.array().square());
  const Eigen::MatrixXd dw2 = dh2 * f.h1.transpose();
  const Eigen::VectorXd db2 = dh2.rowwise().sum();

  Eigen::MatrixXd dh1 = w2.transpose() * dh2;
  dh1.array() *= (1.0 - f.h1.array().square());
  const Eigen::MatrixXd dw1 = dh1 * f.x.transpose();
  const Eigen::VectorXd db1 = dh1.rowwise().sum();

  Eigen::VectorXd flat(parameter_count());
  int at = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    std::copy(m.data(), m.data() + m.size(), flat.data() + at);
    at += static_cast<int>(m.size());
  };
  auto putv = [&](const Eigen::VectorXd& v) {
    std::copy(v.data(), v.data() + v.size(), flat.data() + at);
    at += static_cast<int>(v.size());
  };
  put(dw1); putv(db1); put(dw2); putv(db2); put(dwp); putv(dbp); put(dwv); putv(dbv);
  return flat;
}

void save_checkpoint(const std::string& path, const PolicyValueNet& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
    out << name << ',' << m.rows() << ',' << m.cols();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        out << ',' << buf;
      }
    out << '\n';
  };
  dump("w1", net.w1); dump("b1", net.b1); dump("w2", net.w2); dump("b2", net.b2);
  dump("wp", net.wp); dump("bp", net.bp); dump("wv", net.wv); dump("bv", net.bv);
}

PolicyValueNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  PolicyValueNet net = PolicyValueNet::init(0);
  std::string line;
  auto parse = [&](Eigen::Ref<Eigen::MatrixXd> m, const std::string& name) {
    if (!std::getline(in, line))
      throw std::runtime_error("checkpoint truncated at " + name);
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok != name) throw std::runtime_error("checkpoint layer mismatch: " + tok);
    std::getline(ss, tok, ',');
    const long rows = std::stol(tok);
    std::getline(ss, tok, ',');
    const long cols = std::stol(tok);
    if (rows != m.rows() || cols != m.cols())
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(ss, tok, ','))
          throw std::runtime_error("checkpoint row truncated in " + name);
        m(r, c) = std::stod(tok);
      }
  };
  parse(net.w1, "w1"); parse(net.b1, "b1"); parse(net.w2, "w2"); parse(net.b2, "b2");
  parse(net.wp, "wp"); parse(net.bp, "bp"); parse(net.wv, "wv"); parse(net.bv, "bv");
  return net;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(int dim, double lr, double eps)
    : lr_(lr), eps_(eps), m_(Eigen::VectorXd::Zero(dim)),
      v_(Eigen::VectorXd::Zero(dim)) {}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  constexpr double beta1 = 0.9, beta2 = 0.999;
  ++t_;
  m_ = beta1 * m_ + (1.0 - beta1) * grad;
  v_ = beta2 * v_.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

RmsPropOptimizer::RmsPropOptimizer(int dim, double lr, double alpha, double eps)
    : lr_(lr), alpha_(alpha), eps_(eps), sq_(Eigen::VectorXd::Zero(dim)) {}

void RmsPropOptimizer::step(Eigen::VectorXd& params,
                            const Eigen::VectorXd& grad) {
  sq_ = alpha_ * sq_.array().matrix() +
        (1.0 - alpha_) * grad.array().square().matrix();
  params.array() -= lr_ * grad.array() / (sq_.array().sqrt() + eps_);
}

// ---------------------------------------------------------------------------
// Reward model
// ---------------------------------------------------------------------------

logic::GroundAtom variant_goal_atom(doorkey::TaskVariant variant) {
  switch (variant) {
    case doorkey::TaskVariant::ReachGoal:
    case doorkey::TaskVariant::SafeGoalReaching:
      return logic::make_nullary("reach_goal");
    case doorkey::TaskVariant::KeyRetrieval:
      return logic::make_nullary("get_red_key");
    case doorkey::TaskVariant::RedDoorReaching:
      return logic::make_nullary("go_through_door");
  }
  return logic::make_nullary("reach_goal");
}

RewardModel::RewardModel(RewardModelKind kind, const logic::LogicProgram* rules,
                         const doorkey::EnvConfig& env_config,
                         const reward::RewardConfig& config, int workers,
                         double gamma)
    : kind_(kind), config_(config) {
  trackers_.resize(workers);
  if (kind_ == RewardModelKind::None) return;
  if (!rules)
    throw std::invalid_argument("reward shaping needs a rule program");

  DoorKeyEnv env(env_config);
  const auto [obs, symbols] = env.reset();

  const auto moves = planner::clauses_to_moves(*rules);
  const auto goal = variant_goal_atom(env_config.variant);
  auto plans = planner::enumerate_plans(moves, symbols.progress, goal);
  if (plans.empty())
    throw std::runtime_error("no candidate plan reaches the goal atom");

  domain_ = std::make_unique<planner::PlannerDomain>(
      planner::build_planner_domain(*rules));
  scorer_ = std::make_unique<planner::PlanScorer>(*domain_, std::move(plans),
                                                  symbols.progress, goal, gamma);
  scorer_->rescore(symbols);
  best_plan_ = planner::select_best_plan(scorer_->plans());
  for (auto& t : trackers_) {
    t.plan = best_plan_;
    t.reset();
  }
}

void RewardModel::reset_worker(int worker) { trackers_[worker].reset(); }

RewardModel::Shaped RewardModel::shape(int worker, double env_reward,
                                       const planner::SymbolicState& symbols) {
  Shaped out;
  out.env = env_reward;
  if (kind_ == RewardModelKind::None) {
    out.total = env_reward;
    return out;
  }
  auto r = reward::static_reasoner_reward(trackers_[worker], symbols, config_);
  out.reasoner = r.reward;
  if (kind_ == RewardModelKind::Static) {
    out.total = reward::shaped_reward(env_reward, r.reward);
    return out;
  }
  const auto& probs = scorer_->rescore(symbols);
  const double adaptive = reward::adaptive_reward(probs);
  bool warn = false;
  out.total = reward::combined_adaptive_reward(env_reward, r.reward, r.advanced,
                                               adaptive, config_, &warn);
  out.adaptive_term = config_.omega * adaptive - config_.shift;
  dense_warning_ = dense_warning_ || warn;
  return out;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(const doorkey::EnvConfig& env_config, Algo algo,
                 RewardModelKind reward_kind, const TrainerConfig& config,
                 const reward::RewardConfig& reward_config,
                 const logic::LogicProgram* rules)
    : env_config_(env_config),
      algo_(algo),
      config_(config),
      net_(PolicyValueNet::init(config.seed)),
      action_rng_(config.seed, 11),
      shuffle_rng_(config.seed, 13) {
  reward::RewardConfig rc = reward_config;
  rc.total_steps = env_config.max_steps();
  reward_model_ = std::make_unique<RewardModel>(reward_kind, rules, env_config,
                                                rc, config.workers);
  for (int w = 0; w < config_.workers; ++w) {
    envs_.push_back(std::make_unique<DoorKeyEnv>(env_config));
    current_obs_.push_back(envs_.back()->reset().first);
    episode_env_return_.push_back(0.0);
  }
  const int dim = net_.parameter_count();
  adam_ = std::make_unique<AdamOptimizer>(dim, config.lr, config.optim_eps);
  rmsprop_ = std::make_unique<RmsPropOptimizer>(dim, config.lr,
                                                config.optim_alpha,
                                                config.optim_eps);
}

RolloutBuffer Trainer::collect_rollouts() {
  const int W = config_.workers, F = config_.frames_per_proc;
  const int N = W * F;
  RolloutBuffer buf;
  buf.workers = W;
  buf.frames_per_proc = F;
  buf.obs.resize(kObsDim, N);
  buf.actions.resize(N);
  buf.logp.resize(N);
  buf.values.resize(N);
  buf.rewards.resize(N);
  buf.env_rewards.resize(N);
  buf.reasoner_rewards.resize(N);
  buf.adaptive_terms.resize(N);
  buf.dones.assign(N, 0);
  buf.bootstrap.resize(W);
  buf.bootstrap_done.assign(W, 0);

  Eigen::MatrixXd obs_batch(kObsDim, W);
  for (int t = 0; t < F; ++t) {
    for (int w = 0; w < W; ++w) obs_batch.col(w) = current_obs_[w];
    const auto f = net_.forward(obs_batch);
    for (int w = 0; w < W; ++w) {
      // Sample from the softmax head.
      const Eigen::VectorXd p = f.logp.col(w).array().exp();
      double u = action_rng_.next_double();
      int a = kNumActions - 1;
      double acc = 0.0;
      for (int i = 0; i < kNumActions; ++i) {
        acc += p[i];
        if (u < acc) {
          a = i;
          break;
        }
      }
      const int slot = t * W + w;  // frame-major, workers interleaved
      buf.obs.col(slot) = current_obs_[w];
      buf.actions[slot] = a;
      buf.logp[slot] = f.logp(a, w);
      buf.values[slot] = f.value[w];

      auto result = envs_[w]->step(static_cast<Action>(a));
      auto shaped =
          reward_model_->shape(w, result.reward, result.symbols);
      buf.rewards[slot] = shaped.total;
      buf.env_rewards[slot] = shaped.env;
      buf.reasoner_rewards[slot] = shaped.reasoner;
      buf.adaptive_terms[slot] = shaped.adaptive_term;
      buf.dones[slot] = result.done ? 1 : 0;
      episode_env_return_[w] += result.reward;

      if (result.done) {
        recent_returns_.push_back(episode_env_return_[w]);
        while (recent_returns_.size() > 32) recent_returns_.pop_front();
        episode_env_return_[w] = 0.0;
        reward_model_->reset_worker(w);
        current_obs_[w] = envs_[w]->reset().first;
      } else {
        current_obs_[w] = result.observation;
      }
    }
  }
  for (int w = 0; w < W; ++w) obs_batch.col(w) = current_obs_[w];
  const auto f = net_.forward(obs_batch);
  for (int w = 0; w < W; ++w) {
    buf.bootstrap[w] = f.value[w];
    buf.bootstrap_done[w] = buf.dones[(F - 1) * W + w];
  }
  return buf;
}

void Trainer::compute_gae(RolloutBuffer& buf) const {
  const int W = buf.workers, F = buf.frames_per_proc;
  buf.advantages.resize(buf.size());
  buf.returns.resize(buf.size());
  for (int w = 0; w < W; ++w) {
    double gae = 0.0;
    double next_value = buf.bootstrap[w];
    for (int t = F - 1; t >= 0; --t) {
      const int slot = t * W + w;
      const double not_done = buf.dones[slot] ? 0.0 : 1.0;
      const double delta = buf.rewards[slot] +
                           config_.discount * next_value * not_done -
                           buf.values[slot];
      gae = delta + config_.discount * config_.gae_lambda * not_done * gae;
      buf.advantages[slot] = gae;
      buf.returns[slot] = gae + buf.values[slot];
      next_value = buf.values[slot];
    }
  }
  // Normalize advantages to zero mean, unit variance per update.
  const double mean = buf.advantages.mean();
  const double var =
      (buf.advantages.array() - mean).square().sum() / buf.advantages.size();
  buf.advantages = (buf.advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

void Trainer::optimizer_step(const Eigen::VectorXd& grad) {
  Eigen::VectorXd g = grad;
  const double norm = g.norm();
  if (norm > config_.max_grad_norm) g *= config_.max_grad_norm / norm;
  Eigen::VectorXd params = net_.flatten();
  if (algo_ == Algo::Ppo)
    adam_->step(params, g);
  else
    rmsprop_->step(params, g);
  net_.unflatten(params);
}

LossAndGrad policy_loss_and_grad(const PolicyValueNet& net,
                                 const RolloutBuffer& buf,
                                 const std::vector<int>& index,
                                 const TrainerConfig& config, bool clipped) {
  const int B = static_cast<int>(index.size());
  Eigen::MatrixXd obs(kObsDim, B);
  for (int b = 0; b < B; ++b) obs.col(b) = buf.obs.col(index[b]);
  const auto f = net.forward(obs);

  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(kNumActions, B);
  Eigen::VectorXd dvalue(B);
  LossStats stats;

  for (int b = 0; b < B; ++b) {
    const int i = index[b];
    const int a = buf.actions[i];
    const double adv = buf.advantages[i];
    const double lp_new = f.logp(a, b);
    const Eigen::VectorXd p = f.logp.col(b).array().exp();

    // Policy term.
    double dlp;  // d(-surrogate)/d lp_new
    if (clipped) {
      const double ratio = std::exp(lp_new - buf.logp[i]);
      const double clipped_ratio =
          std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
      const double surr1 = ratio * adv;
      const double surr2 = clipped_ratio * adv;
      stats.policy_loss += -std::min(surr1, surr2);
      if (surr1 <= surr2) {
        dlp = -adv * ratio;
      } else {
        const bool interior =
            ratio > 1.0 - config.clip_eps && ratio < 1.0 + config.clip_eps;
        dlp = interior ? -adv * ratio : 0.0;
      }
    } else {
      stats.policy_loss += -lp_new * adv;
      dlp = -adv;
    }
    for (int k = 0; k < kNumActions; ++k)
      dlogits(k, b) += dlp / B * ((k == a ? 1.0 : 0.0) - p[k]);

    // Entropy bonus (loss -= coef * H).
    double H = 0.0;
    for (int k = 0; k < kNumActions; ++k) H -= p[k] * f.logp(k, b);
    stats.entropy += H;
    for (int k = 0; k < kNumActions; ++k)
      dlogits(k, b) += config.entropy_coef / B * p[k] * (f.logp(k, b) + H);

    // Plain MSE value loss, scaled by its coefficient.
    const double verr = f.value[b] - buf.returns[i];
    stats.value_loss += verr * verr;
    dvalue[b] = config.value_loss_coef * 2.0 * verr / B;
  }
  stats.policy_loss /= B;
  stats.value_loss /= B;
  stats.entropy /= B;
  return LossAndGrad{stats, net.backward(f, dlogits, dvalue)};
}

LossStats Trainer::minibatch_update(const RolloutBuffer& buf,
                                    const std::vector<int>& index,
                                    bool clipped) {
  auto lg = policy_loss_and_grad(net_, buf, index, config_, clipped);
  optimizer_step(lg.grad);
  return lg.stats;
}

LossStats Trainer::ppo_update(const RolloutBuffer& buf) {
  const int N = buf.size();
  const int batch = std::min(config_.batch_size, N);
  std::vector<int> order(N);
  LossStats mean;
  int updates = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (int i = 0; i < N; ++i) order[i] = i;
    for (int i = N - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng_.next_below(i + 1)]);
    for (int start = 0; start + batch <= N; start += batch) {
      std::vector<int> index(order.begin() + start,
                             order.begin() + start + batch);
      const auto s = minibatch_update(buf, index, true);
      mean.policy_loss += s.policy_loss;
      mean.value_loss += s.value_loss;
      mean.entropy += s.entropy;
      ++updates;
    }
  }
  mean.policy_loss /= updates;
  mean.value_loss /= updates;
  mean.entropy /= updates;
  return mean;
}

LossStats Trainer::a2c_update(const RolloutBuffer& buf) {
  std::vector<int> all(buf.size());
  for (int i = 0; i < buf.size(); ++i) all[i] = i;
  return minibatch_update(buf, all, false);
}

std::vector<UpdateRecord> Trainer::train() {
  std::vector<UpdateRecord> curve;
  long frames = 0;
  int update = 0;
  while (frames < config_.total_frames) {
    auto buf = collect_rollouts();
    compute_gae(buf);
    const auto stats = algo_ == Algo::Ppo ? ppo_update(buf) : a2c_update(buf);
    frames += buf.size();
    ++update;

    UpdateRecord rec;
    rec.frames = frames;
    rec.update = update;
    if (!recent_returns_.empty()) {
      double lo = recent_returns_[0], hi = recent_returns_[0], sum = 0.0;
      for (double r : recent_returns_) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        sum += r;
      }
      rec.return_mean = sum / recent_returns_.size();
      rec.return_min = lo;
      rec.return_max = hi;
    }
    rec.policy_loss = stats.policy_loss;
    rec.value_loss = stats.value_loss;
    rec.entropy = stats.entropy;
    rec.reasoner_reward_sum = buf.reasoner_rewards.sum();
    if (!std::isfinite(stats.policy_loss) || !std::isfinite(stats.value_loss))
      throw std::runtime_error("non-finite loss at update " +
                               std::to_string(update));
    curve.push_back(rec);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

EvalResult rate_from_successes(const std::vector<bool>& successes) {
  EvalResult out;
  out.episodes = static_cast<int>(successes.size());
  double sum = 0.0;
  for (bool s : successes) sum += s ? 1.0 : 0.0;
  const double p = successes.empty() ? 0.0 : sum / successes.size();
  out.success_rate = 100.0 * p;
  out.stddev = 100.0 * std::sqrt(p * (1.0 - p));
  return out;
}

}  // namespace

EvalResult evaluate_policy(const PolicyValueNet& net,
                           const doorkey::EnvConfig& env_config, int episodes,
                           std::uint64_t seed) {
  Pcg32 rng(seed, 17);
  std::vector<bool> successes;
  DoorKeyEnv env(env_config);
  for (int e = 0; e < episodes; ++e) {
    auto [obs, symbols] = env.reset();
    bool success = doorkey::variant_success(env, env_config.variant);
    while (!env.done()) {
      const auto f = net.forward(obs);
      const Eigen::VectorXd p = f.logp.col(0).array().exp();
      double u = rng.next_double();
      int a = kNumActions - 1;
      double acc = 0.0;
      for (int i = 0; i < kNumActions; ++i) {
        acc += p[i];
        if (u < acc) {
          a = i;
          break;
        }
      }
      auto result = env.step(static_cast<Action>(a));
      obs = result.observation;
      success = success || doorkey::variant_success(env, env_config.variant);
    }
    successes.push_back(success);
  }
  return rate_from_successes(successes);
}

namespace {

bool planner_episode_with(DoorKeyEnv& env, planner::PlanScorer& scorer,
                          doorkey::TaskVariant variant) {
  const auto symbols = env.symbolic_state();
  scorer.rescore(symbols);
  const auto& best = planner::select_best_plan(scorer.plans());

  bool success = doorkey::variant_success(env, variant);
  for (const auto& m : best.moves) {
    const auto r = env.run_primitive(m.action.predicate);
    success = success || doorkey::variant_success(env, variant);
    if (!r.success) return success;
    if (env.done()) break;
  }
  return success || doorkey::variant_success(env, variant);
}

}  // namespace

bool planner_episode(DoorKeyEnv& env, const logic::LogicProgram& rules,
                     doorkey::TaskVariant variant) {
  const auto symbols = env.symbolic_state();
  const auto moves = planner::clauses_to_moves(rules);
  const auto goal = variant_goal_atom(variant);
  auto plans = planner::enumerate_plans(moves, symbols.progress, goal);
  if (plans.empty()) return false;
  const auto domain = planner::build_planner_domain(rules);
  planner::PlanScorer scorer(domain, std::move(plans), symbols.progress, goal);
  return planner_episode_with(env, scorer, variant);
}

EvalResult evaluate_planner(const doorkey::EnvConfig& env_config,
                            const logic::LogicProgram& rules, int episodes) {
  std::vector<bool> successes;
  DoorKeyEnv env(env_config);
  auto [obs, symbols] = env.reset();

  const auto moves = planner::clauses_to_moves(rules);
  const auto goal = variant_goal_atom(env_config.variant);
  auto plans = planner::enumerate_plans(moves, symbols.progress, goal);
  if (plans.empty()) return rate_from_successes(std::vector<bool>(episodes, false));
  const auto domain = planner::build_planner_domain(rules);
  planner::PlanScorer scorer(domain, std::move(plans), symbols.progress, goal);

  for (int e = 0; e < episodes; ++e) {
    env.reset();
    successes.push_back(planner_episode_with(env, scorer, env_config.variant));
  }
  return rate_from_successes(successes);
}

}  // namespace diffplan::rl

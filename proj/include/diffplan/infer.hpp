#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "diffplan/tensorize.hpp"

namespace diffplan::infer {

/// Soft truth values per ground atom; entry 0 pinned to 0, entry 1 pinned
/// to 1, everything in [0, 1].
using Valuation = Eigen::VectorXd;

/// Rule-selection weights, one row per program slot, one column per
/// candidate clause. Row softmax gives the soft selection.
using Weights = Eigen::MatrixXd;

struct InferConfig {
  double gamma = 0.01;  // softor temperature (gamma_soft)
  int steps = 1;        // T reasoning steps (>= 0)
  int slots = 1;        // M program slots (used when initializing weights)
};

/// gamma * log sum_i exp(x_i / gamma), max-shifted. Smooth upper bound of
/// max: max(x) <= softor(x) <= max(x) + gamma*ln(n).
double softor(std::span<const double> values, double gamma);

/// Engine disjunction: like softor but exact zeros act as the identity of
/// "or" and are dropped from the log-sum-exp; an empty active set gives 0.
/// Coincides with softor whenever every input is positive, and keeps crisp
/// false atoms exactly false through any number of reasoning steps.
double softor_active(std::span<const double> values, double gamma);

Eigen::MatrixXd softmax_rows(const Weights& w);

/// M = C weights whose row m selects clause m with a softmax gap large
/// enough to be one-hot to machine precision.
Weights one_hot_weights(int clause_count, double gap = 40.0);

// --- dense stage operations (padded view; test/debug path) ----------------

/// out(j*S + k, l) = v[I[j,k,l]] over the padded dense view.
Eigen::MatrixXd gather(const Valuation& v, const tensorize::ClauseEncoding& enc,
                       int S, int L);

/// b(j, k) = prod_l gathered(j*S + k, l).
Eigen::MatrixXd body_conjunction(const Eigen::MatrixXd& gathered, int G, int S);

/// c[j] = disjunction over substitutions of b(j, k). Padding rows carry a
/// zero product and therefore drop out.
Eigen::VectorXd substitution_disjunction(const Eigen::MatrixXd& bodies,
                                         double gamma);

/// h = softmax_rows(W) * c; r[j] = disjunction over slots of h(m, j).
Eigen::VectorXd weighted_rule_aggregation(const Eigen::MatrixXd& c,
                                          const Weights& w, double gamma);

/// One reasoning step: v'[j] = clamp(merge(r[j], v[j]), 0, 1), false/true
/// entries re-pinned.
Valuation infer_step(const Valuation& v, const tensorize::ProgramEncoding& enc,
                     const Weights& w, const InferConfig& config);

/// T-fold composition of infer_step (production path; sparse grounding rows).
Valuation infer(const Valuation& v0, const tensorize::ProgramEncoding& enc,
                const Weights& w, const InferConfig& config);

inline double query(const Valuation& v, int atom_index) {
  return v[atom_index];
}
double query(const Valuation& v, const logic::GroundAtomTable& table,
             const logic::GroundAtom& atom);

/// Binary cross-entropy with the predicted value clamped to
/// [1e-7, 1 - 1e-7] before the logs.
double bce_loss(double target, double predicted);

Valuation valuation_from_facts(const logic::GroundAtomTable& table,
                               const std::vector<logic::GroundAtom>& facts);

// --- rule-weight learning ---------------------------------------------------

struct TrainTask {
  const tensorize::ProgramEncoding* encoding = nullptr;
  Valuation v0;
  int target_index = 0;
  double target = 1.0;
  int steps = 1;
};

struct LossAndGrad {
  double loss = 0.0;
  double predicted = 0.0;
  Weights grad;
};

/// Exact reverse-mode gradient of bce(target, query(infer(v0, T), target))
/// w.r.t. W through the fixed T-step graph. Clamp saturations take
/// subgradient 0. Throws on non-finite intermediate gradients.
LossAndGrad loss_and_grad(const TrainTask& task, const Weights& w,
                          double gamma);
Weights grad_rule_weights(const TrainTask& task, const Weights& w,
                          double gamma);

struct TrainRecord {
  int step = 0;
  int task_id = 0;
  double loss = 0.0;
};

struct TrainResult {
  Weights weights;
  std::vector<TrainRecord> trace;       // one row per (step, task)
  std::vector<double> mean_losses;      // one per step
  bool diverged = false;
};

/// Plain gradient descent on the mean task loss. Weights start as seeded
/// normal draws with std 0.1. Aborts (diverged = true, trace kept) if the
/// loss goes non-finite. Tasks must agree on clause count; each carries its
/// own encoding and v0.
TrainResult train_rule_weights(const std::vector<TrainTask>& tasks, int slots,
                               double gamma, double lr, int steps,
                               std::uint64_t seed);

}  // namespace diffplan::infer

#include "diffplan/infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diffplan/rng.hpp"

namespace diffplan::infer {

using logic::GroundAtomTable;
using tensorize::ClauseEncoding;
using tensorize::ProgramEncoding;

namespace {

constexpr double kBceEps = 1e-7;

void check_gamma(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("softor temperature must be > 0");
}

double lse(std::span<const double> xs, double gamma) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp((x - m) / gamma);
  return m + gamma * std::log(s);
}

}  // namespace

double softor(std::span<const double> values, double gamma) {
  check_gamma(gamma);
  if (values.empty()) throw std::invalid_argument("softor of empty list");
  return lse(values, gamma);
}

double softor_active(std::span<const double> values, double gamma) {
  check_gamma(gamma);
  double m = 0.0;
  int active = 0;
  for (double x : values) {
    if (x == 0.0) continue;
    ++active;
    m = std::max(m, x);
  }
  if (active == 0) return 0.0;
  double s = 0.0;
  for (double x : values) {
    if (x == 0.0) continue;
    s += std::exp((x - m) / gamma);
  }
  return m + gamma * std::log(s);
}

Eigen::MatrixXd softmax_rows(const Weights& w) {
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (Eigen::Index m = 0; m < w.rows(); ++m) {
    const double shift = w.row(m).maxCoeff();
    Eigen::ArrayXd e = (w.row(m).array() - shift).exp();
    out.row(m) = (e / e.sum()).matrix();
  }
  return out;
}

Weights one_hot_weights(int clause_count, double gap) {
  Weights w = Weights::Zero(clause_count, clause_count);
  for (int m = 0; m < clause_count; ++m) w(m, m) = gap;
  return w;
}

// ---------------------------------------------------------------------------
// Dense stage operations
// ---------------------------------------------------------------------------

Eigen::MatrixXd gather(const Valuation& v, const ClauseEncoding& enc, int S,
                       int L) {
  const int G = enc.num_ground_atoms;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(G) * S, L);
  for (int j = 0; j < G; ++j)
    for (int k = 0; k < S; ++k)
      for (int l = 0; l < L; ++l)
        out(static_cast<Eigen::Index>(j) * S + k, l) = v[enc.dense_entry(j, k, l, S, L)];
  return out;
}

Eigen::MatrixXd body_conjunction(const Eigen::MatrixXd& gathered, int G, int S) {
  Eigen::MatrixXd out(G, S);
  for (int j = 0; j < G; ++j)
    for (int k = 0; k < S; ++k)
      out(j, k) = gathered.row(static_cast<Eigen::Index>(j) * S + k).prod();
  return out;
}

Eigen::VectorXd substitution_disjunction(const Eigen::MatrixXd& bodies,
                                         double gamma) {
  Eigen::VectorXd out(bodies.rows());
  for (Eigen::Index j = 0; j < bodies.rows(); ++j) {
    std::vector<double> row(bodies.row(j).begin(), bodies.row(j).end());
    out[j] = softor_active(row, gamma);
  }
  return out;
}

Eigen::VectorXd weighted_rule_aggregation(const Eigen::MatrixXd& c,
                                          const Weights& w, double gamma) {
  if (w.cols() != c.rows())
    throw std::invalid_argument("weight columns must match clause count");
  const Eigen::MatrixXd h = softmax_rows(w) * c;  // M x G
  Eigen::VectorXd r(c.cols());
  std::vector<double> col(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index m = 0; m < h.rows(); ++m) col[m] = h(m, j);
    r[j] = softor_active(col, gamma);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Production inference (sparse rows) with reverse-mode gradients
// ---------------------------------------------------------------------------

namespace {

struct StepTrace {
  Valuation v;        // valuation entering the step
  Eigen::MatrixXd c;  // C x G clause scores
  Eigen::MatrixXd h;  // M x G slot scores
  Valuation r;        // G merged new-derivation scores
};

Eigen::MatrixXd clause_scores(const Valuation& v, const ProgramEncoding& enc,
                              double gamma) {
  const int G = enc.num_ground_atoms;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(enc.clause_count(), G);
  std::vector<double> active;
  for (int i = 0; i < enc.clause_count(); ++i) {
    const auto& clause = enc.clauses[i];
    for (int j = 2; j < G; ++j) {
      const int begin = clause.row_begin[j], end = clause.row_begin[j + 1];
      if (begin == end) continue;
      active.clear();
      for (int rix = begin; rix < end; ++rix) {
        const int* row = clause.row(rix);
        double b = 1.0;
        for (int l = 0; l < clause.body_width; ++l) {
          b *= v[row[l]];
          if (b == 0.0) break;
        }
        if (b > 0.0) active.push_back(b);
      }
      if (!active.empty()) c(i, j) = lse(active, gamma);
    }
  }
  return c;
}

Valuation merged_step(const Valuation& v, const Eigen::MatrixXd& h,
                      double gamma, Valuation* r_out) {
  const Eigen::Index G = v.size();
  Valuation next(G);
  Valuation r = Valuation::Zero(G);
  std::vector<double> col(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index j = 0; j < G; ++j) {
    for (Eigen::Index m = 0; m < h.rows(); ++m) col[m] = h(m, j);
    r[j] = softor_active(col, gamma);
    const double pair[2] = {r[j], v[j]};
    next[j] = std::min(1.0, softor_active(pair, gamma));
  }
  next[GroundAtomTable::kFalseIndex] = 0.0;
  next[GroundAtomTable::kTrueIndex] = 1.0;
  if (r_out) *r_out = std::move(r);
  return next;
}

std::vector<StepTrace> forward_trace(const Valuation& v0,
                                     const ProgramEncoding& enc,
                                     const Eigen::MatrixXd& wsoft, double gamma,
                                     int steps, Valuation& v_final) {
  std::vector<StepTrace> trace;
  trace.reserve(steps);
  Valuation v = v0;
  v[GroundAtomTable::kFalseIndex] = 0.0;
  v[GroundAtomTable::kTrueIndex] = 1.0;
  for (int t = 0; t < steps; ++t) {
    StepTrace st;
    st.v = v;
    st.c = clause_scores(v, enc, gamma);
    st.h = wsoft * st.c;
    v = merged_step(v, st.h, gamma, &st.r);
    trace.push_back(std::move(st));
  }
  v_final = std::move(v);
  return trace;
}

/// Softmax weights of the active (positive) entries of xs; zeros get 0.
void active_lse_weights(std::span<const double> xs, double gamma,
                        std::span<double> out) {
  double m = 0.0;
  bool any = false;
  for (double x : xs)
    if (x != 0.0) {
      m = any ? std::max(m, x) : x;
      any = true;
    }
  if (!any) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = xs[i] == 0.0 ? 0.0 : std::exp((xs[i] - m) / gamma);
    denom += out[i];
  }
  for (auto& w : out) w /= denom;
}

}  // namespace

Valuation infer_step(const Valuation& v, const ProgramEncoding& enc,
                     const Weights& w, const InferConfig& config) {
  check_gamma(config.gamma);
  if (v.size() != enc.num_ground_atoms)
    throw std::invalid_argument("valuation size does not match encoding");
  const Eigen::MatrixXd c = clause_scores(v, enc, config.gamma);
  const Eigen::MatrixXd h = softmax_rows(w) * c;
  return merged_step(v, h, config.gamma, nullptr);
}

Valuation infer(const Valuation& v0, const ProgramEncoding& enc,
                const Weights& w, const InferConfig& config) {
  check_gamma(config.gamma);
  if (config.steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (v0.size() != enc.num_ground_atoms)
    throw std::invalid_argument("valuation size does not match encoding");
  Valuation v_final;
  forward_trace(v0, enc, softmax_rows(w), config.gamma, config.steps, v_final);
  return v_final;
}

double query(const Valuation& v, const GroundAtomTable& table,
             const logic::GroundAtom& atom) {
  return v[table.index_of(atom)];
}

double bce_loss(double target, double predicted) {
  const double p = std::clamp(predicted, kBceEps, 1.0 - kBceEps);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

Valuation valuation_from_facts(const GroundAtomTable& table,
                               const std::vector<logic::GroundAtom>& facts) {
  Valuation v = Valuation::Zero(table.size());
  v[GroundAtomTable::kTrueIndex] = 1.0;
  for (const auto& f : facts) v[table.index_of(f)] = 1.0;
  return v;
}

LossAndGrad loss_and_grad(const TrainTask& task, const Weights& w,
                          double gamma) {
  check_gamma(gamma);
  const ProgramEncoding& enc = *task.encoding;
  const Eigen::MatrixXd wsoft = softmax_rows(w);
  Valuation v_final;
  const auto trace = forward_trace(task.v0, enc, wsoft, gamma, task.steps, v_final);

  LossAndGrad out;
  out.predicted = v_final[task.target_index];
  out.loss = bce_loss(task.target, out.predicted);
  out.grad = Weights::Zero(w.rows(), w.cols());

  // dL/dp with the bce clamp taking subgradient 0 at saturation.
  Valuation dv = Valuation::Zero(enc.num_ground_atoms);
  const double p = out.predicted;
  if (p > kBceEps && p < 1.0 - kBceEps)
    dv[task.target_index] = -task.target / p + (1.0 - task.target) / (1.0 - p);

  Eigen::MatrixXd dwsoft = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  const int M = static_cast<int>(w.rows());
  std::vector<double> col(M), colw(M);

  for (int t = static_cast<int>(trace.size()) - 1; t >= 0; --t) {
    const StepTrace& st = trace[t];
    const Eigen::Index G = st.v.size();
    Valuation dv_prev = Valuation::Zero(G);
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(M, G);

    for (Eigen::Index j = 2; j < G; ++j) {
      double dz = dv[j];
      if (dz == 0.0) continue;
      const double r = st.r[j], vj = st.v[j];
      const double pair[2] = {r, vj};
      const double z = softor_active(pair, gamma);
      if (z > 1.0) continue;  // clamp saturation: subgradient 0
      double wpair[2];
      active_lse_weights(pair, gamma, wpair);
      dv_prev[j] += dz * wpair[1];
      const double dr = dz * wpair[0];
      if (dr != 0.0 && r != 0.0) {
        for (int m = 0; m < M; ++m) col[m] = st.h(m, j);
        active_lse_weights(col, gamma, colw);
        for (int m = 0; m < M; ++m) dh(m, j) = dr * colw[m];
      }
    }

    // h = wsoft * c  =>  dwsoft += dh * c^T,  dc = wsoft^T * dh.
    dwsoft.noalias() += dh * st.c.transpose();
    Eigen::MatrixXd dc = wsoft.transpose() * dh;  // C x G

    // c(i, j) = active-lse of positive body products; products fan gradients
    // back onto the gathered valuation entries.
    for (int i = 0; i < enc.clause_count(); ++i) {
      const auto& clause = enc.clauses[i];
      for (Eigen::Index j = 2; j < G; ++j) {
        const double dcij = dc(i, j);
        if (dcij == 0.0 || st.c(i, j) == 0.0) continue;
        const int begin = clause.row_begin[j], end = clause.row_begin[j + 1];
        std::vector<double> b(end - begin), bw(end - begin);
        for (int rix = begin; rix < end; ++rix) {
          const int* row = clause.row(rix);
          double prod = 1.0;
          for (int l = 0; l < clause.body_width; ++l) prod *= st.v[row[l]];
          b[rix - begin] = prod;
        }
        active_lse_weights(b, gamma, bw);
        for (int rix = begin; rix < end; ++rix) {
          const double db = dcij * bw[rix - begin];
          if (db == 0.0) continue;
          const int* row = clause.row(rix);
          for (int l = 0; l < clause.body_width; ++l) {
            double others = 1.0;
            for (int l2 = 0; l2 < clause.body_width; ++l2)
              if (l2 != l) others *= st.v[row[l2]];
            dv_prev[row[l]] += db * others;
          }
        }
      }
    }

    dv_prev[GroundAtomTable::kFalseIndex] = 0.0;
    dv_prev[GroundAtomTable::kTrueIndex] = 0.0;
    dv = std::move(dv_prev);
  }

  // Softmax pullback per row: dW = wsoft .* (dwsoft - rowdot(dwsoft, wsoft)).
  for (int m = 0; m < M; ++m) {
    const double dot = dwsoft.row(m).dot(wsoft.row(m));
    out.grad.row(m) =
        (wsoft.row(m).array() * (dwsoft.row(m).array() - dot)).matrix();
  }
  if (!out.grad.allFinite())
    throw std::runtime_error("non-finite rule-weight gradient");
  return out;
}

Weights grad_rule_weights(const TrainTask& task, const Weights& w,
                          double gamma) {
  return loss_and_grad(task, w, gamma).grad;
}

TrainResult train_rule_weights(const std::vector<TrainTask>& tasks, int slots,
                               double gamma, double lr, int steps,
                               std::uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("train_rule_weights: no tasks");
  const int C = tasks[0].encoding->clause_count();
  for (const auto& t : tasks)
    if (t.encoding->clause_count() != C)
      throw std::invalid_argument("tasks disagree on clause count");

  Pcg32 rng(seed);
  Weights w(slots, C);
  for (int m = 0; m < slots; ++m)
    for (int i = 0; i < C; ++i) w(m, i) = 0.1 * rng.next_gaussian();

  TrainResult result;
  for (int step = 0; step < steps; ++step) {
    Weights grad = Weights::Zero(slots, C);
    double mean_loss = 0.0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      auto lg = loss_and_grad(tasks[k], w, gamma);
      result.trace.push_back({step, static_cast<int>(k), lg.loss});
      grad += lg.grad;
      mean_loss += lg.loss;
    }
    grad /= static_cast<double>(tasks.size());
    mean_loss /= static_cast<double>(tasks.size());
    result.mean_losses.push_back(mean_loss);
    if (!std::isfinite(mean_loss)) {
      result.diverged = true;
      result.weights = w;
      return result;
    }
    w -= lr * grad;
  }
  result.weights = std::move(w);
  return result;
}

}  // namespace diffplan::infer

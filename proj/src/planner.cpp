#include "diffplan/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace diffplan::planner {

using logic::Atom;
using logic::GroundAtomTable;
using logic::LogicProgram;
using logic::Term;

std::string to_string(const MoveAtom& m) {
  return "move(" + logic::to_string(m.action) + ", " +
         logic::to_string(m.pre_state) + ", " + logic::to_string(m.post_state) +
         ")";
}

std::string to_string(const Plan& p) {
  std::string out;
  for (const auto& m : p.moves) {
    out += to_string(m);
    out += '\n';
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "probability=%.9g\n", p.probability);
  out += buf;
  return out;
}

std::vector<MoveAtom> clauses_to_moves(const LogicProgram& program) {
  std::vector<MoveAtom> moves;
  for (const auto& c : program.clauses) {
    if (c.body.size() != 2)
      throw std::invalid_argument(
          "clause is not a state/action transition (need exactly 2 body "
          "atoms): " +
          logic::to_string(c));
    moves.push_back(MoveAtom{c.body[1], c.body[0], c.head});
  }
  return moves;
}

namespace {

std::string action_sequence_key(const Plan& p) {
  std::string key;
  for (const auto& m : p.moves) {
    key += logic::to_string(m.action);
    key += '|';
  }
  return key;
}

}  // namespace

std::vector<Plan> enumerate_plans(const std::vector<MoveAtom>& moves,
                                  const GroundAtom& init,
                                  const GroundAtom& goal, int max_len,
                                  bool loop_guard) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  std::vector<MoveAtom> ordered = moves;
  std::sort(ordered.begin(), ordered.end(),
            [](const MoveAtom& a, const MoveAtom& b) {
              return to_string(a) < to_string(b);
            });

  std::vector<Plan> found;
  if (init == goal) found.push_back(Plan{});  // the empty plan

  struct Node {
    std::vector<MoveAtom> chain;
    GroundAtom at;
  };
  std::vector<Node> frontier{{{}, init}};
  for (int len = 1; len <= max_len && !frontier.empty(); ++len) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (const auto& m : ordered) {
        if (!(m.pre_state == node.at)) continue;
        if (loop_guard) {
          bool seen = m.post_state == init;
          for (const auto& done : node.chain)
            if (done.post_state == m.post_state) seen = true;
          if (seen) continue;
        }
        Node child{node.chain, m.post_state};
        child.chain.push_back(m);
        if (m.post_state == goal) {
          found.push_back(Plan{child.chain, 0.0});
          continue;  // reaching the goal ends a plan
        }
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  std::stable_sort(found.begin(), found.end(), [](const Plan& a, const Plan& b) {
    if (a.moves.size() != b.moves.size()) return a.moves.size() < b.moves.size();
    return action_sequence_key(a) < action_sequence_key(b);
  });
  return found;
}

DfsExecution dfs_execute(const std::vector<MoveAtom>& moves,
                         const GroundAtom& init, const GroundAtom& goal,
                         int expansion_budget, bool loop_guard) {
  std::vector<MoveAtom> ordered = moves;
  std::sort(ordered.begin(), ordered.end(),
            [](const MoveAtom& a, const MoveAtom& b) {
              if (!(a.action == b.action))
                return logic::to_string(a.action) < logic::to_string(b.action);
              return to_string(a) < to_string(b);
            });

  DfsExecution result;
  std::vector<std::string> path;
  std::function<bool(const GroundAtom&)> visit = [&](const GroundAtom& state) {
    if (result.expansions >= expansion_budget) return false;
    ++result.expansions;
    if (state == goal) {
      result.reached = true;
      return true;
    }
    path.push_back(logic::to_string(state));
    for (const auto& m : ordered) {
      if (!(m.pre_state == state)) continue;
      if (loop_guard &&
          std::find(path.begin(), path.end(),
                    logic::to_string(m.post_state)) != path.end())
        continue;
      if (visit(m.post_state)) return true;
      if (result.expansions >= expansion_budget) break;
    }
    path.pop_back();
    return false;
  };
  visit(init);
  return result;
}

double subtask_valuation(int distance) {
  if (distance == SymbolicState::kUnreachable) return 0.5;
  if (distance < 0) throw std::invalid_argument("negative subtask distance");
  return 0.5 + 1.0 / (distance + 2.0);
}

// ---------------------------------------------------------------------------
// Meta-program construction
// ---------------------------------------------------------------------------

GroundAtom PlannerDomain::move_atom(const MoveAtom& m) const {
  return GroundAtom{"move",
                    {Term::constant(m.action.predicate),
                     Term::constant(m.pre_state.predicate),
                     Term::constant(m.post_state.predicate)}};
}

Term PlannerDomain::stack_term(const std::vector<MoveAtom>& moves) const {
  Term stack = Term::constant("nil");
  for (const auto& m : moves)
    stack = Term::compound("cons", {Term::constant(m.action.predicate), stack});
  return stack;
}

GroundAtom PlannerDomain::base_atom(const GroundAtom& start,
                                    const GroundAtom& goal) const {
  return GroundAtom{"plan",
                    {Term::constant(start.predicate),
                     Term::constant(start.predicate),
                     Term::constant(goal.predicate), Term::constant("nil")}};
}

GroundAtom PlannerDomain::goal_with_trace(const Plan& plan,
                                          const GroundAtom& start,
                                          const GroundAtom& goal) const {
  return GroundAtom{"plan",
                    {Term::constant(start.predicate),
                     Term::constant(goal.predicate),
                     Term::constant(goal.predicate), stack_term(plan.moves)}};
}

PlannerDomain build_planner_domain(const LogicProgram& flat_rules,
                                   int max_plan_len) {
  PlannerDomain domain;
  domain.max_plan_len = max_plan_len;
  domain.moves = clauses_to_moves(flat_rules);

  // Reify: the flat program's nullary state/action atoms become constants.
  std::vector<std::string> states, actions;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& m : domain.moves) {
    add_unique(states, m.pre_state.predicate);
    add_unique(states, m.post_state.predicate);
    add_unique(actions, m.action.predicate);
  }

  LogicProgram& meta = domain.meta;
  meta.predicates.push_back({"move", 3, {"action", "state", "state"}});
  meta.predicates.push_back({"plan", 4, {"state", "state", "state", "stack"}});
  meta.predicates.push_back({"plan_final", 3, {"state", "state", "stack"}});
  meta.functions.push_back({"cons", 2, "stack", {"action", "stack"}});
  meta.constants.emplace_back("state", states);
  meta.constants.emplace_back("action", actions);
  meta.constants.emplace_back("stack", std::vector<std::string>{"nil"});

  auto var = [](const char* n) { return Term::variable(n); };
  logic::Clause step;
  step.head = Atom{"plan",
                   {var("Start"), var("New"), var("Goal"),
                    Term::compound("cons", {var("Act"), var("Old_stack")})}};
  step.body = {
      Atom{"move", {var("Act"), var("Old"), var("New")}},
      Atom{"condition_met", {var("Old"), var("Current")}},
      Atom{"change_state", {var("Current"), var("New")}},
      Atom{"plan", {var("Start"), var("Current"), var("Goal"), var("Old_stack")}}};
  meta.clauses.push_back(step);

  logic::Clause finish;
  finish.head = Atom{"plan_final", {var("Start"), var("Goal"), var("Move_stack")}};
  finish.body = {
      Atom{"plan", {var("Start"), var("Current"), var("Goal"), var("Move_stack")}},
      Atom{"equal", {var("Current"), var("Goal")}}};
  meta.clauses.push_back(finish);

  for (const auto& m : domain.moves) meta.facts.push_back(domain.move_atom(m));

  logic::GroundingLimits limits;
  limits.max_term_depth = max_plan_len;
  limits.max_substitutions = 1000000;
  limits.max_ground_atoms = 1000000;
  domain.table = logic::enumerate_ground_atoms(meta, limits);
  domain.encoding = tensorize::encode_program(meta, domain.table, limits);
  return domain;
}

infer::Valuation adaptive_initial_valuation(const SymbolicState& state,
                                            const PlannerDomain& domain,
                                            const GroundAtom& goal) {
  infer::Valuation v = infer::Valuation::Zero(domain.table.size());
  v[GroundAtomTable::kTrueIndex] = 1.0;
  for (const auto& m : domain.moves) {
    auto it = state.action_distance.find(m.action.predicate);
    if (it == state.action_distance.end())
      throw std::invalid_argument("unknown action atom: " + m.action.predicate);
    v[domain.table.index_of(domain.move_atom(m))] = subtask_valuation(it->second);
  }
  v[domain.table.index_of(domain.base_atom(state.progress, goal))] = 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// Plan scoring
// ---------------------------------------------------------------------------

PlanScorer::PlanScorer(const PlannerDomain& domain, std::vector<Plan> plans,
                       GroundAtom start, GroundAtom goal, double gamma)
    : domain_(&domain),
      plans_(std::move(plans)),
      start_(std::move(start)),
      goal_(std::move(goal)),
      gamma_(gamma) {
  weights_ = infer::one_hot_weights(domain.encoding.clause_count());
  probabilities_.assign(plans_.size(), 0.0);
  for (const auto& plan : plans_) {
    PerPlan pp;
    pp.steps = static_cast<int>(plan.moves.size());
    const int base = domain.table.index_of(domain.base_atom(start_, goal_));
    const int target =
        domain.table.index_of(domain.goal_with_trace(plan, start_, goal_));
    std::vector<std::uint8_t> support(domain.table.size(), 0);
    support[base] = 1;
    std::vector<std::pair<int, std::string>> moves_orig;
    for (const auto& m : plan.moves) {
      const int idx = domain.table.index_of(domain.move_atom(m));
      moves_orig.emplace_back(idx, m.action.predicate);
      support[idx] = 1;
    }
    std::vector<int> keep = {base, target};
    for (const auto& [idx, action] : moves_orig) keep.push_back(idx);
    pp.compact = tensorize::compact_encoding(
        domain.encoding.restricted_to_support(support), keep);
    pp.base_index = pp.compact.compact_index(base);
    pp.target_index = pp.compact.compact_index(target);
    for (const auto& [idx, action] : moves_orig)
      pp.move_entries.emplace_back(pp.compact.compact_index(idx), action);
    per_plan_.push_back(std::move(pp));
  }
}

const std::vector<double>& PlanScorer::rescore(const SymbolicState& state) {
  std::map<std::string, double> values;
  for (const auto& pp : per_plan_) {
    for (const auto& [idx, action] : pp.move_entries) {
      auto it = state.action_distance.find(action);
      if (it == state.action_distance.end())
        throw std::invalid_argument("unknown action atom: " + action);
      values[action] = subtask_valuation(it->second);
    }
  }
  return rescore_with_values(values);
}

const std::vector<double>& PlanScorer::rescore_with_values(
    const std::map<std::string, double>& action_value) {
  for (std::size_t p = 0; p < per_plan_.size(); ++p) {
    const auto& pp = per_plan_[p];
    infer::Valuation v0 =
        infer::Valuation::Zero(pp.compact.encoding.num_ground_atoms);
    v0[GroundAtomTable::kTrueIndex] = 1.0;
    v0[pp.base_index] = 1.0;
    for (const auto& [idx, action] : pp.move_entries) {
      auto it = action_value.find(action);
      if (it == action_value.end())
        throw std::invalid_argument("unknown action atom: " + action);
      v0[idx] = it->second;
    }
    infer::InferConfig config;
    config.gamma = gamma_;
    config.steps = pp.steps;
    const auto v = infer::infer(v0, pp.compact.encoding, weights_, config);
    probabilities_[p] = v[pp.target_index];
    plans_[p].probability = probabilities_[p];
  }
  return probabilities_;
}

void score_plans(std::vector<Plan>& plans, const SymbolicState& state,
                 const PlannerDomain& domain, const GroundAtom& start,
                 const GroundAtom& goal, double gamma) {
  PlanScorer scorer(domain, plans, start, goal, gamma);
  scorer.rescore(state);
  plans = scorer.plans();
}

const Plan& select_best_plan(const std::vector<Plan>& plans) {
  if (plans.empty()) throw std::invalid_argument("no plans to select from");
  const Plan* best = &plans[0];
  for (const auto& p : plans) {
    if (p.probability > best->probability) {
      best = &p;
    } else if (p.probability == best->probability && &p != best) {
      if (p.moves.size() < best->moves.size() ||
          (p.moves.size() == best->moves.size() &&
           action_sequence_key(p) < action_sequence_key(*best)))
        best = &p;
    }
  }
  return *best;
}

}  // namespace diffplan::planner

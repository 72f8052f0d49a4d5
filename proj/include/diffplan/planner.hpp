#pragma once

#include <map>
#include <string>

#include "diffplan/infer.hpp"

namespace diffplan::planner {

using logic::GroundAtom;

/// STRIPS transition compiled from a two-body-atom clause: the head becomes
/// the post-state, the first body atom the pre-state, the second the action.
struct MoveAtom {
  GroundAtom action;
  GroundAtom pre_state;
  GroundAtom post_state;

  bool operator==(const MoveAtom& o) const {
    return action == o.action && pre_state == o.pre_state &&
           post_state == o.post_state;
  }
};

std::string to_string(const MoveAtom& m);

std::vector<MoveAtom> clauses_to_moves(const logic::LogicProgram& program);

struct Plan {
  std::vector<MoveAtom> moves;
  double probability = 0.0;
};

/// Dump format consumed by the reward model and the `plan` subcommand:
/// one `move(<action>, <pre>, <post>)` line per move, then `probability=`.
std::string to_string(const Plan& p);

/// Every acyclic move chain from init to goal of length <= max_len,
/// shortest first, then lexicographic by action sequence. With the loop
/// guard off, chains may revisit states (still bounded by max_len).
std::vector<Plan> enumerate_plans(const std::vector<MoveAtom>& moves,
                                  const GroundAtom& init,
                                  const GroundAtom& goal, int max_len = 6,
                                  bool loop_guard = true);

struct DfsExecution {
  bool reached = false;
  int expansions = 0;
};

/// Naive depth-first symbolic executor with alphabetical action
/// tie-breaking. Without the loop guard, self-transitions make it spin until
/// the expansion budget runs out.
DfsExecution dfs_execute(const std::vector<MoveAtom>& moves,
                         const GroundAtom& init, const GroundAtom& goal,
                         int expansion_budget, bool loop_guard);

struct SymbolicState {
  GroundAtom progress;               // the single progress atom
  std::vector<GroundAtom> facts;     // door/key ground facts
  std::map<std::string, int> action_distance;  // action name -> cells

  static constexpr int kUnreachable = -1;
};

/// Appendix-style action valuation: 0.5 + 1/(distance + 2); the unreachable
/// sentinel maps to the infinite-distance limit 0.5.
double subtask_valuation(int distance);

/// The reified STRIPS meta-program: states and actions of a flat rule
/// program become constants, each rule becomes a move/3 evidence atom, and
/// two fixed clauses chain moves into plan/4 atoms whose stack term records
/// the action sequence (most recent first).
struct PlannerDomain {
  logic::LogicProgram meta;
  logic::GroundAtomTable table;
  tensorize::ProgramEncoding encoding;
  std::vector<MoveAtom> moves;
  int max_plan_len = 4;

  GroundAtom move_atom(const MoveAtom& m) const;
  /// Stack term for a move sequence: cons(a_n, ... cons(a_1, nil)).
  logic::Term stack_term(const std::vector<MoveAtom>& moves) const;
  /// plan(start, start, goal, nil): the seeded chain base.
  GroundAtom base_atom(const GroundAtom& start, const GroundAtom& goal) const;
  /// plan(start, goal, goal, stack): the goal-with-trace atom of a plan.
  GroundAtom goal_with_trace(const Plan& plan, const GroundAtom& start,
                             const GroundAtom& goal) const;
};

PlannerDomain build_planner_domain(const logic::LogicProgram& flat_rules,
                                   int max_plan_len = 4);

/// Full Appendix-style initial valuation over the meta table: every domain
/// move atom gets its action's subtask valuation, the chain base for the
/// current progress state gets 1, everything else 0. Throws if a domain
/// action is missing from the state's distance map.
infer::Valuation adaptive_initial_valuation(const SymbolicState& state,
                                            const PlannerDomain& domain,
                                            const GroundAtom& goal);

/// Reusable per-plan scorer: probability of plan j = query of its
/// goal-with-trace atom after len(plan_j) reasoning steps, with the plan's
/// own move atoms as the only action evidence. The support-restricted
/// encodings are built once; rescore only refreshes distances.
class PlanScorer {
 public:
  PlanScorer(const PlannerDomain& domain, std::vector<Plan> plans,
             GroundAtom start, GroundAtom goal, double gamma = 0.01);

  /// Refresh move evidence from the state's distances; returns per-plan
  /// probabilities and stores them on the plans.
  const std::vector<double>& rescore(const SymbolicState& state);

  /// Same, but with raw action valuations instead of distances.
  const std::vector<double>& rescore_with_values(
      const std::map<std::string, double>& action_value);

  const std::vector<Plan>& plans() const { return plans_; }
  std::vector<Plan>& plans() { return plans_; }

 private:
  const PlannerDomain* domain_;
  std::vector<Plan> plans_;
  GroundAtom start_, goal_;
  double gamma_;
  struct PerPlan {
    tensorize::CompactEncoding compact;  // support-restricted, re-indexed
    std::vector<std::pair<int, std::string>> move_entries;  // compact index, action
    int base_index = 0;    // compact
    int target_index = 0;  // compact
    int steps = 0;
  };
  std::vector<PerPlan> per_plan_;
  infer::Weights weights_;
  std::vector<double> probabilities_;
};

/// One-shot scoring of candidate plans against a symbolic state.
void score_plans(std::vector<Plan>& plans, const SymbolicState& state,
                 const PlannerDomain& domain, const GroundAtom& start,
                 const GroundAtom& goal, double gamma = 0.01);

/// Argmax by probability; ties broken by shorter plan, then lexicographic
/// action sequence.
const Plan& select_best_plan(const std::vector<Plan>& plans);

}  // namespace diffplan::planner

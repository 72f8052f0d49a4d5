#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "diffplan/planner.hpp"
#include "testutil.hpp"

using namespace diffplan;
using logic::make_nullary;
using planner::MoveAtom;
using planner::Plan;

namespace {

planner::SymbolicState state_with(std::map<std::string, int> distances) {
  planner::SymbolicState s;
  s.progress = make_nullary("initial");
  s.action_distance = std::move(distances);
  return s;
}

/// Independent chain enumerator: plain recursion, no shared code with
/// enumerate_plans. The loop guard forbids revisiting any post-state or the
/// initial state.
void brute_chains(const std::vector<MoveAtom>& moves,
                  const logic::GroundAtom& init, const logic::GroundAtom& at,
                  const logic::GroundAtom& goal, std::vector<MoveAtom>& chain,
                  int max_len, std::vector<std::vector<MoveAtom>>& out) {
  if (at == goal && !chain.empty()) {
    out.push_back(chain);
    return;
  }
  if (static_cast<int>(chain.size()) >= max_len) return;
  for (const auto& m : moves) {
    if (!(m.pre_state == at)) continue;
    bool repeat = m.post_state == init;
    for (const auto& c : chain)
      if (c.post_state == m.post_state) repeat = true;
    if (repeat) continue;
    chain.push_back(m);
    brute_chains(moves, init, m.post_state, goal, chain, max_len, out);
    chain.pop_back();
  }
}

}  // namespace

TEST_CASE("clauses become STRIPS moves (head -> post, body -> pre/action)") {
  const auto p = logic::parse_program(
      "pred get_blue_key/0 []\npred initial/0 []\npred go_blue_key/0 []\n"
      "get_blue_key :- initial, go_blue_key.\n");
  const auto moves = planner::clauses_to_moves(p);
  REQUIRE(moves.size() == 1);
  CHECK(planner::to_string(moves[0]) ==
        "move(go_blue_key, initial, get_blue_key)");
}

TEST_CASE("empty program gives no moves; malformed clause shape throws") {
  CHECK(planner::clauses_to_moves(logic::parse_program("")).empty());
  const auto bad = logic::parse_program(
      "pred a/0 []\npred b/0 []\na :- b.\n");
  CHECK_THROWS_AS(planner::clauses_to_moves(bad), std::invalid_argument);
}

TEST_CASE("the doorkey rules yield 4 moves and exactly 2 plans") {
  const auto p = testutil::load_data_program("doorkey.lp");
  const auto moves = planner::clauses_to_moves(p);
  CHECK(moves.size() == 4);
  const auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                              make_nullary("reach_goal"));
  REQUIRE(plans.size() == 2);
  // Shortest first: the blue-door route, then the key route.
  REQUIRE(plans[0].moves.size() == 2);
  CHECK(plans[0].moves[0].action == make_nullary("go_blue_door"));
  CHECK(plans[0].moves[1].action == make_nullary("go_to_goal"));
  REQUIRE(plans[1].moves.size() == 3);
  CHECK(plans[1].moves[0].action == make_nullary("go_red_key"));
  CHECK(plans[1].moves[1].action == make_nullary("go_open_red_door"));
  CHECK(plans[1].moves[2].action == make_nullary("go_to_goal"));
}

TEST_CASE("goal == init enumerates the empty plan") {
  const auto p = testutil::load_data_program("doorkey.lp");
  const auto moves = planner::clauses_to_moves(p);
  const auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                              make_nullary("initial"));
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].moves.empty());
}

TEST_CASE("the loop guard prunes chains that revisit a state") {
  const auto p = testutil::load_data_program("loop.lp");
  const auto moves = planner::clauses_to_moves(p);
  const auto guarded = planner::enumerate_plans(
      moves, make_nullary("initial"), make_nullary("reach_goal"), 4, true);
  const auto unguarded = planner::enumerate_plans(
      moves, make_nullary("initial"), make_nullary("reach_goal"), 4, false);
  // With the guard: straight through and to the goal.
  REQUIRE(guarded.size() == 1);
  CHECK(guarded[0].moves.size() == 2);
  // Without it, chains spinning on get_through_door show up too.
  CHECK(unguarded.size() > guarded.size());
  bool found_revisit = false;
  for (const auto& plan : unguarded) {
    int through = 0;
    for (const auto& m : plan.moves)
      if (m.post_state == make_nullary("get_through_door")) ++through;
    if (through > 1) found_revisit = true;
  }
  CHECK(found_revisit);
}

TEST_CASE("enumerated plans satisfy the chain invariants (vs brute force)") {
  Pcg32 rng(31);
  const std::vector<std::string> states = {"s0", "s1", "s2", "s3"};
  const std::vector<std::string> actions = {"a0", "a1", "a2"};
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<MoveAtom> moves;
    const int n = 1 + rng.next_below(8);
    for (int i = 0; i < n; ++i) {
      moves.push_back(MoveAtom{
          make_nullary(actions[rng.next_below(actions.size())]),
          make_nullary(states[rng.next_below(states.size())]),
          make_nullary(states[rng.next_below(states.size())])});
    }
    const auto init = make_nullary("s0");
    const auto goal = make_nullary("s3");
    const auto plans = planner::enumerate_plans(moves, init, goal, 6, true);

    for (const auto& plan : plans) {
      REQUIRE(!plan.moves.empty());
      CHECK(plan.moves.front().pre_state == init);
      CHECK(plan.moves.back().post_state == goal);
      for (std::size_t i = 0; i + 1 < plan.moves.size(); ++i)
        CHECK(plan.moves[i].post_state == plan.moves[i + 1].pre_state);
    }

    std::vector<std::vector<MoveAtom>> brute;
    std::vector<MoveAtom> chain;
    brute_chains(moves, init, init, goal, chain, 6, brute);
    CHECK(plans.size() == brute.size());
  }
}

TEST_CASE("naive alphabetical DFS spins on the loop program; the guard saves it") {
  const auto p = testutil::load_data_program("loop.lp");
  const auto moves = planner::clauses_to_moves(p);
  const auto spun = planner::dfs_execute(moves, make_nullary("initial"),
                                         make_nullary("reach_goal"), 100, false);
  CHECK_FALSE(spun.reached);
  CHECK(spun.expansions >= 100);
  const auto saved = planner::dfs_execute(moves, make_nullary("initial"),
                                          make_nullary("reach_goal"), 100, true);
  CHECK(saved.reached);
  CHECK(saved.expansions < 100);
}

TEST_CASE("subtask valuations follow 0.5 + 1/(d+2)") {
  CHECK(planner::subtask_valuation(0) == doctest::Approx(1.0));
  CHECK(planner::subtask_valuation(2) == doctest::Approx(0.75));
  CHECK(planner::subtask_valuation(planner::SymbolicState::kUnreachable) ==
        doctest::Approx(0.5));
  // Range (0.5, 1.0] over finite distances.
  for (int d = 0; d < 200; ++d) {
    CHECK(planner::subtask_valuation(d) > 0.5);
    CHECK(planner::subtask_valuation(d) <= 1.0);
  }
}

TEST_CASE("adaptive initial valuation fills moves, base, and nothing else") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto domain = planner::build_planner_domain(rules);
  auto s = state_with({{"go_red_key", 2},
                       {"go_open_red_door", 7},
                       {"go_blue_door", 0},
                       {"go_to_goal", planner::SymbolicState::kUnreachable}});
  const auto v =
      planner::adaptive_initial_valuation(s, domain, make_nullary("reach_goal"));
  CHECK(v[domain.table.index_of(domain.move_atom(domain.moves[0]))] ==
        doctest::Approx(0.75));
  CHECK(v[domain.table.index_of(
            domain.base_atom(make_nullary("initial"), make_nullary("reach_goal")))] ==
        doctest::Approx(1.0));
  // Everything else zero except the pinned true entry.
  int nonzero = 0;
  for (int j = 2; j < domain.table.size(); ++j)
    if (v[j] != 0.0) ++nonzero;
  CHECK(nonzero == 4 + 1);  // four moves + the base atom

  s.action_distance.erase("go_to_goal");
  CHECK_THROWS_AS(
      planner::adaptive_initial_valuation(s, domain, make_nullary("reach_goal")),
      std::invalid_argument);
}

TEST_CASE("plan scoring: crisp evidence ~1, zeroed action kills its plan") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto domain = planner::build_planner_domain(rules);
  const auto moves = planner::clauses_to_moves(rules);
  auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                        make_nullary("reach_goal"));
  planner::PlanScorer scorer(domain, plans, make_nullary("initial"),
                             make_nullary("reach_goal"));

  // All action atoms at valuation 1.0: every feasible plan scores ~1.
  std::map<std::string, double> crisp{{"go_red_key", 1.0},
                                      {"go_open_red_door", 1.0},
                                      {"go_blue_door", 1.0},
                                      {"go_to_goal", 1.0}};
  for (double p : scorer.rescore_with_values(crisp)) CHECK(p >= 0.99);

  // Zeroing one plan's own action annihilates that plan only.
  auto kill_blue = crisp;
  kill_blue["go_blue_door"] = 0.0;
  const auto probs = scorer.rescore_with_values(kill_blue);
  CHECK(probs[0] <= 0.01);  // the blue-door plan
  CHECK(probs[1] >= 0.99);  // the key route is untouched
}

TEST_CASE("scores multiply along the chain (Appendix-style product)") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto domain = planner::build_planner_domain(rules);
  const auto moves = planner::clauses_to_moves(rules);
  auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                        make_nullary("reach_goal"));
  planner::PlanScorer scorer(domain, plans, make_nullary("initial"),
                             make_nullary("reach_goal"));
  const auto s = state_with({{"go_red_key", 1},
                             {"go_open_red_door", 3},
                             {"go_blue_door", 2},
                             {"go_to_goal", 4}});
  const auto probs = scorer.rescore(s);
  const double blue = planner::subtask_valuation(2) * planner::subtask_valuation(4);
  const double red = planner::subtask_valuation(1) * planner::subtask_valuation(3) *
                     planner::subtask_valuation(4);
  CHECK(probs[0] == doctest::Approx(blue).epsilon(5e-3));
  CHECK(probs[1] == doctest::Approx(red).epsilon(5e-3));
}

TEST_CASE("blue-door plan wins under distances favoring it") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto domain = planner::build_planner_domain(rules);
  const auto moves = planner::clauses_to_moves(rules);
  auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                        make_nullary("reach_goal"));
  planner::score_plans(plans, state_with({{"go_red_key", 5},
                                          {"go_open_red_door", 5},
                                          {"go_blue_door", 2},
                                          {"go_to_goal", 2}}),
                       domain, make_nullary("initial"), make_nullary("reach_goal"));
  CHECK(plans[0].probability > plans[1].probability);
  const auto& best = planner::select_best_plan(plans);
  CHECK(best.moves[0].action == make_nullary("go_blue_door"));
}

TEST_CASE("raising an action's evidence never lowers a plan that uses it") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto domain = planner::build_planner_domain(rules);
  const auto moves = planner::clauses_to_moves(rules);
  auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                        make_nullary("reach_goal"));
  planner::PlanScorer scorer(domain, plans, make_nullary("initial"),
                             make_nullary("reach_goal"));
  std::map<std::string, double> base{{"go_red_key", 0.6},
                                     {"go_open_red_door", 0.7},
                                     {"go_blue_door", 0.55},
                                     {"go_to_goal", 0.8}};
  Pcg32 rng(77);
  auto before = scorer.rescore_with_values(base);
  for (int trial = 0; trial < 20; ++trial) {
    auto bumped = base;
    auto it = bumped.begin();
    std::advance(it, rng.next_below(static_cast<std::uint32_t>(bumped.size())));
    it->second = std::min(1.0, it->second + 0.1 * (1 + rng.next_below(3)));
    const auto after = scorer.rescore_with_values(bumped);
    for (std::size_t p = 0; p < after.size(); ++p)
      CHECK(after[p] >= before[p] - 1e-12);
  }
}

TEST_CASE("best-plan selection: argmax, then shorter, then lexicographic") {
  auto mk = [](std::vector<std::string> actions, double prob) {
    Plan p;
    for (auto& a : actions)
      p.moves.push_back(MoveAtom{make_nullary(a), make_nullary("x"),
                                 make_nullary("y")});
    p.probability = prob;
    return p;
  };
  const Plan only = mk({"a"}, 0.2);
  CHECK(&planner::select_best_plan({only}) != nullptr);

  std::vector<Plan> two = {mk({"a"}, 0.9), mk({"b"}, 0.4)};
  CHECK(planner::select_best_plan(two).moves[0].action == make_nullary("a"));

  std::vector<Plan> tie = {mk({"b", "c"}, 0.5), mk({"a"}, 0.5)};
  CHECK(planner::select_best_plan(tie).moves.size() == 1);

  std::vector<Plan> lex = {mk({"b", "c"}, 0.5), mk({"a", "d"}, 0.5)};
  CHECK(planner::select_best_plan(lex).moves[0].action == make_nullary("a"));

  // Scaling all probabilities by a common positive factor <= 1 keeps the
  // argmax.
  std::vector<Plan> scaled = {mk({"b", "c"}, 0.5 * 0.3), mk({"a"}, 0.45 * 0.3)};
  CHECK(planner::select_best_plan(scaled).moves[0].action ==
        make_nullary("b"));
  CHECK_THROWS(planner::select_best_plan({}));
}

TEST_CASE("plan dump format") {
  const auto rules = testutil::load_data_program("doorkey.lp");
  const auto moves = planner::clauses_to_moves(rules);
  auto plans = planner::enumerate_plans(moves, make_nullary("initial"),
                                        make_nullary("reach_goal"));
  plans[0].probability = 0.8125;
  CHECK(planner::to_string(plans[0]) ==
        "move(go_blue_door, initial, go_through_door)\n"
        "move(go_to_goal, go_through_door, reach_goal)\n"
        "probability=0.8125\n");
}

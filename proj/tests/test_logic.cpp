#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffplan/logic.hpp"
#include "testutil.hpp"

using namespace diffplan;
using logic::GroundAtom;
using logic::Term;

TEST_CASE("terms print canonically and know their depth") {
  const Term t = Term::compound(
      "r", {Term::constant("b"),
            Term::compound("r", {Term::constant("a"), Term::constant("nil")})});
  CHECK(logic::to_string(t) == "r(b,r(a,nil))");
  CHECK(t.depth() == 2);
  CHECK(t.is_ground());
  CHECK_FALSE(Term::variable("X").is_ground());
}

TEST_CASE("parsing the loop program finds 4 clauses, 2 state and 3 action predicates") {
  const auto p = testutil::load_data_program("loop.lp");
  CHECK(p.clauses.size() == 4);
  CHECK(p.state_predicates().size() == 2);
  CHECK(p.action_predicates().size() == 3);
}

TEST_CASE("empty input parses to an empty program") {
  const auto p = logic::parse_program("");
  CHECK(p.clauses.empty());
  CHECK(p.predicates.empty());
  CHECK(p.facts.empty());
}

TEST_CASE("task 1 has 7 edge facts over constants a..h") {
  const auto p = testutil::load_data_program("search_task1.lp");
  int edges = 0;
  for (const auto& f : p.facts)
    if (f.predicate == "edge") ++edges;
  CHECK(edges == 7);
  CHECK(p.constants_of("node")->size() == 8);
}

TEST_CASE("parse errors carry line information") {
  CHECK_THROWS_AS(logic::parse_program("pred p/1 [obj]\nq(a).\n"),
                  logic::ParseError);
  CHECK_THROWS_AS(logic::parse_program("pred p/2 [obj]\n"), logic::ParseError);
  CHECK_THROWS_AS(
      logic::parse_program("pred p/1 [obj]\nconst obj {a}\np(a, a).\n"),
      logic::ParseError);
  CHECK_THROWS_AS(
      logic::parse_program("pred p/1 [obj]\nconst obj {a}\np(b).\n"),
      logic::ParseError);
  CHECK_THROWS_AS(logic::parse_program("pred p/0 []\np :- q.\n"),
                  logic::ParseError);
  try {
    logic::parse_program("pred p/0 []\n\np(.\n");
    CHECK(false);
  } catch (const logic::ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("parse/print round-trip is structural identity") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto rp = testutil::random_program(seed);
    const std::string once = logic::print_program(rp.program);
    const auto reparsed = logic::parse_program(once);
    CHECK(logic::print_program(reparsed) == once);
    CHECK(reparsed.clauses == rp.program.clauses);
  }
  for (const char* name :
       {"doorkey.lp", "doorkey_safe.lp", "loop.lp", "search_task1.lp",
        "search_task2.lp"}) {
    const auto p = testutil::load_data_program(name);
    const std::string once = logic::print_program(p);
    CHECK(logic::print_program(logic::parse_program(once)) == once);
  }
}

TEST_CASE("ground atom table reserves false/true and enumerates deterministically") {
  const auto p = logic::parse_program("pred p/1 [obj]\nconst obj {b, a}\n");
  const auto t = logic::enumerate_ground_atoms(p);
  REQUIRE(t.size() == 4);
  CHECK(logic::to_string(t.atom(0)) == "false");
  CHECK(logic::to_string(t.atom(1)) == "true");
  CHECK(logic::to_string(t.atom(2)) == "p(a)");  // lexicographic constants
  CHECK(logic::to_string(t.atom(3)) == "p(b)");
  CHECK(t.index_of(logic::parse_atom_text("p(b)")) == 3);

  const auto t2 = logic::enumerate_ground_atoms(p);
  for (int i = 0; i < t.size(); ++i)
    CHECK(logic::to_string(t.atom(i)) == logic::to_string(t2.atom(i)));
}

TEST_CASE("program with zero predicates grounds to the two reserved entries") {
  const auto t = logic::enumerate_ground_atoms(logic::parse_program(""));
  CHECK(t.size() == 2);
}

TEST_CASE("task 1 table counts match brute-force universe products") {
  const auto p = testutil::load_data_program("search_task1.lp");
  logic::GroundingLimits limits;
  limits.max_term_depth = 3;
  limits.max_ground_atoms = 200000;
  const auto t = logic::enumerate_ground_atoms(p, limits);

  // Independent count: terms per dtype by direct closure.
  const auto traces = logic::ground_terms_of_dtype(p, "trace", 3);
  const auto frontiers = logic::ground_terms_of_dtype(p, "frontier", 3);
  // nil + 8 + 8^2 + 8^3 nested singleton constructors.
  const std::size_t expect_terms = 1 + 8 + 64 + 512;
  CHECK(traces.size() == expect_terms);
  CHECK(frontiers.size() == expect_terms);
  const std::size_t expect =
      2 + 8 * 8 + 1 * 8 * 1 * expect_terms + expect_terms * 1 * 1 + 1 * 1;
  CHECK(static_cast<std::size_t>(t.size()) == expect);
}

TEST_CASE("ground atom cap raises a resource error") {
  const auto p = testutil::load_data_program("search_task1.lp");
  logic::GroundingLimits limits;
  limits.max_term_depth = 3;
  limits.max_ground_atoms = 100;
  CHECK_THROWS_AS(logic::enumerate_ground_atoms(p, limits),
                  logic::ResourceError);
}

TEST_CASE("built-ins: equality, frontier lists, successor enumeration") {
  const auto p = testutil::load_data_program("search_task1.lp");
  auto atom = [](const std::string& s) { return logic::parse_atom_text(s); };
  CHECK(logic::eval_ground_builtin(atom("equal(reach_goal,reach_goal)"), p));
  CHECK_FALSE(logic::eval_ground_builtin(atom("equal(a,b)"), p));
  CHECK_FALSE(
      logic::eval_ground_builtin(atom("condition_met(get_red_key,initial)"), p));
  CHECK(logic::eval_ground_builtin(atom("change_state(a,b)"), p));
  // succ(a) = [c, b, d] in fact listing order.
  CHECK(logic::eval_ground_builtin(atom("findall(a,k(c,k(b,k(d,nil))))"), p));
  CHECK_FALSE(logic::eval_ground_builtin(atom("findall(a,k(b,k(c,k(d,nil))))"), p));
  // append pops the frontier head and appends successors.
  CHECK(logic::eval_ground_builtin(atom("append(k(c,nil),k(f,nil),k(c,k(f,nil)))"), p));
  CHECK_FALSE(logic::eval_ground_builtin(atom("append(k(c,nil),k(f,nil),k(f,k(c,nil)))"), p));
  CHECK(logic::eval_ground_builtin(atom("equalbfs(h,k(b,nil),h)"), p));
  CHECK(logic::eval_ground_builtin(atom("equalbfs(b,k(h,nil),h)"), p));
  CHECK_FALSE(logic::eval_ground_builtin(atom("equalbfs(b,k(c,nil),h)"), p));
  CHECK_THROWS(logic::eval_ground_builtin(atom("no_such_builtin(a,b)"), p));
}

TEST_CASE("oracle entails the doorkey chain when all actions hold") {
  const auto p = testutil::load_data_program("doorkey.lp");
  std::vector<GroundAtom> facts = {
      logic::make_nullary("initial"), logic::make_nullary("go_red_key"),
      logic::make_nullary("go_open_red_door"), logic::make_nullary("go_blue_door"),
      logic::make_nullary("go_to_goal")};
  const auto entailed = logic::forward_chain_oracle(p, facts, 10);
  CHECK(entailed.count("initial"));
  CHECK(entailed.count("get_red_key"));
  CHECK(entailed.count("go_through_door"));
  CHECK(entailed.count("reach_goal"));
}

TEST_CASE("oracle derives nothing from nothing") {
  const auto p = testutil::load_data_program("doorkey.lp");
  CHECK(logic::forward_chain_oracle(p, {}, 10).empty());
}

TEST_CASE("task 2 oracle reaches plan(a,e) in two steps") {
  const auto p = testutil::load_data_program("search_task2.lp");
  logic::GroundingLimits limits;
  limits.max_term_depth = 3;
  limits.max_substitutions = 200000;
  limits.max_ground_atoms = 200000;
  const auto after1 = logic::forward_chain_oracle(p, p.facts, 1, limits);
  CHECK_FALSE(after1.count("plan(a,e)"));
  const auto after2 = logic::forward_chain_oracle(p, p.facts, 2, limits);
  CHECK(after2.count("plan(a,e)"));
}

TEST_CASE("oracle is monotone in steps") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rp = testutil::random_program(seed);
    std::set<std::string> prev;
    for (int steps = 0; steps <= 4; ++steps) {
      const auto now =
          logic::forward_chain_oracle(rp.program, rp.facts, steps);
      for (const auto& a : prev) CHECK(now.count(a));
      prev = now;
    }
  }
}

TEST_CASE("saturation depth finds the fixpoint") {
  const auto p = testutil::load_data_program("doorkey.lp");
  std::vector<GroundAtom> facts = {
      logic::make_nullary("initial"), logic::make_nullary("go_red_key"),
      logic::make_nullary("go_open_red_door"), logic::make_nullary("go_to_goal")};
  // initial -> get_red_key -> go_through_door -> reach_goal, one per step.
  CHECK(logic::oracle_saturation_depth(p, facts) == 3);
}

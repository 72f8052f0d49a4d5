#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace diffplan::logic {

// ---------------------------------------------------------------------------
// Terms, atoms, clauses
// ---------------------------------------------------------------------------

/// A first-order term: constant, variable (upper-case initial), or compound
/// f(t1,...,tk). Value type, structurally comparable.
struct Term {
  enum class Kind { Constant, Variable, Compound };

  Kind kind = Kind::Constant;
  std::string name;        // constant name, variable name, or functor
  std::vector<Term> args;  // non-empty only for Compound

  static Term constant(std::string n) {
    return Term{Kind::Constant, std::move(n), {}};
  }
  static Term variable(std::string n) {
    return Term{Kind::Variable, std::move(n), {}};
  }
  static Term compound(std::string functor, std::vector<Term> a) {
    return Term{Kind::Compound, std::move(functor), std::move(a)};
  }

  bool is_constant() const { return kind == Kind::Constant; }
  bool is_variable() const { return kind == Kind::Variable; }
  bool is_compound() const { return kind == Kind::Compound; }
  bool is_ground() const;
  /// Constants have depth 0; a compound is one deeper than its deepest arg.
  int depth() const;

  bool operator==(const Term& other) const;
};

std::string to_string(const Term& t);

struct Predicate {
  std::string name;
  int arity = 0;
  std::vector<std::string> arg_dtypes;
};

/// Function symbol declaration: `func r/2 trace [node, trace]` means r builds
/// a `trace` term from a node and a trace.
struct FunctionSym {
  std::string name;
  int arity = 0;
  std::string dtype;  // result dtype
  std::vector<std::string> arg_dtypes;
};

struct Atom {
  std::string predicate;
  std::vector<Term> terms;

  bool is_ground() const;
  bool operator==(const Atom& other) const;
};

/// Atoms with no variables anywhere. Alias only; ground-ness is checked where
/// it matters.
using GroundAtom = Atom;

std::string to_string(const Atom& a);

GroundAtom make_nullary(std::string predicate);

struct Clause {
  Atom head;
  std::vector<Atom> body;  // empty body = fact clause

  bool operator==(const Clause& other) const;
};

std::string to_string(const Clause& c);

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + message),
        line(line),
        column(column) {}
  int line = 0;
  int column = 0;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogicProgram {
  std::vector<Predicate> predicates;  // declaration order
  std::vector<FunctionSym> functions;
  // dtype -> constant names, in declaration order (merged across lines).
  std::vector<std::pair<std::string, std::vector<std::string>>> constants;
  std::vector<Clause> clauses;  // file order
  std::vector<GroundAtom> facts;

  const Predicate* find_predicate(std::string_view name) const;
  const FunctionSym* find_function(std::string_view name, int arity) const;
  const std::vector<std::string>* constants_of(std::string_view dtype) const;
  std::optional<std::string> dtype_of_constant(std::string_view name) const;

  /// Distinct clause-head predicates, in first-appearance order.
  std::vector<std::string> state_predicates() const;
  /// Distinct second-body-atom predicates of two-atom-body clauses.
  std::vector<std::string> action_predicates() const;
};

LogicProgram parse_program(std::string_view text);
std::string print_program(const LogicProgram& p);

/// Parse one standalone atom, e.g. "plan(a,h)". Structure only; no
/// declaration checks.
Atom parse_atom_text(std::string_view text);

// ---------------------------------------------------------------------------
// Built-in predicates (evaluated during grounding, never tabled)
// ---------------------------------------------------------------------------

bool is_builtin(std::string_view predicate);
int builtin_arity(std::string_view predicate);

/// Evaluate a fully ground built-in atom. `findall` consults the program's
/// edge/2 facts (successors in fact listing order).
bool eval_ground_builtin(const GroundAtom& atom, const LogicProgram& program);

/// Cons-list helpers shared by append/findall/equalbfs. A list term is either
/// the constant `nil` or functor(head, tail) with one uniform binary functor.
std::optional<std::vector<Term>> decode_list(const Term& t);
Term encode_list(const std::vector<Term>& items, const std::string& functor);

// ---------------------------------------------------------------------------
// Ground atom table
// ---------------------------------------------------------------------------

struct GroundingLimits {
  std::size_t max_ground_atoms = 100000;
  std::size_t max_substitutions = 10000;
  int max_term_depth = 2;
};

/// Bijection between ground atoms and indices. Index 0 is reserved for the
/// always-false atom, index 1 for the always-true atom; real atoms start at 2.
class GroundAtomTable {
 public:
  static constexpr int kFalseIndex = 0;
  static constexpr int kTrueIndex = 1;

  GroundAtomTable();

  int size() const { return static_cast<int>(atoms_.size()); }
  const GroundAtom& atom(int index) const { return atoms_.at(index); }
  int index_of(const GroundAtom& a) const;  // throws std::out_of_range
  std::optional<int> try_index(const GroundAtom& a) const;
  void push(GroundAtom a);

 private:
  std::vector<GroundAtom> atoms_;
  std::unordered_map<std::string, int> index_;
};

/// Per-dtype universe of ground terms: declared constants (sorted by name)
/// followed by compound terms up to `max_term_depth`, ordered by canonical
/// text. Deterministic for a given program.
std::vector<Term> ground_terms_of_dtype(const LogicProgram& program,
                                        std::string_view dtype,
                                        int max_term_depth);

GroundAtomTable enumerate_ground_atoms(const LogicProgram& program,
                                       const GroundingLimits& limits = {});

// ---------------------------------------------------------------------------
// Substitutions and clause grounding (shared by oracle and tensor encoder)
// ---------------------------------------------------------------------------

using Substitution = std::map<std::string, Term>;

Term substitute(const Term& t, const Substitution& binding);
Atom substitute(const Atom& a, const Substitution& binding);

/// Structural match of a pattern atom against a ground atom, extending
/// `binding`. Returns false (binding possibly half-extended) on mismatch.
bool match_atom(const Atom& pattern, const GroundAtom& ground,
                Substitution& binding);

/// Lazily computed per-dtype term universes, shared across the many
/// grounding calls an encoder makes against one program.
class TermUniverses {
 public:
  TermUniverses(const LogicProgram& program, int max_term_depth)
      : program_(&program), depth_(max_term_depth) {}
  const std::vector<Term>& of(const std::string& dtype) const;

 private:
  const LogicProgram* program_;
  int depth_;
  mutable std::map<std::string, std::vector<Term>> cache_;
};

/// All ground bindings of the clause's variables that satisfy its built-ins,
/// optionally extending a partial binding. Variables typed by non-built-in
/// positions enumerate their dtype universe; variables appearing only inside
/// built-ins must be determined by built-in propagation (findall computes
/// successor lists, append splits/joins them, equal binds either side).
/// Deterministic order. Throws ResourceError past limits.max_substitutions.
std::vector<Substitution> ground_clause_substitutions(
    const Clause& clause, const LogicProgram& program,
    const GroundingLimits& limits, const Substitution& pre_bound = {},
    const TermUniverses* universes = nullptr);

/// Least fixed point of immediate-consequence application, truncated at
/// max_steps. Returned as canonical atom strings. Grounding is done by naive
/// substitution over the AST; this is the reference oracle and shares nothing
/// with the tensor encoding path.
std::set<std::string> forward_chain_oracle(const LogicProgram& program,
                                           const std::vector<GroundAtom>& facts,
                                           int max_steps,
                                           const GroundingLimits& limits = {});

/// Number of immediate-consequence steps until the oracle saturates.
int oracle_saturation_depth(const LogicProgram& program,
                            const std::vector<GroundAtom>& facts,
                            const GroundingLimits& limits = {});

}  // namespace diffplan::logic

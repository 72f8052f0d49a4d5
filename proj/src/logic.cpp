#include "diffplan/logic.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace diffplan::logic {

// ---------------------------------------------------------------------------
// Terms and atoms
// ---------------------------------------------------------------------------

bool Term::is_ground() const {
  if (kind == Kind::Variable) return false;
  for (const auto& a : args)
    if (!a.is_ground()) return false;
  return true;
}

int Term::depth() const {
  if (kind != Kind::Compound) return 0;
  int d = 0;
  for (const auto& a : args) d = std::max(d, a.depth());
  return d + 1;
}

bool Term::operator==(const Term& other) const {
  return kind == other.kind && name == other.name && args == other.args;
}

std::string to_string(const Term& t) {
  if (!t.is_compound()) return t.name;
  std::string out = t.name;
  out += '(';
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) out += ',';
    out += to_string(t.args[i]);
  }
  out += ')';
  return out;
}

bool Atom::is_ground() const {
  for (const auto& t : terms)
    if (!t.is_ground()) return false;
  return true;
}

bool Atom::operator==(const Atom& other) const {
  return predicate == other.predicate && terms == other.terms;
}

std::string to_string(const Atom& a) {
  if (a.terms.empty()) return a.predicate;
  std::string out = a.predicate;
  out += '(';
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (i) out += ',';
    out += to_string(a.terms[i]);
  }
  out += ')';
  return out;
}

GroundAtom make_nullary(std::string predicate) {
  return GroundAtom{std::move(predicate), {}};
}

bool Clause::operator==(const Clause& other) const {
  return head == other.head && body == other.body;
}

std::string to_string(const Clause& c) {
  std::string out = to_string(c.head);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ", ";
      out += to_string(c.body[i]);
    }
  }
  out += '.';
  return out;
}

// ---------------------------------------------------------------------------
// Program lookups
// ---------------------------------------------------------------------------

const Predicate* LogicProgram::find_predicate(std::string_view name) const {
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

const FunctionSym* LogicProgram::find_function(std::string_view name,
                                               int arity) const {
  for (const auto& f : functions)
    if (f.name == name && f.arity == arity) return &f;
  return nullptr;
}

const std::vector<std::string>* LogicProgram::constants_of(
    std::string_view dtype) const {
  for (const auto& [dt, names] : constants)
    if (dt == dtype) return &names;
  return nullptr;
}

std::optional<std::string> LogicProgram::dtype_of_constant(
    std::string_view name) const {
  for (const auto& [dt, names] : constants)
    for (const auto& n : names)
      if (n == name) return dt;
  return std::nullopt;
}

std::vector<std::string> LogicProgram::state_predicates() const {
  std::vector<std::string> out;
  for (const auto& c : clauses)
    if (std::find(out.begin(), out.end(), c.head.predicate) == out.end())
      out.push_back(c.head.predicate);
  return out;
}

std::vector<std::string> LogicProgram::action_predicates() const {
  std::vector<std::string> out;
  for (const auto& c : clauses) {
    if (c.body.size() != 2) continue;
    const auto& name = c.body[1].predicate;
    if (std::find(out.begin(), out.end(), name) == out.end())
      out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kKeywords[] = {"pred", "func", "const"};

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords)
    if (s == k) return true;
  return false;
}

bool is_reserved_predicate(std::string_view s) {
  return s == "true" || s == "false";
}

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;

  void skip_space() {
    while (pos < text.size() &&
           (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n')) {
      if (text[pos] == '\n') ++line;
      ++pos;
    }
  }
  bool done() {
    skip_space();
    return pos >= text.size();
  }
  char peek() {
    skip_space();
    return pos < text.size() ? text[pos] : '\0';
  }
  int column() const {
    std::size_t start = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    return static_cast<int>(pos - (start == std::string_view::npos ? 0 : start + 1)) + 1;
  }
  [[noreturn]] void fail(const std::string& message) {
    throw ParseError(message, line, column());
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  bool accept(std::string_view s) {
    skip_space();
    if (text.substr(pos, s.size()) != s) return false;
    pos += s.size();
    return true;
  }
  std::string ident() {
    skip_space();
    if (pos >= text.size() || !(std::islower(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      fail("expected identifier");
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
  std::string name_token() {  // identifier or variable
    skip_space();
    if (pos >= text.size() || !(std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      fail("expected name");
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
  int integer() {
    skip_space();
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      fail("expected integer");
    int v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
      v = v * 10 + (text[pos++] - '0');
    return v;
  }
};

Term parse_term(Cursor& c) {
  const std::string name = c.name_token();
  const bool upper = std::isupper(static_cast<unsigned char>(name[0])) != 0;
  if (c.accept('(')) {
    if (upper) c.fail("variable '" + name + "' cannot take arguments");
    std::vector<Term> args;
    args.push_back(parse_term(c));
    while (c.accept(',')) args.push_back(parse_term(c));
    c.expect(')');
    return Term::compound(name, std::move(args));
  }
  return upper ? Term::variable(name) : Term::constant(name);
}

Atom parse_atom(Cursor& c) {
  const std::string name = c.ident();
  if (is_keyword(name)) c.fail("keyword '" + name + "' cannot start an atom");
  Atom a{name, {}};
  if (c.accept('(')) {
    a.terms.push_back(parse_term(c));
    while (c.accept(',')) a.terms.push_back(parse_term(c));
    c.expect(')');
  }
  return a;
}

std::vector<std::string> parse_name_list(Cursor& c, char open, char close) {
  std::vector<std::string> out;
  c.expect(open);
  if (c.peek() != close) {
    out.push_back(c.ident());
    while (c.accept(',')) out.push_back(c.ident());
  }
  c.expect(close);
  return out;
}

struct Validator {
  const LogicProgram& program;
  int line;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line, 1);
  }

  void check_term(const Term& t, const std::string& dtype,
                  std::map<std::string, std::string>& var_dtypes) const {
    switch (t.kind) {
      case Term::Kind::Constant: {
        if (dtype.empty()) {  // built-in position: existence in any dtype
          if (!program.dtype_of_constant(t.name))
            fail("undeclared constant '" + t.name + "'");
          break;
        }
        const auto* members = program.constants_of(dtype);
        if (!members || std::find(members->begin(), members->end(), t.name) ==
                            members->end())
          fail("constant '" + t.name + "' is not declared in dtype " + dtype);
        break;
      }
      case Term::Kind::Variable: {
        if (dtype.empty()) break;  // built-in position, no constraint
        auto [it, inserted] = var_dtypes.emplace(t.name, dtype);
        if (!inserted && it->second != dtype)
          fail("variable " + t.name + " used with dtypes " + it->second +
               " and " + dtype);
        break;
      }
      case Term::Kind::Compound: {
        const auto* f = program.find_function(t.name, static_cast<int>(t.args.size()));
        if (!f)
          fail("undeclared function '" + t.name + "/" +
               std::to_string(t.args.size()) + "'");
        if (!dtype.empty() && f->dtype != dtype)
          fail("function '" + t.name + "' builds dtype " + f->dtype +
               ", expected " + dtype);
        for (std::size_t i = 0; i < t.args.size(); ++i)
          check_term(t.args[i], f->arg_dtypes[i], var_dtypes);
        break;
      }
    }
  }

  void check_atom(const Atom& a,
                  std::map<std::string, std::string>& var_dtypes) const {
    if (is_builtin(a.predicate)) {
      if (static_cast<int>(a.terms.size()) != builtin_arity(a.predicate))
        fail("built-in '" + a.predicate + "' expects arity " +
             std::to_string(builtin_arity(a.predicate)));
      for (const auto& t : a.terms) check_term(t, "", var_dtypes);
      return;
    }
    const auto* p = program.find_predicate(a.predicate);
    if (!p) fail("undeclared predicate '" + a.predicate + "'");
    if (p->arity != static_cast<int>(a.terms.size()))
      fail("predicate '" + a.predicate + "' expects arity " +
           std::to_string(p->arity) + ", got " + std::to_string(a.terms.size()));
    for (std::size_t i = 0; i < a.terms.size(); ++i)
      check_term(a.terms[i], p->arg_dtypes[i], var_dtypes);
  }
};

}  // namespace

LogicProgram parse_program(std::string_view text) {
  LogicProgram prog;
  struct Pending {
    Clause clause;
    bool is_fact;
    int line;
  };
  std::vector<Pending> pending;

  std::size_t pos = 0;
  int line_no = 0;
  std::string statement;
  int statement_line = 0;

  auto handle_statement = [&]() {
    Cursor c{statement, 0, statement_line};
    if (c.done()) return;
    if (c.accept("pred ") || c.accept("pred\t")) {
      Predicate p;
      p.name = c.ident();
      if (is_reserved_predicate(p.name) || is_builtin(p.name))
        c.fail("predicate name '" + p.name + "' is reserved");
      if (prog.find_predicate(p.name))
        c.fail("duplicate predicate '" + p.name + "'");
      c.expect('/');
      p.arity = c.integer();
      p.arg_dtypes = parse_name_list(c, '[', ']');
      if (static_cast<int>(p.arg_dtypes.size()) != p.arity)
        c.fail("arity/dtype mismatch for predicate '" + p.name + "'");
      if (!c.done()) c.fail("trailing input after predicate declaration");
      prog.predicates.push_back(std::move(p));
      return;
    }
    if (c.accept("func ") || c.accept("func\t")) {
      FunctionSym f;
      f.name = c.ident();
      c.expect('/');
      f.arity = c.integer();
      f.dtype = c.ident();
      f.arg_dtypes = parse_name_list(c, '[', ']');
      if (static_cast<int>(f.arg_dtypes.size()) != f.arity || f.arity < 1)
        c.fail("arity/dtype mismatch for function '" + f.name + "'");
      if (prog.find_function(f.name, f.arity))
        c.fail("duplicate function '" + f.name + "'");
      if (!c.done()) c.fail("trailing input after function declaration");
      prog.functions.push_back(std::move(f));
      return;
    }
    if (c.accept("const ") || c.accept("const\t")) {
      const std::string dtype = c.ident();
      auto names = parse_name_list(c, '{', '}');
      if (!c.done()) c.fail("trailing input after constant declaration");
      // A constant may belong to several dtypes (a graph node can double as
      // the declared start), but not twice to the same one.
      if (const auto* existing = prog.constants_of(dtype)) {
        for (const auto& n : names)
          if (std::find(existing->begin(), existing->end(), n) != existing->end())
            c.fail("constant '" + n + "' already declared in dtype " + dtype);
      }
      for (auto& [dt, list] : prog.constants) {
        if (dt == dtype) {
          list.insert(list.end(), names.begin(), names.end());
          return;
        }
      }
      prog.constants.emplace_back(dtype, std::move(names));
      return;
    }
    // One or more clauses/facts ('.'-terminated, several per line allowed).
    while (!c.done()) {
      Clause cl;
      cl.head = parse_atom(c);
      bool is_fact = true;
      if (c.accept(":-")) {
        is_fact = false;
        cl.body.push_back(parse_atom(c));
        while (c.accept(',')) cl.body.push_back(parse_atom(c));
      }
      c.expect('.');
      pending.push_back({std::move(cl), is_fact, statement_line});
    }
  };

  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(pos, eol - pos);
    ++line_no;
    if (auto cut = raw.find('%'); cut != std::string_view::npos)
      raw = raw.substr(0, cut);
    // Trim trailing whitespace.
    while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\t' || raw.back() == '\r'))
      raw.remove_suffix(1);
    std::string_view trimmed = raw;
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t'))
      trimmed.remove_prefix(1);
    if (!trimmed.empty()) {
      if (statement.empty()) statement_line = line_no;
      statement += std::string(raw);
      statement += ' ';
      // Declarations are single-line; clause text accumulates until a '.'.
      const bool declaration = trimmed.starts_with("pred ") ||
                               trimmed.starts_with("func ") ||
                               trimmed.starts_with("const ");
      if (declaration || trimmed.ends_with(".")) {
        handle_statement();
        statement.clear();
      }
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  if (!statement.empty()) {
    Cursor c{statement, statement.size(), statement_line};
    c.fail("unterminated clause (missing '.')");
  }

  // Validate clause/fact bodies now that all declarations are known.
  for (auto& p : pending) {
    Validator v{prog, p.line};
    std::map<std::string, std::string> var_dtypes;
    v.check_atom(p.clause.head, var_dtypes);
    for (const auto& b : p.clause.body) v.check_atom(b, var_dtypes);
    if (p.is_fact) {
      if (is_builtin(p.clause.head.predicate))
        v.fail("built-in '" + p.clause.head.predicate + "' cannot be a fact");
      if (!p.clause.head.is_ground())
        v.fail("fact '" + to_string(p.clause.head) + "' is not ground");
      prog.facts.push_back(std::move(p.clause.head));
    } else {
      if (is_builtin(p.clause.head.predicate))
        v.fail("built-in '" + p.clause.head.predicate + "' cannot be a clause head");
      prog.clauses.push_back(std::move(p.clause));
    }
  }
  return prog;
}

Atom parse_atom_text(std::string_view text) {
  Cursor c{text, 0, 1};
  Atom a = parse_atom(c);
  if (!c.done()) c.fail("trailing input after atom");
  return a;
}

std::string print_program(const LogicProgram& p) {
  std::ostringstream out;
  for (const auto& pr : p.predicates) {
    out << "pred " << pr.name << "/" << pr.arity << " [";
    for (std::size_t i = 0; i < pr.arg_dtypes.size(); ++i) {
      if (i) out << ", ";
      out << pr.arg_dtypes[i];
    }
    out << "]\n";
  }
  for (const auto& f : p.functions) {
    out << "func " << f.name << "/" << f.arity << " " << f.dtype << " [";
    for (std::size_t i = 0; i < f.arg_dtypes.size(); ++i) {
      if (i) out << ", ";
      out << f.arg_dtypes[i];
    }
    out << "]\n";
  }
  for (const auto& [dtype, names] : p.constants) {
    out << "const " << dtype << " {";
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out << ", ";
      out << names[i];
    }
    out << "}\n";
  }
  for (const auto& c : p.clauses) out << to_string(c) << "\n";
  for (const auto& f : p.facts) out << to_string(f) << ".\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Built-ins
// ---------------------------------------------------------------------------

bool is_builtin(std::string_view predicate) {
  return predicate == "equal" || predicate == "condition_met" ||
         predicate == "change_state" || predicate == "equalbfs" ||
         predicate == "findall" || predicate == "append";
}

int builtin_arity(std::string_view predicate) {
  if (predicate == "equal" || predicate == "condition_met" ||
      predicate == "change_state" || predicate == "findall")
    return 2;
  if (predicate == "equalbfs" || predicate == "append") return 3;
  throw std::invalid_argument("unregistered built-in: " + std::string(predicate));
}

std::optional<std::vector<Term>> decode_list(const Term& t) {
  std::vector<Term> items;
  const Term* cur = &t;
  std::string functor;
  while (true) {
    if (cur->is_constant() && cur->name == "nil") return items;
    if (!cur->is_compound() || cur->args.size() != 2) return std::nullopt;
    if (functor.empty())
      functor = cur->name;
    else if (cur->name != functor)
      return std::nullopt;
    items.push_back(cur->args[0]);
    cur = &cur->args[1];
  }
}

Term encode_list(const std::vector<Term>& items, const std::string& functor) {
  Term out = Term::constant("nil");
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    out = Term::compound(functor, {*it, out});
  return out;
}

namespace {

/// Successors of `node` per the program's edge/2 facts, in listing order.
std::vector<Term> edge_successors(const Term& node, const LogicProgram& program) {
  std::vector<Term> out;
  for (const auto& f : program.facts)
    if (f.predicate == "edge" && f.terms.size() == 2 && f.terms[0] == node)
      out.push_back(f.terms[1]);
  return out;
}

}  // namespace

bool eval_ground_builtin(const GroundAtom& atom, const LogicProgram& program) {
  const auto& p = atom.predicate;
  if (p == "equal" || p == "condition_met") return atom.terms[0] == atom.terms[1];
  if (p == "change_state") return true;  // effect bookkeeping, no constraint
  if (p == "equalbfs") {
    if (atom.terms[2] == atom.terms[0]) return true;
    auto list = decode_list(atom.terms[1]);
    if (!list) return false;
    for (const auto& item : *list)
      if (item == atom.terms[2]) return true;
    return false;
  }
  if (p == "findall") {
    auto list = decode_list(atom.terms[1]);
    if (!list) return false;
    return *list == edge_successors(atom.terms[0], program);
  }
  if (p == "append") {
    auto a = decode_list(atom.terms[0]);
    auto b = decode_list(atom.terms[1]);
    auto c = decode_list(atom.terms[2]);
    if (!a || !b || !c) return false;
    if (a->size() + b->size() != c->size()) return false;
    std::vector<Term> cat = *a;
    cat.insert(cat.end(), b->begin(), b->end());
    return cat == *c;
  }
  throw std::invalid_argument("unregistered built-in: " + p);
}

// ---------------------------------------------------------------------------
// Ground atom table
// ---------------------------------------------------------------------------

GroundAtomTable::GroundAtomTable() {
  push(make_nullary("false"));
  push(make_nullary("true"));
}

int GroundAtomTable::index_of(const GroundAtom& a) const {
  auto it = index_.find(to_string(a));
  if (it == index_.end())
    throw std::out_of_range("atom not in table: " + to_string(a));
  return it->second;
}

std::optional<int> GroundAtomTable::try_index(const GroundAtom& a) const {
  auto it = index_.find(to_string(a));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void GroundAtomTable::push(GroundAtom a) {
  index_.emplace(to_string(a), static_cast<int>(atoms_.size()));
  atoms_.push_back(std::move(a));
}

std::vector<Term> ground_terms_of_dtype(const LogicProgram& program,
                                        std::string_view dtype,
                                        int max_term_depth) {
  std::vector<Term> universe;
  if (const auto* consts = program.constants_of(dtype)) {
    std::vector<std::string> sorted = *consts;
    std::sort(sorted.begin(), sorted.end());
    for (auto& n : sorted) universe.push_back(Term::constant(n));
  }
  // Grow compounds layer by layer until no new term fits under the depth cap.
  std::set<std::string> seen;
  for (const auto& t : universe) seen.insert(to_string(t));
  std::map<std::string, std::vector<Term>> by_dtype;
  by_dtype[std::string(dtype)] = universe;
  auto universe_of = [&](const std::string& dt) -> std::vector<Term>& {
    auto it = by_dtype.find(dt);
    if (it != by_dtype.end()) return it->second;
    auto& slot = by_dtype[dt];
    if (const auto* consts = program.constants_of(dt)) {
      std::vector<std::string> sorted = *consts;
      std::sort(sorted.begin(), sorted.end());
      for (auto& n : sorted) slot.push_back(Term::constant(n));
    }
    return slot;
  };

  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& f : program.functions) {
      // All dtypes' universes grow together; only `dtype`'s result is kept in
      // the output, but recursive constructors need the others too.
      std::vector<std::vector<Term>*> arg_universes;
      for (const auto& dt : f.arg_dtypes) arg_universes.push_back(&universe_of(dt));
      std::vector<std::size_t> idx(f.arg_dtypes.size(), 0);
      bool any_empty = false;
      for (auto* u : arg_universes)
        if (u->empty()) any_empty = true;
      if (any_empty) continue;
      // Snapshot sizes; newly added terms join on the next sweep.
      std::vector<std::size_t> sizes;
      for (auto* u : arg_universes) sizes.push_back(u->size());
      while (true) {
        std::vector<Term> args;
        for (std::size_t i = 0; i < idx.size(); ++i)
          args.push_back((*arg_universes[i])[idx[i]]);
        Term t = Term::compound(f.name, std::move(args));
        if (t.depth() <= max_term_depth) {
          auto key = to_string(t);
          if (seen.insert(key).second) {
            universe_of(f.dtype).push_back(t);
            grew = true;
          }
        }
        // Odometer.
        std::size_t i = 0;
        for (; i < idx.size(); ++i) {
          if (++idx[i] < sizes[i]) break;
          idx[i] = 0;
        }
        if (i == idx.size()) break;
      }
    }
  }
  auto out = by_dtype[std::string(dtype)];
  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) {
    return to_string(a) < to_string(b);
  });
  return out;
}

GroundAtomTable enumerate_ground_atoms(const LogicProgram& program,
                                       const GroundingLimits& limits) {
  GroundAtomTable table;
  std::map<std::string, std::vector<Term>> cache;
  auto universe = [&](const std::string& dtype) -> const std::vector<Term>& {
    auto it = cache.find(dtype);
    if (it == cache.end())
      it = cache.emplace(dtype, ground_terms_of_dtype(program, dtype,
                                                      limits.max_term_depth))
               .first;
    return it->second;
  };

  for (const auto& p : program.predicates) {
    if (p.arity == 0) {
      if (static_cast<std::size_t>(table.size()) >= limits.max_ground_atoms)
        throw ResourceError("ground atom cap exceeded (" +
                            std::to_string(limits.max_ground_atoms) + ")");
      table.push(make_nullary(p.name));
      continue;
    }
    std::vector<const std::vector<Term>*> arg_universes;
    bool empty = false;
    for (const auto& dt : p.arg_dtypes) {
      arg_universes.push_back(&universe(dt));
      if (arg_universes.back()->empty()) empty = true;
    }
    if (empty) continue;
    std::vector<std::size_t> idx(p.arity, 0);
    while (true) {
      GroundAtom a{p.name, {}};
      for (int i = 0; i < p.arity; ++i)
        a.terms.push_back((*arg_universes[i])[idx[i]]);
      if (static_cast<std::size_t>(table.size()) >= limits.max_ground_atoms)
        throw ResourceError("ground atom cap exceeded (" +
                            std::to_string(limits.max_ground_atoms) + ")");
      table.push(std::move(a));
      // Row-major odometer, leftmost argument most significant.
      int i = p.arity - 1;
      for (; i >= 0; --i) {
        if (++idx[i] < arg_universes[i]->size()) break;
        idx[i] = 0;
      }
      if (i < 0) break;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Clause grounding (shared by the oracle and the tensor encoder)
// ---------------------------------------------------------------------------

Term substitute(const Term& t, const Substitution& b) {
  switch (t.kind) {
    case Term::Kind::Constant:
      return t;
    case Term::Kind::Variable: {
      auto it = b.find(t.name);
      return it == b.end() ? t : it->second;
    }
    case Term::Kind::Compound: {
      std::vector<Term> args;
      args.reserve(t.args.size());
      for (const auto& a : t.args) args.push_back(substitute(a, b));
      return Term::compound(t.name, std::move(args));
    }
  }
  return t;
}

Atom substitute(const Atom& a, const Substitution& b) {
  Atom out{a.predicate, {}};
  out.terms.reserve(a.terms.size());
  for (const auto& t : a.terms) out.terms.push_back(substitute(t, b));
  return out;
}

namespace {

using Binding = Substitution;

void collect_vars(const Term& t, std::vector<std::string>& out) {
  if (t.is_variable()) {
    if (std::find(out.begin(), out.end(), t.name) == out.end())
      out.push_back(t.name);
  }
  for (const auto& a : t.args) collect_vars(a, out);
}

void collect_vars(const Atom& a, std::vector<std::string>& out) {
  for (const auto& t : a.terms) collect_vars(t, out);
}

}  // namespace

/// Structural match of a pattern term against a ground term, extending `b`.
static bool match_term(const Term& pattern, const Term& ground, Substitution& b) {
  switch (pattern.kind) {
    case Term::Kind::Constant:
      return ground == pattern;
    case Term::Kind::Variable: {
      auto it = b.find(pattern.name);
      if (it != b.end()) return it->second == ground;
      b.emplace(pattern.name, ground);
      return true;
    }
    case Term::Kind::Compound: {
      if (!ground.is_compound() || ground.name != pattern.name ||
          ground.args.size() != pattern.args.size())
        return false;
      for (std::size_t i = 0; i < pattern.args.size(); ++i)
        if (!match_term(pattern.args[i], ground.args[i], b)) return false;
      return true;
    }
  }
  return false;
}

bool match_atom(const Atom& pattern, const GroundAtom& ground,
                Substitution& binding) {
  if (pattern.predicate != ground.predicate ||
      pattern.terms.size() != ground.terms.size())
    return false;
  for (std::size_t i = 0; i < pattern.terms.size(); ++i)
    if (!match_term(pattern.terms[i], ground.terms[i], binding)) return false;
  return true;
}

namespace {

/// The functor used for cons lists built by findall/append in this clause:
/// the functor of the third append argument if compound, else any compound
/// functor appearing inside a built-in, else "k".
std::string clause_list_functor(const Clause& clause) {
  for (const auto& a : clause.body) {
    if (a.predicate == "append" && a.terms.size() == 3 && a.terms[2].is_compound())
      return a.terms[2].name;
  }
  for (const auto& a : clause.body) {
    if (!is_builtin(a.predicate)) continue;
    for (const auto& t : a.terms)
      if (t.is_compound()) return t.name;
  }
  return "k";
}

/// Resolve variable dtypes from non-built-in atom positions. Variables that
/// appear only inside built-ins stay unresolved and must be bound by built-in
/// propagation during enumeration.
std::map<std::string, std::string> variable_dtypes(const Clause& clause,
                                                   const LogicProgram& program) {
  std::map<std::string, std::string> out;
  std::function<void(const Term&, const std::string&)> walk =
      [&](const Term& t, const std::string& dtype) {
        if (t.is_variable()) {
          if (!dtype.empty()) out.emplace(t.name, dtype);
          return;
        }
        if (t.is_compound()) {
          const auto* f = program.find_function(t.name, static_cast<int>(t.args.size()));
          for (std::size_t i = 0; i < t.args.size(); ++i)
            walk(t.args[i], f ? f->arg_dtypes[i] : "");
        }
      };
  auto walk_atom = [&](const Atom& a) {
    if (is_builtin(a.predicate)) return;
    const auto* p = program.find_predicate(a.predicate);
    if (!p) return;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
      walk(a.terms[i], p->arg_dtypes[i]);
  };
  walk_atom(clause.head);
  for (const auto& b : clause.body) walk_atom(b);
  return out;
}

struct BuiltinPropagator {
  const LogicProgram& program;
  std::string list_functor;

  enum class Status { Progress, NoProgress, Fail };

  /// Try to check or solve one built-in under the current binding.
  Status step(const Atom& raw, Binding& b) const {
    Atom a = substitute(raw, b);
    const auto& p = a.predicate;
    auto ground_count = [&]() {
      int n = 0;
      for (const auto& t : a.terms) n += t.is_ground() ? 1 : 0;
      return n;
    };
    if (p == "equal" || p == "condition_met") {
      if (a.terms[0].is_ground() && a.terms[1].is_ground())
        return a.terms[0] == a.terms[1] ? Status::Progress : Status::Fail;
      if (a.terms[0].is_ground() && a.terms[1].is_variable()) {
        b.emplace(a.terms[1].name, a.terms[0]);
        return Status::Progress;
      }
      if (a.terms[1].is_ground() && a.terms[0].is_variable()) {
        b.emplace(a.terms[0].name, a.terms[1]);
        return Status::Progress;
      }
      return Status::NoProgress;
    }
    if (p == "change_state") {
      return ground_count() == 2 ? Status::Progress : Status::NoProgress;
    }
    if (p == "equalbfs") {
      if (ground_count() != 3) return Status::NoProgress;
      return eval_ground_builtin(a, program) ? Status::Progress : Status::Fail;
    }
    if (p == "findall") {
      if (!a.terms[0].is_ground()) return Status::NoProgress;
      std::vector<Term> succ;
      for (const auto& f : program.facts)
        if (f.predicate == "edge" && f.terms.size() == 2 && f.terms[0] == a.terms[0])
          succ.push_back(f.terms[1]);
      const Term want = encode_list(succ, list_functor);
      if (a.terms[1].is_ground())
        return a.terms[1] == want ? Status::Progress : Status::Fail;
      if (a.terms[1].is_variable()) {
        b.emplace(a.terms[1].name, want);
        return Status::Progress;
      }
      return Status::NoProgress;
    }
    if (p == "append") {
      auto la = a.terms[0].is_ground() ? decode_list(a.terms[0]) : std::nullopt;
      auto lb = a.terms[1].is_ground() ? decode_list(a.terms[1]) : std::nullopt;
      auto lc = a.terms[2].is_ground() ? decode_list(a.terms[2]) : std::nullopt;
      if (a.terms[0].is_ground() && !la) return Status::Fail;
      if (a.terms[1].is_ground() && !lb) return Status::Fail;
      if (a.terms[2].is_ground() && !lc) return Status::Fail;
      if (la && lb && lc) {
        std::vector<Term> cat = *la;
        cat.insert(cat.end(), lb->begin(), lb->end());
        return cat == *lc ? Status::Progress : Status::Fail;
      }
      if (la && lb && a.terms[2].is_variable()) {
        std::vector<Term> cat = *la;
        cat.insert(cat.end(), lb->begin(), lb->end());
        b.emplace(a.terms[2].name, encode_list(cat, list_functor));
        return Status::Progress;
      }
      if (lb && lc && a.terms[0].is_variable()) {
        if (lb->size() > lc->size()) return Status::Fail;
        const std::size_t cut = lc->size() - lb->size();
        for (std::size_t i = 0; i < lb->size(); ++i)
          if (!((*lc)[cut + i] == (*lb)[i])) return Status::Fail;
        std::vector<Term> prefix(lc->begin(), lc->begin() + cut);
        b.emplace(a.terms[0].name, encode_list(prefix, list_functor));
        return Status::Progress;
      }
      if (la && lc && a.terms[1].is_variable()) {
        if (la->size() > lc->size()) return Status::Fail;
        for (std::size_t i = 0; i < la->size(); ++i)
          if (!((*lc)[i] == (*la)[i])) return Status::Fail;
        std::vector<Term> suffix(lc->begin() + la->size(), lc->end());
        b.emplace(a.terms[1].name, encode_list(suffix, list_functor));
        return Status::Progress;
      }
      return Status::NoProgress;
    }
    throw std::invalid_argument("unregistered built-in: " + p);
  }
};

}  // namespace

const std::vector<Term>& TermUniverses::of(const std::string& dtype) const {
  auto it = cache_.find(dtype);
  if (it == cache_.end())
    it = cache_.emplace(dtype, ground_terms_of_dtype(*program_, dtype, depth_))
             .first;
  return it->second;
}

std::vector<Binding> ground_clause_substitutions(const Clause& clause,
                                                 const LogicProgram& program,
                                                 const GroundingLimits& limits,
                                                 const Binding& pre_bound,
                                                 const TermUniverses* universes) {
  std::vector<std::string> vars;
  collect_vars(clause.head, vars);
  for (const auto& b : clause.body) collect_vars(b, vars);

  const auto dtypes = variable_dtypes(clause, program);
  TermUniverses local(program, limits.max_term_depth);
  const TermUniverses& shared = universes ? *universes : local;
  auto universe = [&](const std::string& dtype) -> const std::vector<Term>& {
    return shared.of(dtype);
  };

  std::vector<Atom> builtins;
  for (const auto& b : clause.body)
    if (is_builtin(b.predicate)) builtins.push_back(b);
  const BuiltinPropagator prop{program, clause_list_functor(clause)};

  std::vector<Binding> out;
  std::function<void(Binding)> solve = [&](Binding binding) {
    if (out.size() > limits.max_substitutions)
      throw ResourceError("substitution cap exceeded (" +
                          std::to_string(limits.max_substitutions) +
                          ") for clause: " + to_string(clause));
    // Built-in propagation to fixpoint; ground built-ins prune immediately so
    // failing branches die before deeper variables are enumerated.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& atom : builtins) {
        Atom grounded = substitute(atom, binding);
        if (grounded.is_ground()) {
          if (!eval_ground_builtin(grounded, program)) return;
          continue;
        }
        auto status = prop.step(atom, binding);
        if (status == BuiltinPropagator::Status::Fail) return;
        if (status == BuiltinPropagator::Status::Progress) changed = true;
      }
    }
    // Next unbound variable with a known dtype.
    for (const auto& v : vars) {
      if (binding.count(v)) continue;
      auto dt = dtypes.find(v);
      if (dt == dtypes.end()) continue;
      for (const auto& t : universe(dt->second)) {
        Binding next = binding;
        next.emplace(v, t);
        solve(std::move(next));
      }
      return;
    }
    // All dtyped variables bound; everything else must have been propagated.
    for (const auto& v : vars) {
      if (!binding.count(v))
        throw ParseError("variable " + v + " in clause '" + to_string(clause) +
                             "' cannot be bound (no dtype and no built-in binds it)",
                         0, 0);
    }
    for (const auto& atom : builtins) {
      Atom grounded = substitute(atom, binding);
      if (!eval_ground_builtin(grounded, program)) return;
    }
    out.push_back(std::move(binding));
  };
  solve(pre_bound);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete oracle
// ---------------------------------------------------------------------------

namespace {

struct GroundRule {
  std::string head;
  std::vector<std::string> body;  // non-built-in body atoms
};

std::vector<GroundRule> ground_rules(const LogicProgram& program,
                                     const GroundingLimits& limits) {
  std::vector<GroundRule> rules;
  // Heads outside the depth-capped universe are outside the model.
  for (const auto& clause : program.clauses) {
    auto subs = ground_clause_substitutions(clause, program, limits, {});
    for (const auto& s : subs) {
      GroundRule r;
      Atom head = substitute(clause.head, s);
      bool in_universe = true;
      for (const auto& t : head.terms)
        if (t.depth() > limits.max_term_depth) in_universe = false;
      if (!in_universe) continue;
      r.head = to_string(head);
      for (const auto& b : clause.body) {
        if (is_builtin(b.predicate)) continue;
        r.body.push_back(to_string(substitute(b, s)));
      }
      rules.push_back(std::move(r));
    }
  }
  return rules;
}

}  // namespace

std::set<std::string> forward_chain_oracle(const LogicProgram& program,
                                           const std::vector<GroundAtom>& facts,
                                           int max_steps,
                                           const GroundingLimits& limits) {
  std::set<std::string> entailed;
  for (const auto& f : facts) entailed.insert(to_string(f));
  const auto rules = ground_rules(program, limits);
  for (int step = 0; step < max_steps; ++step) {
    std::set<std::string> next = entailed;
    for (const auto& r : rules) {
      bool fires = true;
      for (const auto& b : r.body)
        if (!entailed.count(b)) {
          fires = false;
          break;
        }
      if (fires) next.insert(r.head);
    }
    if (next == entailed) break;
    entailed = std::move(next);
  }
  return entailed;
}

int oracle_saturation_depth(const LogicProgram& program,
                            const std::vector<GroundAtom>& facts,
                            const GroundingLimits& limits) {
  std::set<std::string> prev;
  for (const auto& f : facts) prev.insert(to_string(f));
  int depth = 0;
  while (true) {
    auto next = forward_chain_oracle(program, facts, depth + 1, limits);
    if (next == prev) return depth;
    prev = std::move(next);
    ++depth;
  }
}

}  // namespace diffplan::logic

#include "diffplan/tensorize.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace diffplan::tensorize {

using logic::Atom;
using logic::Clause;
using logic::GroundAtomTable;
using logic::GroundingLimits;
using logic::LogicProgram;

std::vector<Substitution> enumerate_substitutions(const Clause& clause,
                                                  const LogicProgram& program,
                                                  const GroundingLimits& limits) {
  return logic::ground_clause_substitutions(clause, program, limits);
}

bool evaluate_builtin(const Atom& atom, const Substitution& substitution,
                      const LogicProgram& program) {
  if (!logic::is_builtin(atom.predicate))
    throw std::invalid_argument("unregistered built-in: " + atom.predicate);
  Atom ground = logic::substitute(atom, substitution);
  if (!ground.is_ground())
    throw std::invalid_argument("built-in not ground under substitution: " +
                                logic::to_string(ground));
  return logic::eval_ground_builtin(ground, program);
}

int ClauseEncoding::max_rows_per_head() const {
  int best = 0;
  for (int j = 0; j < num_ground_atoms; ++j) best = std::max(best, rows_of(j));
  return best;
}

int ClauseEncoding::dense_entry(int j, int k, int l, int S, int L) const {
  if (k >= S || l >= L) throw std::out_of_range("dense_entry out of range");
  if (!valid(j, k)) return GroundAtomTable::kFalseIndex;
  return l < body_width ? row(row_begin[j] + k)[l] : GroundAtomTable::kTrueIndex;
}

namespace {

ClauseEncoding encode_clause_cached(const Clause& clause, int clause_id,
                                    const LogicProgram& program,
                                    const GroundAtomTable& table,
                                    const GroundingLimits& limits,
                                    const logic::TermUniverses& universes);

}  // namespace

ClauseEncoding encode_clause(const Clause& clause, int clause_id,
                             const LogicProgram& program,
                             const GroundAtomTable& table,
                             const GroundingLimits& limits) {
  logic::TermUniverses universes(program, limits.max_term_depth);
  return encode_clause_cached(clause, clause_id, program, table, limits,
                              universes);
}

namespace {

ClauseEncoding encode_clause_cached(const Clause& clause, int clause_id,
                                    const LogicProgram& program,
                                    const GroundAtomTable& table,
                                    const GroundingLimits& limits,
                                    const logic::TermUniverses& universes) {
  if (logic::is_builtin(clause.head.predicate))
    throw std::invalid_argument("built-in cannot head a clause: " +
                                logic::to_string(clause));
  if (clause.head.is_ground() && !table.try_index(clause.head))
    throw std::out_of_range("head grounding not in table: " +
                            logic::to_string(clause.head));

  std::vector<const Atom*> table_body;
  for (const auto& b : clause.body)
    if (!logic::is_builtin(b.predicate)) table_body.push_back(&b);

  ClauseEncoding enc;
  enc.clause_id = clause_id;
  enc.num_ground_atoms = table.size();
  enc.body_width = std::max<int>(1, static_cast<int>(table_body.size()));

  // Rows grouped by head: match each candidate head atom, extend over the
  // remaining (existential) variables, drop groundings whose body atoms fall
  // outside the table, and dedupe identical body rows.
  std::vector<std::vector<std::vector<int>>> rows_by_head(table.size());
  for (int j = 2; j < table.size(); ++j) {
    const auto& candidate = table.atom(j);
    if (candidate.predicate != clause.head.predicate) continue;
    Substitution head_binding;
    if (!logic::match_atom(clause.head, candidate, head_binding)) continue;
    auto subs = logic::ground_clause_substitutions(clause, program, limits,
                                                   head_binding, &universes);
    std::set<std::vector<int>> unique;
    for (const auto& s : subs) {
      std::vector<int> row;
      row.reserve(enc.body_width);
      bool ok = true;
      for (const auto* b : table_body) {
        auto idx = table.try_index(logic::substitute(*b, s));
        if (!idx) {
          ok = false;  // body atom outside the bounded universe: never true
          break;
        }
        row.push_back(*idx);
      }
      if (!ok) continue;
      if (table_body.empty()) row.push_back(GroundAtomTable::kTrueIndex);
      unique.insert(std::move(row));
    }
    rows_by_head[j].assign(unique.begin(), unique.end());
  }

  enc.row_begin.assign(table.size() + 1, 0);
  for (int j = 0; j < table.size(); ++j)
    enc.row_begin[j + 1] = enc.row_begin[j] + static_cast<int>(rows_by_head[j].size());
  enc.row_head.reserve(enc.row_begin.back());
  enc.body.reserve(static_cast<std::size_t>(enc.row_begin.back()) * enc.body_width);
  for (int j = 0; j < table.size(); ++j) {
    for (const auto& row : rows_by_head[j]) {
      enc.row_head.push_back(j);
      enc.body.insert(enc.body.end(), row.begin(), row.end());
    }
  }
  return enc;
}

}  // namespace

ProgramEncoding encode_program(const LogicProgram& program,
                               const GroundAtomTable& table,
                               const GroundingLimits& limits) {
  logic::TermUniverses universes(program, limits.max_term_depth);
  ProgramEncoding out;
  out.num_ground_atoms = table.size();
  for (std::size_t i = 0; i < program.clauses.size(); ++i) {
    out.clauses.push_back(encode_clause_cached(program.clauses[i],
                                               static_cast<int>(i), program,
                                               table, limits, universes));
    out.max_substitutions =
        std::max(out.max_substitutions, out.clauses.back().max_rows_per_head());
    out.max_body = std::max(out.max_body, out.clauses.back().body_width);
  }
  out.max_substitutions = std::max(out.max_substitutions, 1);
  out.max_body = std::max(out.max_body, 1);
  return out;
}

std::vector<std::uint8_t> reachable_support(const ProgramEncoding& encoding,
                                            std::vector<std::uint8_t> positive) {
  if (static_cast<int>(positive.size()) != encoding.num_ground_atoms)
    throw std::invalid_argument("support vector size mismatch");
  positive[GroundAtomTable::kTrueIndex] = 1;
  positive[GroundAtomTable::kFalseIndex] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& clause : encoding.clauses) {
      for (int r = 0; r < clause.rows(); ++r) {
        const int j = clause.row_head[r];
        if (positive[j]) continue;
        const int* row = clause.row(r);
        bool all = true;
        for (int l = 0; l < clause.body_width; ++l)
          if (!positive[row[l]]) {
            all = false;
            break;
          }
        if (all) {
          positive[j] = 1;
          changed = true;
        }
      }
    }
  }
  return positive;
}

ProgramEncoding ProgramEncoding::restricted_to_support(
    const std::vector<std::uint8_t>& positive) const {
  const auto closure = reachable_support(*this, positive);
  ProgramEncoding out;
  out.num_ground_atoms = num_ground_atoms;
  out.max_substitutions = max_substitutions;
  out.max_body = max_body;
  for (const auto& clause : clauses) {
    ClauseEncoding kept;
    kept.clause_id = clause.clause_id;
    kept.num_ground_atoms = clause.num_ground_atoms;
    kept.body_width = clause.body_width;
    kept.row_begin.assign(clause.num_ground_atoms + 1, 0);
    std::vector<std::vector<const int*>> rows_by_head(clause.num_ground_atoms);
    for (int r = 0; r < clause.rows(); ++r) {
      const int* row = clause.row(r);
      bool all = true;
      for (int l = 0; l < clause.body_width; ++l)
        if (!closure[row[l]]) {
          all = false;
          break;
        }
      if (all) rows_by_head[clause.row_head[r]].push_back(row);
    }
    for (int j = 0; j < clause.num_ground_atoms; ++j)
      kept.row_begin[j + 1] =
          kept.row_begin[j] + static_cast<int>(rows_by_head[j].size());
    for (int j = 0; j < clause.num_ground_atoms; ++j) {
      for (const int* row : rows_by_head[j]) {
        kept.row_head.push_back(j);
        kept.body.insert(kept.body.end(), row, row + clause.body_width);
      }
    }
    out.clauses.push_back(std::move(kept));
  }
  return out;
}

int CompactEncoding::compact_index(int original) const {
  const int c = to_compact.at(original);
  if (c < 0)
    throw std::out_of_range("atom " + std::to_string(original) +
                            " absent from compact encoding");
  return c;
}

CompactEncoding compact_encoding(const ProgramEncoding& encoding,
                                 const std::vector<int>& keep_atoms) {
  CompactEncoding out;
  out.to_compact.assign(encoding.num_ground_atoms, -1);
  out.to_original = {GroundAtomTable::kFalseIndex, GroundAtomTable::kTrueIndex};
  out.to_compact[GroundAtomTable::kFalseIndex] = 0;
  out.to_compact[GroundAtomTable::kTrueIndex] = 1;
  auto intern = [&](int original) {
    if (out.to_compact[original] < 0) {
      out.to_compact[original] = static_cast<int>(out.to_original.size());
      out.to_original.push_back(original);
    }
    return out.to_compact[original];
  };
  for (int a : keep_atoms) intern(a);
  for (const auto& clause : encoding.clauses) {
    for (int r = 0; r < clause.rows(); ++r) {
      intern(clause.row_head[r]);
      for (int l = 0; l < clause.body_width; ++l) intern(clause.row(r)[l]);
    }
  }

  const int g = static_cast<int>(out.to_original.size());
  out.encoding.num_ground_atoms = g;
  out.encoding.max_substitutions = encoding.max_substitutions;
  out.encoding.max_body = encoding.max_body;
  for (const auto& clause : encoding.clauses) {
    ClauseEncoding small;
    small.clause_id = clause.clause_id;
    small.num_ground_atoms = g;
    small.body_width = clause.body_width;
    std::vector<std::vector<std::vector<int>>> rows_by_head(g);
    for (int r = 0; r < clause.rows(); ++r) {
      std::vector<int> row(clause.body_width);
      for (int l = 0; l < clause.body_width; ++l)
        row[l] = out.to_compact[clause.row(r)[l]];
      rows_by_head[out.to_compact[clause.row_head[r]]].push_back(std::move(row));
    }
    small.row_begin.assign(g + 1, 0);
    for (int j = 0; j < g; ++j)
      small.row_begin[j + 1] =
          small.row_begin[j] + static_cast<int>(rows_by_head[j].size());
    for (int j = 0; j < g; ++j) {
      for (auto& row : rows_by_head[j]) {
        small.row_head.push_back(j);
        small.body.insert(small.body.end(), row.begin(), row.end());
      }
    }
    out.encoding.clauses.push_back(std::move(small));
  }
  return out;
}

void dump_encoding_csv(std::ostream& out, const ProgramEncoding& encoding) {
  out << "clause_id,j,k,l,atom_index\n";
  for (const auto& clause : encoding.clauses) {
    for (int j = 0; j < clause.num_ground_atoms; ++j) {
      for (int k = 0; k < clause.rows_of(j); ++k) {
        for (int l = 0; l < encoding.max_body; ++l) {
          out << clause.clause_id << ',' << j << ',' << k << ',' << l << ','
              << clause.dense_entry(j, k, l, encoding.max_substitutions,
                                    encoding.max_body)
              << '\n';
        }
      }
    }
  }
}

}  // namespace diffplan::tensorize

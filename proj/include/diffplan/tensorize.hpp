#pragma once

#include <cstdint>
#include <iosfwd>

#include "diffplan/logic.hpp"

namespace diffplan::tensorize {

using logic::Substitution;

/// All ground bindings of the clause's variables, built-ins already enforced.
std::vector<Substitution> enumerate_substitutions(
    const logic::Clause& clause, const logic::LogicProgram& program,
    const logic::GroundingLimits& limits = {});

/// Compile-time built-in check under a grounding substitution. The atom must
/// be ground after substitution. Throws on unregistered built-ins.
bool evaluate_builtin(const logic::Atom& atom, const Substitution& substitution,
                      const logic::LogicProgram& program);

/// One clause compiled against a ground-atom table. Conceptually the index
/// tensor I of shape G x S x L; stored as grounding rows grouped by head
/// index (only real groundings are kept, the padded view is synthesized).
///
/// Dense padding rules: unused body slots of a real row hold the true-index;
/// (j,k) pairs beyond the head's grounding count hold the false-index in
/// every slot. A clause whose body has no table atoms (a fact, or a body of
/// built-ins only) contributes rows holding a single true-index.
struct ClauseEncoding {
  int clause_id = 0;
  int num_ground_atoms = 0;  // G
  int body_width = 1;        // table-atom body slots in this clause (>= 1)
  std::vector<int> row_begin;  // size G+1; head j owns rows [row_begin[j], row_begin[j+1])
  std::vector<int> row_head;   // flat row -> head index
  std::vector<int> body;       // rows() * body_width table indices

  int rows() const { return static_cast<int>(row_head.size()); }
  int rows_of(int j) const { return row_begin[j + 1] - row_begin[j]; }
  int max_rows_per_head() const;
  const int* row(int r) const { return body.data() + static_cast<std::size_t>(r) * body_width; }

  /// True when (j, k) addresses a real grounding.
  bool valid(int j, int k) const { return k < rows_of(j); }
  /// Dense view I[j,k,l] under padding S >= max_rows_per_head, L >= body_width.
  int dense_entry(int j, int k, int l, int S, int L) const;
};

struct ProgramEncoding {
  std::vector<ClauseEncoding> clauses;
  int num_ground_atoms = 0;   // G
  int max_substitutions = 0;  // S: max grounding rows for any head, any clause
  int max_body = 0;           // L: max table-atom body width

  int clause_count() const { return static_cast<int>(clauses.size()); }

  /// Drop rows that can never have a nonzero body product given which atoms
  /// start positive: a lossless speedup (exact because zero annihilates the
  /// body product). The kept rows are those whose body atoms all lie in the
  /// discrete reachability closure of `positive`.
  ProgramEncoding restricted_to_support(const std::vector<std::uint8_t>& positive) const;
};

/// Reachability closure used by restricted_to_support, exposed for tests.
std::vector<std::uint8_t> reachable_support(const ProgramEncoding& encoding,
                                            std::vector<std::uint8_t> positive);

/// A restricted encoding re-indexed onto the small set of atoms its rows
/// actually touch (sentinels kept at 0/1). Valuations over the compact space
/// are equivalent to the original at the mapped indices; atoms outside the
/// map are identically zero.
struct CompactEncoding {
  ProgramEncoding encoding;
  std::vector<int> to_compact;   // original index -> compact index, -1 if absent
  std::vector<int> to_original;  // compact index -> original index

  int compact_index(int original) const;  // throws if absent
};

CompactEncoding compact_encoding(const ProgramEncoding& encoding,
                                 const std::vector<int>& keep_atoms = {});

ClauseEncoding encode_clause(const logic::Clause& clause, int clause_id,
                             const logic::LogicProgram& program,
                             const logic::GroundAtomTable& table,
                             const logic::GroundingLimits& limits = {});

ProgramEncoding encode_program(const logic::LogicProgram& program,
                               const logic::GroundAtomTable& table,
                               const logic::GroundingLimits& limits = {});

/// Debug dump: one line per (clause_id, j, k, l, atom_index) over real
/// grounding rows, body slots padded to the program L with the true-index.
void dump_encoding_csv(std::ostream& out, const ProgramEncoding& encoding);

}  // namespace diffplan::tensorize

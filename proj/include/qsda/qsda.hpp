// Deterministic bottom-up tree automata over heap skinny-trees, with one data
// formula per state. Acceptance of a heap quantifies over every placement of
// the universal variables; the lattice operations work tree-wise on the
// mapped formulas (missing runs read as false).
#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsda/heap.hpp"
#include "qsda/octagon.hpp"

namespace qsda {

// Children sorted ascending; sibling types are pairwise disjoint, so the
// tuple is strictly increasing in any valid automaton.
struct TransKey {
  std::vector<StateId> kids;
  Letter letter;
  auto operator<=>(const TransKey&) const = default;
};

struct Qsda {
  EnvPtr env;
  int nstates = 0;
  std::map<TransKey, StateId> delta;
  std::vector<VarSet> type;       // vars seen in the subtree below a state
  std::vector<DataFormula> fin;   // non-bottom only on full-type states

  VarSet full_mask() const { return (VarSet(1) << env->nvars()) - 1; }
  VarSet pv_mask() const { return (VarSet(1) << env->npv()) - 1; }
};

// Throws AnalysisError when a structural invariant is broken: target range,
// type consistency (target type = disjoint union of child types and letter
// vars), leaf types meeting PV, or a non-bottom formula off full type.
void validate(const Qsda& a);

constexpr StateId kReject = -1;

// Unique bottom-up labelling of t (data ignored), or kReject.
StateId run(const Qsda& a, const Tree& t);

// run + root type check + formula evaluated under the tree's data.
bool accepts_valuation(const Qsda& a, const Tree& vt);

// Conjunction over all universal-variable placements; trees with fewer
// non-root nodes than universals are accepted vacuously.
bool accepts_heap(const Qsda& a, const Tree& heap_tree);
bool accepts_heap(const Qsda& a, const HeapConfig& c);

struct NondetQsda {
  EnvPtr env;
  int nstates = 0;
  std::map<TransKey, std::vector<StateId>> delta;  // targets sorted, unique
  std::vector<VarSet> type;
  std::vector<DataFormula> fin;
};

enum class Combine { Join, Meet };

// Powerset over reachable member sets only; per-set formula folded with
// `combine`. Throws TypeClashInPowerset if a reachable set mixes types.
// `out_sets`, when given, receives the member set behind each output state
// (sorted); elastification builds on this.
Qsda determinize(const NondetQsda& n, Combine combine,
                 std::vector<std::vector<StateId>>* out_sets = nullptr);

// Drop states that are not constructible from leaves or never feed a
// root-letter transition. An automaton without root transitions trims to
// the canonical bottom (zero states).
Qsda trim(const Qsda& a);

// Language-preserving merge of behaviorally equal states (same type and
// formula, same transitions up to the partition).
Qsda minimize(const Qsda& a);

// Canonical state numbering derived from the sorted transition table, so
// isomorphic automata become structurally equal.
Qsda renumber(const Qsda& a);

// trim + minimize + renumber; the canonical form used for fixpoint checks.
Qsda normalize(const Qsda& a);

// Tree-wise formula lattice; a tree mapped by only one side counts as
// mapped to false by the other.
Qsda lattice_join(const Qsda& a, const Qsda& b);
Qsda lattice_meet(const Qsda& a, const Qsda& b);
bool order_leq(const Qsda& a, const Qsda& b);

// Canonical least element: zero states.
Qsda bottom_qsda(const EnvPtr& env);

// Greatest element: one state per realizable type, every formula true.
// Materializes all type-respecting transitions; intended for small
// environments (throws past 12 joint variables).
Qsda top_qsda(const EnvPtr& env);

bool struct_equal(const Qsda& a, const Qsda& b);

std::string qsda_to_json(const Qsda& a);
Qsda qsda_from_json(const std::string& text);
std::string qsda_to_dot(const Qsda& a);

}  // namespace qsda

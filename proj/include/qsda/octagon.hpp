// Octagonal data formulas over the terms {v->data | v in PV ∪ Y}.
// Conjunctions of ±t1 ±t2 <= c and ±t <= c, kept in tightly closed DBM form
// so equal formulas have equal matrices.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsda/base.hpp"

namespace qsda {

using Bound = int64_t;
constexpr Bound kInf = INT64_MAX / 4;

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

// sign1*term1 + sign2*term2 <= c   (term2 < 0 for unary atoms)
struct OctAtom {
  int sign1 = 1;
  int term1 = 0;
  int sign2 = 0;
  int term2 = -1;
  Bound c = 0;
};

class DataFormula {
 public:
  DataFormula() = default;

  static DataFormula top(const EnvPtr& env) { return DataFormula(env, false); }
  static DataFormula bottom(const EnvPtr& env) { return DataFormula(env, true); }

  const EnvPtr& env() const { return env_; }
  bool is_bottom() const { return bottom_; }
  bool is_top() const;

  // Lattice operations; all results are canonical.
  DataFormula meet(const DataFormula& o) const;
  DataFormula join(const DataFormula& o) const;
  bool leq(const DataFormula& o) const;
  // Stable bounds kept; strictly grown bounds dropped to +inf. Result re-closed.
  DataFormula widen(const DataFormula& o) const;

  // Existentially quantify term t (drop every constraint mentioning it).
  DataFormula project(int t) const;
  // Substitute one fresh value for all terms in `group` at once, project it,
  // i.e. ∃d. φ[t/d for t in group].
  DataFormula project_merged(const std::vector<int>& group) const;

  DataFormula with_atom(const OctAtom& a) const;
  DataFormula constrain_eq(int t1, int t2) const;

  bool eval(const std::vector<Datum>& term_values) const;

  bool operator==(const DataFormula& o) const;
  bool operator<(const DataFormula& o) const;  // canonical order for state keys

  std::vector<OctAtom> atoms() const;  // minimal-ish rendering set
  std::string render() const;

  // Exact serialization of the closed matrix.
  std::vector<std::tuple<int, int, Bound>> finite_entries() const;
  static DataFormula from_entries(const EnvPtr& env,
                                  const std::vector<std::tuple<int, int, Bound>>& es);

 private:
  DataFormula(const EnvPtr& env, bool bottom);

  int n2() const { return 2 * env_->nvars(); }
  Bound& at(int i, int j) { return m_[size_t(i) * n2() + j]; }
  Bound at(int i, int j) const { return m_[size_t(i) * n2() + j]; }
  void close();  // tight integer closure; sets bottom_ on unsat

  EnvPtr env_;
  bool bottom_ = true;
  std::vector<Bound> m_;
};

// Octagon atom(s) for `lhs cmp rhs` where each side is a term index or constant.
// Throws InexpressiblePredicate for Ne (callers split it during DNF lowering).
std::vector<OctAtom> atoms_from_cmp(std::optional<int> lterm, Datum lconst,
                                    CmpOp op,
                                    std::optional<int> rterm, Datum rconst);

}  // namespace qsda

// Shared analysis context: pointer/universal variable universe, letters, var sets.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsda {

using Datum = int64_t;
using StateId = int32_t;

// Bit i is joint variable index i (pointer vars first, then universals).
using VarSet = uint32_t;

inline int popcount(VarSet s) { return __builtin_popcount(s); }

struct SyntaxError : std::runtime_error {
  int line, col;
  SyntaxError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_), col(col_) {}
};

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TypeClashInPowerset : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct InexpressiblePredicate : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct UnsupportedStmt : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct InsufficientUniversals : AnalysisError {
  using AnalysisError::AnalysisError;
};
struct NonTermination : AnalysisError {
  using AnalysisError::AnalysisError;
};

// Variable universe for one analysis run. pv[0] is always "nil".
struct Env {
  std::vector<std::string> pv;
  int ny = 0;

  int npv() const { return static_cast<int>(pv.size()); }
  int nvars() const { return npv() + ny; }

  int var_of_pv(int i) const { return i; }
  int var_of_y(int j) const { return npv() + j; }
  bool is_y(int var) const { return var >= npv(); }

  std::string var_name(int v) const {
    if (v < npv()) return pv[v];
    return "y" + std::to_string(v - npv() + 1);
  }
  std::string term_name(int v) const { return var_name(v) + "->data"; }

  int pv_index(const std::string& name) const {
    for (int i = 0; i < npv(); ++i)
      if (pv[i] == name) return i;
    return -1;
  }

  VarSet all_vars() const {
    return nvars() >= 32 ? ~VarSet(0) : ((VarSet(1) << nvars()) - 1);
  }

  bool operator==(const Env& o) const { return pv == o.pv && ny == o.ny; }
};

using EnvPtr = std::shared_ptr<const Env>;

inline EnvPtr make_env(std::vector<std::string> pointers, int universals) {
  auto e = std::make_shared<Env>();
  e->pv = std::move(pointers);
  if (e->pv.empty() || e->pv[0] != "nil")
    e->pv.insert(e->pv.begin(), "nil");
  e->ny = universals;
  if (e->nvars() > 24) throw AnalysisError("variable universe too large");
  return e;
}

// Tree-node label read by an automaton: pointer set, optional universal, root flag.
// Packed: bits 0..15 pointer indices, bits 16..20 uvar+1, bit 21 root.
struct Letter {
  uint32_t bits = 0;

  static Letter make(uint32_t ptrs, int uvar, bool root) {
    Letter l;
    l.bits = (ptrs & 0xffffu) | (uint32_t(uvar + 1) << 16) | (root ? (1u << 21) : 0);
    return l;
  }
  static Letter blank() { return make(0, -1, false); }  // the letter written b̲

  uint32_t ptrs() const { return bits & 0xffffu; }
  int uvar() const { return int((bits >> 16) & 0x1fu) - 1; }
  bool root() const { return bits & (1u << 21); }
  bool is_blank() const { return bits == 0; }

  bool has_pv(int i) const { return ptrs() & (1u << i); }
  Letter with_pv(int i) const { return make(ptrs() | (1u << i), uvar(), root()); }
  Letter without_pv(int i) const { return make(ptrs() & ~(1u << i), uvar(), root()); }
  Letter without_y(int j) const { return uvar() == j ? make(ptrs(), -1, root()) : *this; }

  VarSet vars(const Env& env) const {
    VarSet s = ptrs();
    if (uvar() >= 0) s |= VarSet(1) << env.var_of_y(uvar());
    return s;
  }

  auto operator<=>(const Letter&) const = default;
};

inline std::string render_letter(const Letter& l, const Env& env) {
  std::string s = "({";
  bool first = true;
  for (int i = 0; i < env.npv(); ++i)
    if (l.has_pv(i)) {
      if (!first) s += ",";
      s += env.pv[i];
      first = false;
    }
  s += "}";
  if (l.uvar() >= 0) s += "," + env.var_name(env.var_of_y(l.uvar()));
  if (l.root()) s += ",$";
  s += ")";
  return s;
}

}  // namespace qsda

// Program syntax, desugaring, control-flow graph, and concrete semantics.
//
// Programs are pc-labeled statements over pointer and data variables; data
// variables are desugared to dedicated heap cells (a `new d` prologue, uses
// rewritten to d->data). Guards are lowered to DNF; every disjunct becomes one
// CFG edge carrying a sequence of atomic actions.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qsda/heap.hpp"
#include "qsda/octagon.hpp"

namespace qsda {

// ---------- predicates ----------

enum class StructRel { Eq, Next, Reach };  // p == q, p->next == q, p->*next == q

struct StructAtom {
  StructRel rel;
  int p, q;  // pointer indices
  bool neg = false;
};

struct DataTermRef {           // one side of a data comparison
  std::optional<int> pv;       // pointer index whose ->data is read
  Datum c = 0;                 // constant if !pv
};

struct DataAtom {
  DataTermRef lhs, rhs;
  CmpOp op;
};

struct Pred;
using PredPtr = std::shared_ptr<Pred>;
struct Pred {
  enum Kind { And, Or, Not, SAtom, DAtom } kind;
  PredPtr a, b;
  StructAtom satom{};
  DataAtom datom{};
};

// ---------- statements ----------

enum class StmtKind {
  Skip,
  New,         // new p
  PtrAssign,   // p := q   (q may be nil: index 0)
  PtrAssignNext,  // p := q->next
  NextAssign,  // p->next := q (q may be nil)
  DataAssign,  // p->data := e
  Assume,
  If,
  While,
};

struct PcStmt;

struct Stmt {
  StmtKind kind = StmtKind::Skip;
  int p = -1, q = -1;
  DataTermRef expr;  // DataAssign rhs
  PredPtr pred;      // Assume / If / While
  std::vector<PcStmt> body, orelse;
};

struct PcStmt {
  int pc;
  Stmt s;
};

// ---------- properties ----------

enum class PropName { List, Init, Sort, Max, Gek, Last, Empty };

struct PropertySpec {
  PropName name;
  int anchor = -1;               // pointer index
  std::optional<int> key_pv;     // key term as pointer index (Init/Max/Gek)
  Datum key_const = 0;           // used when !key_pv
  bool key_is_const = false;
  bool descending = false;       // Sort direction
  CmpOp dir = CmpOp::Ge;         // Gek family: data `dir` key (Ge, Lt, or Le)
  int end_pv = 0;                // Gek segment end (default nil)
  int ret_pv = -1;               // Last: returned pointer
};

struct AssertSpec {
  int pc;
  PropertySpec prop;
};

// ---------- program ----------

struct Program {
  EnvPtr env;                           // post-desugar universe (nil + ptrs + data cells)
  std::vector<std::string> data_vars;   // original data variable names
  std::vector<PcStmt> stmts;            // top-level sequence (desugared, contiguous pcs)
  int npcs = 0;                         // statements numbered 1..npcs
  std::vector<PropertySpec> pres;
  std::vector<AssertSpec> asserts;
  std::optional<int> universals_hint;   // @universals annotation
};

// Parses and desugars. `universals` fixes |Y| in the env; pass -1 to use the
// @universals annotation (default 0).
Program parse_program(const std::string& text, int universals = -1);

// ---------- control-flow graph ----------

struct ActionAssumeStruct {
  StructAtom atom;
};
struct ActionAssumeData {
  std::vector<OctAtom> atoms;  // conjunction
  std::string text;
};
struct ActionStmt {  // one simple statement (never If/While/Assume)
  StmtKind kind;
  int p, q;
  DataTermRef expr;
};
using Action = std::variant<ActionStmt, ActionAssumeStruct, ActionAssumeData>;

// Guard lowered to DNF: one action list (a conjunction) per disjunct, with
// negation pushed onto the atoms and data != split into < | >. Throws
// InexpressiblePredicate only for atoms no lowering removes.
std::vector<std::vector<Action>> lower_guard(const Env& env, const Pred& p,
                                             bool neg);

struct Edge {
  int src, dst;
  std::vector<Action> actions;
};

struct Cfg {
  int entry = 1;
  int exit = 0;  // npcs + 1
  std::vector<Edge> edges;
  std::set<int> loop_headers;
  std::vector<int> rpo;  // reverse post-order of nodes
  std::vector<std::vector<int>> out_edges;  // node -> edge indices
};

Cfg build_cfg(const Program& prog);

// ---------- concrete semantics ----------

struct ErrorConfig {
  std::string reason;
};
struct BlockedConfig {};  // assume evaluated to false

using StepResult = std::variant<HeapConfig, ErrorConfig, BlockedConfig>;

StepResult concrete_step(const HeapConfig& c, const Action& a);

bool eval_struct_atom(const HeapConfig& c, const StructAtom& a);

struct ConcreteTraceEntry {
  int pc;
  HeapConfig config;
};
struct ConcreteRun {
  std::vector<ConcreteTraceEntry> visited;     // deduped (pc, config) states
  std::vector<std::pair<int, std::string>> errors;  // (pc, reason)
  bool fuel_exhausted = false;
};

// Bounded DFS over the CFG from (entry, init); explores all assume branches.
ConcreteRun run_concrete(const Cfg& cfg, const Program& prog, const HeapConfig& init,
                         int fuel);

std::string render_stmt(const Program& prog, const Stmt& s);
std::string render_action(const Program& prog, const Action& a);
std::string render_pred(const Program& prog, const Pred& p);
std::string render_property(const Program& prog, const PropertySpec& ps);

// Prints the desugared program in source syntax (all cells as pointers);
// re-parsing the output yields the same structure.
std::string render_program(const Program& prog);

}  // namespace qsda

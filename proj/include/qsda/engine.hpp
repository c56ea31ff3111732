// Abstract-interpretation fixpoint over the control-flow graph: one automaton
// per pc, lattice joins at merge points, elastification plus formula widening
// at loop headers. Intermediate facts stay full automata; only header entries
// are forced elastic, which bounds the skeletons the headers can cycle
// through and leaves termination to the data-formula widening.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsda/elastic.hpp"
#include "qsda/lang.hpp"

namespace qsda {

struct AnalyzeOptions {
  int widen_delay = 2;   // precise header joins before widening kicks in
  int max_iter = 100;    // per-header join cap, beyond it -> NonTermination
  bool strengthen_after_join = false;  // re-strengthen merged non-header facts
  bool trace = false;                  // record per-edge lines in edge_trace
};

struct HeaderJoin {  // one contribution merged into a loop header
  int pc;
  int visit;          // 1-based join count at this header
  int states_before;  // header automaton size going in
  int states_after;
  bool widened;       // widen_eqsda applied (visit > widen_delay)
  bool changed;       // header entry moved up
};

struct AnalysisState {
  std::map<int, Qsda> inv;        // pc -> invariant before that pc's statement
  std::map<int, int> iterations;  // loop header -> joins applied
  AnalyzeOptions opts;
  int max_states = 0;  // largest automaton seen anywhere in the run
  std::vector<HeaderJoin> header_trace;
  std::vector<std::string> edge_trace;  // only filled when opts.trace
};

// ejoin the pair, then widen each joined state's formula against the old
// state it corresponds to (old runs and joined runs paired by a product
// walk). States with no old counterpart keep the joined formula; states
// covering several old states widen against their join. Result is elastic,
// normalized, and above both inputs.
Eqsda widen_eqsda(const Eqsda& old_e, const Eqsda& new_e);

// Reverse post-order worklist from the entry, seeded with the precondition.
// Edge transformers are full posts (statement post followed by one
// strengthening pass per universal). Converges when every entry is
// structurally stable; throws NonTermination past opts.max_iter joins at one
// header, and rethrows construction failures tagged with the offending pc.
AnalysisState analyze(const Program& p, const Eqsda& pre,
                      AnalyzeOptions opts = {});

// Per-pc sizes and root formulas plus the header iteration trace.
std::string report_json(const Program& p, const AnalysisState& st);

}  // namespace qsda

// Abstract one-step transformers over QSDAs: pointer and data statement
// posts, structural/data assume filters, and the universal-variable
// strengthening product. Every output is determinized, cleaned of
// garbage-only subtrees, and normalized.
#pragma once

#include <functional>
#include <string>

#include "qsda/lang.hpp"
#include "qsda/qsda.hpp"

namespace qsda {

// One record per transformer application, filled when a sink is passed.
struct PostTrace {
  int input_states = 0;
  std::string construction;  // statement family that ran
  int powerset_states = 0;   // determinized size before normalization
  int output_states = 0;
};

// Abstract post of one atomic statement. If/While raise UnsupportedStmt.
// Assume predicates are DNF-lowered; branch posts are joined.
Qsda post(const Qsda& a, const Stmt& s, PostTrace* trace = nullptr);

// Post of one lowered CFG action.
Qsda post_action(const Qsda& a, const Action& act, PostTrace* trace = nullptr);

// Meets each placement formula with what the sibling placements of
// universal y (same tree, y elsewhere) imply once y's datum is projected
// out. The heap language is unchanged; only formulas tighten.
Qsda strengthen(const Qsda& a, int y);

// post followed by strengthen over every universal in the env.
Qsda full_post(const Qsda& a, const Stmt& s, PostTrace* trace = nullptr);
Qsda full_post_action(const Qsda& a, const Action& act,
                      PostTrace* trace = nullptr);

// A statement bundled with its transformer.
struct StmtTransformer {
  Stmt stmt;
  std::function<Qsda(const Qsda&)> build;
};

StmtTransformer make_transformer(const Stmt& s);

}  // namespace qsda

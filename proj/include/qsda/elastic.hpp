// Elastic automata: every chain-skipping (blank unary) transition is a
// self-loop, so runs cannot count unlabeled nodes. For a fixed variable set
// this makes the space of transition skeletons finite, which is what lets
// the fixpoint engine terminate. elastify() is the most precise elastic
// over-approximation of an automaton; ejoin is the elastic lattice join.
#pragma once

#include <string>

#include "qsda/qsda.hpp"

namespace qsda {

struct Eqsda {
  Qsda a;  // invariant: checked by validate_elastic, produced by elastify
};

// True when every unary transition on the blank letter loops on its source.
bool is_elastic(const Qsda& a);

// validate() plus the elasticity invariant.
void validate_elastic(const Eqsda& e);

// Powerset construction with blank-closure: a state of the result is the
// closed set of states the input can reach while skipping any number of
// blank chain nodes; the blank letter then loops on the set. The mapped
// formula of a set is the join over its members. Output is normalized.
// Throws TypeClashInPowerset if a reachable set mixes types (cannot happen
// for a valid input; kept as a guard).
Eqsda elastify(const Qsda& a);

// elastify(lattice_join(a, b)): the least elastic upper bound.
Eqsda ejoin(const Eqsda& a, const Eqsda& b);

// Same wire format as the underlying automaton plus an "elastic": true
// marker; from_json rejects inputs without the marker or with a non-elastic
// table.
std::string eqsda_to_json(const Eqsda& e);
Eqsda eqsda_from_json(const std::string& text);

}  // namespace qsda

// Concrete heaps (singly linked, acyclic, garbage-free) and their skinny-tree
// encodings: next edges reversed, dirty as root, nil's node a child of the root.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsda/base.hpp"

namespace qsda {

// Locations are dense indices; location 0 is dirty. next[v] is the parent-to-be
// in the tree encoding; next[0] is -1. pval maps pointer-variable index -> loc.
struct HeapConfig {
  EnvPtr env;
  std::vector<int> next;
  std::vector<Datum> data;
  std::vector<int> pval;

  int nlocs() const { return static_cast<int>(next.size()); }
  bool valid(std::string* why = nullptr) const;
  void collect_garbage();  // drops locations with no pointer in their subtree
  std::string canonical_key() const;
};

// One node of a heap/valuation/symbolic tree. Heap trees carry no universals;
// symbolic-tree consumers ignore datum.
struct Tree {
  Letter letter;
  Datum datum = 0;
  std::vector<Tree> kids;

  bool operator==(const Tree& o) const {
    return letter == o.letter && datum == o.datum && kids == o.kids;
  }
};

struct FormulaTreeEntry {
  Tree sym;
  // paired formula lives with the automaton state; used by tests
};

bool tree_less(const Tree& a, const Tree& b);
void canonicalize(Tree& t);  // sort children recursively, deterministic

// Heap -> skinny tree. Requires a valid config; root letter gets the root flag
// (and any pointers parked on dirty).
Tree encode(const HeapConfig& c);

// All injective placements of the env's universals on non-root nodes.
// Placements that need more nodes than available yield an empty list
// (acceptance treats the empty conjunction as true).
std::vector<Tree> valuations(const Tree& heap_tree, const Env& env);

// Node count excluding the root.
int tree_size(const Tree& t);

std::string tree_to_dot(const Tree& t, const Env& env, bool with_data);
std::string heap_to_dot(const HeapConfig& c);

}  // namespace qsda

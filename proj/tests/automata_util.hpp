// Hand-built automata shared across the automaton-level test binaries.
#pragma once

#include <map>
#include <tuple>

#include "qsda/qsda.hpp"
#include "tests/util.hpp"

namespace qsda {

inline Letter tletter(const EnvPtr& env, std::initializer_list<const char*> names,
                      int uvar = -1, bool root = false) {
  uint32_t m = 0;
  for (const char* n : names) m |= 1u << env->pv_index(n);
  return Letter::make(m, uvar, root);
}

// Ascending-sorted-list recognizer over env {head} with two universals.
// Chain states track which universals appeared below and in what order; a
// universal parked on the nil node makes the placement vacuous (formula
// true). Unary blank transitions are self-loops, so the automaton is
// elastic by construction.
inline Qsda mini_sort(const EnvPtr& env) {
  Qsda a;
  a.env = env;
  int head = env->pv_index("head");
  int ty1 = env->var_of_y(0), ty2 = env->var_of_y(1);
  auto ybits = [&](int ys) {
    VarSet s = 0;
    if (ys & 1) s |= VarSet(1) << ty1;
    if (ys & 2) s |= VarSet(1) << ty2;
    return s;
  };
  // phase 0: chain below nil; phase 1: nil seen; phase 2: root
  std::map<std::tuple<int, int, int, int>, StateId> ids;
  auto state = [&](int phase, int ys, int rel, int nily) {
    auto key = std::make_tuple(phase, ys, rel, nily);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    StateId q = a.nstates++;
    ids.emplace(key, q);
    VarSet t = (VarSet(1) << head) | ybits(ys);
    if (phase >= 1) t |= 1;  // nil
    a.type.push_back(t);
    DataFormula f = DataFormula::bottom(env);
    if (phase == 2 && ys == 3) {
      if (nily != 0 || rel == 0) {
        f = DataFormula::top(env);
      } else if (rel == 1) {  // y1 strictly below y2: earlier, so smaller
        f = DataFormula::top(env).with_atom({1, ty1, -1, ty2, 0});
      } else {
        f = DataFormula::top(env).with_atom({1, ty2, -1, ty1, 0});
      }
    }
    a.fin.push_back(std::move(f));
    return q;
  };

  for (int ys = 0; ys < 4; ++ys) {
    for (int rel : (ys == 3 ? std::vector<int>{1, 2} : std::vector<int>{0})) {
      StateId c = state(0, ys, rel, 0);
      a.delta[TransKey{{c}, Letter::blank()}] = c;
      for (int j = 0; j < 2; ++j) {
        if (ys & (1 << j)) continue;
        int nrel = ys == 0 ? 0 : (j == 1 ? 1 : 2);  // previous y sits below
        if (ys == 3) nrel = rel;
        a.delta[TransKey{{c}, Letter::make(0, j, false)}] =
            state(0, ys | (1 << j), ys == 0 ? 0 : nrel, 0);
      }
      // the nil node, bare or carrying a leftover universal
      StateId n0 = state(1, ys, rel, 0);
      a.delta[TransKey{{c}, tletter(env, {"nil"})}] = n0;
      a.delta[TransKey{{n0}, Letter::make(0, -1, true)}] = state(2, ys, rel, 0);
      for (int j = 0; j < 2; ++j) {
        if (ys & (1 << j)) continue;
        StateId nj = state(1, ys | (1 << j), rel, 1 << j);
        a.delta[TransKey{{c}, tletter(env, {"nil"}, j)}] = nj;
        a.delta[TransKey{{nj}, Letter::make(0, -1, true)}] =
            state(2, ys | (1 << j), rel, 1 << j);
      }
    }
  }
  // leaves: the head cell, optionally carrying a universal
  a.delta[TransKey{{}, tletter(env, {"head"})}] = state(0, 0, 0, 0);
  for (int j = 0; j < 2; ++j)
    a.delta[TransKey{{}, tletter(env, {"head"}, j)}] = state(0, 1 << j, 0, 0);
  validate(a);
  return a;
}

// Random behavior-preserving tweaks: tighten root formulas or drop a root
// transition, giving a family of comparable and incomparable automata.
inline Qsda random_variant(const EnvPtr& env, Rng& rng) {
  Qsda a = mini_sort(env);
  int ty1 = env->var_of_y(0), ty2 = env->var_of_y(1);
  int thead = env->pv_index("head");
  for (StateId q = 0; q < a.nstates; ++q) {
    if (a.fin[q].is_bottom()) continue;
    switch (rng.range(0, 4)) {
      case 0: break;
      case 1:
        a.fin[q] = a.fin[q].with_atom(
            {1, std::vector<int>{ty1, ty2, thead}[rng.range(0, 2)], 0, -1,
             rng.range(-2, 4)});
        break;
      case 2:
        a.fin[q] = a.fin[q].with_atom({1, ty1, -1, ty2, rng.range(-2, 2)});
        break;
      case 3:
        a.fin[q] = DataFormula::bottom(env);
        break;
      case 4:
        a.fin[q] = DataFormula::top(env);
        break;
    }
  }
  if (rng.range(0, 3) == 0) {
    // drop one root transition; the missing run reads as false
    for (auto it = a.delta.begin(); it != a.delta.end(); ++it)
      if (it->first.letter.root() && rng.range(0, 2) == 0) {
        a.delta.erase(it);
        break;
      }
  }
  validate(a);
  return a;
}

// Accepts exactly the lists from `head` whose node count lies in `lens`,
// mapping them to `f`. No universals. Counting nodes needs a run of
// distinct chain states, so any entry >= 2 makes the table non-elastic.
inline Qsda exact_lists(const EnvPtr& env, const std::set<int>& lens,
                        DataFormula f) {
  Qsda a;
  a.env = env;
  VarSet hb = VarSet(1) << env->pv_index("head");
  int maxlen = *lens.rbegin();
  // chain states c_i (i nodes seen) at ids 0..maxlen-1, then nil, then root
  StateId nil_acc = std::max(maxlen, 1), root = nil_acc + 1;
  a.nstates = root + 1;
  a.type.assign(a.nstates, hb);
  a.type[nil_acc] = hb | 1;
  a.type[root] = hb | 1;
  a.fin.assign(a.nstates, DataFormula::bottom(env));
  a.fin[root] = std::move(f);
  if (maxlen >= 1) a.delta[TransKey{{}, tletter(env, {"head"})}] = 0;
  for (StateId c = 0; c + 1 < maxlen; ++c)
    a.delta[TransKey{{c}, Letter::blank()}] = c + 1;
  for (int len : lens) {
    if (len == 0)  // the empty list: head rests on nil
      a.delta[TransKey{{}, tletter(env, {"head", "nil"})}] = nil_acc;
    else
      a.delta[TransKey{{len - 1}, tletter(env, {"nil"})}] = nil_acc;
  }
  a.delta[TransKey{{nil_acc}, Letter::make(0, -1, true)}] = root;
  validate(a);
  return a;
}

// Language-preserving de-elastification: each blank self-loop q -> q turns
// into a two-cycle through a fresh twin state that mirrors q everywhere
// else. The result accepts the same trees but is not elastic.
inline Qsda stretch(const Qsda& in) {
  Qsda a = in;
  std::map<StateId, StateId> twin;
  for (const auto& [k, tgt] : in.delta)
    if (k.kids.size() == 1 && k.letter.is_blank() && tgt == k.kids[0]) {
      StateId t = a.nstates++;
      twin[tgt] = t;
      a.type.push_back(a.type[tgt]);
      a.fin.push_back(a.fin[tgt]);
    }
  for (const auto& [q, t] : twin) {
    a.delta[TransKey{{q}, Letter::blank()}] = t;
    a.delta[TransKey{{t}, Letter::blank()}] = q;
  }
  // twins copy every other role of their original, including as siblings
  for (const auto& [k, tgt] : in.delta) {
    if (k.kids.size() == 1 && k.letter.is_blank()) continue;
    std::vector<int> which;
    for (size_t i = 0; i < k.kids.size(); ++i)
      if (twin.count(k.kids[i])) which.push_back((int)i);
    for (uint32_t m = 1; m < (1u << which.size()); ++m) {
      TransKey nk = k;
      for (size_t j = 0; j < which.size(); ++j)
        if (m & (1u << j)) nk.kids[which[j]] = twin.at(k.kids[which[j]]);
      std::sort(nk.kids.begin(), nk.kids.end());
      a.delta[nk] = tgt;
    }
  }
  validate(a);
  return a;
}

// Random short list over data 0..hi; sometimes head rests on nil.
inline HeapConfig random_list(const EnvPtr& env, Rng& rng, int hi = 4) {
  int n = rng.range(0, 4);
  std::vector<Datum> ds(n);
  for (auto& d : ds) d = rng.range(0, hi);
  return mk_list(env, "head", ds);
}

}  // namespace qsda

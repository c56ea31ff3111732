#include "qsda/qsda.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qsda {

namespace {

// Shared type bookkeeping for det and nondet tables: checks one transition
// and returns the type the target must carry.
VarSet derived_type(const Env& env, const std::vector<VarSet>& type,
                    const TransKey& k, const char* who) {
  VarSet acc = k.letter.vars(env);
  for (StateId c : k.kids) {
    VarSet t = type[c];
    if (acc & t)
      throw AnalysisError(std::string(who) +
                          ": child types overlap the letter or each other");
    acc |= t;
  }
  return acc;
}

}  // namespace

void validate(const Qsda& a) {
  if (!a.env) throw AnalysisError("automaton without an environment");
  if ((int)a.type.size() != a.nstates || (int)a.fin.size() != a.nstates)
    throw AnalysisError("state table sizes disagree");
  VarSet full = a.full_mask();
  for (const auto& [k, tgt] : a.delta) {
    if (tgt < 0 || tgt >= a.nstates) throw AnalysisError("transition target out of range");
    for (StateId c : k.kids)
      if (c < 0 || c >= a.nstates) throw AnalysisError("transition child out of range");
    if (!std::is_sorted(k.kids.begin(), k.kids.end()))
      throw AnalysisError("transition children not sorted");
    VarSet want = derived_type(*a.env, a.type, k, "validate");
    if (a.type[tgt] != want)
      throw AnalysisError("target type differs from the derived union");
    if (k.kids.empty() && !(a.type[tgt] & a.pv_mask()))
      throw AnalysisError("leaf state type misses every pointer");
    if (k.letter.root() && k.letter.uvar() >= 0)
      throw AnalysisError("universal variable on a root letter");
  }
  for (StateId q = 0; q < a.nstates; ++q)
    if (!a.fin[q].is_bottom() && a.type[q] != full)
      throw AnalysisError("non-false formula on a partial-type state");
}

StateId run(const Qsda& a, const Tree& t) {
  std::vector<StateId> kids;
  kids.reserve(t.kids.size());
  for (const Tree& k : t.kids) {
    StateId s = run(a, k);
    if (s == kReject) return kReject;
    kids.push_back(s);
  }
  std::sort(kids.begin(), kids.end());
  auto it = a.delta.find(TransKey{std::move(kids), t.letter});
  return it == a.delta.end() ? kReject : it->second;
}

namespace {

void collect_vals(const Tree& t, const Env& env, std::vector<Datum>& vals) {
  VarSet s = t.letter.vars(env);
  for (int v = 0; v < env.nvars(); ++v)
    if (s & (VarSet(1) << v)) vals[v] = t.datum;
  for (const Tree& k : t.kids) collect_vals(k, env, vals);
}

}  // namespace

bool accepts_valuation(const Qsda& a, const Tree& vt) {
  StateId q = run(a, vt);
  if (q == kReject || a.type[q] != a.full_mask()) return false;
  if (a.fin[q].is_bottom()) return false;
  std::vector<Datum> vals(a.env->nvars(), 0);
  collect_vals(vt, *a.env, vals);
  return a.fin[q].eval(vals);
}

bool accepts_heap(const Qsda& a, const Tree& heap_tree) {
  for (const Tree& vt : valuations(heap_tree, *a.env))
    if (!accepts_valuation(a, vt)) return false;
  return true;
}

bool accepts_heap(const Qsda& a, const HeapConfig& c) {
  return accepts_heap(a, encode(c));
}

// ---------- determinization ----------

Qsda determinize(const NondetQsda& n, Combine combine,
                 std::vector<std::vector<StateId>>* out_sets) {
  constexpr int kMaxStates = 20000;
  Qsda out;
  out.env = n.env;

  // discovered member sets, id order = discovery order (renumber later)
  std::map<std::vector<StateId>, StateId> id_of;
  std::vector<std::vector<StateId>> sets;
  std::vector<std::vector<StateId>> containing(n.nstates);  // member -> set ids

  auto common_type = [&](const std::vector<StateId>& s) {
    VarSet t = n.type[s[0]];
    for (StateId q : s)
      if (n.type[q] != t) throw TypeClashInPowerset("mixed types in one powerset state");
    return t;
  };

  auto discover = [&](const std::vector<StateId>& s) -> StateId {
    auto it = id_of.find(s);
    if (it != id_of.end()) return it->second;
    StateId id = (StateId)sets.size();
    if (id >= kMaxStates) throw AnalysisError("powerset construction exceeded the state cap");
    id_of.emplace(s, id);
    sets.push_back(s);
    for (StateId q : s) containing[q].push_back(id);
    out.type.push_back(common_type(s));
    DataFormula f = n.fin[s[0]];
    for (size_t i = 1; i < s.size(); ++i)
      f = combine == Combine::Join ? f.join(n.fin[s[i]]) : f.meet(n.fin[s[i]]);
    out.fin.push_back(std::move(f));
    return id;
  };

  // group transitions by (letter, arity)
  std::map<std::pair<Letter, int>, std::vector<const std::pair<const TransKey, std::vector<StateId>>*>>
      groups;
  for (const auto& e : n.delta) groups[{e.first.letter, (int)e.first.kids.size()}].push_back(&e);

  // leaves
  for (const auto& [gk, es] : groups) {
    if (gk.second != 0) continue;
    std::set<StateId> u;
    for (auto* e : es) u.insert(e->second.begin(), e->second.end());
    if (u.empty()) continue;
    StateId tgt = discover({u.begin(), u.end()});
    out.delta[TransKey{{}, gk.first}] = tgt;
  }

  // internal transitions to a fixpoint; a candidate's target set depends only
  // on the table, so each (children, letter) is resolved once
  std::set<std::pair<std::vector<StateId>, Letter>> done;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [gk, es] : groups) {
      int k = gk.second;
      if (k == 0) continue;
      for (auto* e : es) {
        const auto& kids = e->first.kids;
        bool feasible = true;
        for (StateId q : kids)
          if (containing[q].empty()) { feasible = false; break; }
        if (!feasible) continue;
        // candidate child tuples: pick a discovered set around each member
        std::vector<StateId> pick(k);
        std::vector<size_t> idx(k, 0);
        while (true) {
          for (int i = 0; i < k; ++i) pick[i] = containing[kids[i]][idx[i]];
          {
            std::vector<StateId> tuple(pick);
            std::sort(tuple.begin(), tuple.end());
            bool distinct = std::adjacent_find(tuple.begin(), tuple.end()) == tuple.end();
            if (distinct && done.insert({tuple, gk.first}).second) {
              // union the targets of every group member matched by type
              std::set<StateId> u;
              for (auto* e2 : es) {
                bool match = true;
                std::vector<bool> used(tuple.size(), false);
                for (StateId q : e2->first.kids) {
                  bool found = false;
                  for (size_t j = 0; j < tuple.size() && !found; ++j) {
                    if (used[j]) continue;
                    const auto& s = sets[tuple[j]];
                    if (n.type[s[0]] == n.type[q] &&
                        std::binary_search(s.begin(), s.end(), q)) {
                      used[j] = true;
                      found = true;
                    }
                  }
                  if (!found) { match = false; break; }
                }
                if (match && std::all_of(used.begin(), used.end(), [](bool b) { return b; }))
                  u.insert(e2->second.begin(), e2->second.end());
              }
              if (!u.empty()) {
                StateId tgt = discover({u.begin(), u.end()});
                auto [it2, fresh] =
                    out.delta.emplace(TransKey{tuple, gk.first}, tgt);
                (void)it2;
                if (fresh) grew = true;
              }
            }
          }
          // advance the odometer
          int p = k - 1;
          while (p >= 0) {
            if (++idx[p] < containing[kids[p]].size()) break;
            idx[p] = 0;
            --p;
          }
          if (p < 0) break;
        }
      }
    }
  }

  out.nstates = (int)sets.size();
  validate(out);
  if (out_sets) *out_sets = std::move(sets);
  return out;
}

// ---------- trim / minimize / renumber ----------

Qsda trim(const Qsda& a) {
  // constructible: derivable bottom-up from leaf transitions
  std::vector<bool> cons(a.nstates, false);
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [k, tgt] : a.delta) {
      if (cons[tgt]) continue;
      bool ok = true;
      for (StateId c : k.kids)
        if (!cons[c]) { ok = false; break; }
      if (ok) { cons[tgt] = true; grew = true; }
    }
  }
  // useful: feeds a chain ending in a root-letter transition (built from
  // constructible parts only)
  std::vector<bool> useful(a.nstates, false);
  for (const auto& [k, tgt] : a.delta) {
    if (!k.letter.root()) continue;
    bool ok = cons[tgt];
    for (StateId c : k.kids) ok = ok && cons[c];
    if (ok) useful[tgt] = true;
  }
  grew = true;
  while (grew) {
    grew = false;
    for (const auto& [k, tgt] : a.delta) {
      if (!useful[tgt] || !cons[tgt]) continue;
      for (StateId c : k.kids) {
        bool ok = cons[c];
        for (StateId c2 : k.kids) ok = ok && cons[c2];
        if (ok && !useful[c]) { useful[c] = true; grew = true; }
      }
    }
  }
  std::vector<StateId> remap(a.nstates, kReject);
  Qsda out;
  out.env = a.env;
  for (StateId q = 0; q < a.nstates; ++q)
    if (cons[q] && useful[q]) {
      remap[q] = out.nstates++;
      out.type.push_back(a.type[q]);
      out.fin.push_back(a.fin[q]);
    }
  for (const auto& [k, tgt] : a.delta) {
    if (remap[tgt] == kReject) continue;
    TransKey nk{{}, k.letter};
    bool ok = true;
    for (StateId c : k.kids) {
      if (remap[c] == kReject) { ok = false; break; }
      nk.kids.push_back(remap[c]);
    }
    if (!ok) continue;
    std::sort(nk.kids.begin(), nk.kids.end());
    out.delta.emplace(std::move(nk), remap[tgt]);
  }
  validate(out);
  return out;
}

Qsda minimize(const Qsda& a) {
  if (a.nstates == 0) return a;

  // initial partition: (type, formula)
  std::map<std::pair<VarSet, DataFormula>, int> cls;
  std::vector<int> block(a.nstates);
  for (StateId q = 0; q < a.nstates; ++q) {
    auto key = std::make_pair(a.type[q], a.fin[q]);
    auto it = cls.find(key);
    if (it == cls.end()) it = cls.emplace(key, (int)cls.size()).first;
    block[q] = it->second;
  }

  // refine by occurrence signatures; the context keeps the exact sibling
  // states so merged blocks define the same transitions (not just up to
  // blocks), which keeps the sparse table language-exact
  while (true) {
    using Item = std::tuple<Letter, std::vector<StateId>, int>;
    std::vector<std::vector<Item>> sig(a.nstates);
    for (const auto& [k, tgt] : a.delta) {
      for (size_t i = 0; i < k.kids.size(); ++i) {
        std::vector<StateId> others;
        others.reserve(k.kids.size() - 1);
        for (size_t j = 0; j < k.kids.size(); ++j)
          if (j != i) others.push_back(k.kids[j]);
        sig[k.kids[i]].push_back({k.letter, std::move(others), block[tgt]});
      }
    }
    std::map<std::pair<int, std::vector<Item>>, int> next_cls;
    std::vector<int> next(a.nstates);
    for (StateId q = 0; q < a.nstates; ++q) {
      std::sort(sig[q].begin(), sig[q].end());
      auto key = std::make_pair(block[q], sig[q]);
      auto it = next_cls.find(key);
      if (it == next_cls.end()) it = next_cls.emplace(key, (int)next_cls.size()).first;
      next[q] = it->second;
    }
    if ((int)next_cls.size() == *std::max_element(block.begin(), block.end()) + 1) {
      // block count can only grow; equal count means stable
      bool same = true;
      for (StateId q = 0; q < a.nstates && same; ++q) same = next[q] == block[q];
      block = next;
      if (same) break;
    } else {
      block = next;
    }
  }

  int nblocks = *std::max_element(block.begin(), block.end()) + 1;
  Qsda out;
  out.env = a.env;
  out.nstates = nblocks;
  out.type.assign(nblocks, 0);
  out.fin.assign(nblocks, DataFormula::bottom(a.env));
  for (StateId q = 0; q < a.nstates; ++q) {
    out.type[block[q]] = a.type[q];
    out.fin[block[q]] = a.fin[q];
  }
  for (const auto& [k, tgt] : a.delta) {
    TransKey nk{{}, k.letter};
    for (StateId c : k.kids) nk.kids.push_back(block[c]);
    std::sort(nk.kids.begin(), nk.kids.end());
    auto [it, fresh] = out.delta.emplace(std::move(nk), block[tgt]);
    if (!fresh && it->second != block[tgt])
      throw AnalysisError("minimize produced a nondeterministic quotient");
  }
  validate(out);
  return out;
}

Qsda renumber(const Qsda& a) {
  std::vector<StateId> to_new(a.nstates, kReject);
  int assigned = 0;
  while (assigned < a.nstates) {
    // transitions whose children all carry new ids, keyed canonically
    std::vector<std::pair<TransKey, StateId>> ready;
    for (const auto& [k, tgt] : a.delta) {
      if (to_new[tgt] != kReject) continue;
      TransKey nk{{}, k.letter};
      bool ok = true;
      for (StateId c : k.kids) {
        if (to_new[c] == kReject) { ok = false; break; }
        nk.kids.push_back(to_new[c]);
      }
      if (!ok) continue;
      std::sort(nk.kids.begin(), nk.kids.end());
      ready.push_back({std::move(nk), tgt});
    }
    std::sort(ready.begin(), ready.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    bool progressed = false;
    for (auto& [nk, tgt] : ready)
      if (to_new[tgt] == kReject) {
        to_new[tgt] = assigned++;
        progressed = true;
      }
    if (!progressed)
      throw AnalysisError("renumber found unconstructible states; trim first");
  }
  Qsda out;
  out.env = a.env;
  out.nstates = a.nstates;
  out.type.assign(a.nstates, 0);
  out.fin.assign(a.nstates, DataFormula::bottom(a.env));
  for (StateId q = 0; q < a.nstates; ++q) {
    out.type[to_new[q]] = a.type[q];
    out.fin[to_new[q]] = a.fin[q];
  }
  for (const auto& [k, tgt] : a.delta) {
    TransKey nk{{}, k.letter};
    for (StateId c : k.kids) nk.kids.push_back(to_new[c]);
    std::sort(nk.kids.begin(), nk.kids.end());
    out.delta.emplace(std::move(nk), to_new[tgt]);
  }
  validate(out);
  return out;
}

Qsda normalize(const Qsda& a) { return renumber(minimize(trim(a))); }

// ---------- lattice products ----------

namespace {

constexpr StateId kDead = -2;

struct ProductBuilder {
  const Qsda& a;
  const Qsda& b;
  bool keep_dead_a;  // keep pairs whose a side has no run
  bool keep_dead_b;

  std::map<std::pair<StateId, StateId>, StateId> id_of;
  std::vector<std::pair<StateId, StateId>> pairs;
  std::vector<char> kid_listed;            // pair reachable by a rootless tree
  size_t kid_listings = 0;
  std::vector<std::vector<StateId>> by_a;  // a-state -> product ids (alive a)
  std::vector<std::vector<StateId>> by_b;
  std::map<TransKey, StateId> delta;
  std::set<std::pair<std::vector<StateId>, Letter>> done;

  ProductBuilder(const Qsda& a_, const Qsda& b_, bool da, bool db)
      : a(a_), b(b_), keep_dead_a(da), keep_dead_b(db),
        by_a(a_.nstates), by_b(b_.nstates) {}

  // Root-letter targets never sit under another node in a real tree, so a
  // pair enters the kid lists only once a rootless tree realizes it;
  // pairing root targets as children would explore combinations no tree
  // produces (and misreport one-sided runs).
  StateId discover(StateId pa, StateId pb, bool as_kid) {
    StateId id;
    auto it = id_of.find({pa, pb});
    if (it != id_of.end()) {
      id = it->second;
    } else {
      id = (StateId)pairs.size();
      if (id >= 40000) throw AnalysisError("product construction exceeded the state cap");
      id_of.emplace(std::make_pair(pa, pb), id);
      pairs.push_back({pa, pb});
      kid_listed.push_back(false);
    }
    if (as_kid && !kid_listed[id]) {
      kid_listed[id] = true;
      ++kid_listings;
      if (pa != kDead) by_a[pa].push_back(id);
      if (pb != kDead) by_b[pb].push_back(id);
    }
    return id;
  }

  // resolve one candidate child tuple (product ids, sorted) under `letter`
  void step(const std::vector<StateId>& tuple, Letter letter) {
    if (!done.insert({tuple, letter}).second) return;
    std::vector<StateId> ka, kb;
    bool a_ok = true, b_ok = true;
    for (StateId t : tuple) {
      auto [pa, pb] = pairs[t];
      if (pa == kDead) a_ok = false; else ka.push_back(pa);
      if (pb == kDead) b_ok = false; else kb.push_back(pb);
    }
    StateId ta = kDead, tb = kDead;
    if (a_ok) {
      std::sort(ka.begin(), ka.end());
      auto it = a.delta.find(TransKey{std::move(ka), letter});
      if (it != a.delta.end()) ta = it->second;
    }
    if (b_ok) {
      std::sort(kb.begin(), kb.end());
      auto it = b.delta.find(TransKey{std::move(kb), letter});
      if (it != b.delta.end()) tb = it->second;
    }
    if (ta == kDead && tb == kDead) return;
    if (ta == kDead && !keep_dead_a) return;
    if (tb == kDead && !keep_dead_b) return;
    delta.emplace(TransKey{tuple, letter}, discover(ta, tb, !letter.root()));
  }

  // enumerate candidate tuples around one side's transition table
  void drive(const Qsda& side, const std::vector<std::vector<StateId>>& by) {
    for (const auto& [k, tgt] : side.delta) {
      (void)tgt;
      int n = (int)k.kids.size();
      if (n == 0) { step({}, k.letter); continue; }
      bool feasible = true;
      for (StateId q : k.kids)
        if (by[q].empty()) { feasible = false; break; }
      if (!feasible) continue;
      std::vector<size_t> idx(n, 0);
      while (true) {
        std::vector<StateId> tuple(n);
        for (int i = 0; i < n; ++i) tuple[i] = by[k.kids[i]][idx[i]];
        std::sort(tuple.begin(), tuple.end());
        if (std::adjacent_find(tuple.begin(), tuple.end()) == tuple.end())
          step(tuple, k.letter);
        int p = n - 1;
        while (p >= 0) {
          if (++idx[p] < by[k.kids[p]].size()) break;
          idx[p] = 0;
          --p;
        }
        if (p < 0) break;
      }
    }
  }

  void build() {
    if (!(*a.env == *b.env))
      throw AnalysisError("lattice operation across different environments");
    // trees running only in b matter only when dead-a pairs are kept
    size_t seen_pairs = SIZE_MAX, seen_delta = SIZE_MAX, seen_kids = SIZE_MAX;
    while (pairs.size() != seen_pairs || delta.size() != seen_delta ||
           kid_listings != seen_kids) {
      seen_pairs = pairs.size();
      seen_delta = delta.size();
      seen_kids = kid_listings;
      drive(a, by_a);
      if (keep_dead_a) drive(b, by_b);
    }
  }
};

Qsda product(const Qsda& a, const Qsda& b, Combine c, bool da, bool db) {
  ProductBuilder pb(a, b, da, db);
  pb.build();
  Qsda out;
  out.env = a.env;
  out.nstates = (int)pb.pairs.size();
  out.delta = std::move(pb.delta);
  out.type.reserve(out.nstates);
  out.fin.reserve(out.nstates);
  for (auto [pa, pbn] : pb.pairs) {
    VarSet t = pa != kDead ? a.type[pa] : b.type[pbn];
    if (pa != kDead && pbn != kDead && a.type[pa] != b.type[pbn])
      throw AnalysisError("product pair with disagreeing types");
    out.type.push_back(t);
    DataFormula fa = pa != kDead ? a.fin[pa] : DataFormula::bottom(a.env);
    DataFormula fb = pbn != kDead ? b.fin[pbn] : DataFormula::bottom(a.env);
    out.fin.push_back(c == Combine::Join ? fa.join(fb) : fa.meet(fb));
  }
  validate(out);
  return out;
}

}  // namespace

Qsda lattice_join(const Qsda& a, const Qsda& b) {
  return normalize(product(a, b, Combine::Join, true, true));
}

Qsda lattice_meet(const Qsda& a, const Qsda& b) {
  return normalize(product(a, b, Combine::Meet, false, false));
}

bool order_leq(const Qsda& a, const Qsda& b) {
  // pairs with a live a side; b gaps read as false
  ProductBuilder pb(a, b, false, true);
  pb.build();
  VarSet full = a.full_mask();
  for (const auto& [k, tgt] : pb.delta) {
    if (!k.letter.root()) continue;
    auto [pa, pbn] = pb.pairs[tgt];
    if (pa == kDead || a.type[pa] != full) continue;
    const DataFormula& fa = a.fin[pa];
    if (pbn == kDead) {
      if (!fa.is_bottom()) return false;
    } else if (!fa.leq(b.fin[pbn])) {
      return false;
    }
  }
  return true;
}

// ---------- bounds ----------

Qsda bottom_qsda(const EnvPtr& env) {
  Qsda out;
  out.env = env;
  return out;
}

Qsda top_qsda(const EnvPtr& env) {
  if (env->nvars() > 12) throw AnalysisError("top automaton limited to small environments");
  Qsda out;
  out.env = env;
  VarSet pvm = (VarSet(1) << env->npv()) - 1;
  VarSet full = (VarSet(1) << env->nvars()) - 1;

  // one state per type that can occur below a node: any var set meeting PV
  std::vector<VarSet> types;
  std::vector<StateId> state_of(full + 1, kReject);
  for (VarSet s = 1; s <= full; ++s)
    if (s & pvm) {
      state_of[s] = (StateId)types.size();
      types.push_back(s);
    }
  out.nstates = (int)types.size();
  out.type = types;
  for (VarSet s : types)
    out.fin.push_back(s == full ? DataFormula::top(env) : DataFormula::bottom(env));

  // enumerate pairwise-disjoint child families (ascending, so sorted keys)
  std::vector<StateId> family;
  std::function<void(StateId, VarSet)> rec = [&](StateId from, VarSet used) {
    // letters available on top of `family`
    int nkids = (int)family.size();
    VarSet freepv = pvm & ~used;
    std::vector<int> ys;  // unused universals
    for (int j = 0; j < env->ny; ++j)
      if (!(used & (VarSet(1) << env->var_of_y(j)))) ys.push_back(j);
    for (VarSet p = 0;; p = (p - freepv) & freepv) {  // subsets of freepv
      bool leaf_ok = nkids > 0 || p != 0;
      if (leaf_ok) {
        VarSet t = used | p;
        // plain letter, optionally carrying one universal
        out.delta.emplace(TransKey{family, Letter::make(p, -1, false)}, state_of[t]);
        for (int j : ys) {
          VarSet ty = t | (VarSet(1) << env->var_of_y(j));
          out.delta.emplace(TransKey{family, Letter::make(p, j, false)}, state_of[ty]);
        }
        if (nkids > 0)  // root letters sit above at least the nil chain
          out.delta.emplace(TransKey{family, Letter::make(p, -1, true)}, state_of[t]);
      }
      if (p == freepv) break;
    }
    for (StateId q = from; q < out.nstates; ++q) {
      if (types[q] & used) continue;
      family.push_back(q);
      rec(q + 1, used | types[q]);
      family.pop_back();
    }
  };
  rec(0, 0);
  validate(out);
  return out;
}

bool struct_equal(const Qsda& a, const Qsda& b) {
  return *a.env == *b.env && a.nstates == b.nstates && a.delta == b.delta &&
         a.type == b.type && a.fin == b.fin;
}

// ---------- serialization ----------

namespace {

nlohmann::json letter_to_json(const Letter& l, const Env& env) {
  nlohmann::json j;
  auto names = nlohmann::json::array();
  for (int i = 0; i < env.npv(); ++i)
    if (l.has_pv(i)) names.push_back(env.pv[i]);
  j["p"] = names;
  j["y"] = l.uvar();
  j["root"] = l.root();
  return j;
}

Letter letter_from_json(const nlohmann::json& j, const Env& env) {
  uint32_t m = 0;
  for (const auto& n : j.at("p")) {
    int i = env.pv_index(n.get<std::string>());
    if (i < 0) throw AnalysisError("unknown pointer in serialized letter");
    m |= 1u << i;
  }
  return Letter::make(m, j.at("y").get<int>(), j.at("root").get<bool>());
}

nlohmann::json formula_to_json(const DataFormula& f) {
  nlohmann::json j;
  if (f.is_bottom()) {
    j["bottom"] = true;
  } else {
    auto es = nlohmann::json::array();
    for (auto [r, c, b] : f.finite_entries()) es.push_back({r, c, b});
    j["entries"] = es;
  }
  return j;
}

DataFormula formula_from_json(const nlohmann::json& j, const EnvPtr& env) {
  if (j.contains("bottom") && j.at("bottom").get<bool>())
    return DataFormula::bottom(env);
  std::vector<std::tuple<int, int, Bound>> es;
  for (const auto& e : j.at("entries"))
    es.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<Bound>()});
  return DataFormula::from_entries(env, es);
}

}  // namespace

std::string qsda_to_json(const Qsda& a) {
  nlohmann::json j;
  j["format"] = "qsda-automaton";
  j["version"] = 1;
  std::vector<std::string> ptrs(a.env->pv.begin() + 1, a.env->pv.end());
  j["env"] = {{"pointers", ptrs}, {"universals", a.env->ny}};
  auto states = nlohmann::json::array();
  for (StateId q = 0; q < a.nstates; ++q) {
    auto tnames = nlohmann::json::array();
    for (int v = 0; v < a.env->nvars(); ++v)
      if (a.type[q] & (VarSet(1) << v)) tnames.push_back(a.env->var_name(v));
    states.push_back({{"type", tnames}, {"formula", formula_to_json(a.fin[q])}});
  }
  j["states"] = states;
  auto trans = nlohmann::json::array();
  for (const auto& [k, tgt] : a.delta)
    trans.push_back({{"kids", k.kids},
                     {"letter", letter_to_json(k.letter, *a.env)},
                     {"to", tgt}});
  j["transitions"] = trans;
  return j.dump(1);
}

Qsda qsda_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format").get<std::string>() != "qsda-automaton" ||
      j.at("version").get<int>() != 1)
    throw AnalysisError("unsupported automaton serialization");
  auto ptrs = j.at("env").at("pointers").get<std::vector<std::string>>();
  auto env = make_env(ptrs, j.at("env").at("universals").get<int>());
  Qsda out;
  out.env = env;
  for (const auto& s : j.at("states")) {
    VarSet t = 0;
    for (const auto& n : s.at("type")) {
      std::string name = n.get<std::string>();
      int v = -1;
      for (int i = 0; i < env->nvars(); ++i)
        if (env->var_name(i) == name) v = i;
      if (v < 0) throw AnalysisError("unknown variable in serialized type");
      t |= VarSet(1) << v;
    }
    out.type.push_back(t);
    out.fin.push_back(formula_from_json(s.at("formula"), env));
    out.nstates++;
  }
  for (const auto& e : j.at("transitions")) {
    TransKey k{e.at("kids").get<std::vector<StateId>>(),
               letter_from_json(e.at("letter"), *env)};
    out.delta.emplace(std::move(k), e.at("to").get<StateId>());
  }
  validate(out);
  return out;
}

std::string qsda_to_dot(const Qsda& a) {
  std::ostringstream os;
  os << "digraph qsda {\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n";
  for (StateId q = 0; q < a.nstates; ++q) {
    os << "  q" << q << " [label=\"q" << q << " {";
    bool first = true;
    for (int v = 0; v < a.env->nvars(); ++v)
      if (a.type[q] & (VarSet(1) << v)) {
        if (!first) os << ",";
        os << a.env->var_name(v);
        first = false;
      }
    os << "}";
    if (!a.fin[q].is_bottom()) os << "\\n" << a.fin[q].render();
    os << "\"";
    if (a.type[q] == a.full_mask()) os << ", peripheries=2";
    os << "];\n";
  }
  int mid = 0;
  for (const auto& [k, tgt] : a.delta) {
    std::string label = render_letter(k.letter, *a.env);
    if (k.kids.empty()) {
      os << "  leaf" << mid << " [shape=point];\n";
      os << "  leaf" << mid << " -> q" << tgt << " [label=\"" << label << "\"];\n";
      ++mid;
    } else if (k.kids.size() == 1) {
      os << "  q" << k.kids[0] << " -> q" << tgt << " [label=\"" << label << "\"];\n";
    } else {
      os << "  m" << mid << " [shape=point, width=0.05];\n";
      for (StateId c : k.kids) os << "  q" << c << " -> m" << mid << " [dir=none];\n";
      os << "  m" << mid << " -> q" << tgt << " [label=\"" << label << "\"];\n";
      ++mid;
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace qsda

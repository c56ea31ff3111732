#include "qsda/transformers.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

namespace qsda {

namespace {

constexpr VarSet kNilBit = 1;

int lowest_var(VarSet s) { return s ? __builtin_ctz(s) : -1; }

// ---------- construction scaffolding ----------

// Nondeterministic table under construction, over freshly numbered states.
// add() checks that the child types are pairwise disjoint and that their
// union with the letter's variables matches the target's declared type;
// the blunt for-all-states rule instantiations propose impossible
// combinations, which are dropped here and stay unconstructible.
struct Build {
  NondetQsda n;

  explicit Build(const EnvPtr& env) { n.env = env; }

  StateId state(VarSet type, DataFormula fin) {
    n.type.push_back(type);
    n.fin.push_back(std::move(fin));
    return n.nstates++;
  }

  void add(std::vector<StateId> kids, Letter letter, StateId tgt) {
    VarSet u = letter.vars(*n.env);
    for (StateId k : kids) {
      if (u & n.type[k]) return;
      u |= n.type[k];
    }
    if (u != n.type[tgt]) return;
    std::sort(kids.begin(), kids.end());
    auto& v = n.delta[TransKey{std::move(kids), letter}];
    auto it = std::lower_bound(v.begin(), v.end(), tgt);
    if (it == v.end() || *it != tgt) v.insert(it, tgt);
  }
};

// Statement posts leave behind subtrees that lost their last pointer; the
// concrete step garbage-collects the matching nodes. Children whose type
// went empty are erased from their transitions, transitions building or
// consuming pointer-free subtrees disappear (a universal parked on such a
// subtree has no surviving node to sit on), and pointer-free leaves go.
void erase_garbage(NondetQsda& n) {
  const VarSet pv = (VarSet(1) << n.env->npv()) - 1;
  std::map<TransKey, std::vector<StateId>> out;
  for (auto& [k, tgts] : n.delta) {
    bool ghost = false;
    std::vector<StateId> kids;
    kids.reserve(k.kids.size());
    for (StateId kid : k.kids) {
      if (n.type[kid] == 0) continue;  // erased subtree
      if (!(n.type[kid] & pv)) {
        ghost = true;  // universal stranded on garbage
        break;
      }
      kids.push_back(kid);
    }
    if (ghost) continue;
    if (kids.empty() && k.letter.ptrs() == 0 && !k.letter.root()) continue;
    std::vector<StateId> keep;
    for (StateId t : tgts)
      if (n.type[t] & pv) keep.push_back(t);
    if (keep.empty()) continue;
    auto& v = out[TransKey{std::move(kids), k.letter}];
    for (StateId t : keep)
      if (!std::binary_search(v.begin(), v.end(), t))
        v.insert(std::lower_bound(v.begin(), v.end(), t), t);
  }
  n.delta = std::move(out);
}

Qsda finish(Build&& b, const char* name, const Qsda& a, PostTrace* tr) {
  erase_garbage(b.n);
  Qsda d = determinize(b.n, Combine::Join);
  Qsda out = normalize(d);
  if (tr) {
    tr->input_states = a.nstates;
    tr->construction = name;
    tr->powerset_states = std::max(tr->powerset_states, d.nstates);
    tr->output_states = out.nstates;
  }
  return out;
}

void fill_trace(PostTrace* tr, const char* name, const Qsda& a,
                const Qsda& out) {
  if (!tr) return;
  tr->input_states = a.nstates;
  tr->construction = name;
  tr->powerset_states = std::max(tr->powerset_states, out.nstates);
  tr->output_states = out.nstates;
}

// The unique child whose type contains `bit`, or -1.
int kid_with(const Qsda& a, const TransKey& k, VarSet bit) {
  for (size_t i = 0; i < k.kids.size(); ++i)
    if (a.type[k.kids[i]] & bit) return int(i);
  return -1;
}

// v->data == t->data + c as two octagon meets.
DataFormula eq_term_offset(DataFormula f, int v, int t, Bound c) {
  return f.with_atom({1, v, -1, t, c}).with_atom({-1, v, 1, t, -c});
}

// v->data == c.
DataFormula eq_const(DataFormula f, int v, Bound c) {
  return f.with_atom({1, v, 0, -1, c}).with_atom({-1, v, 0, -1, -c});
}

// ---------- p := q (q may be nil) ----------

// Every state splits into a bare copy and an on-nil copy; the bit of p is
// erased everywhere and re-added on q's letter. On-nil means q's node is
// the nil node, where no datum equality is learned.
Qsda post_ptr_assign(const Qsda& a, int pi, int pj, PostTrace* tr) {
  if (pi == pj) {
    Qsda out = normalize(a);
    fill_trace(tr, "ptr-assign", a, out);
    return out;
  }
  Build b(a.env);
  const VarSet pib = VarSet(1) << pi;
  const VarSet pjb = VarSet(1) << pj;
  std::vector<StateId> plain(a.nstates), onnil(a.nstates);
  for (StateId q = 0; q < a.nstates; ++q) {
    bool pj_in = a.type[q] & pjb;
    VarSet t = pj_in ? (a.type[q] | pib) : (a.type[q] & ~pib);
    DataFormula base = a.fin[q].project(pi);
    DataFormula fp = (pj != 0) ? base.constrain_eq(pi, pj) : base;
    plain[q] = b.state(t, std::move(fp));
    onnil[q] = b.state(t, std::move(base));
  }
  for (const auto& [k, q] : a.delta) {
    std::vector<StateId> kids;
    for (StateId kq : k.kids) kids.push_back(plain[kq]);
    if (!(a.type[q] & pjb)) {
      b.add(kids, k.letter.without_pv(pi), plain[q]);
    } else if (k.letter.has_pv(pj)) {
      Letter l = k.letter.with_pv(pi);
      b.add(kids, l, k.letter.has_pv(0) ? onnil[q] : plain[q]);
    } else {
      int km = kid_with(a, k, pjb);
      Letter l = k.letter.without_pv(pi);
      b.add(kids, l, plain[q]);
      kids[km] = onnil[k.kids[km]];
      b.add(kids, l, onnil[q]);
    }
  }
  return finish(std::move(b), "ptr-assign", a, tr);
}

// ---------- p := q->next ----------

// The * copy of a state marks "q was read at this subtree's root, p lands
// on the parent"; the landing transition guesses the resolved copy and
// records the lowest co-read variable there for the datum equality.
Qsda post_ptr_assign_next(const Qsda& a, int pi, int pm, PostTrace* tr) {
  Build b(a.env);
  const VarSet pib = VarSet(1) << pi;
  const VarSet pmb = VarSet(1) << pm;

  std::set<int> vcands = {-1};
  for (const auto& [k, q] : a.delta) {
    (void)q;
    if (k.letter.root() || k.letter.has_pv(0)) continue;
    int v = lowest_var(k.letter.vars(*a.env) & ~kNilBit & ~pib);
    if (v >= 0) vcands.insert(v);
  }

  std::vector<StateId> plain(a.nstates), star(a.nstates);
  std::map<std::pair<StateId, int>, StateId> landed;
  for (StateId q = 0; q < a.nstates; ++q) {
    plain[q] = b.state(a.type[q] & ~pib, DataFormula::bottom(a.env));
    star[q] = b.state(a.type[q] & ~pib, DataFormula::bottom(a.env));
  }
  auto land = [&](StateId q, int v) {
    auto it = landed.find({q, v});
    if (it != landed.end()) return it->second;
    DataFormula f = a.fin[q].project(pi);
    if (v >= 0) f = f.constrain_eq(pi, v);
    StateId s = b.state(a.type[q] | pib, std::move(f));
    landed.emplace(std::make_pair(q, v), s);
    return s;
  };

  for (const auto& [k, q] : a.delta) {
    std::vector<StateId> kids;
    for (StateId kq : k.kids) kids.push_back(plain[kq]);
    if (!(a.type[q] & pmb)) {
      b.add(kids, k.letter.without_pv(pi), plain[q]);
    } else if (k.letter.has_pv(pm)) {
      b.add(kids, k.letter.without_pv(pi), star[q]);
    } else {
      int km = kid_with(a, k, pmb);
      int v = (k.letter.root() || k.letter.has_pv(0))
                  ? -1
                  : lowest_var(k.letter.vars(*a.env) & ~kNilBit & ~pib);
      kids[km] = star[k.kids[km]];
      b.add(kids, k.letter.with_pv(pi), land(q, v));
      for (int v2 : vcands) {
        kids[km] = land(k.kids[km], v2);
        b.add(kids, k.letter.without_pv(pi), land(q, v2));
      }
    }
  }
  return finish(std::move(b), "ptr-assign-next", a, tr);
}

// ---------- new p ----------

// A fresh leaf carrying p (and possibly one universal) hangs off the root;
// p's old bit is erased. The per-universal variants erase that universal
// from the old letters, covering placements that moved onto the new node.
// States split by tree role: a state can be both a root-key target (sees
// the fresh leaf, type gains p) and a mid-tree kid (type loses p).
Qsda post_new(const Qsda& a, int pi, PostTrace* tr) {
  Build b(a.env);
  const VarSet pib = VarSet(1) << pi;
  const int ny = a.env->ny;

  auto yb = [&](int y) { return y >= 0 ? VarSet(1) << a.env->var_of_y(y) : 0; };

  std::vector<StateId> fresh(ny + 1);
  std::vector<std::vector<StateId>> mid(ny + 1, std::vector<StateId>(a.nstates));
  std::vector<std::vector<StateId>> rt(ny + 1, std::vector<StateId>(a.nstates));
  for (int y = -1; y < ny; ++y) {
    fresh[y + 1] = b.state(pib | yb(y), DataFormula::bottom(a.env));
    for (StateId q = 0; q < a.nstates; ++q) {
      mid[y + 1][q] =
          b.state(a.type[q] & ~pib & ~yb(y), DataFormula::bottom(a.env));
      DataFormula f = a.fin[q].project(pi);
      if (y >= 0) {
        int ty = a.env->var_of_y(y);
        f = f.project(ty).constrain_eq(pi, ty);
      }
      rt[y + 1][q] = b.state(a.type[q] | pib | yb(y), std::move(f));
    }
  }

  for (int y = -1; y < ny; ++y) {
    b.add({}, Letter::make(pib, y, false), fresh[y + 1]);
    for (const auto& [k, q] : a.delta) {
      std::vector<StateId> kids;
      for (StateId kq : k.kids) kids.push_back(mid[y + 1][kq]);
      if (k.letter.root()) {
        kids.push_back(fresh[y + 1]);
        b.add(kids, k.letter.without_pv(pi), rt[y + 1][q]);
      } else {
        Letter l = k.letter.without_pv(pi);
        if (y >= 0) l = l.without_y(y);
        b.add(kids, l, mid[y + 1][q]);
      }
    }
  }
  return finish(std::move(b), "new", a, tr);
}

// ---------- p->next := q (q may be nil) ----------

// Tree surgery: the subtree rooted at p's node detaches from its parent
// and re-attaches as a child of q's node. The * copy is the detached
// subtree itself; (q minus r) tracks a region that lost an r-rooted
// subtree, (q plus r) one that gained it. Re-attaching below p's own
// subtree would close a cycle, so no transition covers it.
Qsda post_next_assign(const Qsda& a, int pm, int pi, PostTrace* tr) {
  if (pm == pi) {
    Qsda out = bottom_qsda(a.env);
    fill_trace(tr, "next-assign", a, out);
    return out;
  }
  Build b(a.env);
  const VarSet pib = VarSet(1) << pi;
  const VarSet pmb = VarSet(1) << pm;

  std::vector<StateId> plain(a.nstates), star(a.nstates);
  for (StateId q = 0; q < a.nstates; ++q) {
    plain[q] = b.state(a.type[q], a.fin[q]);
    star[q] = b.state(a.type[q], DataFormula::bottom(a.env));
  }
  std::map<std::pair<StateId, StateId>, StateId> minus_ids, plus_ids;
  auto minus = [&](StateId q, StateId r) {
    auto it = minus_ids.find({q, r});
    if (it != minus_ids.end()) return it->second;
    StateId s = b.state(a.type[q] & ~a.type[r], DataFormula::bottom(a.env));
    minus_ids.emplace(std::make_pair(q, r), s);
    return s;
  };
  auto plus = [&](StateId q, StateId r) {
    auto it = plus_ids.find({q, r});
    if (it != plus_ids.end()) return it->second;
    StateId s = b.state(a.type[q] | a.type[r], DataFormula::bottom(a.env));
    plus_ids.emplace(std::make_pair(q, r), s);
    return s;
  };

  for (const auto& [k, q] : a.delta) {
    bool pi_in = a.type[q] & pib, pm_in = a.type[q] & pmb;
    std::vector<StateId> kids;
    for (StateId kq : k.kids) kids.push_back(plain[kq]);

    if (!pi_in && !pm_in) {
      b.add(kids, k.letter, plain[q]);
    } else if (pm_in && !pi_in) {
      if (k.letter.has_pv(pm)) {
        b.add(kids, k.letter, star[q]);
      } else {
        int km = kid_with(a, k, pmb);
        StateId kq = k.kids[km];
        std::vector<StateId> drop = kids;
        drop.erase(drop.begin() + km);
        b.add(drop, k.letter, minus(q, kq));  // detached right below here
        for (StateId r = 0; r < a.nstates; ++r) {
          kids[km] = minus(kq, r);
          b.add(kids, k.letter, minus(q, r));
        }
      }
    } else if (pi_in && !pm_in) {
      if (k.letter.has_pv(pi)) {
        for (StateId r = 0; r < a.nstates; ++r) {
          std::vector<StateId> att = kids;
          att.push_back(star[r]);
          b.add(att, k.letter, plus(q, r));
        }
      } else {
        int ki = kid_with(a, k, pib);
        StateId kq = k.kids[ki];
        for (StateId r = 0; r < a.nstates; ++r) {
          kids[ki] = plus(kq, r);
          b.add(kids, k.letter, plus(q, r));
        }
      }
    } else {
      if (k.letter.has_pv(pm)) continue;  // cycle
      if (k.letter.has_pv(pi)) {
        int km = kid_with(a, k, pmb);
        StateId kq = k.kids[km];
        for (StateId r = 0; r < a.nstates; ++r) {
          std::vector<StateId> att = kids;
          att[km] = minus(kq, r);
          att.push_back(star[r]);
          b.add(att, k.letter, plain[q]);
        }
      } else {
        int km = kid_with(a, k, pmb);
        int ki = kid_with(a, k, pib);
        if (km == ki) {
          b.add(kids, k.letter, plain[q]);  // resolved inside that child
        } else {
          StateId kqm = k.kids[km], kqi = k.kids[ki];
          for (StateId r = 0; r < a.nstates; ++r) {
            std::vector<StateId> both = kids;
            both[km] = minus(kqm, r);
            both[ki] = plus(kqi, r);
            b.add(both, k.letter, plain[q]);
          }
        }
      }
    }
  }
  return finish(std::move(b), "next-assign", a, tr);
}

// ---------- p->data := e ----------

// Structure is untouched; states remember the co-read variable set at p's
// node so the old data terms are projected together and re-pinned to e.
Qsda post_data_assign(const Qsda& a, int pm, const DataTermRef& e,
                      PostTrace* tr) {
  Build b(a.env);
  const VarSet pmb = VarSet(1) << pm;

  std::set<VarSet> scands;
  for (const auto& [k, q] : a.delta) {
    (void)q;
    if (k.letter.has_pv(pm)) scands.insert(k.letter.vars(*a.env) & ~kNilBit);
  }

  std::vector<StateId> plain(a.nstates);
  for (StateId q = 0; q < a.nstates; ++q)
    plain[q] = b.state(a.type[q], a.fin[q]);

  std::map<std::pair<StateId, VarSet>, StateId> coread;
  auto written = [&](StateId q, VarSet s) {
    auto it = coread.find({q, s});
    if (it != coread.end()) return it->second;
    std::vector<int> terms;
    for (int v = 0; v < a.env->nvars(); ++v)
      if (s & (VarSet(1) << v)) terms.push_back(v);
    DataFormula f = a.fin[q].project_merged(terms);
    // e reading a co-read term would see the value being overwritten;
    // keep just the projection then (no corpus statement does this)
    bool circular = e.pv && (s & (VarSet(1) << *e.pv));
    if (!circular) {
      for (int v : terms)
        f = e.pv ? eq_term_offset(f, v, *e.pv, e.c) : eq_const(f, v, e.c);
    }
    StateId st = b.state(a.type[q], std::move(f));
    coread.emplace(std::make_pair(q, s), st);
    return st;
  };

  for (const auto& [k, q] : a.delta) {
    std::vector<StateId> kids;
    for (StateId kq : k.kids) kids.push_back(plain[kq]);
    if (!(a.type[q] & pmb)) {
      b.add(kids, k.letter, plain[q]);
    } else if (k.letter.has_pv(pm)) {
      b.add(kids, k.letter, written(q, k.letter.vars(*a.env) & ~kNilBit));
    } else {
      int km = kid_with(a, k, pmb);
      for (VarSet s : scands) {
        kids[km] = written(k.kids[km], s);
        b.add(kids, k.letter, written(q, s));
      }
    }
  }
  return finish(std::move(b), "data-assign", a, tr);
}

// ---------- assume: structural atoms ----------

Qsda assume_ptr_eq(const Qsda& a, int p, int q, bool neg) {
  Qsda out = a;
  for (auto it = out.delta.begin(); it != out.delta.end();) {
    bool hp = it->first.letter.has_pv(p), hq = it->first.letter.has_pv(q);
    bool drop = neg ? (hp && hq) : (hp != hq);
    it = drop ? out.delta.erase(it) : std::next(it);
  }
  return normalize(out);
}

// Tracker values while scanning a subtree bottom-up: 0 = p not seen,
// 1 = p seen below, claim still open, 2 = claim holds, 3 = claim failed.
// At most one child is nonzero (p labels one node), so the child summary
// is the maximum. The steppers mirror the concrete atom evaluation
// exactly, including nil/dangling dereference reading as false and
// reflexive reachability.
int next_step(const StructAtom& at, Letter l, int s) {
  if (s >= 2) return s;
  if (s == 1) return l.has_pv(at.q) ? 2 : 3;
  if (l.has_pv(at.p)) return (l.has_pv(0) || l.root()) ? 3 : 1;
  return 0;
}

int reach_step(const StructAtom& at, Letter l, int s) {
  if (s >= 2) return s;
  if (s == 1 || l.has_pv(at.p)) return l.has_pv(at.q) ? 2 : (l.root() ? 3 : 1);
  return 0;
}

// Deterministic product of a with the letter-driven tracker; acceptance is
// filtered to trackers landing on `want`.
Qsda tracker_product(const Qsda& a, const StructAtom& at,
                     int (*step)(const StructAtom&, Letter, int), int want) {
  Qsda out;
  out.env = a.env;
  std::map<std::pair<StateId, int>, StateId> ids;
  std::vector<std::vector<std::pair<StateId, int>>> realized(a.nstates);
  auto get = [&](StateId q, int s) {
    auto it = ids.find({q, s});
    if (it != ids.end()) return it->second;
    StateId id = out.nstates++;
    ids.emplace(std::make_pair(q, s), id);
    out.type.push_back(a.type[q]);
    out.fin.push_back(s == want ? a.fin[q] : DataFormula::bottom(a.env));
    realized[q].push_back({id, s});
    return id;
  };

  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [k, q] : a.delta) {
      const int n = int(k.kids.size());
      std::vector<int> idx(n, 0);
      bool ok = true;
      for (int i = 0; i < n; ++i)
        if (realized[k.kids[i]].empty()) ok = false;
      if (!ok) continue;
      for (;;) {
        std::vector<StateId> kids(n);
        int smax = 0;
        for (int i = 0; i < n; ++i) {
          auto [id, s] = realized[k.kids[i]][idx[i]];
          kids[i] = id;
          smax = std::max(smax, s);
        }
        size_t before = ids.size();
        StateId tgt = get(q, step(at, k.letter, smax));
        std::sort(kids.begin(), kids.end());
        auto [it, ins] = out.delta.emplace(TransKey{std::move(kids), k.letter}, tgt);
        (void)it;
        if (ins || ids.size() != before) grew = true;
        int i = 0;
        while (i < n && ++idx[i] == int(realized[k.kids[i]].size()))
          idx[i++] = 0;
        if (i == n) break;
      }
    }
  }
  validate(out);
  return normalize(out);
}

Qsda post_assume_struct(const Qsda& a, const StructAtom& at, PostTrace* tr) {
  Qsda out;
  switch (at.rel) {
    case StructRel::Eq:
      out = assume_ptr_eq(a, at.p, at.q, at.neg);
      break;
    case StructRel::Next:
      out = tracker_product(a, at, next_step, at.neg ? 3 : 2);
      break;
    case StructRel::Reach:
      out = tracker_product(a, at, reach_step, at.neg ? 3 : 2);
      break;
  }
  fill_trace(tr, "assume-struct", a, out);
  return out;
}

// ---------- assume: data atoms ----------

Qsda post_assume_data(const Qsda& a, const std::vector<OctAtom>& atoms,
                      PostTrace* tr) {
  Qsda out = a;
  for (auto& f : out.fin)
    for (const OctAtom& at : atoms) f = f.with_atom(at);
  out = normalize(out);
  fill_trace(tr, "assume-data", a, out);
  return out;
}

// ---------- assume: predicate lowering ----------

Qsda post_assume(const Qsda& a, const PredPtr& pred, PostTrace* tr) {
  if (!pred) {
    Qsda out = normalize(a);
    fill_trace(tr, "assume", a, out);
    return out;
  }
  Qsda acc = bottom_qsda(a.env);
  for (const auto& clause : lower_guard(*a.env, *pred, false)) {
    Qsda branch = a;
    for (const Action& act : clause) {
      if (const auto* as = std::get_if<ActionAssumeStruct>(&act))
        branch = post_assume_struct(branch, as->atom, tr);
      else
        branch = post_assume_data(
            branch, std::get<ActionAssumeData>(act).atoms, tr);
    }
    acc = lattice_join(acc, branch);
  }
  Qsda out = normalize(acc);
  fill_trace(tr, "assume", a, out);
  return out;
}

}  // namespace

// ---------- entry points ----------

Qsda post(const Qsda& a, const Stmt& s, PostTrace* trace) {
  switch (s.kind) {
    case StmtKind::Skip: {
      Qsda out = normalize(a);
      fill_trace(trace, "skip", a, out);
      return out;
    }
    case StmtKind::New:
      return post_new(a, s.p, trace);
    case StmtKind::PtrAssign:
      return post_ptr_assign(a, s.p, s.q, trace);
    case StmtKind::PtrAssignNext:
      return post_ptr_assign_next(a, s.p, s.q, trace);
    case StmtKind::NextAssign:
      return post_next_assign(a, s.p, s.q, trace);
    case StmtKind::DataAssign:
      return post_data_assign(a, s.p, s.expr, trace);
    case StmtKind::Assume:
      return post_assume(a, s.pred, trace);
    case StmtKind::If:
    case StmtKind::While:
      throw UnsupportedStmt("post needs an atomic statement");
  }
  throw UnsupportedStmt("unknown statement kind");
}

Qsda post_action(const Qsda& a, const Action& act, PostTrace* trace) {
  if (const auto* st = std::get_if<ActionStmt>(&act)) {
    Stmt s;
    s.kind = st->kind;
    s.p = st->p;
    s.q = st->q;
    s.expr = st->expr;
    return post(a, s, trace);
  }
  if (const auto* as = std::get_if<ActionAssumeStruct>(&act))
    return post_assume_struct(a, as->atom, trace);
  const auto& ad = std::get<ActionAssumeData>(act);
  return post_assume_data(a, ad.atoms, trace);
}

Qsda strengthen(const Qsda& a, int y) {
  if (a.nstates == 0) return a;
  const int ty = a.env->var_of_y(y);
  const VarSet full = a.full_mask();

  Qsda out;
  out.env = a.env;
  std::map<std::pair<StateId, std::vector<StateId>>, StateId> ids;
  // per base state: (output state, member set of sibling-placement runs)
  std::vector<std::vector<std::pair<StateId, const std::vector<StateId>*>>>
      realized(a.nstates);
  auto get = [&](StateId q, std::vector<StateId> set) {
    auto it = ids.find({q, set});
    if (it != ids.end()) return it->second;
    DataFormula f = a.fin[q];
    for (StateId r : set)
      if (a.type[r] == full) f = f.meet(a.fin[r].project(ty));
    StateId id = out.nstates++;
    out.type.push_back(a.type[q]);
    out.fin.push_back(std::move(f));
    auto [it2, ins] = ids.emplace(std::make_pair(q, std::move(set)), id);
    (void)ins;
    realized[q].push_back({id, &it2->first.second});
    return id;
  };

  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [k, q] : a.delta) {
      const int n = int(k.kids.size());
      bool ok = true;
      for (int i = 0; i < n; ++i)
        if (realized[k.kids[i]].empty()) ok = false;
      if (!ok) continue;

      Letter base = k.letter.without_y(y);
      std::vector<Letter> lifts = {base};
      if (base.uvar() < 0 && !base.root())
        lifts.push_back(Letter::make(base.ptrs(), y, false));

      std::vector<int> idx(n, 0);
      for (;;) {
        std::vector<StateId> kids(n);
        std::vector<const std::vector<StateId>*> sets(n);
        for (int i = 0; i < n; ++i) {
          auto [id, sp] = realized[k.kids[i]][idx[i]];
          kids[i] = id;
          sets[i] = sp;
        }
        // member-set image over every lift of the y-erased letter
        std::set<StateId> img;
        std::vector<int> m(n, 0);
        for (;;) {
          std::vector<StateId> probe(n);
          for (int i = 0; i < n; ++i) probe[i] = (*sets[i])[m[i]];
          std::sort(probe.begin(), probe.end());
          for (const Letter& l : lifts) {
            auto it = a.delta.find(TransKey{probe, l});
            if (it != a.delta.end()) img.insert(it->second);
          }
          int i = 0;
          while (i < n && ++m[i] == int(sets[i]->size())) m[i++] = 0;
          if (i == n) break;
        }
        size_t before = ids.size();
        StateId tgt = get(q, std::vector<StateId>(img.begin(), img.end()));
        std::sort(kids.begin(), kids.end());
        auto [dit, ins] =
            out.delta.emplace(TransKey{std::move(kids), k.letter}, tgt);
        (void)dit;
        if (ins || ids.size() != before) grew = true;
        int i = 0;
        while (i < n && ++idx[i] == int(realized[k.kids[i]].size()))
          idx[i++] = 0;
        if (i == n) break;
      }
    }
  }
  validate(out);
  return normalize(out);
}

Qsda full_post(const Qsda& a, const Stmt& s, PostTrace* trace) {
  Qsda r = post(a, s, trace);
  for (int y = 0; y < a.env->ny; ++y) r = strengthen(r, y);
  if (trace) trace->output_states = r.nstates;
  return r;
}

Qsda full_post_action(const Qsda& a, const Action& act, PostTrace* trace) {
  Qsda r = post_action(a, act, trace);
  for (int y = 0; y < a.env->ny; ++y) r = strengthen(r, y);
  if (trace) trace->output_states = r.nstates;
  return r;
}

StmtTransformer make_transformer(const Stmt& s) {
  StmtTransformer t;
  t.stmt = s;
  t.build = [s](const Qsda& a) { return post(a, s); };
  return t;
}

}  // namespace qsda

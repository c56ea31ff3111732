#include "qsda/engine.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "qsda/transformers.hpp"

namespace qsda {

namespace {

// For each state of j, the old states some tree reaching it in j also
// reaches in old. Fixpoint over j's table; kid tuples are re-sorted before
// the lookup because both tables keep kids ordered. Keys whose partner
// combinations blow past the cap are skipped; missing partners only mean
// less widening, never unsoundness.
std::vector<std::vector<StateId>> co_reachable(const Qsda& j, const Qsda& old_a) {
  std::vector<std::vector<StateId>> partners(j.nstates);
  auto add = [&](StateId q, StateId o) {
    auto& v = partners[q];
    auto it = std::lower_bound(v.begin(), v.end(), o);
    if (it != v.end() && *it == o) return false;
    v.insert(it, o);
    return true;
  };
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [key, tgt] : j.delta) {
      size_t k = key.kids.size();
      size_t combos = 1;
      bool viable = true;
      for (size_t i = 0; i < k && viable; ++i) {
        size_t c = partners[key.kids[i]].size();
        if (c == 0) viable = false;
        combos *= std::max<size_t>(c, 1);
        if (combos > 4096) viable = false;
      }
      if (!viable) continue;
      std::vector<size_t> idx(k, 0);
      while (true) {
        std::vector<StateId> okids(k);
        for (size_t i = 0; i < k; ++i) okids[i] = partners[key.kids[i]][idx[i]];
        std::sort(okids.begin(), okids.end());
        auto it = old_a.delta.find(TransKey{std::move(okids), key.letter});
        if (it != old_a.delta.end() && add(tgt, it->second)) grew = true;
        size_t d = 0;
        while (d < k) {
          if (++idx[d] < partners[key.kids[d]].size()) break;
          idx[d++] = 0;
        }
        if (d == k) break;
      }
    }
  }
  return partners;
}

Qsda transform_edge(const Qsda& src, const std::vector<Action>& actions) {
  Qsda cur = src;
  for (const Action& act : actions) {
    if (cur.nstates == 0) break;  // bottom is a fixpoint of every post
    cur = full_post_action(cur, act);
  }
  return cur;
}

}  // namespace

Eqsda widen_eqsda(const Eqsda& old_e, const Eqsda& new_e) {
  Eqsda j = ejoin(old_e, new_e);
  if (old_e.a.nstates == 0 || j.a.nstates == 0) return j;

  auto partners = co_reachable(j.a, old_e.a);
  Qsda r = j.a;
  bool any = false;
  for (StateId q = 0; q < r.nstates; ++q) {
    if (partners[q].empty()) continue;  // no old run lands here: keep the join
    DataFormula oldf = old_e.a.fin[partners[q][0]];
    for (size_t i = 1; i < partners[q].size(); ++i)
      oldf = oldf.join(old_e.a.fin[partners[q][i]]);
    DataFormula w = oldf.widen(r.fin[q]);
    if (!w.leq(r.fin[q])) any = true;  // some bound actually moved to +inf
    r.fin[q] = std::move(w);
  }
  if (!any) return j;
  Eqsda out{normalize(r)};
  validate_elastic(out);
  return out;
}

AnalysisState analyze(const Program& prog, const Eqsda& pre, AnalyzeOptions opts) {
  Cfg cfg = build_cfg(prog);
  AnalysisState st;
  st.opts = opts;

  std::vector<int> rpo_index(cfg.exit + 1, -1);
  for (size_t i = 0; i < cfg.rpo.size(); ++i) rpo_index[cfg.rpo[i]] = (int)i;
  Qsda bot = bottom_qsda(prog.env);
  for (int pc : cfg.rpo) st.inv.emplace(pc, bot);
  st.inv[cfg.entry] = normalize(pre.a);
  st.max_states = st.inv[cfg.entry].nstates;
  for (int h : cfg.loop_headers)
    if (rpo_index[h] >= 0) st.iterations[h] = 0;

  // RPO priority queue: always advance the earliest dirty node, so the run
  // is deterministic and headers see their whole body between joins
  auto cmp = [&rpo_index](int a, int b) { return rpo_index[a] < rpo_index[b]; };
  std::set<int, decltype(cmp)> work(cmp);
  work.insert(cfg.entry);

  while (!work.empty()) {
    int n = *work.begin();
    work.erase(work.begin());
    if (st.inv.at(n).nstates == 0) continue;
    for (int ei : cfg.out_edges[n]) {
      const Edge& e = cfg.edges[ei];
      Qsda contrib;
      try {
        contrib = transform_edge(st.inv.at(n), e.actions);
      } catch (const AnalysisError& err) {
        throw AnalysisError("pc " + std::to_string(n) + ": " + err.what());
      }
      st.max_states = std::max(st.max_states, contrib.nstates);

      Qsda& cur = st.inv.at(e.dst);
      bool header = cfg.loop_headers.count(e.dst) > 0;
      Qsda next;
      bool widened = false;
      if (header) {
        int visit = ++st.iterations[e.dst];
        if (visit > opts.max_iter)
          throw NonTermination("loop header at pc " + std::to_string(e.dst) +
                               " exceeded " + std::to_string(opts.max_iter) +
                               " joins");
        Eqsda olde{cur};  // elastic: bottom at first, ejoin output afterwards
        Eqsda newe = elastify(contrib);
        widened = visit > opts.widen_delay;
        next = (widened ? widen_eqsda(olde, newe) : ejoin(olde, newe)).a;
      } else {
        next = normalize(lattice_join(cur, contrib));
        if (opts.strengthen_after_join)
          for (int y = 0; y < prog.env->ny; ++y) next = strengthen(next, y);
      }
      bool changed = !struct_equal(next, cur);
      if (header)
        st.header_trace.push_back({e.dst, st.iterations[e.dst], cur.nstates,
                                   next.nstates, widened, changed});
      if (opts.trace)
        st.edge_trace.push_back("pc " + std::to_string(n) + " -> " +
                                std::to_string(e.dst) + ": " +
                                std::to_string(contrib.nstates) + " -> " +
                                std::to_string(next.nstates) + " states" +
                                (changed ? "" : " (stable)"));
      if (changed) {
        st.max_states = std::max(st.max_states, next.nstates);
        cur = std::move(next);
        work.insert(e.dst);
      }
    }
  }
  return st;
}

std::string report_json(const Program& prog, const AnalysisState& st) {
  nlohmann::json j;
  j["pointers"] = prog.env->pv;
  j["universals"] = prog.env->ny;
  j["widen_delay"] = st.opts.widen_delay;
  j["max_iter"] = st.opts.max_iter;
  j["max_states"] = st.max_states;

  auto invs = nlohmann::json::array();
  for (const auto& [pc, a] : st.inv) {
    nlohmann::json e;
    e["pc"] = pc;
    e["states"] = a.nstates;
    e["elastic"] = is_elastic(a);
    e["header"] = st.iterations.count(pc) > 0;
    auto fs = nlohmann::json::array();
    for (StateId q = 0; q < a.nstates; ++q)
      if (a.type[q] == a.full_mask() && !a.fin[q].is_bottom())
        fs.push_back(a.fin[q].render());
    e["root_formulas"] = fs;
    invs.push_back(std::move(e));
  }
  j["invariants"] = std::move(invs);

  auto hs = nlohmann::json::array();
  for (const auto& [pc, n] : st.iterations)
    hs.push_back({{"pc", pc}, {"iterations", n}});
  j["headers"] = std::move(hs);

  auto tr = nlohmann::json::array();
  for (const auto& h : st.header_trace)
    tr.push_back({{"pc", h.pc},
                  {"visit", h.visit},
                  {"before", h.states_before},
                  {"after", h.states_after},
                  {"widened", h.widened},
                  {"changed", h.changed}});
  j["header_trace"] = std::move(tr);
  if (!st.edge_trace.empty()) j["edge_trace"] = st.edge_trace;
  return j.dump(2);
}

}  // namespace qsda

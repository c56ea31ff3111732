#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "qsda/heap.hpp"
#include "tests/util.hpp"

using namespace qsda;

namespace {

EnvPtr fig_env() {
  return make_env({"head", "cur", "prev", "tmp", "key"}, 2);
}

Letter mk_letter(const EnvPtr& env, std::initializer_list<const char*> names,
                 int uvar = -1, bool root = false) {
  uint32_t m = 0;
  for (const char* n : names) m |= 1u << env->pv_index(n);
  return Letter::make(m, uvar, root);
}

// The running example: head -> 2 -> 6 -> 9 -> nil with prev on the 6 node,
// cur on the 9 node, tmp -> 8 -> (9 node), and key's cell holding 8.
HeapConfig fig_config(const EnvPtr& env) {
  return mk_config(env,
                   /*next*/ {-1, 0, 3, 4, 1, 4, 0},
                   /*data*/ {0, 0, 2, 6, 9, 8, 8},
                   {{"nil", 1},
                    {"head", 2},
                    {"prev", 3},
                    {"cur", 4},
                    {"tmp", 5},
                    {"key", 6}});
}

// Renumber locations by perm (perm[0] must be 0); pval/next/data follow.
HeapConfig permuted(const HeapConfig& c, const std::vector<int>& perm) {
  int n = c.nlocs();
  HeapConfig r;
  r.env = c.env;
  r.next.assign(n, 0);
  r.data.assign(n, 0);
  r.pval.assign(c.pval.size(), 0);
  for (int v = 0; v < n; ++v) {
    r.next[perm[v]] = c.next[v] < 0 ? -1 : perm[c.next[v]];
    r.data[perm[v]] = c.data[v];
  }
  for (size_t i = 0; i < c.pval.size(); ++i) r.pval[i] = perm[c.pval[i]];
  return r;
}

int count_leaves(const Tree& t) {
  if (t.kids.empty()) return 1;
  int n = 0;
  for (const auto& k : t.kids) n += count_leaves(k);
  return n;
}

int max_branching(const Tree& t) {
  int m = (int)t.kids.size();
  for (const auto& k : t.kids) m = std::max(m, max_branching(k));
  return m;
}

}  // namespace

TEST_CASE("running example encodes to the expected skinny-tree") {
  auto env = fig_env();
  auto c = fig_config(env);
  std::string why;
  REQUIRE(c.valid(&why));

  Tree head_t{mk_letter(env, {"head"}), 2, {}};
  Tree prev_t{mk_letter(env, {"prev"}), 6, {head_t}};
  Tree tmp_t{mk_letter(env, {"tmp"}), 8, {}};
  Tree cur_t{mk_letter(env, {"cur"}), 9, {prev_t, tmp_t}};
  Tree nil_t{mk_letter(env, {"nil"}), 0, {cur_t}};
  Tree key_t{mk_letter(env, {"key"}), 8, {}};
  Tree expect{Letter::make(0, -1, true), 0, {nil_t, key_t}};

  CHECK(encode(c) == expect);
  CHECK(tree_size(encode(c)) == 6);
  CHECK(count_leaves(encode(c)) == 3);  // head, tmp, key cells
}

TEST_CASE("encoding is invariant under location renumbering") {
  auto env = fig_env();
  auto c = fig_config(env);
  // dirty stays at 0; shuffle the rest
  std::vector<int> perm = {0, 4, 6, 1, 5, 3, 2};
  auto p = permuted(c, perm);
  std::string why;
  REQUIRE(p.valid(&why));
  CHECK(encode(p) == encode(c));
  CHECK(p.canonical_key() == c.canonical_key());
}

TEST_CASE("canonical keys separate distinct heaps") {
  auto env = fig_env();
  auto c = fig_config(env);
  auto d1 = c;
  d1.data[2] = 3;  // different datum
  auto d2 = c;
  d2.pval[env->pv_index("tmp")] = 4;  // tmp joins cur's node, its old node dies
  d2.collect_garbage();
  std::set<std::string> keys = {c.canonical_key(), d1.canonical_key(),
                                d2.canonical_key()};
  CHECK(keys.size() == 3);
}

TEST_CASE("one node carrying every pointer gives a single chain") {
  auto env = make_env({"a", "b"}, 0);
  auto c = mk_config(env, {-1, 0, 1}, {0, 0, 7},
                     {{"nil", 1}, {"a", 2}, {"b", 2}});
  std::string why;
  REQUIRE(c.valid(&why));
  auto t = encode(c);
  REQUIRE(t.kids.size() == 1);  // nil under the root
  CHECK(t.kids[0].letter == mk_letter(env, {"nil"}));
  REQUIRE(t.kids[0].kids.size() == 1);
  CHECK(t.kids[0].kids[0].letter == mk_letter(env, {"a", "b"}));
  CHECK(t.kids[0].kids[0].datum == 7);
  CHECK(t.kids[0].kids[0].kids.empty());
}

TEST_CASE("a plain list encodes without branching") {
  auto env = make_env({"head"}, 0);
  auto c = mk_list(env, "head", {1, 2, 3, 4, 5});
  std::string why;
  REQUIRE(c.valid(&why));
  auto t = encode(c);
  CHECK(max_branching(t) == 1);
  CHECK(tree_size(t) == 6);
  // path from the root carries the list data closest-to-nil first
  std::vector<Datum> path;
  const Tree* p = &t.kids[0];  // nil node
  while (!p->kids.empty()) {
    p = &p->kids[0];
    path.push_back(p->datum);
  }
  CHECK(path == std::vector<Datum>{5, 4, 3, 2, 1});
  CHECK(p->letter == mk_letter(env, {"head"}));
}

TEST_CASE("leaf count never exceeds the pointer count") {
  Rng rng(20240817);
  auto env = make_env({"a", "b", "c"}, 0);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    int n = 2 + rng.range(0, 5);
    HeapConfig c;
    c.env = env;
    c.next.assign(n, 0);
    c.data.assign(n, 0);
    c.next[0] = -1;
    c.next[1] = 0;
    for (int v = 2; v < n; ++v) {
      c.next[v] = rng.range(0, v - 1);  // lower target keeps it acyclic
      c.data[v] = rng.range(-3, 3);
    }
    c.pval = {1, rng.range(1, n - 1), rng.range(1, n - 1), rng.range(1, n - 1)};
    c.collect_garbage();
    std::string why;
    if (!c.valid(&why)) continue;  // e.g. a pointer landed on a dirty-next node
    ++checked;
    CHECK(count_leaves(encode(c)) <= env->npv());
  }
  CHECK(checked > 200);
}

TEST_CASE("valuation counts follow the falling factorial") {
  auto env = fig_env();  // two universals
  auto t = encode(fig_config(env));
  auto vs = valuations(t, *env);
  CHECK(vs.size() == 30);  // 6 non-root nodes, 6*5 placements

  // the placement discussed alongside the running example: y1 on prev's
  // node, y2 on cur's node
  Tree head_t{mk_letter(env, {"head"}), 2, {}};
  Tree prev_t{mk_letter(env, {"prev"}, 0), 6, {head_t}};
  Tree tmp_t{mk_letter(env, {"tmp"}), 8, {}};
  Tree cur_t{mk_letter(env, {"cur"}, 1), 9, {prev_t, tmp_t}};
  Tree nil_t{mk_letter(env, {"nil"}), 0, {cur_t}};
  Tree key_t{mk_letter(env, {"key"}), 8, {}};
  Tree want{Letter::make(0, -1, true), 0, {nil_t, key_t}};
  canonicalize(want);
  CHECK(std::count(vs.begin(), vs.end(), want) == 1);

  // every valuation keeps the underlying shape: stripping uvars restores t
  for (const auto& v : vs) {
    std::function<Tree(const Tree&)> strip = [&](const Tree& x) {
      Tree r{Letter::make(x.letter.ptrs(), -1, x.letter.root()), x.datum, {}};
      for (const auto& k : x.kids) r.kids.push_back(strip(k));
      canonicalize(r);
      return r;
    };
    CHECK(strip(v) == t);
  }
}

TEST_CASE("valuations degenerate correctly at the edges") {
  auto env0 = make_env({"p"}, 0);
  auto t0 = encode(mk_list(env0, "p", {4}));
  auto vs0 = valuations(t0, *env0);
  REQUIRE(vs0.size() == 1);
  CHECK(vs0[0] == t0);

  auto env2 = make_env({"p"}, 2);
  auto small = encode(mk_config(env2, {-1, 0}, {0, 0}, {{"nil", 1}, {"p", 1}}));
  CHECK(valuations(small, *env2).empty());  // one non-root node, two universals

  auto two = encode(mk_list(env2, "p", {4}));
  CHECK(valuations(two, *env2).size() == 2);  // 2*1 ordered placements
}

TEST_CASE("garbage collection keeps exactly the pointer-anchored chains") {
  auto env = make_env({"p"}, 0);
  // locs 3 and 4 point into the live chain but nothing reaches them
  auto c = mk_config(env, {-1, 0, 1, 2, 3}, {0, 0, 9, 5, 6},
                     {{"nil", 1}, {"p", 2}});
  std::string why;
  CHECK_FALSE(c.valid(&why));
  CHECK(why.find("garbage") != std::string::npos);
  c.collect_garbage();
  REQUIRE(c.valid(&why));
  CHECK(c.nlocs() == 3);
  CHECK(c.canonical_key() == mk_list(env, "p", {9}).canonical_key());
}

TEST_CASE("validity rejects malformed configurations") {
  auto env = make_env({"p"}, 0);
  std::string why;

  auto cyc = mk_config(env, {-1, 0, 3, 2}, {0, 0, 0, 0},
                       {{"nil", 1}, {"p", 2}});
  CHECK_FALSE(cyc.valid(&why));

  auto nil_on_dirty = mk_config(env, {-1, 0, 1}, {0, 0, 0},
                                {{"nil", 0}, {"p", 2}});
  CHECK_FALSE(nil_on_dirty.valid(&why));

  auto nil_miswired = mk_config(env, {-1, 2, 1}, {0, 0, 0},
                                {{"nil", 1}, {"p", 2}});
  CHECK_FALSE(nil_miswired.valid(&why));

  auto bad_next = mk_config(env, {-1, 0, -1}, {0, 0, 0},
                            {{"nil", 1}, {"p", 2}});
  CHECK_FALSE(bad_next.valid(&why));

  auto ok = mk_list(env, "p", {1});
  CHECK(ok.valid(&why));
}

TEST_CASE("dot export emits a graph for both views") {
  auto env = fig_env();
  auto c = fig_config(env);
  auto hd = heap_to_dot(c);
  auto td = tree_to_dot(encode(c), *env, true);
  CHECK(hd.find("digraph") != std::string::npos);
  CHECK(td.find("digraph") != std::string::npos);
  CHECK(td.find("head") != std::string::npos);
}

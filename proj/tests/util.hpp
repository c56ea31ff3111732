// Shared helpers for the test binaries: deterministic RNG and heap builders.
#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qsda/heap.hpp"

namespace qsda {

// xorshift64*; deterministic across platforms so frozen expectations hold
struct Rng {
  uint64_t s;
  explicit Rng(uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  uint64_t next() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 0x2545f4914f6cdd1dull;
  }
  int range(int lo, int hi) {  // inclusive
    return lo + int(next() % uint64_t(hi - lo + 1));
  }
};

// Builds a config from explicit maps; pointers not mentioned rest on nil.
// "nil" must be mapped.
inline HeapConfig mk_config(const EnvPtr& env, std::vector<int> next,
                            std::vector<Datum> data,
                            const std::map<std::string, int>& pv) {
  assert(pv.count("nil"));
  HeapConfig c;
  c.env = env;
  c.next = std::move(next);
  c.data = std::move(data);
  c.pval.assign(env->npv(), -1);
  for (const auto& [name, loc] : pv) {
    int i = env->pv_index(name);
    assert(i >= 0);
    c.pval[i] = loc;
  }
  for (auto& v : c.pval)
    if (v < 0) v = c.pval[0];
  return c;
}

// head -> d[0] -> d[1] -> ... -> nil; extra pointers rest on nil.
inline HeapConfig mk_list(const EnvPtr& env, const std::string& head,
                          const std::vector<Datum>& ds) {
  int n = (int)ds.size();
  std::vector<int> next(n + 2);
  std::vector<Datum> data(n + 2, 0);
  next[0] = -1;
  next[1] = 0;  // nil node
  for (int i = 0; i < n; ++i) {
    next[2 + i] = (i + 1 < n) ? 3 + i : 1;
    data[2 + i] = ds[i];
  }
  return mk_config(env, next, data, {{"nil", 1}, {head, n > 0 ? 2 : 1}});
}

}  // namespace qsda

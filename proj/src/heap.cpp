#include "qsda/heap.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace qsda {

bool HeapConfig::valid(std::string* why) const {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  const int n = nlocs();
  if (n < 2) return fail("need at least dirty and the nil node");
  if (static_cast<int>(data.size()) != n) return fail("data size mismatch");
  if (static_cast<int>(pval.size()) != env->npv()) return fail("pval size mismatch");
  if (next[0] != -1) return fail("dirty must have no next");
  for (int v = 1; v < n; ++v)
    if (next[v] < 0 || next[v] >= n) return fail("next out of range");
  // Acyclicity: walking next from any loc reaches dirty.
  for (int v = 1; v < n; ++v) {
    int steps = 0, u = v;
    while (u != 0) {
      u = next[u];
      if (++steps > n) return fail("next cycle");
    }
  }
  for (int p = 0; p < env->npv(); ++p)
    if (pval[p] < 0 || pval[p] >= n) return fail("pval out of range");
  int niln = pval[0];
  if (niln == 0) return fail("nil may not point to dirty");
  if (next[niln] != 0) return fail("nil node's next must be dirty");
  // Garbage-freedom: every loc except dirty has a pointer in its subtree.
  std::vector<char> live(n, 0);
  for (int p = 0; p < env->npv(); ++p) {
    int u = pval[p];
    while (u != 0 && !live[u]) {
      live[u] = 1;
      u = next[u];
    }
  }
  for (int v = 1; v < n; ++v)
    if (!live[v]) return fail("garbage location " + std::to_string(v));
  return true;
}

void HeapConfig::collect_garbage() {
  const int n = nlocs();
  std::vector<char> live(n, 0);
  live[0] = 1;
  for (int p = 0; p < env->npv(); ++p) {
    int u = pval[p];
    while (u >= 0 && !live[u]) {
      live[u] = 1;
      u = next[u];
    }
  }
  std::vector<int> remap(n, -1);
  int m = 0;
  for (int v = 0; v < n; ++v)
    if (live[v]) remap[v] = m++;
  if (m == n) return;
  std::vector<int> nnext(m);
  std::vector<Datum> ndata(m);
  for (int v = 0; v < n; ++v)
    if (live[v]) {
      nnext[remap[v]] = next[v] < 0 ? -1 : remap[next[v]];
      ndata[remap[v]] = data[v];
    }
  for (auto& p : pval) p = remap[p];
  next = std::move(nnext);
  data = std::move(ndata);
}

bool tree_less(const Tree& a, const Tree& b) {
  if (a.letter != b.letter) return a.letter < b.letter;
  if (a.datum != b.datum) return a.datum < b.datum;
  if (a.kids.size() != b.kids.size()) return a.kids.size() < b.kids.size();
  for (size_t i = 0; i < a.kids.size(); ++i) {
    if (tree_less(a.kids[i], b.kids[i])) return true;
    if (tree_less(b.kids[i], a.kids[i])) return false;
  }
  return false;
}

void canonicalize(Tree& t) {
  for (auto& k : t.kids) canonicalize(k);
  std::sort(t.kids.begin(), t.kids.end(), tree_less);
}

Tree encode(const HeapConfig& c) {
  const int n = c.nlocs();
  std::vector<uint32_t> ptrs(n, 0);
  for (int p = 0; p < c.env->npv(); ++p) ptrs[c.pval[p]] |= 1u << p;
  std::vector<std::vector<int>> kids(n);
  for (int v = 1; v < n; ++v) kids[c.next[v]].push_back(v);
  std::function<Tree(int)> build = [&](int v) {
    Tree t;
    t.letter = Letter::make(ptrs[v], -1, v == 0);
    t.datum = c.data[v];
    for (int k : kids[v]) t.kids.push_back(build(k));
    return t;
  };
  Tree t = build(0);
  canonicalize(t);
  return t;
}

namespace {
void collect_nodes(Tree& t, std::vector<Tree*>& out, bool root) {
  if (!root) out.push_back(&t);
  for (auto& k : t.kids) collect_nodes(k, out, false);
}
}  // namespace

std::vector<Tree> valuations(const Tree& heap_tree, const Env& env) {
  std::vector<Tree> out;
  const int ny = env.ny;
  if (ny == 0) {
    Tree t = heap_tree;
    canonicalize(t);
    out.push_back(std::move(t));
    return out;
  }
  Tree base = heap_tree;
  std::vector<Tree*> nodes;
  collect_nodes(base, nodes, true);
  const int n = static_cast<int>(nodes.size());
  if (n < ny) return out;  // no injective placement
  std::vector<int> pos(ny, 0);
  std::function<void(int)> rec = [&](int j) {
    if (j == ny) {
      Tree t = base;
      canonicalize(t);
      out.push_back(std::move(t));
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (nodes[i]->letter.uvar() >= 0) continue;
      nodes[i]->letter = Letter::make(nodes[i]->letter.ptrs(), j, false);
      rec(j + 1);
      nodes[i]->letter = Letter::make(nodes[i]->letter.ptrs(), -1, false);
    }
  };
  rec(0);
  return out;
}

int tree_size(const Tree& t) {
  int n = 0;
  for (const auto& k : t.kids) n += 1 + tree_size(k);
  return n;
}

std::string HeapConfig::canonical_key() const {
  Tree t = encode(*this);
  std::ostringstream os;
  std::function<void(const Tree&)> ser = [&](const Tree& u) {
    os << u.letter.bits << ':' << u.datum << '(';
    for (const auto& k : u.kids) ser(k);
    os << ')';
  };
  ser(t);
  return os.str();
}

std::string tree_to_dot(const Tree& t, const Env& env, bool with_data) {
  std::ostringstream os;
  os << "digraph tree {\n  node [shape=box];\n";
  int ctr = 0;
  std::function<int(const Tree&)> emit = [&](const Tree& u) -> int {
    int id = ctr++;
    os << "  n" << id << " [label=\"" << render_letter(u.letter, env);
    if (with_data) os << " " << u.datum;
    os << "\"];\n";
    for (const auto& k : u.kids) {
      int kid = emit(k);
      os << "  n" << id << " -> n" << kid << ";\n";
    }
    return id;
  };
  emit(t);
  os << "}\n";
  return os.str();
}

std::string heap_to_dot(const HeapConfig& c) {
  std::ostringstream os;
  os << "digraph heap {\n  rankdir=LR;\n  node [shape=record];\n";
  for (int v = 0; v < c.nlocs(); ++v) {
    os << "  n" << v << " [label=\"" << (v == 0 ? "dirty" : "") << "|" << c.data[v] << "\"];\n";
    if (v > 0) os << "  n" << v << " -> n" << c.next[v] << ";\n";
  }
  for (int p = 0; p < c.env->npv(); ++p)
    os << "  p" << p << " [shape=plaintext,label=\"" << c.env->pv[p] << "\"];\n  p" << p
       << " -> n" << c.pval[p] << " [style=dashed];\n";
  os << "}\n";
  return os.str();
}

}  // namespace qsda

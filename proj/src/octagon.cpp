#include "qsda/octagon.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace qsda {

namespace {
inline Bound badd(Bound a, Bound b) {
  if (a >= kInf || b >= kInf) return kInf;
  return a + b;
}
inline Bound fdiv2(Bound v) { return v >> 1; }  // floor division by 2 (C++20 arithmetic shift)
inline int bar(int i) { return i ^ 1; }
}  // namespace

DataFormula::DataFormula(const EnvPtr& env, bool bottom) : env_(env), bottom_(bottom) {
  if (!bottom_) {
    m_.assign(size_t(n2()) * n2(), kInf);
    for (int i = 0; i < n2(); ++i) at(i, i) = 0;
  }
}

void DataFormula::close() {
  if (bottom_) return;
  const int n = n2();
  // Ensure coherence before closing: m[i][j] and m[bar j][bar i] encode the
  // same constraint.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Bound b = std::min(at(i, j), at(bar(j), bar(i)));
      at(i, j) = b;
      at(bar(j), bar(i)) = b;
    }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      if (at(i, k) >= kInf) continue;
      for (int j = 0; j < n; ++j) {
        Bound via = badd(at(i, k), at(k, j));
        if (via < at(i, j)) at(i, j) = via;
      }
    }
  for (int i = 0; i < n; ++i)
    if (at(i, i) < 0) {
      bottom_ = true;
      m_.clear();
      return;
    }
  // Integer tightening: unary bounds are even (2t <= c).
  for (int i = 0; i < n; ++i)
    if (at(i, bar(i)) < kInf) at(i, bar(i)) = 2 * fdiv2(at(i, bar(i)));
  for (int i = 0; i < n; ++i)
    if (badd(at(i, bar(i)), at(bar(i), i)) < 0) {
      bottom_ = true;
      m_.clear();
      return;
    }
  for (int i = 0; i < n; ++i) {
    if (at(i, bar(i)) >= kInf) continue;
    for (int j = 0; j < n; ++j) {
      if (i == j || at(bar(j), j) >= kInf) continue;
      Bound via = fdiv2(at(i, bar(i))) + fdiv2(at(bar(j), j));
      if (via < at(i, j)) at(i, j) = via;
    }
  }
}

bool DataFormula::is_top() const {
  if (bottom_) return false;
  const int n = n2();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && at(i, j) < kInf) return false;
  return true;
}

DataFormula DataFormula::meet(const DataFormula& o) const {
  assert(*env_ == *o.env_);
  if (bottom_) return *this;
  if (o.bottom_) return o;
  DataFormula r = *this;
  for (size_t i = 0; i < m_.size(); ++i) r.m_[i] = std::min(m_[i], o.m_[i]);
  r.close();
  return r;
}

DataFormula DataFormula::join(const DataFormula& o) const {
  assert(*env_ == *o.env_);
  if (bottom_) return o;
  if (o.bottom_) return *this;
  DataFormula r = *this;
  for (size_t i = 0; i < m_.size(); ++i) r.m_[i] = std::max(m_[i], o.m_[i]);
  r.close();
  return r;
}

bool DataFormula::leq(const DataFormula& o) const {
  assert(*env_ == *o.env_);
  if (bottom_) return true;
  if (o.bottom_) return false;
  for (size_t i = 0; i < m_.size(); ++i)
    if (m_[i] > o.m_[i]) return false;
  return true;
}

DataFormula DataFormula::widen(const DataFormula& o) const {
  assert(*env_ == *o.env_);
  if (bottom_) return o;
  if (o.bottom_) return *this;
  DataFormula r = *this;
  for (size_t i = 0; i < m_.size(); ++i) r.m_[i] = (o.m_[i] <= m_[i]) ? m_[i] : kInf;
  r.close();
  return r;
}

DataFormula DataFormula::project(int t) const {
  return project_merged({t});
}

DataFormula DataFormula::project_merged(const std::vector<int>& group) const {
  if (bottom_) return *this;
  DataFormula r = *this;
  if (group.size() > 1) {
    // Co-located terms share one value: equate before dropping.
    for (size_t k = 1; k < group.size(); ++k) {
      r = r.constrain_eq(group[0], group[k]);
      if (r.bottom_) return r;
    }
  }
  const int n = n2();
  for (int t : group) {
    for (int v : {2 * t, 2 * t + 1})
      for (int j = 0; j < n; ++j) {
        r.at(v, j) = (v == j) ? 0 : kInf;
        r.at(j, v) = (v == j) ? 0 : kInf;
      }
  }
  // Input was closed, so remaining bounds are already the strongest; re-close
  // for the tightening invariants.
  r.close();
  return r;
}

DataFormula DataFormula::with_atom(const OctAtom& a) const {
  if (bottom_) return *this;
  DataFormula r = *this;
  auto idx = [](int t, int sign) { return sign > 0 ? 2 * t : 2 * t + 1; };
  if (a.term2 < 0) {
    // sign1*t1 <= c  ->  x_i - x_bar(i) <= 2c
    int i = idx(a.term1, a.sign1);
    r.at(i, bar(i)) = std::min(r.at(i, bar(i)), Bound(2) * a.c);
  } else if (a.term1 == a.term2) {
    if (a.sign1 == a.sign2) {  // 2*sign*t <= c
      int i = idx(a.term1, a.sign1);
      r.at(i, bar(i)) = std::min(r.at(i, bar(i)), a.c);
    } else if (a.c < 0) {  // t - t <= c < 0: unsatisfiable
      r.bottom_ = true;
      r.m_.clear();
      return r;
    }
  } else {
    // sign1*t1 + sign2*t2 <= c -> x_i - x_bar(j) <= c
    int i = idx(a.term1, a.sign1);
    int j = idx(a.term2, a.sign2);
    r.at(i, bar(j)) = std::min(r.at(i, bar(j)), a.c);
    r.at(j, bar(i)) = std::min(r.at(j, bar(i)), a.c);
  }
  r.close();
  return r;
}

DataFormula DataFormula::constrain_eq(int t1, int t2) const {
  if (t1 == t2) return *this;
  DataFormula r = with_atom({1, t1, -1, t2, 0});
  return r.with_atom({1, t2, -1, t1, 0});
}

bool DataFormula::eval(const std::vector<Datum>& vals) const {
  if (bottom_) return false;
  const int n = n2();
  auto val = [&](int i) -> Bound {
    Bound v = vals[i / 2];
    return (i % 2) ? -v : v;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (at(i, j) >= kInf) continue;
      if (val(i) - val(j) > at(i, j)) return false;
    }
  return true;
}

bool DataFormula::operator==(const DataFormula& o) const {
  if (bottom_ != o.bottom_) return false;
  if (bottom_) return true;
  return m_ == o.m_;
}

bool DataFormula::operator<(const DataFormula& o) const {
  if (bottom_ != o.bottom_) return bottom_ > o.bottom_;
  if (bottom_) return false;
  return m_ < o.m_;
}

std::vector<OctAtom> DataFormula::atoms() const {
  std::vector<OctAtom> out;
  if (bottom_) return out;
  const int n = env_->nvars();
  for (int t = 0; t < n; ++t) {
    if (at(2 * t, 2 * t + 1) < kInf) out.push_back({1, t, 0, -1, fdiv2(at(2 * t, 2 * t + 1))});
    if (at(2 * t + 1, 2 * t) < kInf) out.push_back({-1, t, 0, -1, fdiv2(at(2 * t + 1, 2 * t))});
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (at(2 * a, 2 * b) < kInf) out.push_back({1, a, -1, b, at(2 * a, 2 * b)});
      if (at(2 * b, 2 * a) < kInf) out.push_back({-1, a, 1, b, at(2 * b, 2 * a)});
      if (at(2 * a, 2 * b + 1) < kInf) out.push_back({1, a, 1, b, at(2 * a, 2 * b + 1)});
      if (at(2 * a + 1, 2 * b) < kInf) out.push_back({-1, a, -1, b, at(2 * a + 1, 2 * b)});
    }
  return out;
}

std::string DataFormula::render() const {
  if (bottom_) return "false";
  auto as = atoms();
  if (as.empty()) return "true";
  std::ostringstream os;
  bool first = true;
  auto term = [&](int sign, int t) {
    return std::string(sign < 0 ? "-" : "") + env_->term_name(t);
  };
  for (const auto& a : as) {
    if (!first) os << " && ";
    first = false;
    os << term(a.sign1, a.term1);
    if (a.term2 >= 0) os << (a.sign2 > 0 ? " + " : " - ") << env_->term_name(a.term2);
    os << " <= " << a.c;
  }
  return os.str();
}

std::vector<std::tuple<int, int, Bound>> DataFormula::finite_entries() const {
  std::vector<std::tuple<int, int, Bound>> es;
  if (bottom_) return es;
  const int n = n2();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && at(i, j) < kInf) es.emplace_back(i, j, at(i, j));
  return es;
}

DataFormula DataFormula::from_entries(const EnvPtr& env,
                                      const std::vector<std::tuple<int, int, Bound>>& es) {
  DataFormula r = top(env);
  for (auto& [i, j, c] : es) r.at(i, j) = std::min(r.at(i, j), c);
  r.close();
  return r;
}

std::vector<OctAtom> atoms_from_cmp(std::optional<int> lt, Datum lc, CmpOp op,
                                    std::optional<int> rt, Datum rc) {
  // Normalize Gt/Ge by swapping sides.
  if (op == CmpOp::Gt || op == CmpOp::Ge) {
    std::swap(lt, rt);
    std::swap(lc, rc);
    op = (op == CmpOp::Gt) ? CmpOp::Lt : CmpOp::Le;
  }
  if (op == CmpOp::Ne)
    throw InexpressiblePredicate("octagons cannot express != atomically");

  std::vector<OctAtom> out;
  auto le = [&](Bound slack) {
    // (lt + lc) - (rt + rc) <= slack, either term optional
    Bound c = slack + rc - lc;
    if (lt && rt)
      out.push_back({1, *lt, -1, *rt, c});
    else if (lt)
      out.push_back({1, *lt, 0, -1, c});
    else if (rt)
      out.push_back({-1, *rt, 0, -1, c});
    else if (c < 0)  // constant comparison that is false
      out.push_back({1, 0, -1, 0, -1});  // t0 - t0 <= -1: unsatisfiable
  };
  switch (op) {
    case CmpOp::Le: le(0); break;
    case CmpOp::Lt: le(-1); break;  // integers: < is <= -1
    case CmpOp::Eq: {
      le(0);
      std::swap(lt, rt);
      std::swap(lc, rc);
      le(0);
      break;
    }
    default: break;
  }
  return out;
}

}  // namespace qsda

#include "qsda/lang.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstring>
#include <sstream>

namespace qsda {

// ---------- tokenizer ----------

namespace {

struct Tok {
  enum Kind { Ident, Int, Sym, End } kind = End;
  std::string s;
  long long v = 0;
  int line = 1, col = 1;
};

const char* kSymbols[] = {":=", "->", "==", "!=", "<=", ">=", "&&", "||",
                          "(",  ")",  ",",  ";",  ":",  "<",  ">",  "!",
                          "@",  "*",  "+",  "-"};

std::vector<Tok> lex(const std::string& text) {
  std::vector<Tok> out;
  int line = 1, col = 1;
  size_t i = 0, n = text.size();
  auto advance = [&](size_t k) {
    for (size_t j = 0; j < k; j++) {
      if (text[i + j] == '\n') { line++; col = 1; } else { col++; }
    }
    i += k;
  };
  while (i < n) {
    char c = text[i];
    if (c == '#') {  // line comment
      while (i < n && text[i] != '\n') advance(1);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(1); continue; }
    Tok t;
    t.line = line;
    t.col = col;
    if (isalpha((unsigned char)c) || c == '_') {
      size_t j = i;
      while (j < n && (isalnum((unsigned char)text[j]) || text[j] == '_')) j++;
      t.kind = Tok::Ident;
      t.s = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (isdigit((unsigned char)c)) {
      size_t j = i;
      while (j < n && isdigit((unsigned char)text[j])) j++;
      t.kind = Tok::Int;
      t.s = text.substr(i, j - i);
      t.v = std::stoll(t.s);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    bool matched = false;
    for (const char* sym : kSymbols) {
      size_t len = strlen(sym);
      if (text.compare(i, len, sym) == 0) {
        t.kind = Tok::Sym;
        t.s = sym;
        advance(len);
        out.push_back(t);
        matched = true;
        break;
      }
    }
    if (!matched)
      throw SyntaxError("unexpected character '" + std::string(1, c) + "'", line, col);
  }
  Tok end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string> kReserved = {"pointer", "data", "skip", "assume",
                                         "if",      "then", "else", "fi",
                                         "while",   "do",   "od",   "new",
                                         "nil",     "next", "desc"};

// ---------- parser ----------

struct TermRef {  // one comparison side before struct/data classification
  enum Kind { Ptr, NextOf, ReachOf, Data } kind;
  int pv = -1;
  DataTermRef d;
};

struct Parser {
  std::vector<Tok> toks;
  size_t pos = 0;
  std::vector<std::string> ptr_names;   // without nil
  std::vector<std::string> data_names;
  std::map<std::string, int> ptr_index;   // name -> pv index (nil=0)
  std::map<std::string, int> data_cell;   // data var -> future pv index
  int next_pc = 1;

  std::vector<PcStmt> stmts;
  std::vector<PropertySpec> pres;
  std::vector<AssertSpec> asserts;
  std::optional<int> universals_hint;

  const Tok& peek(int k = 0) const {
    size_t j = pos + k;
    return j < toks.size() ? toks[j] : toks.back();
  }
  Tok take() { return toks[std::min(pos++, toks.size() - 1)]; }
  [[noreturn]] void fail(const std::string& msg, const Tok& t) {
    throw SyntaxError(msg, t.line, t.col);
  }
  bool accept_sym(const std::string& s) {
    if (peek().kind == Tok::Sym && peek().s == s) { pos++; return true; }
    return false;
  }
  bool accept_kw(const std::string& s) {
    if (peek().kind == Tok::Ident && peek().s == s) { pos++; return true; }
    return false;
  }
  void expect_sym(const std::string& s) {
    if (!accept_sym(s)) fail("expected '" + s + "'", peek());
  }
  void expect_kw(const std::string& s) {
    if (!accept_kw(s)) fail("expected '" + s + "'", peek());
  }
  std::string expect_name() {
    if (peek().kind != Tok::Ident) fail("expected identifier", peek());
    return take().s;
  }
  long long expect_int() {
    if (peek().kind != Tok::Int) fail("expected integer", peek());
    return take().v;
  }

  bool is_ptr(const std::string& s) const { return ptr_index.count(s) > 0; }
  bool is_data(const std::string& s) const { return data_cell.count(s) > 0; }
  int ptr_of(const Tok& t) {
    auto it = ptr_index.find(t.s);
    if (it == ptr_index.end()) {
      if (is_data(t.s)) fail("data variable '" + t.s + "' used as pointer", t);
      fail("undeclared variable '" + t.s + "'", t);
    }
    return it->second;
  }

  void parse_decls() {
    if (!accept_kw("pointer")) fail("expected 'pointer' declaration", peek());
    ptr_index["nil"] = 0;
    do {
      Tok t = take();
      if (t.kind != Tok::Ident) fail("expected pointer variable name", t);
      declare(t, false);
    } while (accept_sym(","));
    expect_sym(";");
    if (peek().kind == Tok::Ident && peek().s == "data") {
      take();
      do {
        Tok t = take();
        if (t.kind != Tok::Ident) fail("expected data variable name", t);
        declare(t, true);
      } while (accept_sym(","));
      expect_sym(";");
    }
    // data cells claim pointer indices after the declared pointers
    for (size_t i = 0; i < data_names.size(); i++)
      data_cell[data_names[i]] = (int)(1 + ptr_names.size() + i);
  }

  void declare(const Tok& t, bool is_data_var) {
    if (kReserved.count(t.s)) fail("reserved word '" + t.s + "'", t);
    if (ptr_index.count(t.s) || std::count(data_names.begin(), data_names.end(), t.s))
      fail("duplicate variable '" + t.s + "'", t);
    if (is_data_var) {
      data_names.push_back(t.s);
    } else {
      ptr_names.push_back(t.s);
      ptr_index[t.s] = (int)ptr_names.size();
    }
  }

  // data_expr ::= [-] int | data_var | pointer -> data, then optional +/- int
  DataTermRef parse_data_expr() {
    DataTermRef r;
    Tok t = peek();
    if (accept_sym("-")) {
      r.c = -expect_int();
    } else if (t.kind == Tok::Int) {
      r.c = take().v;
    } else if (t.kind == Tok::Ident) {
      take();
      if (is_data(t.s)) {
        r.pv = data_cell[t.s];
      } else if (is_ptr(t.s) && t.s != "nil") {
        expect_sym("->");
        expect_kw("data");
        r.pv = ptr_index[t.s];
      } else {
        fail("expected data expression", t);
      }
    } else {
      fail("expected data expression", t);
    }
    if (accept_sym("+")) r.c += expect_int();
    else if (accept_sym("-")) r.c -= expect_int();
    return r;
  }

  TermRef parse_term() {
    TermRef r;
    Tok t = peek();
    if (t.kind == Tok::Int || (t.kind == Tok::Sym && t.s == "-")) {
      r.kind = TermRef::Data;
      r.d = parse_data_expr();
      return r;
    }
    if (t.kind != Tok::Ident) fail("expected comparison operand", t);
    take();
    if (t.s == "nil") {
      r.kind = TermRef::Ptr;
      r.pv = 0;
      return r;
    }
    if (is_data(t.s)) {
      r.kind = TermRef::Data;
      r.d.pv = data_cell[t.s];
      if (accept_sym("+")) r.d.c += expect_int();
      else if (accept_sym("-")) r.d.c -= expect_int();
      return r;
    }
    int p = ptr_of(t);
    if (accept_sym("->")) {
      if (accept_sym("*")) {
        expect_kw("next");
        r.kind = TermRef::ReachOf;
        r.pv = p;
      } else if (accept_kw("next")) {
        r.kind = TermRef::NextOf;
        r.pv = p;
      } else if (accept_kw("data")) {
        r.kind = TermRef::Data;
        r.d.pv = p;
        if (accept_sym("+")) r.d.c += expect_int();
        else if (accept_sym("-")) r.d.c -= expect_int();
      } else {
        fail("expected 'next', '*next' or 'data'", peek());
      }
      return r;
    }
    r.kind = TermRef::Ptr;
    r.pv = p;
    return r;
  }

  PredPtr parse_atom() {
    Tok at = peek();
    TermRef lhs = parse_term();
    Tok opt = peek();
    CmpOp op;
    if (accept_sym("==")) op = CmpOp::Eq;
    else if (accept_sym("!=")) op = CmpOp::Ne;
    else if (accept_sym("<=")) op = CmpOp::Le;
    else if (accept_sym("<")) op = CmpOp::Lt;
    else if (accept_sym(">=")) op = CmpOp::Ge;
    else if (accept_sym(">")) op = CmpOp::Gt;
    else fail("expected comparison operator", opt);

    auto mk = [](Pred p) { return std::make_shared<Pred>(std::move(p)); };
    if (lhs.kind == TermRef::NextOf || lhs.kind == TermRef::ReachOf) {
      if (op != CmpOp::Eq && op != CmpOp::Ne)
        fail("pointer comparisons are == or != only", opt);
      TermRef rhs = parse_term();
      if (rhs.kind != TermRef::Ptr)
        fail("right side of a pointer comparison must be a pointer or nil", opt);
      Pred p;
      p.kind = Pred::SAtom;
      p.satom = {lhs.kind == TermRef::NextOf ? StructRel::Next : StructRel::Reach,
                 lhs.pv, rhs.pv, op == CmpOp::Ne};
      return mk(p);
    }
    if (lhs.kind == TermRef::Ptr) {
      if (op != CmpOp::Eq && op != CmpOp::Ne)
        fail("pointer comparisons are == or != only", opt);
      TermRef rhs = parse_term();
      if (rhs.kind != TermRef::Ptr)
        fail("cannot compare a pointer with a data value", at);
      Pred p;
      p.kind = Pred::SAtom;
      p.satom = {StructRel::Eq, lhs.pv, rhs.pv, op == CmpOp::Ne};
      return mk(p);
    }
    TermRef rhs = parse_term();
    if (rhs.kind != TermRef::Data)
      fail("cannot compare a data value with a pointer", at);
    Pred p;
    p.kind = Pred::DAtom;
    p.datom = {lhs.d, rhs.d, op};
    return mk(p);
  }

  PredPtr parse_not() {
    if (accept_sym("!")) {
      auto p = std::make_shared<Pred>();
      p->kind = Pred::Not;
      p->a = parse_not();
      return p;
    }
    if (peek().kind == Tok::Sym && peek().s == "(") {
      // lookahead: parenthesized sub-predicate vs. parenthesized... predicates
      // only; atoms never start with '('
      take();
      PredPtr inner = parse_or();
      expect_sym(")");
      return inner;
    }
    return parse_atom();
  }
  PredPtr parse_and() {
    PredPtr l = parse_not();
    while (accept_sym("&&")) {
      auto p = std::make_shared<Pred>();
      p->kind = Pred::And;
      p->a = l;
      p->b = parse_not();
      l = p;
    }
    return l;
  }
  PredPtr parse_or() {
    PredPtr l = parse_and();
    while (accept_sym("||")) {
      auto p = std::make_shared<Pred>();
      p->kind = Pred::Or;
      p->a = l;
      p->b = parse_and();
      l = p;
    }
    return l;
  }

  std::vector<PcStmt> parse_seq(const std::set<std::string>& stop) {
    std::vector<PcStmt> seq;
    while (true) {
      while (peek().kind == Tok::Sym && peek().s == "@") parse_annotation();
      const Tok& t = peek();
      if (t.kind == Tok::End) break;
      if (t.kind == Tok::Ident && stop.count(t.s)) break;
      seq.push_back(parse_pc_stmt());
    }
    return seq;
  }

  PcStmt parse_pc_stmt() {
    Tok pct = peek();
    long long pc = expect_int();
    if (pc != next_pc)
      fail("statement labels must be contiguous from 1; expected " +
               std::to_string(next_pc),
           pct);
    next_pc++;
    expect_sym(":");
    PcStmt ps;
    ps.pc = (int)pc;
    ps.s = parse_stmt();
    expect_sym(";");
    return ps;
  }

  Stmt parse_stmt() {
    Stmt s;
    Tok t = peek();
    if (t.kind != Tok::Ident) fail("expected statement", t);
    if (accept_kw("skip")) { s.kind = StmtKind::Skip; return s; }
    if (accept_kw("new")) {
      s.kind = StmtKind::New;
      Tok v = take();
      if (v.kind != Tok::Ident) fail("expected pointer variable", v);
      s.p = ptr_of(v);
      if (s.p == 0) fail("cannot allocate into nil", v);
      return s;
    }
    if (accept_kw("assume")) {
      s.kind = StmtKind::Assume;
      expect_sym("(");
      s.pred = parse_or();
      expect_sym(")");
      return s;
    }
    if (accept_kw("if")) {
      s.kind = StmtKind::If;
      s.pred = parse_or();
      expect_kw("then");
      s.body = parse_seq({"else", "fi"});
      if (s.body.empty()) fail("empty 'then' branch", peek());
      if (accept_kw("else")) {
        s.orelse = parse_seq({"fi"});
        if (s.orelse.empty()) fail("empty 'else' branch", peek());
      }
      expect_kw("fi");
      return s;
    }
    if (accept_kw("while")) {
      s.kind = StmtKind::While;
      s.pred = parse_or();
      expect_kw("do");
      s.body = parse_seq({"od"});
      if (s.body.empty()) fail("empty loop body", peek());
      expect_kw("od");
      return s;
    }
    // assignment forms
    Tok lhs = take();
    if (lhs.s == "nil") fail("cannot assign to nil", lhs);
    if (is_data(lhs.s)) {
      expect_sym(":=");
      s.kind = StmtKind::DataAssign;
      s.p = data_cell[lhs.s];
      s.expr = parse_data_expr();
      return s;
    }
    int p = ptr_of(lhs);
    if (accept_sym("->")) {
      if (accept_kw("next")) {
        expect_sym(":=");
        s.kind = StmtKind::NextAssign;
        s.p = p;
        Tok r = take();
        if (r.kind != Tok::Ident) fail("expected pointer or nil", r);
        s.q = r.s == "nil" ? 0 : ptr_of(r);
        if (peek().kind == Tok::Sym && peek().s == "->")
          fail("right side of a next assignment must be a plain pointer", peek());
        return s;
      }
      if (accept_kw("data")) {
        expect_sym(":=");
        s.kind = StmtKind::DataAssign;
        s.p = p;
        s.expr = parse_data_expr();
        return s;
      }
      fail("expected 'next' or 'data'", peek());
    }
    expect_sym(":=");
    Tok r = peek();
    if (r.kind == Tok::Int) fail("cannot assign a data value to a pointer", r);
    std::string rn = expect_name();
    if (rn == "nil") {
      s.kind = StmtKind::PtrAssign;
      s.p = p;
      s.q = 0;
      return s;
    }
    if (is_data(rn)) fail("cannot assign a data value to a pointer", r);
    int q = ptr_index.count(rn) ? ptr_index[rn] : (fail("undeclared variable '" + rn + "'", r), 0);
    if (accept_sym("->")) {
      expect_kw("next");
      s.kind = StmtKind::PtrAssignNext;
    } else {
      s.kind = StmtKind::PtrAssign;
    }
    s.p = p;
    s.q = q;
    return s;
  }

  void parse_annotation() {
    Tok at = take();  // '@'
    std::string kw = expect_name();
    if (kw == "universals") {
      universals_hint = (int)expect_int();
      return;
    }
    if (kw == "pre") {
      pres.push_back(parse_property());
      return;
    }
    if (kw == "assert") {
      AssertSpec as;
      as.pc = (int)expect_int();
      as.prop = parse_property();
      asserts.push_back(as);
      return;
    }
    fail("unknown annotation '@" + kw + "'", at);
  }

  // key argument: integer constant or a variable whose cell data is the key
  void parse_key(PropertySpec& ps) {
    Tok t = peek();
    if (t.kind == Tok::Int || (t.kind == Tok::Sym && t.s == "-")) {
      bool neg = accept_sym("-");
      ps.key_const = expect_int() * (neg ? -1 : 1);
      ps.key_is_const = true;
      return;
    }
    std::string n = expect_name();
    if (is_data(n)) ps.key_pv = data_cell[n];
    else if (ptr_index.count(n) && n != "nil") ps.key_pv = ptr_index[n];
    else fail("key must be a constant or a declared variable", t);
  }

  int parse_ptr_arg() {
    Tok t = peek();
    std::string n = expect_name();
    if (n == "nil") return 0;
    if (!ptr_index.count(n)) fail("expected pointer variable", t);
    return ptr_index[n];
  }

  PropertySpec parse_property() {
    Tok nt = peek();
    std::string name = expect_name();
    PropertySpec ps;
    expect_sym("(");
    if (name == "list") {
      ps.name = PropName::List;
      ps.anchor = parse_ptr_arg();
    } else if (name == "init") {
      ps.name = PropName::Init;
      ps.anchor = parse_ptr_arg();
      expect_sym(",");
      parse_key(ps);
    } else if (name == "sort") {
      ps.name = PropName::Sort;
      ps.anchor = parse_ptr_arg();
      if (accept_sym(",")) {
        expect_kw("desc");
        ps.descending = true;
      }
    } else if (name == "max") {
      ps.name = PropName::Max;
      ps.anchor = parse_ptr_arg();
      expect_sym(",");
      parse_key(ps);
      ps.dir = CmpOp::Le;
    } else if (name == "gek" || name == "ltk") {
      ps.name = PropName::Gek;
      ps.anchor = parse_ptr_arg();
      expect_sym(",");
      parse_key(ps);
      ps.dir = name == "gek" ? CmpOp::Ge : CmpOp::Lt;
      if (accept_sym(",")) ps.end_pv = parse_ptr_arg();
    } else if (name == "last") {
      ps.name = PropName::Last;
      ps.anchor = parse_ptr_arg();
      expect_sym(",");
      ps.ret_pv = parse_ptr_arg();
    } else if (name == "empty") {
      ps.name = PropName::Empty;
      ps.anchor = parse_ptr_arg();
    } else {
      fail("unknown property '" + name + "'", nt);
    }
    expect_sym(")");
    return ps;
  }
};

}  // namespace

Program parse_program(const std::string& text, int universals) {
  Parser p;
  p.toks = lex(text);
  p.parse_decls();
  p.stmts = p.parse_seq({});
  if (p.stmts.empty())
    throw SyntaxError("program needs at least one statement", 1, 1);
  if (p.peek().kind != Tok::End)
    throw SyntaxError("trailing input after program", p.peek().line, p.peek().col);

  Program prog;
  prog.data_vars = p.data_names;
  prog.pres = p.pres;
  prog.asserts = p.asserts;
  prog.universals_hint = p.universals_hint;

  int ny = universals >= 0 ? universals : p.universals_hint.value_or(0);
  std::vector<std::string> all_ptrs = p.ptr_names;
  for (auto& d : p.data_names) all_ptrs.push_back(d);
  prog.env = make_env(all_ptrs, ny);

  // data-variable cells exist from entry on (parameters and locals are
  // storage the caller provides); source pcs carry over unchanged
  prog.stmts = std::move(p.stmts);
  prog.npcs = p.next_pc - 1;
  for (auto& as : prog.asserts) {
    if (as.pc < 1 || as.pc > prog.npcs + 1)
      throw SyntaxError("assert label " + std::to_string(as.pc) +
                            " is outside the program",
                        1, 1);
  }
  return prog;
}

// ---------- DNF lowering ----------

namespace {

struct LitAtom {  // one literal of a DNF conjunct
  bool is_struct;
  StructAtom sa{};
  DataAtom da{};
};

CmpOp negate_op(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return CmpOp::Eq;
}

using Conj = std::vector<LitAtom>;

// negation pushed to literals; data != split into < | >
std::vector<Conj> dnf(const Pred& p, bool neg) {
  switch (p.kind) {
    case Pred::Not:
      return dnf(*p.a, !neg);
    case Pred::And:
    case Pred::Or: {
      bool conj = (p.kind == Pred::And) != neg;  // De Morgan under neg
      auto l = dnf(*p.a, neg), r = dnf(*p.b, neg);
      if (!conj) {
        for (auto& c : r) l.push_back(std::move(c));
        return l;
      }
      std::vector<Conj> out;
      for (const auto& a : l)
        for (const auto& b : r) {
          Conj c = a;
          c.insert(c.end(), b.begin(), b.end());
          out.push_back(std::move(c));
        }
      return out;
    }
    case Pred::SAtom: {
      LitAtom la;
      la.is_struct = true;
      la.sa = p.satom;
      la.sa.neg ^= neg;
      return {{la}};
    }
    case Pred::DAtom: {
      DataAtom d = p.datom;
      if (neg) d.op = negate_op(d.op);
      if (d.op == CmpOp::Ne) {
        DataAtom lt = d, gt = d;
        lt.op = CmpOp::Lt;
        gt.op = CmpOp::Gt;
        LitAtom a{false, {}, lt}, b{false, {}, gt};
        return {{a}, {b}};
      }
      LitAtom la{false, {}, d};
      return {{la}};
    }
  }
  return {};
}

std::string render_term(const Env& env, const DataTermRef& t) {
  if (!t.pv) return std::to_string(t.c);
  std::string s = env.pv[*t.pv] + "->data";
  if (t.c > 0) s += " + " + std::to_string(t.c);
  if (t.c < 0) s += " - " + std::to_string(-t.c);
  return s;
}

const char* op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string render_struct_atom(const Env& env, const StructAtom& a) {
  const auto& pv = env.pv;
  std::string lhs = pv[a.p];
  if (a.rel == StructRel::Next) lhs += "->next";
  if (a.rel == StructRel::Reach) lhs += "->*next";
  return lhs + (a.neg ? " != " : " == ") + pv[a.q];
}

Action lower_literal(const Env& env, const LitAtom& la) {
  if (la.is_struct) return ActionAssumeStruct{la.sa};
  ActionAssumeData ad;
  ad.atoms = atoms_from_cmp(la.da.lhs.pv, la.da.lhs.c, la.da.op, la.da.rhs.pv,
                            la.da.rhs.c);
  ad.text = render_term(env, la.da.lhs) + " " + op_text(la.da.op) + " " +
            render_term(env, la.da.rhs);
  return ad;
}

}  // namespace

std::vector<std::vector<Action>> lower_guard(const Env& env, const Pred& p,
                                             bool neg) {
  std::vector<std::vector<Action>> out;
  for (const auto& conj : dnf(p, neg)) {
    std::vector<Action> acts;
    acts.reserve(conj.size());
    for (const auto& la : conj) acts.push_back(lower_literal(env, la));
    out.push_back(std::move(acts));
  }
  return out;
}

// ---------- CFG ----------

namespace {

struct CfgBuilder {
  const Program& prog;
  Cfg cfg;

  void add_guard_edges(int src, const Pred& pred, bool neg, int dst) {
    for (auto& acts : lower_guard(*prog.env, pred, neg)) {
      Edge e;
      e.src = src;
      e.dst = dst;
      e.actions = std::move(acts);
      cfg.edges.push_back(std::move(e));
    }
  }

  void build_stmt(const PcStmt& ps, int next) {
    const Stmt& s = ps.s;
    switch (s.kind) {
      case StmtKind::If:
        add_guard_edges(ps.pc, *s.pred, false, s.body.front().pc);
        add_guard_edges(ps.pc, *s.pred, true,
                        s.orelse.empty() ? next : s.orelse.front().pc);
        build_seq(s.body, next);
        if (!s.orelse.empty()) build_seq(s.orelse, next);
        break;
      case StmtKind::While:
        cfg.loop_headers.insert(ps.pc);
        add_guard_edges(ps.pc, *s.pred, false, s.body.front().pc);
        add_guard_edges(ps.pc, *s.pred, true, next);
        build_seq(s.body, ps.pc);
        break;
      case StmtKind::Assume:
        add_guard_edges(ps.pc, *s.pred, false, next);
        break;
      default: {
        Edge e;
        e.src = ps.pc;
        e.dst = next;
        e.actions.push_back(ActionStmt{s.kind, s.p, s.q, s.expr});
        cfg.edges.push_back(std::move(e));
      }
    }
  }

  void build_seq(const std::vector<PcStmt>& seq, int follow) {
    for (size_t i = 0; i < seq.size(); i++)
      build_stmt(seq[i], i + 1 < seq.size() ? seq[i + 1].pc : follow);
  }
};

}  // namespace

Cfg build_cfg(const Program& prog) {
  CfgBuilder b{prog, {}};
  b.cfg.entry = 1;
  b.cfg.exit = prog.npcs + 1;
  b.build_seq(prog.stmts, b.cfg.exit);

  Cfg& cfg = b.cfg;
  cfg.out_edges.assign(cfg.exit + 1, {});
  for (size_t i = 0; i < cfg.edges.size(); i++)
    cfg.out_edges[cfg.edges[i].src].push_back((int)i);

  // reverse post-order from the entry
  std::vector<int> color(cfg.exit + 1, 0);
  std::vector<int> post;
  std::vector<std::pair<int, size_t>> stack{{cfg.entry, 0}};
  color[cfg.entry] = 1;
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < cfg.out_edges[node].size()) {
      int dst = cfg.edges[cfg.out_edges[node][idx]].dst;
      idx++;
      if (!color[dst]) {
        color[dst] = 1;
        stack.push_back({dst, 0});
      }
    } else {
      post.push_back(node);
      stack.pop_back();
    }
  }
  cfg.rpo.assign(post.rbegin(), post.rend());
  return cfg;
}

// ---------- concrete semantics ----------

namespace {

bool on_nil_or_dirty(const HeapConfig& c, int loc) {
  return loc == 0 || loc == c.pval[0];
}

}  // namespace

bool eval_struct_atom(const HeapConfig& c, const StructAtom& a) {
  bool truth = false;
  switch (a.rel) {
    case StructRel::Eq:
      truth = c.pval[a.p] == c.pval[a.q];
      break;
    case StructRel::Next: {
      int v = c.pval[a.p];
      // dereferencing nil or dirty: the atom has no witness, count it false
      truth = !on_nil_or_dirty(c, v) && c.next[v] == c.pval[a.q];
      break;
    }
    case StructRel::Reach: {
      int u = c.pval[a.p], w = c.pval[a.q];
      for (;;) {
        if (u == w) { truth = true; break; }
        if (u <= 0) break;
        u = c.next[u];
      }
      break;
    }
  }
  return truth != a.neg;
}

StepResult concrete_step(const HeapConfig& c, const Action& a) {
  if (auto* as = std::get_if<ActionAssumeStruct>(&a)) {
    if (eval_struct_atom(c, as->atom)) return c;
    return BlockedConfig{};
  }
  if (auto* ad = std::get_if<ActionAssumeData>(&a)) {
    auto val = [&](int t) { return c.data[c.pval[t]]; };
    for (const auto& at : ad->atoms) {
      Bound lhs = at.sign1 * val(at.term1);
      if (at.term2 >= 0) lhs += at.sign2 * val(at.term2);
      if (lhs > at.c) return BlockedConfig{};
    }
    return c;
  }
  const auto& s = std::get<ActionStmt>(a);
  HeapConfig r = c;
  switch (s.kind) {
    case StmtKind::Skip:
      return r;
    case StmtKind::New: {
      int v = (int)r.next.size();
      r.next.push_back(0);  // fresh node dangles: next goes to dirty
      r.data.push_back(0);
      r.pval[s.p] = v;
      break;
    }
    case StmtKind::PtrAssign:
      r.pval[s.p] = r.pval[s.q];
      break;
    case StmtKind::PtrAssignNext: {
      int v = c.pval[s.q];
      if (on_nil_or_dirty(c, v))
        return ErrorConfig{"dereference of nil or dangling pointer in '" +
                           c.env->pv[s.p] + " := " + c.env->pv[s.q] + "->next'"};
      r.pval[s.p] = c.next[v];
      break;
    }
    case StmtKind::NextAssign: {
      int v = c.pval[s.p];
      if (on_nil_or_dirty(c, v))
        return ErrorConfig{"next-assignment through nil or dangling pointer '" +
                           c.env->pv[s.p] + "'"};
      int w = c.pval[s.q];
      for (int u = w; u > 0; u = c.next[u])
        if (u == v)
          return ErrorConfig{"'" + c.env->pv[s.p] + "->next := " +
                             c.env->pv[s.q] + "' would create a cycle"};
      r.next[v] = w;
      break;
    }
    case StmtKind::DataAssign: {
      int v = c.pval[s.p];
      if (on_nil_or_dirty(c, v))
        return ErrorConfig{"data write through nil or dangling pointer '" +
                           c.env->pv[s.p] + "'"};
      Datum val = s.expr.c;
      if (s.expr.pv) {
        int u = c.pval[*s.expr.pv];
        if (on_nil_or_dirty(c, u))
          return ErrorConfig{"data read through nil or dangling pointer '" +
                             c.env->pv[*s.expr.pv] + "'"};
        val += c.data[u];
      }
      r.data[v] = val;
      return r;  // structure unchanged, no garbage possible
    }
    default:
      return ErrorConfig{"non-atomic statement reached the interpreter"};
  }
  r.collect_garbage();
  return r;
}

ConcreteRun run_concrete(const Cfg& cfg, const Program& prog, const HeapConfig& init,
                         int fuel) {
  ConcreteRun run;
  std::set<std::string> seen;
  std::set<std::pair<int, std::string>> seen_errors;
  std::vector<std::pair<int, HeapConfig>> stack;

  auto push = [&](int pc, const HeapConfig& c) {
    std::string key = std::to_string(pc) + "|" + c.canonical_key();
    if (seen.insert(key).second) {
      run.visited.push_back({pc, c});
      stack.push_back({pc, c});
    }
  };
  push(cfg.entry, init);

  int expansions = 0;
  while (!stack.empty()) {
    if (expansions >= fuel) {
      run.fuel_exhausted = true;
      break;
    }
    auto [pc, c] = stack.back();
    stack.pop_back();
    expansions++;
    if (pc < 0 || pc >= (int)cfg.out_edges.size()) continue;
    for (int ei : cfg.out_edges[pc]) {
      const Edge& e = cfg.edges[ei];
      HeapConfig cur = c;
      bool alive = true;
      for (const auto& act : e.actions) {
        StepResult res = concrete_step(cur, act);
        if (auto* h = std::get_if<HeapConfig>(&res)) {
          cur = std::move(*h);
        } else if (auto* err = std::get_if<ErrorConfig>(&res)) {
          if (seen_errors.insert({pc, err->reason}).second)
            run.errors.push_back({pc, err->reason});
          alive = false;
          break;
        } else {
          alive = false;  // blocked by an assume
          break;
        }
      }
      if (alive) push(e.dst, cur);
    }
  }
  (void)prog;
  return run;
}

// ---------- rendering ----------

std::string render_pred(const Program& prog, const Pred& p) {
  switch (p.kind) {
    case Pred::And:
      return "(" + render_pred(prog, *p.a) + " && " + render_pred(prog, *p.b) + ")";
    case Pred::Or:
      return "(" + render_pred(prog, *p.a) + " || " + render_pred(prog, *p.b) + ")";
    case Pred::Not:
      return "!(" + render_pred(prog, *p.a) + ")";
    case Pred::SAtom:
      return render_struct_atom(*prog.env, p.satom);
    case Pred::DAtom:
      return render_term(*prog.env, p.datom.lhs) + " " + op_text(p.datom.op) + " " +
             render_term(*prog.env, p.datom.rhs);
  }
  return "";
}

std::string render_stmt(const Program& prog, const Stmt& s) {
  const auto& pv = prog.env->pv;
  switch (s.kind) {
    case StmtKind::Skip: return "skip";
    case StmtKind::New: return "new " + pv[s.p];
    case StmtKind::PtrAssign: return pv[s.p] + " := " + pv[s.q];
    case StmtKind::PtrAssignNext: return pv[s.p] + " := " + pv[s.q] + "->next";
    case StmtKind::NextAssign: return pv[s.p] + "->next := " + pv[s.q];
    case StmtKind::DataAssign:
      return pv[s.p] + "->data := " + render_term(*prog.env, s.expr);
    case StmtKind::Assume: return "assume(" + render_pred(prog, *s.pred) + ")";
    case StmtKind::If: return "if " + render_pred(prog, *s.pred) + " then ...";
    case StmtKind::While: return "while " + render_pred(prog, *s.pred) + " do ...";
  }
  return "";
}

std::string render_action(const Program& prog, const Action& a) {
  if (auto* s = std::get_if<ActionStmt>(&a)) {
    Stmt st;
    st.kind = s->kind;
    st.p = s->p;
    st.q = s->q;
    st.expr = s->expr;
    return render_stmt(prog, st);
  }
  if (auto* as = std::get_if<ActionAssumeStruct>(&a))
    return "assume(" + render_struct_atom(*prog.env, as->atom) + ")";
  return "assume(" + std::get<ActionAssumeData>(a).text + ")";
}

std::string render_property(const Program& prog, const PropertySpec& ps) {
  const auto& pv = prog.env->pv;
  auto key = [&]() {
    return ps.key_is_const ? std::to_string(ps.key_const) : pv[ps.key_pv.value()];
  };
  switch (ps.name) {
    case PropName::List: return "list(" + pv[ps.anchor] + ")";
    case PropName::Init: return "init(" + pv[ps.anchor] + ", " + key() + ")";
    case PropName::Sort:
      return "sort(" + pv[ps.anchor] + (ps.descending ? ", desc)" : ")");
    case PropName::Max: return "max(" + pv[ps.anchor] + ", " + key() + ")";
    case PropName::Gek: {
      std::string n = ps.dir == CmpOp::Ge ? "gek" : "ltk";
      std::string s = n + "(" + pv[ps.anchor] + ", " + key();
      if (ps.end_pv != 0) s += ", " + pv[ps.end_pv];
      return s + ")";
    }
    case PropName::Last:
      return "last(" + pv[ps.anchor] + ", " + pv[ps.ret_pv] + ")";
    case PropName::Empty: return "empty(" + pv[ps.anchor] + ")";
  }
  return "";
}

namespace {

void render_seq(const Program& prog, const std::vector<PcStmt>& seq, int indent,
                std::ostringstream& out) {
  std::string pad(indent, ' ');
  for (const auto& ps : seq) {
    const Stmt& s = ps.s;
    out << pad << ps.pc << ": ";
    if (s.kind == StmtKind::If) {
      out << "if " << render_pred(prog, *s.pred) << " then\n";
      render_seq(prog, s.body, indent + 2, out);
      if (!s.orelse.empty()) {
        out << pad << "else\n";
        render_seq(prog, s.orelse, indent + 2, out);
      }
      out << pad << "fi;\n";
    } else if (s.kind == StmtKind::While) {
      out << "while " << render_pred(prog, *s.pred) << " do\n";
      render_seq(prog, s.body, indent + 2, out);
      out << pad << "od;\n";
    } else {
      out << render_stmt(prog, s) << ";\n";
    }
  }
}

}  // namespace

std::string render_program(const Program& prog) {
  std::ostringstream out;
  out << "pointer";
  for (size_t i = 1; i < prog.env->pv.size(); i++)
    out << (i == 1 ? " " : ", ") << prog.env->pv[i];
  out << ";\n";
  if (prog.universals_hint) out << "@universals " << *prog.universals_hint << "\n";
  render_seq(prog, prog.stmts, 0, out);
  for (const auto& as : prog.asserts)
    out << "@assert " << as.pc << " " << render_property(prog, as.prop) << "\n";
  return out.str();
}

}  // namespace qsda

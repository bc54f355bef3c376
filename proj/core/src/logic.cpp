/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/logic.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace pf {

// ---------------------------------------------------------------------------
// Vocabulary

void Vocabulary::index_insert(const std::string& name, char kind, uint32_t id) {
  auto [it, fresh] = index_.emplace(name, std::make_pair(kind, id));
  (void)it;
  if (!fresh) throw std::invalid_argument("duplicate symbol name: " + name);
}

SortId Vocabulary::Builder::add_sort(const std::string& name) {
  v_.index_insert(name, 's', static_cast<uint32_t>(v_.sorts_.size()));
  v_.sorts_.push_back(name);
  return static_cast<SortId>(v_.sorts_.size() - 1);
}

RelId Vocabulary::Builder::add_rel(const std::string& name,
                                   std::vector<SortId> sig) {
  for (SortId s : sig)
    if (s >= v_.sorts_.size())
      throw std::invalid_argument("bad sort id in signature of " + name);
  v_.index_insert(name, 'r', static_cast<uint32_t>(v_.rels_.size()));
  v_.rels_.push_back(Rel{name, std::move(sig)});
  return static_cast<RelId>(v_.rels_.size() - 1);
}

ConstId Vocabulary::Builder::add_const(const std::string& name, SortId sort) {
  if (sort >= v_.sorts_.size())
    throw std::invalid_argument("bad sort id for constant " + name);
  v_.index_insert(name, 'c', static_cast<uint32_t>(v_.consts_.size()));
  v_.consts_.push_back(Const{name, sort});
  return static_cast<ConstId>(v_.consts_.size() - 1);
}

VocabPtr Vocabulary::Builder::build() {
  return std::make_shared<const Vocabulary>(std::move(v_));
}

std::optional<SortId> Vocabulary::find_sort(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end() || it->second.first != 's') return std::nullopt;
  return it->second.second;
}

std::optional<RelId> Vocabulary::find_rel(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end() || it->second.first != 'r') return std::nullopt;
  return it->second.second;
}

std::optional<ConstId> Vocabulary::find_const(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end() || it->second.first != 'c') return std::nullopt;
  return it->second.second;
}

VocabPtr Vocabulary::extend_consts(const std::vector<Const>& extra,
                                   std::vector<ConstId>* ids) const {
  Vocabulary v = *this;
  if (ids) ids->clear();
  for (const Const& c : extra) {
    if (c.sort >= v.sorts_.size())
      throw std::invalid_argument("bad sort id for constant " + c.name);
    v.index_insert(c.name, 'c', static_cast<uint32_t>(v.consts_.size()));
    v.consts_.push_back(c);
    if (ids) ids->push_back(static_cast<ConstId>(v.consts_.size() - 1));
  }
  return std::make_shared<const Vocabulary>(std::move(v));
}

VocabPtr Vocabulary::extend_rels(const std::vector<Rel>& extra,
                                 std::vector<RelId>* ids) const {
  Vocabulary v = *this;
  if (ids) ids->clear();
  for (const Rel& r : extra) {
    for (SortId s : r.sig)
      if (s >= v.sorts_.size())
        throw std::invalid_argument("bad sort id in signature of " + r.name);
    v.index_insert(r.name, 'r', static_cast<uint32_t>(v.rels_.size()));
    v.rels_.push_back(r);
    if (ids) ids->push_back(static_cast<RelId>(v.rels_.size() - 1));
  }
  return std::make_shared<const Vocabulary>(std::move(v));
}

// ---------------------------------------------------------------------------
// Formula representation

struct FNode {
  FKind kind = FKind::kTrue;
  std::vector<Formula> ch;
  std::vector<Var> qv;
  RelId rel = 0;
  bool rprimed = false;
  std::vector<Term> rargs;
  Term ta, tb;  // kEq

  size_t hash = 0;
  std::vector<Var> fv;          // sorted by name
  std::set<std::string> bound;  // every name bound somewhere inside
  bool primed_syms = false;
};

struct FNodeAccess {
  static Formula wrap(std::shared_ptr<const FNode> n) {
    return Formula(std::move(n));
  }
  static const FNode& get(const Formula& f) { return *f.node_; }
};

namespace {

inline size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

size_t hash_str(const std::string& s) { return std::hash<std::string>{}(s); }

size_t hash_var(const Var& v) { return hash_mix(hash_str(v.name), v.sort + 1); }

size_t hash_term(const Term& t) {
  if (t.is_var()) return hash_mix(1, hash_var(t.var));
  return hash_mix(2, hash_mix(t.cid, t.primed ? 7 : 3));
}

const FNode& node_of(const Formula& f) { return FNodeAccess::get(f); }

void merge_fv(std::vector<Var>& into, const Var& v) {
  auto it = std::lower_bound(
      into.begin(), into.end(), v,
      [](const Var& a, const Var& b) { return a.name < b.name; });
  if (it != into.end() && it->name == v.name) {
    if (it->sort != v.sort)
      throw std::invalid_argument("variable used at two sorts: " + v.name);
  } else {
    into.insert(it, v);
  }
}

void merge_fvs(std::vector<Var>& into, const std::vector<Var>& from) {
  for (const Var& v : from) merge_fv(into, v);
}

void add_term_info(FNode& n, const Term& t) {
  if (t.is_var())
    merge_fv(n.fv, t.var);
  else if (t.primed)
    n.primed_syms = true;
}

// shared construction for the Boolean connectives
std::shared_ptr<FNode> combine(FKind kind, std::vector<Formula> ch,
                               size_t salt) {
  auto n = std::make_shared<FNode>();
  n->kind = kind;
  n->ch = std::move(ch);
  size_t h = hash_mix(salt, static_cast<size_t>(kind));
  for (const Formula& f : n->ch) {
    if (!f.valid()) throw std::invalid_argument("null formula operand");
    merge_fvs(n->fv, f.free_vars());
    const FNode& c = node_of(f);
    n->bound.insert(c.bound.begin(), c.bound.end());
    n->primed_syms |= c.primed_syms;
    h = hash_mix(h, c.hash);
  }
  n->hash = h;
  return n;
}

}  // namespace

Formula Formula::tru() {
  auto n = std::make_shared<FNode>();
  n->kind = FKind::kTrue;
  n->hash = 0x1111;
  return FNodeAccess::wrap(std::move(n));
}

Formula Formula::fls() {
  auto n = std::make_shared<FNode>();
  n->kind = FKind::kFalse;
  n->hash = 0x2222;
  return FNodeAccess::wrap(std::move(n));
}

Formula Formula::rel(RelId r, bool primed, std::vector<Term> args) {
  auto n = std::make_shared<FNode>();
  n->kind = FKind::kRel;
  n->rel = r;
  n->rprimed = primed;
  n->rargs = std::move(args);
  n->primed_syms = primed;
  size_t h = hash_mix(0xAAAA, hash_mix(r, primed ? 1 : 0));
  for (const Term& t : n->rargs) {
    add_term_info(*n, t);
    h = hash_mix(h, hash_term(t));
  }
  n->hash = h;
  return FNodeAccess::wrap(std::move(n));
}

Formula Formula::eq(Term a, Term b) {
  auto n = std::make_shared<FNode>();
  n->kind = FKind::kEq;
  n->ta = std::move(a);
  n->tb = std::move(b);
  add_term_info(*n, n->ta);
  add_term_info(*n, n->tb);
  n->hash = hash_mix(0xBBBB, hash_mix(hash_term(n->ta), hash_term(n->tb)));
  return FNodeAccess::wrap(std::move(n));
}

Formula Formula::mk_not(Formula f) {
  return FNodeAccess::wrap(combine(FKind::kNot, {std::move(f)}, 0xDDDD));
}

Formula Formula::conj(std::vector<Formula> fs) {
  if (fs.empty()) return tru();
  if (fs.size() == 1) return fs[0];
  std::vector<Formula> flat;
  for (Formula& f : fs) {
    if (!f.valid()) throw std::invalid_argument("null formula operand");
    if (f.kind() == FKind::kAnd)
      for (const Formula& c : f.children()) flat.push_back(c);
    else
      flat.push_back(std::move(f));
  }
  return FNodeAccess::wrap(combine(FKind::kAnd, std::move(flat), 0xCCC1));
}

Formula Formula::disj(std::vector<Formula> fs) {
  if (fs.empty()) return fls();
  if (fs.size() == 1) return fs[0];
  std::vector<Formula> flat;
  for (Formula& f : fs) {
    if (!f.valid()) throw std::invalid_argument("null formula operand");
    if (f.kind() == FKind::kOr)
      for (const Formula& c : f.children()) flat.push_back(c);
    else
      flat.push_back(std::move(f));
  }
  return FNodeAccess::wrap(combine(FKind::kOr, std::move(flat), 0xCCC2));
}

Formula Formula::implies(Formula a, Formula b) {
  return FNodeAccess::wrap(
      combine(FKind::kImplies, {std::move(a), std::move(b)}, 0xEEEE));
}

Formula Formula::iff(Formula a, Formula b) {
  return FNodeAccess::wrap(
      combine(FKind::kIff, {std::move(a), std::move(b)}, 0xF0F0));
}

Formula Formula::forall(std::vector<Var> vars, Formula body) {
  if (!body.valid()) throw std::invalid_argument("null formula operand");
  if (vars.empty()) return body;
  auto n = std::make_shared<FNode>();
  n->kind = FKind::kForall;
  n->qv = std::move(vars);
  n->ch.push_back(std::move(body));
  const FNode& b = node_of(n->ch[0]);
  n->bound = b.bound;
  n->primed_syms = b.primed_syms;
  std::set<std::string> seen;
  for (const Var& v : n->qv) {
    if (!seen.insert(v.name).second)
      throw std::invalid_argument("duplicate quantified variable: " + v.name);
    if (n->bound.count(v.name))
      throw std::invalid_argument("shadowed quantified variable: " + v.name);
  }
  n->fv = b.fv;
  for (const Var& v : n->qv) {
    auto it = std::find_if(n->fv.begin(), n->fv.end(),
                           [&](const Var& w) { return w.name == v.name; });
    if (it != n->fv.end()) {
      if (it->sort != v.sort)
        throw std::invalid_argument("quantifier binds " + v.name +
                                    " at a different sort than its free use");
      n->fv.erase(it);
    }
    n->bound.insert(v.name);
  }
  size_t h = hash_mix(0xABCD, b.hash);
  for (const Var& v : n->qv) h = hash_mix(h, hash_var(v));
  n->hash = h;
  return FNodeAccess::wrap(std::move(n));
}

Formula Formula::exists(std::vector<Var> vars, Formula body) {
  if (!body.valid()) throw std::invalid_argument("null formula operand");
  if (vars.empty()) return body;
  Formula f = forall(std::move(vars), std::move(body));
  auto n = std::make_shared<FNode>(node_of(f));
  n->kind = FKind::kExists;
  n->hash = hash_mix(0xDCBA, n->hash);
  return FNodeAccess::wrap(std::move(n));
}

FKind Formula::kind() const { return node_->kind; }
const std::vector<Formula>& Formula::children() const { return node_->ch; }
const std::vector<Var>& Formula::qvars() const { return node_->qv; }
const Formula& Formula::body() const { return node_->ch.at(0); }
RelId Formula::rel_id() const { return node_->rel; }
bool Formula::rel_primed() const { return node_->rprimed; }
const std::vector<Term>& Formula::args() const { return node_->rargs; }
const Term& Formula::lhs() const { return node_->ta; }
const Term& Formula::rhs() const { return node_->tb; }
size_t Formula::hash() const { return node_->hash; }
const std::vector<Var>& Formula::free_vars() const { return node_->fv; }
bool Formula::mentions_primed() const { return node_->primed_syms; }

bool Formula::operator==(const Formula& o) const {
  if (node_ == o.node_) return true;
  if (!node_ || !o.node_) return false;
  if (node_->hash != o.node_->hash || node_->kind != o.node_->kind)
    return false;
  switch (node_->kind) {
    case FKind::kTrue:
    case FKind::kFalse:
      return true;
    case FKind::kRel:
      return node_->rel == o.node_->rel &&
             node_->rprimed == o.node_->rprimed &&
             node_->rargs == o.node_->rargs;
    case FKind::kEq:
      return node_->ta == o.node_->ta && node_->tb == o.node_->tb;
    case FKind::kForall:
    case FKind::kExists:
      if (node_->qv != o.node_->qv) return false;
      [[fallthrough]];
    default: {
      if (node_->ch.size() != o.node_->ch.size()) return false;
      for (size_t i = 0; i < node_->ch.size(); ++i)
        if (!(node_->ch[i] == o.node_->ch[i])) return false;
      return true;
    }
  }
}

// ---------------------------------------------------------------------------
// Printing (surface syntax)

namespace {

int prec_of(const Formula& f) {
  switch (f.kind()) {
    case FKind::kIff: return 1;
    case FKind::kImplies: return 2;
    case FKind::kOr: return 3;
    case FKind::kAnd: return 4;
    case FKind::kNot:
      return f.children()[0].kind() == FKind::kEq ? 6 : 5;  // `a != b` is an atom
    case FKind::kForall:
    case FKind::kExists: return 0;
    default: return 6;
  }
}

void print_term(std::ostream& os, const Vocabulary& v, const Term& t) {
  if (t.is_var())
    os << t.var.name;
  else
    os << v.constant(t.cid).name << (t.primed ? "'" : "");
}

void print_formula(std::ostream& os, const Vocabulary& voc, const Formula& f,
                   int minprec) {
  int p = prec_of(f);
  bool paren = p < minprec;
  if (paren) os << "(";
  switch (f.kind()) {
    case FKind::kTrue: os << "true"; break;
    case FKind::kFalse: os << "false"; break;
    case FKind::kRel: {
      os << voc.rel(f.rel_id()).name << (f.rel_primed() ? "'" : "");
      if (!f.args().empty()) {
        os << "(";
        bool first = true;
        for (const Term& t : f.args()) {
          if (!first) os << ", ";
          first = false;
          print_term(os, voc, t);
        }
        os << ")";
      }
      break;
    }
    case FKind::kEq:
      print_term(os, voc, f.lhs());
      os << " = ";
      print_term(os, voc, f.rhs());
      break;
    case FKind::kNot: {
      const Formula& c = f.children()[0];
      if (c.kind() == FKind::kEq) {
        print_term(os, voc, c.lhs());
        os << " != ";
        print_term(os, voc, c.rhs());
      } else {
        os << "!";
        print_formula(os, voc, c, 5);
      }
      break;
    }
    case FKind::kAnd: {
      bool first = true;
      for (const Formula& c : f.children()) {
        if (!first) os << " & ";
        first = false;
        print_formula(os, voc, c, 5);
      }
      break;
    }
    case FKind::kOr: {
      bool first = true;
      for (const Formula& c : f.children()) {
        if (!first) os << " | ";
        first = false;
        print_formula(os, voc, c, 4);
      }
      break;
    }
    case FKind::kImplies:
      print_formula(os, voc, f.children()[0], 3);
      os << " -> ";
      print_formula(os, voc, f.children()[1], 2);
      break;
    case FKind::kIff:
      print_formula(os, voc, f.children()[0], 2);
      os << " <-> ";
      print_formula(os, voc, f.children()[1], 1);
      break;
    case FKind::kForall:
    case FKind::kExists: {
      os << (f.kind() == FKind::kForall ? "forall " : "exists ");
      bool first = true;
      for (const Var& v : f.qvars()) {
        if (!first) os << ", ";
        first = false;
        os << v.name << ":" << voc.sort_name(v.sort);
      }
      os << ". ";
      print_formula(os, voc, f.body(), 0);
      break;
    }
  }
  if (paren) os << ")";
}

}  // namespace

std::string Formula::to_string(const Vocabulary& v) const {
  std::ostringstream os;
  print_formula(os, v, *this, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Structures

Structure Structure::empty(VocabPtr v, const std::vector<size_t>& sizes) {
  if (sizes.size() != v->num_sorts())
    throw std::invalid_argument("sizes/sorts mismatch");
  Structure s;
  s.vocab = std::move(v);
  s.universe.resize(sizes.size());
  for (size_t i = 0; i < sizes.size(); ++i)
    for (size_t j = 0; j < sizes[i]; ++j)
      s.universe[i].push_back(s.vocab->sort_name(static_cast<SortId>(i)) +
                              std::to_string(j));
  s.tables.resize(s.vocab->num_rels());
  s.consts.assign(s.vocab->num_consts(), 0);
  return s;
}

bool Structure::has(RelId r, const std::vector<uint32_t>& tuple) const {
  return tables.at(r).count(tuple) > 0;
}

void Structure::set(RelId r, const std::vector<uint32_t>& tuple, bool val) {
  const auto& sig = vocab->rel(r).sig;
  if (tuple.size() != sig.size())
    throw std::invalid_argument("arity mismatch in set()");
  for (size_t i = 0; i < tuple.size(); ++i)
    if (tuple[i] >= universe.at(sig[i]).size())
      throw std::invalid_argument("element out of range in set()");
  if (val)
    tables.at(r).insert(tuple);
  else
    tables.at(r).erase(tuple);
}

bool Structure::well_formed(std::string* why) const {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (!vocab) return fail("no vocabulary");
  if (universe.size() != vocab->num_sorts())
    return fail("universe/sorts mismatch");
  if (tables.size() != vocab->num_rels()) return fail("tables/rels mismatch");
  if (consts.size() != vocab->num_consts()) return fail("consts mismatch");
  for (RelId r = 0; r < tables.size(); ++r) {
    const auto& sig = vocab->rel(r).sig;
    for (const auto& t : tables[r]) {
      if (t.size() != sig.size())
        return fail("arity mismatch in " + vocab->rel(r).name);
      for (size_t i = 0; i < t.size(); ++i)
        if (t[i] >= universe[sig[i]].size())
          return fail("tuple out of range in " + vocab->rel(r).name);
    }
  }
  for (ConstId c = 0; c < consts.size(); ++c) {
    SortId s = vocab->constant(c).sort;
    if (universe[s].empty() || consts[c] >= universe[s].size())
      return fail("constant out of range: " + vocab->constant(c).name);
  }
  return true;
}

std::string Structure::describe() const {
  std::ostringstream os;
  for (SortId s = 0; s < universe.size(); ++s) {
    if (s) os << "; ";
    os << vocab->sort_name(s) << "={";
    for (size_t i = 0; i < universe[s].size(); ++i)
      os << (i ? "," : "") << universe[s][i];
    os << "}";
  }
  for (RelId r = 0; r < tables.size(); ++r) {
    os << "; " << vocab->rel(r).name << "={";
    bool first = true;
    const auto& sig = vocab->rel(r).sig;
    for (const auto& t : tables[r]) {
      os << (first ? "" : ",") << "(";
      first = false;
      for (size_t i = 0; i < t.size(); ++i)
        os << (i ? "," : "") << universe[sig[i]][t[i]];
      os << ")";
    }
    os << "}";
  }
  for (ConstId c = 0; c < consts.size(); ++c)
    os << "; " << vocab->constant(c).name << "="
       << universe[vocab->constant(c).sort][consts[c]];
  return os.str();
}

bool Structure::operator==(const Structure& o) const {
  return universe == o.universe && tables == o.tables && consts == o.consts;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct EvalCtx {
  const Structure& pre;
  const Structure* post;  // null for one-vocabulary evaluation
  Val env;
};

Element term_value(EvalCtx& c, const Term& t) {
  if (t.is_var()) {
    auto it = c.env.find(t.var.name);
    if (it == c.env.end())
      throw std::logic_error("unbound variable in eval: " + t.var.name);
    if (it->second.sort != t.var.sort)
      throw std::logic_error("sort mismatch for variable " + t.var.name);
    return it->second;
  }
  const Structure& s = t.primed ? *c.post : c.pre;
  return Element{s.vocab->constant(t.cid).sort, s.consts.at(t.cid)};
}

bool ev(EvalCtx& c, const Formula& f) {
  switch (f.kind()) {
    case FKind::kTrue: return true;
    case FKind::kFalse: return false;
    case FKind::kRel: {
      const Structure& s = f.rel_primed() ? *c.post : c.pre;
      const auto& sig = s.vocab->rel(f.rel_id()).sig;
      std::vector<uint32_t> tuple;
      tuple.reserve(f.args().size());
      size_t i = 0;
      for (const Term& t : f.args()) {
        Element e = term_value(c, t);
        if (i >= sig.size() || e.sort != sig[i])
          throw std::logic_error("ill-sorted relation application");
        tuple.push_back(e.idx);
        ++i;
      }
      if (i != sig.size()) throw std::logic_error("arity mismatch in eval");
      return s.has(f.rel_id(), tuple);
    }
    case FKind::kEq: {
      Element a = term_value(c, f.lhs());
      Element b = term_value(c, f.rhs());
      if (a.sort != b.sort) throw std::logic_error("ill-sorted equality");
      return a == b;
    }
    case FKind::kNot: return !ev(c, f.children()[0]);
    case FKind::kAnd:
      for (const Formula& g : f.children())
        if (!ev(c, g)) return false;
      return true;
    case FKind::kOr:
      for (const Formula& g : f.children())
        if (ev(c, g)) return true;
      return false;
    case FKind::kImplies:
      return !ev(c, f.children()[0]) || ev(c, f.children()[1]);
    case FKind::kIff:
      return ev(c, f.children()[0]) == ev(c, f.children()[1]);
    case FKind::kForall:
    case FKind::kExists: {
      bool want = f.kind() == FKind::kExists;
      const auto& qv = f.qvars();
      size_t n = qv.size();
      // a binder may coincide with an outer valuation name (never with an
      // enclosing binder; that is rejected at construction): save and restore
      std::vector<std::optional<Element>> saved(n);
      for (size_t i = 0; i < n; ++i) {
        auto it = c.env.find(qv[i].name);
        if (it != c.env.end()) saved[i] = it->second;
      }
      std::function<bool(size_t)> go = [&](size_t i) -> bool {
        if (i == n) return ev(c, f.body()) == want;
        size_t dom = c.pre.size(qv[i].sort);
        for (uint32_t e = 0; e < dom; ++e) {
          c.env[qv[i].name] = Element{qv[i].sort, e};
          if (go(i + 1)) return true;
        }
        return false;
      };
      // found an assignment where body == want: witness for exists,
      // counterexample for forall
      bool found = go(0);
      for (size_t i = 0; i < n; ++i) {
        if (saved[i])
          c.env[qv[i].name] = *saved[i];
        else
          c.env.erase(qv[i].name);
      }
      return want ? found : !found;
    }
  }
  throw std::logic_error("unreachable formula kind");
}

void check_env_covers(const Val& v, const Formula& f) {
  for (const Var& w : f.free_vars()) {
    auto it = v.find(w.name);
    if (it == v.end())
      throw std::logic_error("valuation missing variable: " + w.name);
    if (it->second.sort != w.sort)
      throw std::logic_error("valuation sort mismatch for: " + w.name);
  }
}

}  // namespace

bool eval(const Structure& s, const Val& v, const Formula& f) {
  if (f.mentions_primed())
    throw std::logic_error("eval() on a formula with primed symbols");
  check_env_covers(v, f);
  EvalCtx c{s, nullptr, v};
  return ev(c, f);
}

bool eval2(const Structure& pre, const Structure& post, const Val& v,
           const Formula& f) {
  if (pre.universe != post.universe)
    throw std::logic_error("eval2() structures must share universes");
  check_env_covers(v, f);
  EvalCtx c{pre, &post, v};
  return ev(c, f);
}

// ---------------------------------------------------------------------------
// Substitution and symbol rewriting

namespace {

Formula subst_walk(const Formula& f, const std::map<std::string, Term>& m,
                   std::set<std::string>& scope) {
  auto subst_term = [&](const Term& t) -> Term {
    if (!t.is_var()) return t;
    if (scope.count(t.var.name)) return t;
    auto it = m.find(t.var.name);
    if (it == m.end()) return t;
    const Term& r = it->second;
    if (r.is_var()) {
      if (r.var.sort != t.var.sort)
        throw std::invalid_argument("substitution changes sort of " +
                                    t.var.name);
      if (scope.count(r.var.name))
        throw std::invalid_argument("substitution captures variable " +
                                    r.var.name);
    }
    return r;
  };
  switch (f.kind()) {
    case FKind::kTrue:
    case FKind::kFalse:
      return f;
    case FKind::kRel: {
      std::vector<Term> args;
      args.reserve(f.args().size());
      for (const Term& t : f.args()) args.push_back(subst_term(t));
      return Formula::rel(f.rel_id(), f.rel_primed(), std::move(args));
    }
    case FKind::kEq:
      return Formula::eq(subst_term(f.lhs()), subst_term(f.rhs()));
    case FKind::kNot:
      return Formula::mk_not(subst_walk(f.children()[0], m, scope));
    case FKind::kAnd:
    case FKind::kOr: {
      std::vector<Formula> ch;
      ch.reserve(f.children().size());
      for (const Formula& c : f.children())
        ch.push_back(subst_walk(c, m, scope));
      return f.kind() == FKind::kAnd ? Formula::conj(std::move(ch))
                                     : Formula::disj(std::move(ch));
    }
    case FKind::kImplies:
      return Formula::implies(subst_walk(f.children()[0], m, scope),
                              subst_walk(f.children()[1], m, scope));
    case FKind::kIff:
      return Formula::iff(subst_walk(f.children()[0], m, scope),
                          subst_walk(f.children()[1], m, scope));
    case FKind::kForall:
    case FKind::kExists: {
      std::vector<std::string> added;
      for (const Var& v : f.qvars())
        if (scope.insert(v.name).second) added.push_back(v.name);
      Formula b = subst_walk(f.body(), m, scope);
      for (const std::string& s : added) scope.erase(s);
      return f.kind() == FKind::kForall
                 ? Formula::forall(f.qvars(), std::move(b))
                 : Formula::exists(f.qvars(), std::move(b));
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Formula substitute(const Formula& f, const std::map<std::string, Term>& m) {
  std::set<std::string> scope;
  return subst_walk(f, m, scope);
}

Formula remap_symbols(
    const Formula& f,
    const std::function<std::pair<RelId, bool>(RelId, bool)>& relmap,
    const std::function<std::pair<ConstId, bool>(ConstId, bool)>& constmap) {
  auto map_term = [&](const Term& t) -> Term {
    if (t.is_var()) return t;
    auto [c, p] = constmap(t.cid, t.primed);
    return Term::mk_const(c, p);
  };
  switch (f.kind()) {
    case FKind::kTrue:
    case FKind::kFalse:
      return f;
    case FKind::kRel: {
      auto [r, p] = relmap(f.rel_id(), f.rel_primed());
      std::vector<Term> args;
      args.reserve(f.args().size());
      for (const Term& t : f.args()) args.push_back(map_term(t));
      return Formula::rel(r, p, std::move(args));
    }
    case FKind::kEq:
      return Formula::eq(map_term(f.lhs()), map_term(f.rhs()));
    case FKind::kNot:
      return Formula::mk_not(remap_symbols(f.children()[0], relmap, constmap));
    case FKind::kAnd:
    case FKind::kOr: {
      std::vector<Formula> ch;
      for (const Formula& c : f.children())
        ch.push_back(remap_symbols(c, relmap, constmap));
      return f.kind() == FKind::kAnd ? Formula::conj(std::move(ch))
                                     : Formula::disj(std::move(ch));
    }
    case FKind::kImplies:
      return Formula::implies(remap_symbols(f.children()[0], relmap, constmap),
                              remap_symbols(f.children()[1], relmap, constmap));
    case FKind::kIff:
      return Formula::iff(remap_symbols(f.children()[0], relmap, constmap),
                          remap_symbols(f.children()[1], relmap, constmap));
    case FKind::kForall:
      return Formula::forall(f.qvars(),
                             remap_symbols(f.body(), relmap, constmap));
    case FKind::kExists:
      return Formula::exists(f.qvars(),
                             remap_symbols(f.body(), relmap, constmap));
  }
  throw std::logic_error("unreachable");
}

// Constants are rigid across transitions, so priming touches relations only.
Formula prime(const Formula& f) {
  if (f.mentions_primed())
    throw std::invalid_argument("prime() on a formula with primed symbols");
  return remap_symbols(
      f, [](RelId r, bool) { return std::make_pair(r, true); },
      [](ConstId c, bool p) { return std::make_pair(c, p); });
}

Formula unprime(const Formula& f) {
  bool saw_unprimed = false;
  std::function<void(const Formula&)> scan = [&](const Formula& g) {
    if (g.kind() == FKind::kRel && !g.rel_primed()) saw_unprimed = true;
    for (const Formula& c : g.children()) scan(c);
  };
  scan(f);
  if (saw_unprimed)
    throw std::invalid_argument("unprime() on a formula with unprimed relations");
  return remap_symbols(
      f, [](RelId r, bool) { return std::make_pair(r, false); },
      [](ConstId c, bool) { return std::make_pair(c, false); });
}

// ---------------------------------------------------------------------------
// NNF and quantifier classification

namespace {

Formula nnf_walk(const Formula& f, bool pos) {
  switch (f.kind()) {
    case FKind::kTrue: return pos ? Formula::tru() : Formula::fls();
    case FKind::kFalse: return pos ? Formula::fls() : Formula::tru();
    case FKind::kRel:
    case FKind::kEq:
      return pos ? f : Formula::mk_not(f);
    case FKind::kNot:
      return nnf_walk(f.children()[0], !pos);
    case FKind::kAnd:
    case FKind::kOr: {
      bool conj = (f.kind() == FKind::kAnd) == pos;
      std::vector<Formula> ch;
      for (const Formula& c : f.children()) ch.push_back(nnf_walk(c, pos));
      return conj ? Formula::conj(std::move(ch))
                  : Formula::disj(std::move(ch));
    }
    case FKind::kImplies: {
      const Formula& a = f.children()[0];
      const Formula& b = f.children()[1];
      if (pos) return Formula::disj({nnf_walk(a, false), nnf_walk(b, true)});
      return Formula::conj({nnf_walk(a, true), nnf_walk(b, false)});
    }
    case FKind::kIff: {
      const Formula& a = f.children()[0];
      const Formula& b = f.children()[1];
      if (pos)
        return Formula::disj(
            {Formula::conj({nnf_walk(a, true), nnf_walk(b, true)}),
             Formula::conj({nnf_walk(a, false), nnf_walk(b, false)})});
      return Formula::disj(
          {Formula::conj({nnf_walk(a, true), nnf_walk(b, false)}),
           Formula::conj({nnf_walk(a, false), nnf_walk(b, true)})});
    }
    case FKind::kForall:
      return pos ? Formula::forall(f.qvars(), nnf_walk(f.body(), true))
                 : Formula::exists(f.qvars(), nnf_walk(f.body(), false));
    case FKind::kExists:
      return pos ? Formula::exists(f.qvars(), nnf_walk(f.body(), true))
                 : Formula::forall(f.qvars(), nnf_walk(f.body(), false));
  }
  throw std::logic_error("unreachable");
}

struct QInfo {
  bool any_forall = false;
  bool any_exists = false;
  bool alt_free = true;
};

QInfo qinfo(const Formula& f) {
  switch (f.kind()) {
    case FKind::kForall: {
      QInfo c = qinfo(f.body());
      return QInfo{true, c.any_exists, c.alt_free && !c.any_exists};
    }
    case FKind::kExists: {
      QInfo c = qinfo(f.body());
      return QInfo{c.any_forall, true, c.alt_free && !c.any_forall};
    }
    default: {
      QInfo r;
      for (const Formula& c : f.children()) {
        QInfo ci = qinfo(c);
        r.any_forall |= ci.any_forall;
        r.any_exists |= ci.any_exists;
        r.alt_free &= ci.alt_free;
      }
      return r;
    }
  }
}

}  // namespace

Formula to_nnf(const Formula& f) { return nnf_walk(f, true); }

QClass classify(const Formula& f) {
  QInfo q = qinfo(to_nnf(f));
  if (!q.any_forall && !q.any_exists) return QClass::kQuantifierFree;
  if (!q.any_exists) return QClass::kUniversal;
  if (!q.any_forall) return QClass::kExistential;
  if (q.alt_free) return QClass::kAlternationFree;
  return QClass::kUnrestricted;
}

bool is_universal(const Formula& f) {
  QClass q = classify(f);
  return q == QClass::kQuantifierFree || q == QClass::kUniversal;
}

bool is_existential(const Formula& f) {
  QClass q = classify(f);
  return q == QClass::kQuantifierFree || q == QClass::kExistential;
}

bool is_alternation_free(const Formula& f) {
  return classify(f) != QClass::kUnrestricted;
}

// ---------------------------------------------------------------------------
// Diagrams and the substructure preorder

namespace {

std::string pick_prefix_base(const Vocabulary& voc, const Val& v,
                             size_t count) {
  const char* bases[] = {"x", "e", "u", "w", "xe"};
  for (const char* b : bases) {
    bool ok = true;
    for (size_t i = 1; i <= count && ok; ++i) {
      std::string name = b + std::to_string(i);
      if (voc.has_name(name) || v.count(name)) ok = false;
    }
    if (ok) return b;
  }
  return "xe0_";
}

}  // namespace

Diagram diagram(const Structure& s, const Val& v) {
  std::string why;
  if (!s.well_formed(&why))
    throw std::invalid_argument("diagram of ill-formed structure: " + why);
  Diagram d;
  d.vocab = s.vocab;
  const Vocabulary& voc = *s.vocab;

  size_t total = 0;
  for (SortId so = 0; so < s.universe.size(); ++so)
    total += s.universe[so].size();
  std::string base = pick_prefix_base(voc, v, total);

  std::map<Element, size_t> pos;  // element -> prefix index
  for (SortId so = 0; so < s.universe.size(); ++so) {
    for (uint32_t i = 0; i < s.universe[so].size(); ++i) {
      size_t k = d.prefix.size();
      d.prefix.push_back(Var{base + std::to_string(k + 1), so});
      d.prefix_elems.push_back(Element{so, i});
      pos[Element{so, i}] = k;
    }
  }

  for (ConstId c = 0; c < voc.num_consts(); ++c) {
    Diagram::Lit l;
    l.k = Diagram::Lit::K::kIdentConst;
    l.i = pos.at(Element{voc.constant(c).sort, s.consts[c]});
    l.cid = c;
    d.body.push_back(l);
  }
  for (const auto& [name, elem] : v) {
    if (elem.sort >= s.universe.size() ||
        elem.idx >= s.universe[elem.sort].size())
      throw std::invalid_argument("view valuation outside structure: " + name);
    Diagram::Lit l;
    l.k = Diagram::Lit::K::kIdentView;
    l.i = pos.at(elem);
    l.view = Var{name, elem.sort};
    d.body.push_back(l);
  }

  for (size_t i = 0; i < d.prefix.size(); ++i) {
    for (size_t j = i + 1; j < d.prefix.size(); ++j) {
      if (d.prefix[i].sort != d.prefix[j].sort) continue;
      Diagram::Lit l;
      l.k = Diagram::Lit::K::kDistinct;
      l.i = i;
      l.j = j;
      d.body.push_back(l);
    }
  }

  // complete relational literal set, relations in name order, tuples in
  // lexicographic element order
  std::vector<RelId> rel_order;
  for (RelId r = 0; r < voc.num_rels(); ++r) rel_order.push_back(r);
  std::sort(rel_order.begin(), rel_order.end(), [&](RelId a, RelId b) {
    return voc.rel(a).name < voc.rel(b).name;
  });
  for (RelId r : rel_order) {
    const auto& sig = voc.rel(r).sig;
    if (!std::all_of(sig.begin(), sig.end(),
                     [&](SortId so) { return !s.universe[so].empty(); }))
      continue;
    std::vector<uint32_t> tuple(sig.size(), 0);
    std::function<void(size_t)> go = [&](size_t i) {
      if (i == sig.size()) {
        Diagram::Lit l;
        l.k = Diagram::Lit::K::kRel;
        l.rel = r;
        for (size_t p = 0; p < sig.size(); ++p)
          l.tuple.push_back(pos.at(Element{sig[p], tuple[p]}));
        l.positive = s.has(r, tuple);
        d.body.push_back(l);
        return;
      }
      for (uint32_t e = 0; e < s.universe[sig[i]].size(); ++e) {
        tuple[i] = e;
        go(i + 1);
      }
    };
    go(0);
  }
  return d;
}

Formula Diagram::lit_formula(const Lit& l, bool primed) const {
  switch (l.k) {
    case Lit::K::kIdentConst:
      return Formula::eq(Term::mk_var(prefix[l.i]),
                         Term::mk_const(l.cid, primed));
    case Lit::K::kIdentView:
      return Formula::eq(Term::mk_var(prefix[l.i]), Term::mk_var(l.view));
    case Lit::K::kDistinct:
      return Formula::neq(Term::mk_var(prefix[l.i]), Term::mk_var(prefix[l.j]));
    case Lit::K::kRel: {
      std::vector<Term> args;
      for (size_t i : l.tuple) args.push_back(Term::mk_var(prefix[i]));
      Formula a = Formula::rel(l.rel, primed, std::move(args));
      return l.positive ? a : Formula::mk_not(a);
    }
  }
  throw std::logic_error("unreachable");
}

Formula Diagram::to_formula(bool primed) const {
  std::vector<Formula> lits;
  lits.reserve(body.size());
  for (const Lit& l : body) lits.push_back(lit_formula(l, primed));
  return Formula::exists(prefix, Formula::conj(std::move(lits)));
}

Formula Diagram::negation_clause(const std::vector<size_t>& kept) const {
  std::set<size_t> used;
  std::vector<Formula> lits;
  for (size_t k : kept) {
    const Lit& l = body.at(k);
    switch (l.k) {
      case Lit::K::kIdentConst:
        used.insert(l.i);
        lits.push_back(Formula::neq(Term::mk_var(prefix[l.i]),
                                    Term::mk_const(l.cid, false)));
        break;
      case Lit::K::kIdentView:
        used.insert(l.i);
        lits.push_back(
            Formula::neq(Term::mk_var(prefix[l.i]), Term::mk_var(l.view)));
        break;
      case Lit::K::kDistinct:
        used.insert(l.i);
        used.insert(l.j);
        lits.push_back(
            Formula::eq(Term::mk_var(prefix[l.i]), Term::mk_var(prefix[l.j])));
        break;
      case Lit::K::kRel: {
        for (size_t i : l.tuple) used.insert(i);
        std::vector<Term> args;
        for (size_t i : l.tuple) args.push_back(Term::mk_var(prefix[i]));
        Formula a = Formula::rel(l.rel, false, std::move(args));
        lits.push_back(l.positive ? Formula::mk_not(a) : a);
        break;
      }
    }
  }
  std::vector<Var> qv;
  for (size_t i = 0; i < prefix.size(); ++i)
    if (used.count(i)) qv.push_back(prefix[i]);
  return Formula::forall(std::move(qv), Formula::disj(std::move(lits)));
}

bool is_substructure(const Structure& sub, const Val& vsub,
                     const Structure& sup, const Val& vsup) {
  Diagram d = diagram(sub, vsub);
  return eval(sup, vsup, d.to_formula(false));
}

}  // namespace pf

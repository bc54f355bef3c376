#include "terms.hpp"

#include <algorithm>
#include <sstream>

namespace eprsmt {

TermPtr mk(Term t) { return std::make_shared<const Term>(std::move(t)); }

Ctx::Ctx() = default;

SortId Ctx::declare_sort(const std::string& name) {
  if (sort_index_.count(name) || fun_index_.count(name))
    throw SolverError("symbol already declared: " + name);
  if (name == "Bool" || name == "Int" || name == "Real" || name == "Array")
    throw SolverError("cannot redeclare builtin sort " + name);
  sorts_.push_back(name);
  SortId id = static_cast<SortId>(sorts_.size() - 1);
  sort_index_[name] = id;
  return id;
}

uint32_t Ctx::declare_fun(const std::string& name, std::vector<SortId> args,
                          SortId ret) {
  if (sort_index_.count(name) || fun_index_.count(name))
    throw SolverError("symbol already declared: " + name);
  if (ret != kSortBool && !args.empty())
    throw SolverError("only constants and predicates are supported: " + name);
  funs_.push_back(FuncDecl{name, std::move(args), ret});
  uint32_t id = static_cast<uint32_t>(funs_.size() - 1);
  fun_index_[name] = id;
  return id;
}

std::optional<SortId> Ctx::find_sort(const std::string& name) const {
  auto it = sort_index_.find(name);
  if (it == sort_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<uint32_t> Ctx::find_fun(const std::string& name) const {
  auto it = fun_index_.find(name);
  if (it == fun_index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Ctx::sort_name(SortId s) const {
  static const std::string kBoolName = "Bool";
  if (s == kSortBool) return kBoolName;
  return sorts_.at(s);
}

void Ctx::push() {
  frames_.push_back(Frame{sorts_.size(), funs_.size(), asserts_.size()});
}

void Ctx::pop(size_t n) {
  if (n > frames_.size()) throw SolverError("pop exceeds stack depth");
  while (n--) {
    Frame f = frames_.back();
    frames_.pop_back();
    sorts_.resize(f.n_sorts);
    funs_.resize(f.n_funs);
    asserts_.resize(f.n_asserts);
  }
  sort_index_.clear();
  fun_index_.clear();
  for (size_t i = 0; i < sorts_.size(); ++i)
    sort_index_[sorts_[i]] = static_cast<SortId>(i);
  for (size_t i = 0; i < funs_.size(); ++i)
    fun_index_[funs_[i].name] = static_cast<uint32_t>(i);
}

void Ctx::reset() {
  sorts_.clear();
  funs_.clear();
  sort_index_.clear();
  fun_index_.clear();
  asserts_.clear();
  frames_.clear();
  internal_counter_ = 0;
}

void Ctx::assert_term(TermPtr t) {
  asserts_.push_back(Assertion{std::move(t), nullptr, {}});
}

uint32_t Ctx::add_internal_const(SortId s) {
  std::string name = ".k!" + std::to_string(internal_counter_++);
  funs_.push_back(FuncDecl{name, {}, s});
  uint32_t id = static_cast<uint32_t>(funs_.size() - 1);
  fun_index_[name] = id;
  return id;
}

SortId Ctx::parse_sort(const Sexpr& e) const {
  if (!e.is_atom) throw SolverError("parametric sorts are not supported");
  if (e.atom == "Bool") return kSortBool;
  auto s = find_sort(e.atom);
  if (!s) throw SolverError("unknown sort: " + e.atom);
  return *s;
}

SortId Ctx::sort_of(const TermPtr& t) const {
  switch (t->k) {
    case Term::K::kVar: return t->sort;
    case Term::K::kApp: return funs_.at(t->fn).ret;
    default: return kSortBool;
  }
}

TermPtr Ctx::parse_term(const Sexpr& e,
                        std::vector<std::pair<std::string, SortId>>& env) const {
  if (e.is_atom) {
    if (e.atom == "true") return mk(Term{.k = Term::K::kTrue});
    if (e.atom == "false") return mk(Term{.k = Term::K::kFalse});
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == e.atom) {
        Term t;
        t.k = Term::K::kVar;
        t.var = e.atom;
        t.sort = it->second;
        return mk(std::move(t));
      }
    auto f = find_fun(e.atom);
    if (!f) throw SolverError("unknown constant: " + e.atom);
    if (!funs_[*f].args.empty())
      throw SolverError("missing arguments for " + e.atom);
    Term t;
    t.k = Term::K::kApp;
    t.fn = *f;
    return mk(std::move(t));
  }
  if (e.kids.empty()) throw SolverError("empty application");
  if (!e.kids[0].is_atom) throw SolverError("bad application head");
  const std::string& head = e.kids[0].atom;

  auto sub = [&](size_t i) { return parse_term(e.kids[i], env); };
  auto want_formula = [&](const TermPtr& t, const char* who) {
    if (sort_of(t) != kSortBool)
      throw SolverError(std::string(who) + " expects Bool arguments");
  };

  if (head == "and" || head == "or") {
    Term t;
    t.k = head == "and" ? Term::K::kAnd : Term::K::kOr;
    for (size_t i = 1; i < e.kids.size(); ++i) {
      t.ch.push_back(sub(i));
      want_formula(t.ch.back(), head.c_str());
    }
    if (t.ch.empty()) return mk(Term{.k = head == "and" ? Term::K::kTrue : Term::K::kFalse});
    if (t.ch.size() == 1) return t.ch[0];
    return mk(std::move(t));
  }
  if (head == "not") {
    if (e.kids.size() != 2) throw SolverError("not takes one argument");
    Term t;
    t.k = Term::K::kNot;
    t.ch.push_back(sub(1));
    want_formula(t.ch[0], "not");
    return mk(std::move(t));
  }
  if (head == "=>") {
    if (e.kids.size() < 3) throw SolverError("=> takes two or more arguments");
    // right associative
    TermPtr acc = sub(e.kids.size() - 1);
    want_formula(acc, "=>");
    for (size_t i = e.kids.size() - 1; i-- > 1;) {
      Term t;
      t.k = Term::K::kImplies;
      t.ch = {sub(i), acc};
      want_formula(t.ch[0], "=>");
      acc = mk(std::move(t));
    }
    return acc;
  }
  if (head == "=" || head == "distinct") {
    if (e.kids.size() < 3) throw SolverError(head + " takes two or more arguments");
    std::vector<TermPtr> args;
    for (size_t i = 1; i < e.kids.size(); ++i) args.push_back(sub(i));
    SortId s = sort_of(args[0]);
    for (const auto& a : args)
      if (sort_of(a) != s) throw SolverError("sort mismatch in " + head);
    std::vector<TermPtr> parts;
    for (size_t i = 0; i < args.size(); ++i)
      for (size_t j = i + 1; j < args.size(); ++j) {
        if (head == "=" && j != i + 1) continue;  // chain, not all pairs
        Term eq;
        if (s == kSortBool) {
          eq.k = Term::K::kIff;
        } else {
          eq.k = Term::K::kEq;
        }
        eq.ch = {args[i], args[j]};
        TermPtr p = mk(std::move(eq));
        if (head == "distinct") {
          Term n;
          n.k = Term::K::kNot;
          n.ch = {p};
          p = mk(std::move(n));
        }
        parts.push_back(p);
      }
    if (parts.size() == 1) return parts[0];
    Term t;
    t.k = Term::K::kAnd;
    t.ch = std::move(parts);
    return mk(std::move(t));
  }
  if (head == "ite") {
    if (e.kids.size() != 4) throw SolverError("ite takes three arguments");
    TermPtr c = sub(1), a = sub(2), b = sub(3);
    want_formula(c, "ite");
    if (sort_of(a) != kSortBool || sort_of(b) != kSortBool)
      throw SolverError("ite is only supported on Bool");
    // (ite c a b) == (and (=> c a) (=> (not c) b))
    Term nc{.k = Term::K::kNot};
    nc.ch = {c};
    Term i1{.k = Term::K::kImplies};
    i1.ch = {c, a};
    Term i2{.k = Term::K::kImplies};
    i2.ch = {mk(std::move(nc)), b};
    Term t{.k = Term::K::kAnd};
    t.ch = {mk(std::move(i1)), mk(std::move(i2))};
    return mk(std::move(t));
  }
  if (head == "forall" || head == "exists") {
    if (e.kids.size() != 3) throw SolverError(head + " takes bindings and a body");
    const Sexpr& bind = e.kids[1];
    if (bind.is_atom) throw SolverError("bad binding list");
    Term t;
    t.k = head == "forall" ? Term::K::kForall : Term::K::kExists;
    size_t before = env.size();
    for (const Sexpr& b : bind.kids) {
      if (b.is_atom || b.kids.size() != 2 || !b.kids[0].is_atom)
        throw SolverError("bad binding");
      SortId s = parse_sort(b.kids[1]);
      if (s == kSortBool)
        throw SolverError("quantification over Bool is not supported");
      t.binders.emplace_back(b.kids[0].atom, s);
      env.emplace_back(b.kids[0].atom, s);
    }
    if (t.binders.empty()) throw SolverError("empty binding list");
    t.ch.push_back(parse_term(e.kids[2], env));
    want_formula(t.ch[0], head.c_str());
    env.resize(before);
    return mk(std::move(t));
  }
  if (head == "let")
    throw SolverError("let is not supported");

  auto f = find_fun(head);
  if (!f) throw SolverError("unknown symbol: " + head);
  const FuncDecl& d = funs_[*f];
  if (e.kids.size() - 1 != d.args.size())
    throw SolverError("wrong arity for " + head);
  Term t;
  t.k = Term::K::kApp;
  t.fn = *f;
  for (size_t i = 1; i < e.kids.size(); ++i) {
    t.ch.push_back(sub(i));
    if (sort_of(t.ch.back()) != d.args[i - 1])
      throw SolverError("argument sort mismatch for " + head);
    if (sort_of(t.ch.back()) == kSortBool)
      throw SolverError("Bool argument positions are not supported");
  }
  return mk(std::move(t));
}

namespace {

bool needs_bars(const std::string& s) {
  if (s.empty()) return true;
  for (char c : s) {
    bool plain = isalnum(static_cast<unsigned char>(c)) ||
                 std::string("~!@$%^&*_-+=<>.?/").find(c) != std::string::npos;
    if (!plain) return true;
  }
  return false;
}

}  // namespace

std::string Ctx::print_term(const TermPtr& t) const {
  std::ostringstream os;
  std::function<void(const TermPtr&)> go = [&](const TermPtr& u) {
    switch (u->k) {
      case Term::K::kTrue: os << "true"; return;
      case Term::K::kFalse: os << "false"; return;
      case Term::K::kVar: os << u->var; return;
      case Term::K::kApp: {
        const std::string& n = funs_.at(u->fn).name;
        std::string shown = needs_bars(n) ? "|" + n + "|" : n;
        if (u->ch.empty()) {
          os << shown;
          return;
        }
        os << "(" << shown;
        for (const auto& c : u->ch) {
          os << " ";
          go(c);
        }
        os << ")";
        return;
      }
      case Term::K::kEq:
      case Term::K::kIff: {
        os << "(= ";
        go(u->ch[0]);
        os << " ";
        go(u->ch[1]);
        os << ")";
        return;
      }
      default: {
        const char* name = u->k == Term::K::kAnd       ? "and"
                           : u->k == Term::K::kOr      ? "or"
                           : u->k == Term::K::kNot     ? "not"
                           : u->k == Term::K::kImplies ? "=>"
                           : u->k == Term::K::kForall  ? "forall"
                                                       : "exists";
        os << "(" << name;
        if (u->k == Term::K::kForall || u->k == Term::K::kExists) {
          os << " (";
          bool first = true;
          for (const auto& [v, s] : u->binders) {
            if (!first) os << " ";
            first = false;
            os << "(" << v << " " << sort_name(s) << ")";
          }
          os << ")";
        }
        for (const auto& c : u->ch) {
          os << " ";
          go(c);
        }
        os << ")";
        return;
      }
    }
  };
  go(t);
  return os.str();
}

}  // namespace eprsmt

/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Many-sorted relational first-order logic: vocabularies, formulas over an
// unprimed and a primed copy of the vocabulary, finite structures, evaluation,
// diagrams, and the substructure preorder. No function symbols, no theories.

namespace pf {

using SortId = uint32_t;
using RelId = uint32_t;
using ConstId = uint32_t;

class Vocabulary;
using VocabPtr = std::shared_ptr<const Vocabulary>;

// Immutable symbol table. Extensions are append-only so ids stay valid across
// extend(): a formula built over a vocabulary evaluates under any extension.
class Vocabulary {
 public:
  struct Rel {
    std::string name;
    std::vector<SortId> sig;
  };
  struct Const {
    std::string name;
    SortId sort;
  };

  class Builder;  // defined after the class body

  size_t num_sorts() const { return sorts_.size(); }
  size_t num_rels() const { return rels_.size(); }
  size_t num_consts() const { return consts_.size(); }
  const std::string& sort_name(SortId s) const { return sorts_.at(s); }
  const Rel& rel(RelId r) const { return rels_.at(r); }
  const Const& constant(ConstId c) const { return consts_.at(c); }

  std::optional<SortId> find_sort(const std::string& name) const;
  std::optional<RelId> find_rel(const std::string& name) const;
  std::optional<ConstId> find_const(const std::string& name) const;
  bool has_name(const std::string& name) const { return index_.count(name) > 0; }

  // New vocabulary with extra constants appended; ids of existing symbols are
  // unchanged. Fills *ids with the ids of the new constants if non-null.
  VocabPtr extend_consts(const std::vector<Const>& extra,
                         std::vector<ConstId>* ids = nullptr) const;
  // New vocabulary with extra relations appended (used for multi-step
  // unrollings that need one relation copy per time index).
  VocabPtr extend_rels(const std::vector<Rel>& extra,
                       std::vector<RelId>* ids = nullptr) const;

 private:
  std::vector<std::string> sorts_;
  std::vector<Rel> rels_;
  std::vector<Const> consts_;
  std::map<std::string, std::pair<char, uint32_t>> index_;  // 's'/'r'/'c' -> id

  void index_insert(const std::string& name, char kind, uint32_t id);
};

class Vocabulary::Builder {
 public:
  SortId add_sort(const std::string& name);
  RelId add_rel(const std::string& name, std::vector<SortId> sig);
  ConstId add_const(const std::string& name, SortId sort);
  VocabPtr build();

 private:
  Vocabulary v_;
};

struct Var {
  std::string name;
  SortId sort = 0;

  bool operator==(const Var& o) const = default;
  auto operator<=>(const Var& o) const = default;
};

// A term is a variable or a (possibly primed) constant.
struct Term {
  enum class Kind { kVar, kConst };
  Kind kind = Kind::kVar;
  Var var;               // kVar
  ConstId cid = 0;       // kConst
  bool primed = false;   // kConst only

  static Term mk_var(Var v) {
    Term t;
    t.kind = Kind::kVar;
    t.var = std::move(v);
    return t;
  }
  static Term mk_const(ConstId c, bool primed = false) {
    Term t;
    t.kind = Kind::kConst;
    t.cid = c;
    t.primed = primed;
    return t;
  }
  bool is_var() const { return kind == Kind::kVar; }
  bool operator==(const Term& o) const = default;
};

class Formula;
struct FNode;  // internal representation

enum class FKind {
  kTrue,
  kFalse,
  kRel,      // relation application, possibly primed
  kEq,       // equality of two terms of one sort
  kNot,
  kAnd,      // n-ary, flattened
  kOr,       // n-ary, flattened
  kImplies,  // binary, right-assoc in surface syntax
  kIff,      // binary
  kForall,
  kExists,
};

// Most specific quantifier class of a formula, judged on its negation normal
// form. Alternation-free: every quantified subformula is homogeneous (its
// scope contains only universals or only existentials).
enum class QClass {
  kQuantifierFree,
  kUniversal,
  kExistential,
  kAlternationFree,
  kUnrestricted,
};

// Immutable formula with structural hashing and cached free variables.
// Quantifier construction rejects shadowing: a binder whose name is already
// bound somewhere in the body, repeated in the same prefix, or free in the
// body at a different sort, throws std::invalid_argument.
class Formula {
 public:
  Formula() = default;  // null handle; only assignment is legal

  static Formula tru();
  static Formula fls();
  static Formula boolean(bool b) { return b ? tru() : fls(); }
  static Formula rel(RelId r, bool primed, std::vector<Term> args);
  static Formula eq(Term a, Term b);
  static Formula neq(Term a, Term b) { return mk_not(eq(a, b)); }
  static Formula mk_not(Formula f);
  static Formula conj(std::vector<Formula> fs);  // [] = true, [f] = f
  static Formula disj(std::vector<Formula> fs);  // [] = false, [f] = f
  static Formula implies(Formula a, Formula b);
  static Formula iff(Formula a, Formula b);
  static Formula forall(std::vector<Var> vars, Formula body);  // [] = body
  static Formula exists(std::vector<Var> vars, Formula body);

  bool valid() const { return node_ != nullptr; }
  FKind kind() const;
  const std::vector<Formula>& children() const;  // kNot/kAnd/kOr/kImplies/kIff
  const std::vector<Var>& qvars() const;         // kForall/kExists
  const Formula& body() const;                   // kForall/kExists
  RelId rel_id() const;                          // kRel
  bool rel_primed() const;                       // kRel
  const std::vector<Term>& args() const;         // kRel
  const Term& lhs() const;                       // kEq
  const Term& rhs() const;                       // kEq

  size_t hash() const;
  bool operator==(const Formula& o) const;
  bool operator!=(const Formula& o) const { return !(*this == o); }

  // Free variables, sorted by name. Throws on a name used at two sorts.
  const std::vector<Var>& free_vars() const;
  bool is_closed() const { return free_vars().empty(); }
  bool mentions_primed() const;

  std::string to_string(const Vocabulary& v) const;  // surface syntax

 private:
  explicit Formula(std::shared_ptr<const FNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const FNode> node_;
  friend struct FNodeAccess;
};

// An element of a structure: index into the universe of its sort.
struct Element {
  SortId sort = 0;
  uint32_t idx = 0;
  bool operator==(const Element& o) const = default;
  auto operator<=>(const Element& o) const = default;
};

// Valuation of (view) variables by name.
using Val = std::map<std::string, Element>;

// Finite structure over the unprimed vocabulary: per-sort universes with named
// elements, a tuple set per relation, an element per constant. Tuple sets are
// ordered, so iteration and printing are deterministic.
struct Structure {
  VocabPtr vocab;
  std::vector<std::vector<std::string>> universe;       // [sort][idx]
  std::vector<std::set<std::vector<uint32_t>>> tables;  // [rel]
  std::vector<uint32_t> consts;                         // [const] -> idx

  static Structure empty(VocabPtr v, const std::vector<size_t>& sizes);

  size_t size(SortId s) const { return universe.at(s).size(); }
  bool has(RelId r, const std::vector<uint32_t>& tuple) const;
  void set(RelId r, const std::vector<uint32_t>& tuple, bool val);
  bool well_formed(std::string* why = nullptr) const;

  // Deterministic one-line description (tests, logs, JSON payloads).
  std::string describe() const;
  bool operator==(const Structure& o) const;
  bool operator!=(const Structure& o) const { return !(*this == o); }
};

// Evaluation. eval() rejects primed symbols; eval2() interprets unprimed
// symbols in `pre` and primed ones in `post`. Both structures of eval2 must
// share universes. Free variables of f must be covered by v.
bool eval(const Structure& s, const Val& v, const Formula& f);
bool eval2(const Structure& pre, const Structure& post, const Val& v,
           const Formula& f);

// Substitution of free variables by terms, capture-checked: substituting a
// variable term that would be captured by a quantifier throws.
Formula substitute(const Formula& f, const std::map<std::string, Term>& m);

Formula prime(const Formula& f);    // throws if f already mentions primed symbols
Formula unprime(const Formula& f);  // throws if f mentions unprimed symbols

Formula to_nnf(const Formula& f);
QClass classify(const Formula& f);
bool is_universal(const Formula& f);
bool is_existential(const Formula& f);
bool is_alternation_free(const Formula& f);

// Rewrites relation/constant occurrences through explicit maps: (id, primed)
// of each occurrence is replaced by the mapped pair over the target
// vocabulary. Used to build per-step relation copies for unrollings.
Formula remap_symbols(
    const Formula& f,
    const std::function<std::pair<RelId, bool>(RelId, bool)>& relmap,
    const std::function<std::pair<ConstId, bool>(ConstId, bool)>& constmap);

// The diagram of (s, v): one existential variable per universe element, with
// distinctness for same-sort pairs, identity literals binding constants and
// view variables, and one literal per relation/tuple giving its polarity in s.
// Its free variables are exactly the view names of v. A structure satisfies
// the diagram under its own view valuation iff s embeds into it respecting
// constants and views.
struct Diagram {
  struct Lit {
    enum class K { kIdentConst, kIdentView, kDistinct, kRel };
    K k = K::kRel;
    // kIdentConst: prefix[i] = constant cid
    // kIdentView: prefix[i] = view var `view`
    // kDistinct: prefix[i] != prefix[j]
    // kRel: rel tuple of prefix indices, with polarity
    size_t i = 0, j = 0;
    ConstId cid = 0;
    Var view;
    RelId rel = 0;
    std::vector<size_t> tuple;
    bool positive = true;
  };

  VocabPtr vocab;
  std::vector<Var> prefix;             // one per element, (sort, idx) order
  std::vector<Element> prefix_elems;   // element of source structure per var
  std::vector<Lit> body;               // canonical order

  Formula lit_formula(const Lit& l, bool primed) const;
  // Exists(prefix, conj(body)); primed=true primes relations and constants
  // (view variables and the prefix stay shared between the two states).
  Formula to_formula(bool primed = false) const;
  // Forall over the used prefix of the disjunction of negated kept literals:
  // the universal clause excluding every superstructure of the kept part.
  Formula negation_clause(const std::vector<size_t>& kept) const;
  size_t size() const { return body.size(); }
};

Diagram diagram(const Structure& s, const Val& v);

// Substructure preorder: (sub, vsub) embeds into (sup, vsup), i.e. sup
// satisfies sub's diagram. Universal formulas true in sup (under vsup) are
// then true in sub (under vsub).
bool is_substructure(const Structure& sub, const Val& vsub,
                     const Structure& sup, const Val& vsup);

}  // namespace pf

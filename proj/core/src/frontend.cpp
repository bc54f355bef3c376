/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/frontend.hpp"

#include <cctype>
#include <map>
#include <sstream>

namespace pf {
namespace {

enum class TK { kIdent, kKw, kPunct, kEnd };

struct Token {
  TK k = TK::kEnd;
  std::string text;
  size_t line = 1;
  size_t col = 1;
};

bool is_keyword(const std::string& s) {
  static const char* kw[] = {"sort",    "relation",  "constant", "init",
                             "action",  "require",   "safety",   "invariant",
                             "automaton", "phase",   "view",     "on",
                             "where",   "self",      "true",     "false",
                             "forall",  "exists"};
  for (const char* k : kw)
    if (s == k) return true;
  return false;
}

struct Lexer {
  const std::string& src;
  std::string filename;
  size_t pos = 0, line = 1, col = 1;

  [[noreturn]] void err(const std::string& msg) {
    throw ParseError(filename, {line, col, msg});
  }

  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  bool lookahead(const char* s) const {
    size_t n = 0;
    while (s[n]) ++n;
    return src.compare(pos, n, s) == 0;
  }

  std::vector<Token> lex() {
    std::vector<Token> out;
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') advance();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      Token t;
      t.line = line;
      t.col = col;
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::string id;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                src[pos] == '_')) {
          id += src[pos];
          advance();
        }
        t.k = is_keyword(id) ? TK::kKw : TK::kIdent;
        t.text = id;
        out.push_back(t);
        continue;
      }
      t.k = TK::kPunct;
      const char* multi[] = {"<->", ":=", "!=", "->"};
      bool matched = false;
      for (const char* m : multi) {
        if (lookahead(m)) {
          t.text = m;
          for (size_t j = 0; m[j]; ++j) advance();
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string("(){},.:=!&|*").find(c) == std::string::npos)
          err(std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
        advance();
      }
      out.push_back(t);
    }
    out.push_back({TK::kEnd, "<end of file>", line, col});
    return out;
  }
};

using Scope = std::map<std::string, Var>;

struct Parser {
  std::vector<Token> toks;
  std::string filename;
  size_t i = 0;

  std::map<std::string, SortId> sorts;
  std::map<std::string, RelId> rels;
  std::map<std::string, ConstId> consts;
  std::vector<std::vector<SortId>> rel_sigs;
  std::vector<SortId> const_sorts;
  Vocabulary::Builder builder;

  ModelFile m;
  std::map<std::string, size_t> action_ids;

  const Token& peek(size_t k = 0) const {
    size_t j = i + k;
    return toks[j < toks.size() ? j : toks.size() - 1];
  }
  Token next() { return toks[i < toks.size() - 1 ? i++ : i]; }

  [[noreturn]] void err_at(const Token& t, const std::string& msg) {
    throw ParseError(filename, {t.line, t.col, msg});
  }

  bool at_punct(const char* p, size_t k = 0) const {
    return peek(k).k == TK::kPunct && peek(k).text == p;
  }
  bool at_kw(const char* w, size_t k = 0) const {
    return peek(k).k == TK::kKw && peek(k).text == w;
  }
  bool eat_punct(const char* p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }
  bool eat_kw(const char* w) {
    if (!at_kw(w)) return false;
    next();
    return true;
  }
  Token expect_punct(const char* p) {
    if (!at_punct(p))
      err_at(peek(), std::string("expected '") + p + "', got '" +
                         peek().text + "'");
    return next();
  }
  Token expect_kw(const char* w) {
    if (!at_kw(w))
      err_at(peek(), std::string("expected '") + w + "', got '" +
                         peek().text + "'");
    return next();
  }
  Token expect_ident(const std::string& what) {
    if (peek().k != TK::kIdent)
      err_at(peek(), "expected " + what + ", got '" + peek().text + "'");
    return next();
  }

  // All declared symbols share one namespace.
  void check_fresh_symbol(const Token& t) {
    if (sorts.count(t.text) || rels.count(t.text) || consts.count(t.text))
      err_at(t, "'" + t.text + "' is already declared");
  }
  // Bound variable names must not hide relations or constants; a printed
  // formula would otherwise read back differently.
  void check_bindable(const Token& t) {
    if (rels.count(t.text) || consts.count(t.text))
      err_at(t, "'" + t.text + "' would shadow a declared symbol");
  }

  SortId expect_sort() {
    Token t = expect_ident("a sort name");
    auto it = sorts.find(t.text);
    if (it == sorts.end()) err_at(t, "unknown sort '" + t.text + "'");
    return it->second;
  }

  SortId term_sort(const Term& t) const {
    return t.is_var() ? t.var.sort : const_sorts[t.cid];
  }

  Term parse_term(const Scope& sc) {
    Token t = expect_ident("a term");
    auto v = sc.find(t.text);
    if (v != sc.end()) return Term::mk_var(v->second);
    auto c = consts.find(t.text);
    if (c != consts.end()) return Term::mk_const(c->second);
    err_at(t, "unknown term '" + t.text + "'");
  }

  // Formula grammar, loosest first: quantifier, <->, ->, |, &, !, atom.
  // A quantifier body extends as far right as possible, so a quantifier is
  // accepted wherever a right operand starts.
  Formula parse_formula(const Scope& sc) {
    if (at_kw("forall") || at_kw("exists")) return parse_quant(sc);
    return parse_iff(sc);
  }

  Formula parse_rhs_or(const Scope& sc, Formula (Parser::*sub)(const Scope&)) {
    if (at_kw("forall") || at_kw("exists")) return parse_quant(sc);
    return (this->*sub)(sc);
  }

  Formula parse_iff(const Scope& sc) {
    Formula l = parse_implies(sc);
    if (!eat_punct("<->")) return l;
    return Formula::iff(l, parse_rhs_or(sc, &Parser::parse_iff));
  }

  Formula parse_implies(const Scope& sc) {
    Formula l = parse_or(sc);
    if (!eat_punct("->")) return l;
    return Formula::implies(l, parse_rhs_or(sc, &Parser::parse_implies));
  }

  Formula parse_or(const Scope& sc) {
    std::vector<Formula> parts{parse_and(sc)};
    while (eat_punct("|"))
      parts.push_back(parse_rhs_or(sc, &Parser::parse_and));
    return parts.size() == 1 ? parts[0] : Formula::disj(std::move(parts));
  }

  Formula parse_and(const Scope& sc) {
    std::vector<Formula> parts{parse_not(sc)};
    while (eat_punct("&"))
      parts.push_back(parse_rhs_or(sc, &Parser::parse_not));
    return parts.size() == 1 ? parts[0] : Formula::conj(std::move(parts));
  }

  Formula parse_not(const Scope& sc) {
    if (eat_punct("!"))
      return Formula::mk_not(parse_rhs_or(sc, &Parser::parse_not));
    return parse_atom(sc);
  }

  Formula parse_atom(const Scope& sc) {
    if (eat_punct("(")) {
      Formula f = parse_formula(sc);
      expect_punct(")");
      return f;
    }
    if (eat_kw("true")) return Formula::tru();
    if (eat_kw("false")) return Formula::fls();
    if (peek().k != TK::kIdent)
      err_at(peek(), "expected a formula, got '" + peek().text + "'");

    if (at_punct("(", 1)) return parse_rel_app(sc);
    if (at_punct("=", 1) || at_punct("!=", 1)) {
      Token lt = peek();
      Term lhs = parse_term(sc);
      bool neg = next().text == "!=";
      Token rt = peek();
      Term rhs = parse_term(sc);
      if (term_sort(lhs) != term_sort(rhs))
        err_at(rt, "equality between different sorts");
      (void)lt;
      return neg ? Formula::neq(lhs, rhs) : Formula::eq(lhs, rhs);
    }
    // Bare identifier: nullary relation.
    Token t = peek();
    auto r = rels.find(t.text);
    if (r != rels.end()) {
      if (!rel_sigs[r->second].empty())
        err_at(t, "relation '" + t.text + "' takes arguments");
      next();
      return Formula::rel(r->second, false, {});
    }
    err_at(t, "expected a formula, got '" + t.text + "'");
  }

  Formula parse_rel_app(const Scope& sc) {
    Token t = expect_ident("a relation name");
    auto r = rels.find(t.text);
    if (r == rels.end()) err_at(t, "unknown relation '" + t.text + "'");
    expect_punct("(");
    std::vector<Term> args;
    if (!at_punct(")")) {
      do {
        Token at = peek();
        args.push_back(parse_term(sc));
        const auto& sig = rel_sigs[r->second];
        if (args.size() <= sig.size() &&
            term_sort(args.back()) != sig[args.size() - 1])
          err_at(at, "argument sort mismatch for '" + t.text + "'");
      } while (eat_punct(","));
    }
    expect_punct(")");
    if (args.size() != rel_sigs[r->second].size())
      err_at(t, "relation '" + t.text + "' expects " +
                    std::to_string(rel_sigs[r->second].size()) +
                    " arguments, got " + std::to_string(args.size()));
    return Formula::rel(r->second, false, std::move(args));
  }

  Formula parse_quant(const Scope& sc) {
    Token qt = next();
    bool uni = qt.text == "forall";
    std::vector<Var> binders;
    Scope sc2 = sc;
    do {
      Token nt = expect_ident("a bound variable");
      check_bindable(nt);
      if (sc2.count(nt.text))
        err_at(nt, "'" + nt.text + "' shadows an enclosing variable");
      expect_punct(":");
      SortId s = expect_sort();
      binders.push_back(Var{nt.text, s});
      sc2[nt.text] = binders.back();
    } while (eat_punct(","));
    expect_punct(".");
    Formula body = parse_formula(sc2);
    try {
      return uni ? Formula::forall(std::move(binders), body)
                 : Formula::exists(std::move(binders), body);
    } catch (const std::invalid_argument& e) {
      err_at(qt, e.what());
    }
  }

  // Declarations.

  void parse_sort_decl() {
    Token t = expect_ident("a sort name");
    check_fresh_symbol(t);
    sorts[t.text] = builder.add_sort(t.text);
  }

  void parse_rel_decl() {
    Token t = expect_ident("a relation name");
    check_fresh_symbol(t);
    std::vector<SortId> sig;
    if (eat_punct("(")) {
      if (!at_punct(")")) {
        do sig.push_back(expect_sort());
        while (eat_punct(","));
      }
      expect_punct(")");
    }
    rels[t.text] = builder.add_rel(t.text, sig);
    rel_sigs.push_back(std::move(sig));
  }

  void parse_const_decl() {
    Token t = expect_ident("a constant name");
    check_fresh_symbol(t);
    expect_punct(":");
    SortId s = expect_sort();
    consts[t.text] = builder.add_const(t.text, s);
    const_sorts.push_back(s);
  }

  void parse_action_decl() {
    Token t = expect_ident("an action name");
    if (action_ids.count(t.text))
      err_at(t, "action '" + t.text + "' is already declared");
    ActionDecl a;
    a.name = t.text;
    Scope sc;
    expect_punct("(");
    if (!at_punct(")")) {
      do {
        Token pt = expect_ident("a parameter name");
        check_bindable(pt);
        if (sc.count(pt.text))
          err_at(pt, "duplicate parameter '" + pt.text + "'");
        expect_punct(":");
        SortId s = expect_sort();
        a.params.push_back(Var{pt.text, s});
        sc[pt.text] = a.params.back();
      } while (eat_punct(","));
    }
    expect_punct(")");
    expect_punct("{");
    while (!eat_punct("}")) {
      if (eat_kw("require")) {
        a.requires_.push_back(parse_formula(sc));
        continue;
      }
      a.updates.push_back(parse_update(a.params));
    }
    action_ids[a.name] = m.actions.size();
    m.actions.push_back(std::move(a));
  }

  Update parse_update(const std::vector<Var>& params) {
    Token t = expect_ident("'require' or an update");
    auto r = rels.find(t.text);
    if (r == rels.end()) err_at(t, "unknown relation '" + t.text + "'");
    Update u;
    u.rel = r->second;
    const auto& sig = rel_sigs[u.rel];
    if (eat_punct("(")) {
      if (!at_punct(")")) {
        do {
          Token at = peek();
          u.args.push_back(parse_update_arg(params));
          if (u.args.size() > sig.size())
            err_at(at, "too many arguments for '" + t.text + "'");
          SortId want = sig[u.args.size() - 1];
          const UpdateArg& ua = u.args.back();
          SortId got = ua.k == UpdateArg::K::kParam ? params[ua.param].sort
                       : ua.k == UpdateArg::K::kConst ? const_sorts[ua.cid]
                                                      : want;
          if (got != want)
            err_at(at, "argument sort mismatch for '" + t.text + "'");
        } while (eat_punct(","));
      }
      expect_punct(")");
    }
    if (u.args.size() != sig.size())
      err_at(t, "relation '" + t.text + "' expects " +
                    std::to_string(sig.size()) + " arguments, got " +
                    std::to_string(u.args.size()));
    expect_punct(":=");
    if (eat_kw("true")) {
      u.value = true;
    } else if (eat_kw("false")) {
      u.value = false;
    } else {
      err_at(peek(), "expected 'true' or 'false', got '" + peek().text + "'");
    }
    return u;
  }

  UpdateArg parse_update_arg(const std::vector<Var>& params) {
    if (eat_punct("*")) return UpdateArg::wild();
    Token t = expect_ident("a parameter, constant, or '*'");
    for (size_t j = 0; j < params.size(); ++j)
      if (params[j].name == t.text) return UpdateArg::of_param(j);
    auto c = consts.find(t.text);
    if (c != consts.end()) return UpdateArg::of_const(c->second);
    err_at(t, "unknown update argument '" + t.text + "'");
  }

  void parse_automaton() {
    if (m.automaton) err_at(peek(), "a model has at most one automaton");
    AutomatonDecl a;
    std::map<std::string, size_t> phase_ids;
    Scope view_scope;
    std::optional<Token> init_name;
    expect_punct("{");
    while (!eat_punct("}")) {
      if (eat_kw("view")) {
        Token vt = expect_ident("a view variable");
        check_bindable(vt);
        if (view_scope.count(vt.text))
          err_at(vt, "duplicate view variable '" + vt.text + "'");
        expect_punct(":");
        SortId s = expect_sort();
        a.view.push_back(Var{vt.text, s});
        view_scope[vt.text] = a.view.back();
        continue;
      }
      if (eat_kw("init")) {
        expect_kw("phase");
        if (init_name) err_at(peek(), "initial phase is already set");
        init_name = expect_ident("a phase name");
        continue;
      }
      if (eat_kw("phase")) {
        Token pt = expect_ident("a phase name");
        if (phase_ids.count(pt.text))
          err_at(pt, "phase '" + pt.text + "' is already declared");
        PhaseDecl p;
        p.name = pt.text;
        if (eat_punct("{")) {
          while (!eat_punct("}")) {
            expect_kw("invariant");
            p.invariants.push_back(parse_formula(view_scope));
          }
        }
        phase_ids[p.name] = a.phases.size();
        a.phases.push_back(std::move(p));
        continue;
      }
      if (at_kw("self") || peek().k == TK::kIdent) {
        bool self = eat_kw("self");
        Token st = expect_ident("a phase name");
        auto src = phase_ids.find(st.text);
        if (src == phase_ids.end())
          err_at(st, "unknown phase '" + st.text +
                         "' (declare phases before edges)");
        size_t dst;
        if (self) {
          dst = src->second;
        } else {
          Token dt = expect_ident("a phase name");
          auto d = phase_ids.find(dt.text);
          if (d == phase_ids.end())
            err_at(dt, "unknown phase '" + dt.text +
                           "' (declare phases before edges)");
          dst = d->second;
        }
        expect_kw("on");
        a.edges.push_back(parse_edge_tail(src->second, dst, a, view_scope));
        continue;
      }
      err_at(peek(),
             "expected view, init phase, phase, an edge, or '}', got '" +
                 peek().text + "'");
    }
    if (!init_name) err_at(peek(), "automaton needs an 'init phase'");
    auto ip = phase_ids.find(init_name->text);
    if (ip == phase_ids.end())
      err_at(*init_name, "unknown phase '" + init_name->text + "'");
    a.init_phase = ip->second;
    m.automaton = std::move(a);
  }

  EdgeDecl parse_edge_tail(size_t src, size_t dst, const AutomatonDecl& a,
                           const Scope& view_scope) {
    Token at = expect_ident("an action name");
    auto act = action_ids.find(at.text);
    if (act == action_ids.end())
      err_at(at, "unknown action '" + at.text +
                     "' (declare actions before the automaton)");
    const ActionDecl& ad = m.actions[act->second];
    EdgeDecl e;
    e.src = src;
    e.dst = dst;
    e.entry.action = act->second;
    expect_punct("(");
    if (!at_punct(")")) {
      do {
        if (eat_punct("*")) {
          e.entry.pattern.push_back(EdgePat::wild());
          continue;
        }
        Token vt = expect_ident("a view variable or '*'");
        size_t vi = 0;
        for (; vi < a.view.size(); ++vi)
          if (a.view[vi].name == vt.text) break;
        if (vi == a.view.size())
          err_at(vt, "'" + vt.text + "' is not a view variable");
        if (e.entry.pattern.size() < ad.params.size() &&
            a.view[vi].sort != ad.params[e.entry.pattern.size()].sort)
          err_at(vt, "pattern sort mismatch for '" + at.text + "'");
        e.entry.pattern.push_back(EdgePat::of_view(vi));
      } while (eat_punct(","));
    }
    expect_punct(")");
    if (e.entry.pattern.size() != ad.params.size())
      err_at(at, "action '" + at.text + "' expects " +
                     std::to_string(ad.params.size()) + " arguments, got " +
                     std::to_string(e.entry.pattern.size()));
    if (eat_kw("where")) {
      // Guard scope: view variables win name clashes with parameters.
      Scope sc = view_scope;
      for (const Var& p : ad.params) sc.emplace(p.name, p);
      Token gt = peek();
      e.entry.guard = parse_formula(sc);
      if (!is_alternation_free(e.entry.guard))
        err_at(gt, "edge guards must be alternation-free");
    } else {
      e.entry.guard = Formula::tru();
    }
    return e;
  }

  ModelFile parse() {
    while (peek().k != TK::kEnd) {
      if (eat_kw("sort")) {
        parse_sort_decl();
      } else if (eat_kw("relation")) {
        parse_rel_decl();
      } else if (eat_kw("constant")) {
        parse_const_decl();
      } else if (eat_kw("init")) {
        m.init.push_back(parse_formula({}));
      } else if (eat_kw("invariant")) {
        m.flat_invariant.push_back(parse_formula({}));
      } else if (eat_kw("action")) {
        parse_action_decl();
      } else if (at_kw("safety")) {
        Token st = next();
        if (m.safety) err_at(st, "a model has at most one safety clause");
        // View variables are in scope; the automaton must come first if the
        // safety references them.
        Scope sc;
        if (m.automaton)
          for (const Var& v : m.automaton->view) sc[v.name] = v;
        m.safety = parse_formula(sc);
      } else if (eat_kw("automaton")) {
        parse_automaton();
      } else {
        err_at(peek(), "expected a declaration, got '" + peek().text + "'");
      }
    }
    m.vocab = builder.build();
    return std::move(m);
  }
};

}  // namespace

ParseError::ParseError(const std::string& filename, Diagnostic d)
    : std::runtime_error((filename.empty() ? "" : filename + ":") +
                         std::to_string(d.line) + ":" + std::to_string(d.col) +
                         ": " + d.message),
      d_(std::move(d)) {}

bool same_vocab(const Vocabulary& a, const Vocabulary& b) {
  if (a.num_sorts() != b.num_sorts() || a.num_rels() != b.num_rels() ||
      a.num_consts() != b.num_consts())
    return false;
  for (SortId s = 0; s < a.num_sorts(); ++s)
    if (a.sort_name(s) != b.sort_name(s)) return false;
  for (RelId r = 0; r < a.num_rels(); ++r)
    if (a.rel(r).name != b.rel(r).name || a.rel(r).sig != b.rel(r).sig)
      return false;
  for (ConstId c = 0; c < a.num_consts(); ++c)
    if (a.constant(c).name != b.constant(c).name ||
        a.constant(c).sort != b.constant(c).sort)
      return false;
  return true;
}

bool ModelFile::operator==(const ModelFile& o) const {
  if (!vocab != !o.vocab) return false;
  if (vocab && !same_vocab(*vocab, *o.vocab)) return false;
  return init == o.init && actions == o.actions && safety == o.safety &&
         flat_invariant == o.flat_invariant && automaton == o.automaton;
}

ModelFile parse_model(const std::string& text, const std::string& filename) {
  Lexer lx{text, filename};
  Parser p;
  p.toks = lx.lex();
  p.filename = filename;
  return p.parse();
}

namespace {

void print_update_args(std::ostream& os, const Vocabulary& v,
                       const std::vector<Var>& params, const Update& u) {
  os << "(";
  for (size_t j = 0; j < u.args.size(); ++j) {
    if (j) os << ", ";
    switch (u.args[j].k) {
      case UpdateArg::K::kParam:
        os << params[u.args[j].param].name;
        break;
      case UpdateArg::K::kConst:
        os << v.constant(u.args[j].cid).name;
        break;
      case UpdateArg::K::kWild:
        os << "*";
        break;
    }
  }
  os << ")";
}

}  // namespace

std::string pretty(const ModelFile& m) {
  const Vocabulary& v = *m.vocab;
  std::vector<std::string> sections;

  auto section = [&](const std::function<void(std::ostream&)>& fill) {
    std::ostringstream os;
    fill(os);
    std::string s = os.str();
    if (!s.empty()) sections.push_back(std::move(s));
  };

  section([&](std::ostream& os) {
    for (SortId s = 0; s < v.num_sorts(); ++s)
      os << "sort " << v.sort_name(s) << "\n";
  });
  section([&](std::ostream& os) {
    for (RelId r = 0; r < v.num_rels(); ++r) {
      os << "relation " << v.rel(r).name << "(";
      for (size_t j = 0; j < v.rel(r).sig.size(); ++j)
        os << (j ? ", " : "") << v.sort_name(v.rel(r).sig[j]);
      os << ")\n";
    }
  });
  section([&](std::ostream& os) {
    for (ConstId c = 0; c < v.num_consts(); ++c)
      os << "constant " << v.constant(c).name << ": "
         << v.sort_name(v.constant(c).sort) << "\n";
  });
  section([&](std::ostream& os) {
    for (const Formula& f : m.init) os << "init " << f.to_string(v) << "\n";
  });
  for (const ActionDecl& a : m.actions) {
    section([&](std::ostream& os) {
      os << "action " << a.name << "(";
      for (size_t j = 0; j < a.params.size(); ++j)
        os << (j ? ", " : "") << a.params[j].name << ": "
           << v.sort_name(a.params[j].sort);
      os << ") {\n";
      for (const Formula& f : a.requires_)
        os << "  require " << f.to_string(v) << "\n";
      for (const Update& u : a.updates) {
        os << "  " << v.rel(u.rel).name;
        print_update_args(os, v, a.params, u);
        os << " := " << (u.value ? "true" : "false") << "\n";
      }
      os << "}\n";
    });
  }
  section([&](std::ostream& os) {
    for (const Formula& f : m.flat_invariant)
      os << "invariant " << f.to_string(v) << "\n";
  });
  // The automaton precedes the safety clause: a reparse resolves safety
  // formulas against the view variables.
  if (m.automaton) {
    const AutomatonDecl& a = *m.automaton;
    section([&](std::ostream& os) {
      os << "automaton {\n";
      for (const Var& w : a.view)
        os << "  view " << w.name << ": " << v.sort_name(w.sort) << "\n";
      if (!a.view.empty()) os << "\n";
      os << "  init phase " << a.phases[a.init_phase].name << "\n\n";
      for (const PhaseDecl& p : a.phases) {
        if (p.invariants.empty()) {
          os << "  phase " << p.name << "\n";
          continue;
        }
        os << "  phase " << p.name << " {\n";
        for (const Formula& f : p.invariants)
          os << "    invariant " << f.to_string(v) << "\n";
        os << "  }\n";
      }
      if (!a.edges.empty()) os << "\n";
      for (const EdgeDecl& e : a.edges) {
        const ActionDecl& act = m.actions[e.entry.action];
        os << "  ";
        if (e.src == e.dst)
          os << "self " << a.phases[e.src].name;
        else
          os << a.phases[e.src].name << " " << a.phases[e.dst].name;
        os << " on " << act.name << "(";
        for (size_t j = 0; j < e.entry.pattern.size(); ++j) {
          if (j) os << ", ";
          if (e.entry.pattern[j].k == EdgePat::K::kView)
            os << a.view[e.entry.pattern[j].view].name;
          else
            os << "*";
        }
        os << ")";
        if (e.entry.guard.kind() != FKind::kTrue)
          os << " where " << e.entry.guard.to_string(v);
        os << "\n";
      }
      os << "}\n";
    });
  }
  section([&](std::ostream& os) {
    if (m.safety) os << "safety " << m.safety->to_string(v) << "\n";
  });

  std::string out;
  for (size_t j = 0; j < sections.size(); ++j) {
    if (j) out += "\n";
    out += sections[j];
  }
  return out;
}

static void check_vars_within(const Formula& f, const std::vector<Var>& allowed,
                              const std::string& what) {
  for (const Var& fv : f.free_vars()) {
    bool ok = false;
    for (const Var& a : allowed)
      if (a == fv) ok = true;
    if (!ok)
      throw std::invalid_argument(what + " has a stray free variable '" +
                                  fv.name + "'");
  }
}

Lowered lower(const ModelFile& m) {
  if (!m.vocab) throw std::invalid_argument("model has no vocabulary");
  Lowered out;
  out.ts.vocab = m.vocab;
  out.ts.init = Formula::conj(m.init);
  if (!out.ts.init.is_closed())
    throw std::invalid_argument("init must be closed");

  for (const ActionDecl& a : m.actions) {
    CompiledAction ca;
    ca.name = a.name;
    ca.params = a.params;
    ca.guard = Formula::conj(a.requires_);
    check_vars_within(ca.guard, a.params, "guard of " + a.name);
    ca.updates = a.updates;
    ca.tr_body = compile_tr_body(*m.vocab, a.params, a.updates);
    out.ts.actions.push_back(std::move(ca));
  }

  for (const Formula& f : m.flat_invariant) {
    if (!f.is_closed())
      throw std::invalid_argument("flat invariants must be closed");
    out.flat_invariant.push_back(f);
  }

  if (m.automaton) {
    const AutomatonDecl& a = *m.automaton;
    if (a.phases.empty())
      throw std::invalid_argument("automaton needs at least one phase");
    if (a.init_phase >= a.phases.size())
      throw std::invalid_argument("initial phase out of range");
    PhaseStructure ps;
    ps.vocab = m.vocab;
    ps.init_phase = a.init_phase;
    ps.view = a.view;
    for (const PhaseDecl& p : a.phases) {
      ps.phases.push_back(p.name);
      Formula eta = Formula::conj(p.invariants);
      check_vars_within(eta, a.view, "characterization of " + p.name);
      out.eta.push_back(eta);
      if (!p.invariants.empty()) out.has_characterizations = true;
    }
    for (const EdgeDecl& e : a.edges) {
      if (e.src >= ps.phases.size() || e.dst >= ps.phases.size())
        throw std::invalid_argument("edge phase out of range");
      // entry_enabled validates the entry against the transition system.
      entry_enabled(out.ts, ps, e.entry);
      ps.delta[{e.src, e.dst}].push_back(e.entry);
    }
    out.structure = std::move(ps);
  }

  if (m.safety) {
    std::vector<Var> allowed;
    if (m.automaton) allowed = m.automaton->view;
    check_vars_within(*m.safety, allowed, "safety");
    out.safety = m.safety;
  }
  return out;
}

}  // namespace pf

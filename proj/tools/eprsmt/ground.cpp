#include "ground.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <set>

namespace eprsmt {

TermPtr to_nnf(const TermPtr& t, bool neg) {
  switch (t->k) {
    case Term::K::kTrue:
      return neg ? mk(Term{.k = Term::K::kFalse}) : t;
    case Term::K::kFalse:
      return neg ? mk(Term{.k = Term::K::kTrue}) : t;
    case Term::K::kApp:
    case Term::K::kEq: {
      if (!neg) return t;
      Term n{.k = Term::K::kNot};
      n.ch = {t};
      return mk(std::move(n));
    }
    case Term::K::kNot:
      return to_nnf(t->ch[0], !neg);
    case Term::K::kAnd:
    case Term::K::kOr: {
      Term r;
      bool is_and = (t->k == Term::K::kAnd);
      r.k = (is_and != neg) ? Term::K::kAnd : Term::K::kOr;
      for (const auto& c : t->ch) r.ch.push_back(to_nnf(c, neg));
      return mk(std::move(r));
    }
    case Term::K::kImplies: {
      Term r;
      r.k = neg ? Term::K::kAnd : Term::K::kOr;
      r.ch = {to_nnf(t->ch[0], !neg), to_nnf(t->ch[1], neg)};
      return mk(std::move(r));
    }
    case Term::K::kIff: {
      // a <-> b  ==  (!a | b) & (a | !b);  negation dualizes
      Term l{.k = Term::K::kOr}, rr{.k = Term::K::kOr};
      l.ch = {to_nnf(t->ch[0], !neg), to_nnf(t->ch[1], false)};
      rr.ch = {to_nnf(t->ch[0], neg), to_nnf(t->ch[1], true)};
      Term r{.k = Term::K::kAnd};
      if (neg) {
        // !(a <-> b) == (a | b) & (!a | !b)
        l.ch = {to_nnf(t->ch[0], false), to_nnf(t->ch[1], false)};
        rr.ch = {to_nnf(t->ch[0], true), to_nnf(t->ch[1], true)};
      }
      r.ch = {mk(std::move(l)), mk(std::move(rr))};
      return mk(std::move(r));
    }
    case Term::K::kForall:
    case Term::K::kExists: {
      Term r = *t;
      r.k = ((t->k == Term::K::kForall) != neg) ? Term::K::kForall
                                                : Term::K::kExists;
      r.ch = {to_nnf(t->ch[0], neg)};
      return mk(std::move(r));
    }
    case Term::K::kVar:
      break;
  }
  throw SolverError("a bare variable is not a formula");
}

namespace {

// Replace outer existentials by fresh witness constants. Expects NNF input.
TermPtr skolemize(Ctx& ctx, const TermPtr& t, bool under_forall,
                  std::map<std::string, uint32_t>& subst,
                  std::vector<uint32_t>& introduced) {
  switch (t->k) {
    case Term::K::kTrue:
    case Term::K::kFalse:
      return t;
    case Term::K::kVar: {
      auto it = subst.find(t->var);
      if (it == subst.end()) return t;
      Term a{.k = Term::K::kApp};
      a.fn = it->second;
      return mk(std::move(a));
    }
    case Term::K::kApp:
    case Term::K::kEq: {
      Term r = *t;
      for (auto& c : r.ch) c = skolemize(ctx, c, under_forall, subst, introduced);
      return mk(std::move(r));
    }
    case Term::K::kNot: {
      Term r{.k = Term::K::kNot};
      r.ch = {skolemize(ctx, t->ch[0], under_forall, subst, introduced)};
      return mk(std::move(r));
    }
    case Term::K::kAnd:
    case Term::K::kOr: {
      Term r = *t;
      for (auto& c : r.ch) c = skolemize(ctx, c, under_forall, subst, introduced);
      return mk(std::move(r));
    }
    case Term::K::kForall: {
      // an inner binder shadows any witness substitution of the same name
      std::vector<std::pair<std::string, uint32_t>> saved;
      for (const auto& [v, s] : t->binders) {
        (void)s;
        auto it = subst.find(v);
        if (it != subst.end()) {
          saved.emplace_back(v, it->second);
          subst.erase(it);
        }
      }
      Term r = *t;
      r.ch = {skolemize(ctx, t->ch[0], true, subst, introduced)};
      for (auto& [v, f] : saved) subst[v] = f;
      return mk(std::move(r));
    }
    case Term::K::kExists: {
      if (under_forall)
        throw NotInFragment("existential under a universal quantifier");
      std::vector<std::pair<std::string, std::optional<uint32_t>>> saved;
      for (const auto& [v, s] : t->binders) {
        auto it = subst.find(v);
        saved.emplace_back(v, it == subst.end()
                                  ? std::nullopt
                                  : std::optional<uint32_t>(it->second));
        uint32_t w = ctx.add_internal_const(s);
        introduced.push_back(w);
        subst[v] = w;
      }
      TermPtr body = skolemize(ctx, t->ch[0], false, subst, introduced);
      for (auto& [v, f] : saved) {
        if (f)
          subst[v] = *f;
        else
          subst.erase(v);
      }
      return body;
    }
    default:
      throw SolverError("unnormalized connective during witness introduction");
  }
}

struct Builder {
  Ctx& ctx;
  GroundResult& out;

  int new_var(bool pol) {
    out.polarity.push_back(pol ? 1 : 0);
    return ++out.num_vars;
  }

  int eq_var(uint32_t a, uint32_t b) {
    if (a > b) std::swap(a, b);
    auto [it, fresh] = out.eq_vars.emplace(std::make_pair(a, b), 0);
    if (fresh) it->second = new_var(true);
    return it->second;
  }

  int rel_var(uint32_t fn, std::vector<uint32_t> tuple) {
    auto [it, fresh] = out.rel_vars.emplace(
        std::make_pair(fn, std::move(tuple)), 0);
    if (fresh) it->second = new_var(false);
    return it->second;
  }

  // ---- ground formula tree -------------------------------------------------
  struct GF {
    enum class K { kTrue, kFalse, kLit, kAnd, kOr };
    K k = K::kTrue;
    int lit = 0;
    std::vector<GF> ch;
  };

  static GF g_true() { return GF{GF::K::kTrue, 0, {}}; }
  static GF g_false() { return GF{GF::K::kFalse, 0, {}}; }
  static GF g_lit(int l) { return GF{GF::K::kLit, l, {}}; }

  static GF g_and(std::vector<GF> ch) {
    std::vector<GF> keep;
    for (auto& c : ch) {
      if (c.k == GF::K::kFalse) return g_false();
      if (c.k == GF::K::kTrue) continue;
      if (c.k == GF::K::kAnd) {
        for (auto& d : c.ch) keep.push_back(std::move(d));
      } else {
        keep.push_back(std::move(c));
      }
    }
    if (keep.empty()) return g_true();
    if (keep.size() == 1) return std::move(keep[0]);
    return GF{GF::K::kAnd, 0, std::move(keep)};
  }

  static GF g_or(std::vector<GF> ch) {
    std::vector<GF> keep;
    for (auto& c : ch) {
      if (c.k == GF::K::kTrue) return g_true();
      if (c.k == GF::K::kFalse) continue;
      if (c.k == GF::K::kOr) {
        for (auto& d : c.ch) keep.push_back(std::move(d));
      } else {
        keep.push_back(std::move(c));
      }
    }
    if (keep.empty()) return g_false();
    if (keep.size() == 1) return std::move(keep[0]);
    return GF{GF::K::kOr, 0, std::move(keep)};
  }

  uint32_t resolve(const TermPtr& t, std::map<std::string, uint32_t>& env) {
    if (t->k == Term::K::kVar) {
      auto it = env.find(t->var);
      if (it == env.end()) throw SolverError("unbound variable " + t->var);
      return it->second;
    }
    if (t->k == Term::K::kApp && t->ch.empty()) return t->fn;
    throw SolverError("arguments must be variables or constants");
  }

  GF ground(const TermPtr& t, std::map<std::string, uint32_t>& env) {
    switch (t->k) {
      case Term::K::kTrue: return g_true();
      case Term::K::kFalse: return g_false();
      case Term::K::kNot: {
        GF c = ground(t->ch[0], env);
        if (c.k == GF::K::kTrue) return g_false();
        if (c.k == GF::K::kFalse) return g_true();
        c.lit = -c.lit;  // NNF: negation sits on atoms only
        return c;
      }
      case Term::K::kEq: {
        uint32_t a = resolve(t->ch[0], env), b = resolve(t->ch[1], env);
        if (a == b) return g_true();
        return g_lit(eq_var(a, b));
      }
      case Term::K::kApp: {
        std::vector<uint32_t> tuple;
        for (const auto& c : t->ch) tuple.push_back(resolve(c, env));
        return g_lit(rel_var(t->fn, std::move(tuple)));
      }
      case Term::K::kAnd:
      case Term::K::kOr: {
        std::vector<GF> ch;
        for (const auto& c : t->ch) ch.push_back(ground(c, env));
        return t->k == Term::K::kAnd ? g_and(std::move(ch))
                                     : g_or(std::move(ch));
      }
      case Term::K::kForall: {
        const auto& bs = t->binders;
        std::vector<const std::vector<uint32_t>*> pools;
        for (const auto& [v, s] : bs) {
          (void)v;
          pools.push_back(&out.candidates.at(s));
        }
        std::vector<std::pair<std::string, std::optional<uint32_t>>> saved;
        for (const auto& [v, s] : bs) {
          (void)s;
          auto it = env.find(v);
          saved.emplace_back(v, it == env.end()
                                    ? std::nullopt
                                    : std::optional<uint32_t>(it->second));
        }
        std::vector<size_t> idx(bs.size(), 0);
        std::vector<GF> parts;
        for (;;) {
          for (size_t i = 0; i < bs.size(); ++i)
            env[bs[i].first] = (*pools[i])[idx[i]];
          parts.push_back(ground(t->ch[0], env));
          size_t i = 0;
          while (i < idx.size() && ++idx[i] == pools[i]->size()) idx[i++] = 0;
          if (i == idx.size()) break;
        }
        for (auto& [v, f] : saved) {
          if (f)
            env[v] = *f;
          else
            env.erase(v);
        }
        return g_and(std::move(parts));
      }
      default:
        throw SolverError("unexpected connective in ground()");
    }
  }

  // ---- CNF -----------------------------------------------------------------
  void clause(std::vector<int> lits) { out.clauses.push_back(std::move(lits)); }

  int reify(const GF& f) {
    if (f.k == GF::K::kLit) return f.lit;
    int v = new_var(false);
    if (f.k == GF::K::kAnd) {
      for (const auto& c : f.ch) clause({-v, reify(c)});
    } else {  // kOr
      std::vector<int> cl{-v};
      for (const auto& c : f.ch) cl.push_back(reify(c));
      clause(std::move(cl));
    }
    return v;
  }

  bool assert_true(const GF& f) {  // false return: unsatisfiable outright
    switch (f.k) {
      case GF::K::kTrue: return true;
      case GF::K::kFalse: return false;
      case GF::K::kLit:
        clause({f.lit});
        return true;
      case GF::K::kAnd:
        for (const auto& c : f.ch)
          if (!assert_true(c)) return false;
        return true;
      case GF::K::kOr: {
        std::vector<int> cl;
        for (const auto& c : f.ch) cl.push_back(reify(c));
        clause(std::move(cl));
        return true;
      }
    }
    return true;
  }
};

}  // namespace

GroundResult ground_all(Ctx& ctx) {
  GroundResult out;
  // 1. normalize + witness constants, cached per assertion
  for (auto& a : ctx.assertions()) {
    if (!a.skolemized) {
      TermPtr n = to_nnf(a.t, false);
      std::map<std::string, uint32_t> subst;
      a.skolemized = skolemize(ctx, n, false, subst, a.skolems);
    }
  }
  // 2. constant pool per sort; every declared sort gets a seed element
  for (SortId s = 0; s < ctx.num_sorts(); ++s) out.candidates[s] = {};
  for (uint32_t f = 0; f < ctx.num_funs(); ++f) {
    const FuncDecl& d = ctx.fun(f);
    if (d.args.empty() && d.ret != kSortBool) out.candidates[d.ret].push_back(f);
  }
  for (SortId s = 0; s < ctx.num_sorts(); ++s) {
    if (out.candidates[s].empty())
      out.candidates[s].push_back(ctx.add_internal_const(s));
  }

  Builder b{ctx, out};
  // 3. ground the assertions
  std::vector<Builder::GF> roots;
  for (auto& a : ctx.assertions()) {
    std::map<std::string, uint32_t> env;
    roots.push_back(b.ground(a.skolemized, env));
  }
  // 4. equality is transitive (pairs are unordered, so that covers symmetry)
  for (const auto& [s, pool] : out.candidates) {
    (void)s;
    for (size_t i = 0; i < pool.size(); ++i)
      for (size_t j = i + 1; j < pool.size(); ++j)
        for (size_t k = j + 1; k < pool.size(); ++k) {
          int ab = b.eq_var(pool[i], pool[j]);
          int bc = b.eq_var(pool[j], pool[k]);
          int ac = b.eq_var(pool[i], pool[k]);
          b.clause({-ab, -bc, ac});
          b.clause({-ab, -ac, bc});
          b.clause({-bc, -ac, ab});
        }
  }
  // 5. congruence: single-position replacement over every mentioned relation
  {
    std::set<uint32_t> used;
    for (const auto& [key, var] : out.rel_vars) {
      (void)var;
      used.insert(key.first);
    }
    out.rels_used.assign(used.begin(), used.end());
    for (uint32_t fn : out.rels_used) {
      const FuncDecl& d = ctx.fun(fn);
      if (d.args.empty()) continue;
      std::vector<const std::vector<uint32_t>*> pools;
      for (SortId s : d.args) pools.push_back(&out.candidates.at(s));
      std::vector<size_t> idx(d.args.size(), 0);
      for (;;) {
        std::vector<uint32_t> tuple(d.args.size());
        for (size_t i = 0; i < idx.size(); ++i) tuple[i] = (*pools[i])[idx[i]];
        int rv = b.rel_var(fn, tuple);
        for (size_t p = 0; p < tuple.size(); ++p) {
          for (uint32_t c : *pools[p]) {
            if (c == tuple[p]) continue;
            std::vector<uint32_t> t2 = tuple;
            t2[p] = c;
            int ev = b.eq_var(tuple[p], c);
            int rv2 = b.rel_var(fn, std::move(t2));
            b.clause({-rv, -ev, rv2});
          }
        }
        size_t i = 0;
        while (i < idx.size() && ++idx[i] == pools[i]->size()) idx[i++] = 0;
        if (i == idx.size()) break;
      }
    }
  }
  // 6. CNF
  for (const auto& r : roots) {
    if (!b.assert_true(r)) {
      out.clauses.push_back({});  // empty clause: unsatisfiable
      break;
    }
  }
  return out;
}

}  // namespace eprsmt

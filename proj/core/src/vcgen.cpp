/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/vcgen.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace pf {
namespace {

// Fresh parameter tuple shared by all entry conditions of one query. The
// surface language reserves leading underscores, so '_p<i>' cannot collide
// with view or model names.
std::vector<Var> probe_params(const CompiledAction& a) {
  std::vector<Var> out;
  for (size_t i = 0; i < a.params.size(); ++i)
    out.push_back(Var{"_p" + std::to_string(i), a.params[i].sort});
  return out;
}

std::map<std::string, Term> param_subst(const CompiledAction& a,
                                        const std::vector<Var>& ps) {
  std::map<std::string, Term> m;
  for (size_t i = 0; i < a.params.size(); ++i)
    m[a.params[i].name] = Term::mk_var(ps[i]);
  return m;
}

// Alpha-renames any binder in `f` whose name is in `taken`. Closing a VC
// over the view would otherwise reject formulas that bind a like-named
// variable (init clauses and action bodies are parsed without the view in
// scope, so such collisions are legal surface input).
Formula rename_binders(const Formula& f, const std::set<std::string>& taken,
                       size_t& ctr) {
  switch (f.kind()) {
    case FKind::kTrue:
    case FKind::kFalse:
    case FKind::kRel:
    case FKind::kEq:
      return f;
    case FKind::kNot:
      return Formula::mk_not(rename_binders(f.children()[0], taken, ctr));
    case FKind::kAnd:
    case FKind::kOr: {
      std::vector<Formula> kids;
      for (const Formula& c : f.children())
        kids.push_back(rename_binders(c, taken, ctr));
      return f.kind() == FKind::kAnd ? Formula::conj(std::move(kids))
                                     : Formula::disj(std::move(kids));
    }
    case FKind::kImplies:
      return Formula::implies(rename_binders(f.children()[0], taken, ctr),
                              rename_binders(f.children()[1], taken, ctr));
    case FKind::kIff:
      return Formula::iff(rename_binders(f.children()[0], taken, ctr),
                          rename_binders(f.children()[1], taken, ctr));
    case FKind::kForall:
    case FKind::kExists: {
      Formula body = rename_binders(f.body(), taken, ctr);
      std::vector<Var> qs = f.qvars();
      std::map<std::string, Term> sub;
      for (Var& v : qs) {
        if (!taken.count(v.name)) continue;
        Var fresh{"_r" + std::to_string(ctr++), v.sort};
        sub[v.name] = Term::mk_var(fresh);
        v = fresh;
      }
      if (!sub.empty()) body = substitute(body, sub);
      return f.kind() == FKind::kForall ? Formula::forall(std::move(qs), body)
                                        : Formula::exists(std::move(qs), body);
    }
  }
  throw std::logic_error("unreachable formula kind");
}

Formula close_over(const std::vector<Var>& vars, const Formula& body) {
  std::set<std::string> taken;
  for (const Var& v : vars) taken.insert(v.name);
  size_t ctr = 0;
  return Formula::forall(vars, rename_binders(body, taken, ctr));
}

void require_view_scoped(const Formula& f, const std::vector<Var>& view,
                         const char* what) {
  for (const Var& v : f.free_vars()) {
    bool ok = false;
    for (const Var& w : view) ok = ok || v == w;
    if (!ok)
      throw std::invalid_argument(std::string(what) + " has free variable '" +
                                  v.name + "' outside the view");
  }
}

std::vector<Formula> conjuncts(const Formula& f) {
  if (f.kind() == FKind::kAnd) return f.children();
  return {f};
}

}  // namespace

std::string VC::describe(const TransitionSystem& ts,
                         const PhaseStructure& s) const {
  switch (kind) {
    case Kind::kInitiation:
      return "initiation";
    case Kind::kInductiveness:
      return "inductiveness " + s.phases[q] + " -> " + s.phases[p];
    case Kind::kEdgeCovering:
      return "covering " + s.phases[q] + " / " + ts.actions[action].name;
    case Kind::kSafety:
      return "safety " + s.phases[q];
  }
  return "?";
}

std::vector<VC> edge_cover_vcs(const TransitionSystem& ts,
                               const PhaseAutomaton& a, size_t q) {
  const PhaseStructure& s = a.structure;
  std::vector<VC> out;
  for (size_t ai = 0; ai < ts.actions.size(); ++ai) {
    const CompiledAction& act = ts.actions[ai];
    std::vector<Var> ps = probe_params(act);
    auto sub = param_subst(act, ps);
    std::vector<Formula> rhs;
    for (const auto& [qp, entries] : s.delta) {
      if (qp.first != q) continue;
      for (const EdgeEntry& e : entries) {
        if (e.action != ai) continue;
        if (!is_alternation_free(e.guard))
          throw std::invalid_argument("edge guard not alternation-free: " +
                                      e.guard.to_string(*ts.vocab));
        rhs.push_back(entry_enabled(ts, s, e, ps));
      }
    }
    VC vc;
    vc.kind = VC::Kind::kEdgeCovering;
    vc.q = q;
    vc.action = ai;
    std::vector<Var> quant = s.view;
    quant.insert(quant.end(), ps.begin(), ps.end());
    vc.formula = close_over(
        quant,
        Formula::implies(Formula::conj({a.eta[q], substitute(act.guard, sub),
                                        substitute(act.tr_body, sub)}),
                         Formula::disj(std::move(rhs))));
    out.push_back(std::move(vc));
  }
  return out;
}

std::vector<VC> gen_vcs(const TransitionSystem& ts, const PhaseAutomaton& a,
                        const Formula& safety) {
  const PhaseStructure& s = a.structure;
  if (a.eta.size() != s.phases.size())
    throw std::invalid_argument("one characterization per phase required");
  for (const Formula& e : a.eta) require_view_scoped(e, s.view, "eta");
  require_view_scoped(safety, s.view, "safety");

  std::vector<VC> out;

  VC init;
  init.kind = VC::Kind::kInitiation;
  init.q = s.init_phase;
  init.formula =
      close_over(s.view, Formula::implies(ts.init, a.eta[s.init_phase]));
  out.push_back(std::move(init));

  for (auto [q, p] : edges(s)) {
    VC vc;
    vc.kind = VC::Kind::kInductiveness;
    vc.q = q;
    vc.p = p;
    vc.formula = close_over(
        s.view,
        Formula::implies(Formula::conj({a.eta[q], edge_label(ts, s, q, p)}),
                         prime(a.eta[p])));
    out.push_back(std::move(vc));
  }

  for (size_t q = 0; q < s.phases.size(); ++q)
    for (VC& vc : edge_cover_vcs(ts, a, q)) out.push_back(std::move(vc));

  for (size_t q = 0; q < s.phases.size(); ++q) {
    VC vc;
    vc.kind = VC::Kind::kSafety;
    vc.q = q;
    vc.formula = close_over(s.view, Formula::implies(a.eta[q], safety));
    out.push_back(std::move(vc));
  }
  return out;
}

CheckResult check(const TransitionSystem& ts, const PhaseAutomaton& a,
                  const Formula& safety, SolverSession& solver) {
  const PhaseStructure& s = a.structure;
  std::vector<VC> vcs = gen_vcs(ts, a, safety);

  CheckResult res;
  solver.set_base({});
  for (VC& vc : vcs) {
    std::vector<std::vector<Formula>> probes;
    switch (vc.kind) {
      case VC::Kind::kInitiation:
        for (const Formula& c : conjuncts(a.eta[s.init_phase]))
          probes.push_back({ts.init, Formula::mk_not(c)});
        break;
      case VC::Kind::kInductiveness:
        for (const EdgeEntry& e : *s.entries(vc.q, vc.p)) {
          const CompiledAction& act = ts.actions[e.action];
          std::vector<Var> ps = probe_params(act);
          auto sub = param_subst(act, ps);
          std::vector<Formula> base{
              a.eta[vc.q], entry_enabled(ts, s, e, ps),
              substitute(act.guard, sub), substitute(act.tr_body, sub)};
          for (const Formula& c : conjuncts(a.eta[vc.p])) {
            std::vector<Formula> pr = base;
            pr.push_back(Formula::mk_not(prime(c)));
            probes.push_back(std::move(pr));
          }
        }
        break;
      case VC::Kind::kEdgeCovering: {
        const CompiledAction& act = ts.actions[vc.action];
        std::vector<Var> ps = probe_params(act);
        auto sub = param_subst(act, ps);
        std::vector<Formula> pr{a.eta[vc.q], substitute(act.guard, sub),
                                substitute(act.tr_body, sub)};
        for (const auto& [qp, entries] : s.delta) {
          if (qp.first != vc.q) continue;
          for (const EdgeEntry& e : entries)
            if (e.action == vc.action)
              pr.push_back(Formula::mk_not(entry_enabled(ts, s, e, ps)));
        }
        probes.push_back(std::move(pr));
        break;
      }
      case VC::Kind::kSafety:
        for (const Formula& c : conjuncts(safety))
          probes.push_back({a.eta[vc.q], Formula::mk_not(c)});
        break;
    }

    std::optional<VCFailure> gave_up;
    bool failed = false;
    for (std::vector<Formula>& pr : probes) {
      QueryResult r = solver.check(pr);
      ++res.queries;
      if (r.status == QueryStatus::kSat) {
        res.failures.push_back({vc, std::move(r.model), std::move(pr), ""});
        failed = true;
        break;
      }
      if (r.status == QueryStatus::kUnknown && !gave_up)
        gave_up = VCFailure{vc, std::nullopt, pr, r.reason};
    }
    if (!failed && gave_up) res.failures.push_back(std::move(*gave_up));
  }

  res.verdict = Verdict::kValid;
  for (const VCFailure& f : res.failures)
    if (f.countermodel) res.verdict = Verdict::kInvalid;
  if (res.verdict == Verdict::kValid && !res.failures.empty())
    res.verdict = Verdict::kInconclusive;
  return res;
}

Formula CHCSystem::clause_formula(const Clause& c) const {
  return close_over(view, Formula::implies(c.body, c.head));
}

CHCSystem emit_chc(const TransitionSystem& ts, const PhaseStructure& s,
                   const Formula& safety) {
  require_view_scoped(safety, s.view, "safety");

  CHCSystem chc;
  chc.view = s.view;
  std::vector<Vocabulary::Rel> extra;
  for (const std::string& phase : s.phases) {
    std::string name = "I_" + phase;
    while (ts.vocab->has_name(name)) name += "_";
    std::vector<SortId> sig;
    for (const Var& v : s.view) sig.push_back(v.sort);
    extra.push_back({std::move(name), std::move(sig)});
  }
  chc.vocab = ts.vocab->extend_rels(extra, &chc.unknowns);

  std::vector<Term> vargs;
  for (const Var& v : s.view) vargs.push_back(Term::mk_var(v));
  auto unk = [&](size_t q, bool primed) {
    return Formula::rel(chc.unknowns[q], primed, vargs);
  };

  chc.clauses.push_back({"initiation", ts.init, unk(s.init_phase, false)});
  for (auto [q, p] : edges(s))
    chc.clauses.push_back(
        {"inductiveness " + s.phases[q] + " -> " + s.phases[p],
         Formula::conj({unk(q, false), edge_label(ts, s, q, p)}),
         unk(p, true)});
  for (size_t q = 0; q < s.phases.size(); ++q) {
    std::vector<Formula> labels;
    for (const auto& [qp, entries] : s.delta)
      if (qp.first == q && !entries.empty())
        labels.push_back(edge_label(ts, s, q, qp.second));
    chc.clauses.push_back({"covering " + s.phases[q],
                           Formula::conj({unk(q, false), global_tr(ts)}),
                           Formula::disj(std::move(labels))});
  }
  for (size_t q = 0; q < s.phases.size(); ++q)
    chc.clauses.push_back({"safety " + s.phases[q], unk(q, false), safety});
  return chc;
}

std::string chc_text(const CHCSystem& chc) {
  std::ostringstream os;
  os << "; Constrained Horn clauses for a phase structure: one unknown\n"
     << "; predicate per phase over the view sorts. |I_q'| is the post-state\n"
     << "; copy of I_q; a solution interprets both by the same predicate.\n"
     << "; Layout and conventions: docs/chc-format.md.\n"
     << "(set-logic HORN)\n";
  write_smt_decls(os, *chc.vocab);
  for (const CHCSystem::Clause& c : chc.clauses) {
    os << "; " << c.name << "\n(assert ";
    write_smt_formula(os, *chc.vocab, chc.clause_formula(c));
    os << ")\n";
  }
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace pf

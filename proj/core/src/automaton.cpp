/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/automaton.hpp"

#include <algorithm>
#include <stdexcept>

namespace pf {

size_t PhaseStructure::find_phase(const std::string& name) const {
  for (size_t i = 0; i < phases.size(); ++i)
    if (phases[i] == name) return i;
  throw std::invalid_argument("no phase named " + name);
}

const std::vector<EdgeEntry>* PhaseStructure::entries(size_t q,
                                                      size_t p) const {
  auto it = delta.find({q, p});
  if (it == delta.end() || it->second.empty()) return nullptr;
  return &it->second;
}

std::vector<std::pair<size_t, size_t>> edges(const PhaseStructure& s) {
  std::vector<std::pair<size_t, size_t>> out;
  for (const auto& [key, entries] : s.delta)
    if (!entries.empty()) out.push_back(key);
  return out;
}

static void check_entry(const TransitionSystem& ts, const PhaseStructure& s,
                        const EdgeEntry& e) {
  if (e.action >= ts.actions.size())
    throw std::invalid_argument("edge entry names a missing action");
  const CompiledAction& act = ts.actions[e.action];
  if (e.pattern.size() != act.params.size())
    throw std::invalid_argument("edge pattern arity mismatch for " + act.name);
  for (size_t i = 0; i < e.pattern.size(); ++i) {
    if (e.pattern[i].k != EdgePat::K::kView) continue;
    if (e.pattern[i].view >= s.view.size())
      throw std::invalid_argument("edge pattern names a missing view variable");
    if (s.view[e.pattern[i].view].sort != act.params[i].sort)
      throw std::invalid_argument("edge pattern sort mismatch for " + act.name);
  }
}

static bool is_view_name(const PhaseStructure& s, const std::string& name) {
  for (const Var& v : s.view)
    if (v.name == name) return true;
  return false;
}

Formula entry_enabled(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e, const std::vector<Var>& params) {
  check_entry(ts, s, e);
  const CompiledAction& act = ts.actions[e.action];
  if (params.size() != act.params.size())
    throw std::invalid_argument("parameter tuple arity mismatch");
  std::vector<Formula> parts;
  for (size_t i = 0; i < e.pattern.size(); ++i)
    if (e.pattern[i].k == EdgePat::K::kView)
      parts.push_back(Formula::eq(Term::mk_var(params[i]),
                                  Term::mk_var(s.view[e.pattern[i].view])));
  if (e.guard.kind() != FKind::kTrue) {
    // Guard occurrences of a view-shadowed parameter name denote the view
    // variable, so those names are exempt from the renaming.
    std::map<std::string, Term> sub;
    for (size_t i = 0; i < act.params.size(); ++i)
      if (!is_view_name(s, act.params[i].name) &&
          !(act.params[i] == params[i]))
        sub[act.params[i].name] = Term::mk_var(params[i]);
    parts.push_back(sub.empty() ? e.guard : substitute(e.guard, sub));
  }
  return Formula::conj(std::move(parts));
}

Formula entry_enabled(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e) {
  return entry_enabled(ts, s, e, ts.actions[e.action].params);
}

Formula entry_formula(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e) {
  check_entry(ts, s, e);
  const CompiledAction& act = ts.actions[e.action];
  // View-bound parameters become view variables; the rest are renamed apart
  // (view names may collide with parameter names) and closed existentially.
  // The guard is substituted separately: a view-shadowed parameter name in
  // the guard denotes the view variable and must keep it.
  std::map<std::string, Term> sub;
  std::map<std::string, Term> guard_sub;
  std::vector<Var> fresh;
  for (size_t i = 0; i < act.params.size(); ++i) {
    Term to;
    if (e.pattern[i].k == EdgePat::K::kView) {
      to = Term::mk_var(s.view[e.pattern[i].view]);
    } else {
      Var fv{"_x" + std::to_string(i), act.params[i].sort};
      fresh.push_back(fv);
      to = Term::mk_var(fv);
    }
    sub[act.params[i].name] = to;
    if (!is_view_name(s, act.params[i].name))
      guard_sub[act.params[i].name] = to;
  }
  Formula body = Formula::conj({substitute(act.guard, sub),
                                substitute(act.tr_body, sub),
                                substitute(e.guard, guard_sub)});
  return Formula::exists(std::move(fresh), body);
}

Formula edge_label(const TransitionSystem& ts, const PhaseStructure& s,
                   size_t q, size_t p) {
  const auto* es = s.entries(q, p);
  if (!es) return Formula::fls();
  std::vector<Formula> ds;
  for (const EdgeEntry& e : *es) ds.push_back(entry_formula(ts, s, e));
  return Formula::disj(std::move(ds));
}

std::optional<OverlapWitness> overlap_witness(const TransitionSystem& ts,
                                              const PhaseStructure& s,
                                              SolverSession& solver) {
  solver.set_base({});
  for (size_t q = 0; q < s.phases.size(); ++q) {
    for (size_t p1 = 0; p1 < s.phases.size(); ++p1) {
      const auto* es1 = s.entries(q, p1);
      if (!es1) continue;
      for (size_t p2 = p1 + 1; p2 < s.phases.size(); ++p2) {
        const auto* es2 = s.entries(q, p2);
        if (!es2) continue;
        for (const EdgeEntry& e1 : *es1) {
          for (const EdgeEntry& e2 : *es2) {
            // Two entries conflict only when a single instance of a shared
            // action satisfies both patterns and guards, so the query keeps
            // one free parameter tuple and both enabling conditions. Steps
            // of distinct actions carry distinct labels and never conflict.
            if (e1.action != e2.action) continue;
            const CompiledAction& act = ts.actions[e1.action];
            std::map<std::string, Term> sub;
            std::vector<Var> shared;
            for (size_t i = 0; i < act.params.size(); ++i) {
              Var pv{"_p" + std::to_string(i), act.params[i].sort};
              shared.push_back(pv);
              sub[act.params[i].name] = Term::mk_var(pv);
            }
            QueryResult res = solver.check(
                {substitute(act.guard, sub), substitute(act.tr_body, sub),
                 entry_enabled(ts, s, e1, shared),
                 entry_enabled(ts, s, e2, shared)});
            if (res.status == QueryStatus::kSat && res.model)
              return OverlapWitness{q, p1, p2, *res.model};
            if (res.status == QueryStatus::kUnknown)
              throw std::runtime_error(
                  "solver could not decide edge overlap: " + res.reason);
          }
        }
      }
    }
  }
  return std::nullopt;
}

bool is_deterministic(const TransitionSystem& ts, const PhaseStructure& s,
                      SolverSession& solver) {
  return !overlap_witness(ts, s, solver).has_value();
}

PhaseStructure determinize(const TransitionSystem& ts, const PhaseStructure& s,
                           const std::vector<size_t>& order) {
  if (order.size() != s.phases.size())
    throw std::invalid_argument("order must rank every phase");
  std::vector<size_t> rank(s.phases.size(), SIZE_MAX);
  for (size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= s.phases.size() || rank[order[i]] != SIZE_MAX)
      throw std::invalid_argument("order must be a permutation of the phases");
    rank[order[i]] = i;
  }

  PhaseStructure out = s;
  for (auto& [key, entries] : out.delta) {
    auto [q, p] = key;
    for (EdgeEntry& e : entries) {
      // Subtract every same-action entry that a higher-priority target of
      // the same source would claim. Original guards are subtracted, which
      // over-approximates the strengthened ones, so disjointness holds.
      std::vector<Formula> parts{e.guard};
      for (size_t p2 = 0; p2 < s.phases.size(); ++p2) {
        if (p2 == p || rank[p2] >= rank[p]) continue;
        const auto* prior = s.entries(q, p2);
        if (!prior) continue;
        for (const EdgeEntry& e2 : *prior)
          if (e2.action == e.action)
            parts.push_back(Formula::mk_not(entry_enabled(ts, s, e2)));
      }
      if (parts.size() > 1) e.guard = Formula::conj(std::move(parts));
    }
  }
  return out;
}

TraceMembership trace_member(const TransitionSystem& ts,
                             const PhaseAutomaton& a,
                             const std::vector<Structure>& states,
                             const Val& view) {
  const PhaseStructure& s = a.structure;
  if (states.empty()) return {};
  size_t n = s.phases.size();

  // Runs start in the initial phase; each step needs an admitting edge and a
  // target characterization that holds in the post state.
  std::vector<std::vector<bool>> live(states.size(),
                                      std::vector<bool>(n, false));
  std::vector<std::vector<size_t>> back(states.size(),
                                        std::vector<size_t>(n, SIZE_MAX));
  live[0][s.init_phase] = eval(states[0], view, a.eta[s.init_phase]);

  for (size_t i = 0; i + 1 < states.size(); ++i) {
    for (size_t p = 0; p < n; ++p) {
      if (!eval(states[i + 1], view, a.eta[p])) continue;
      for (size_t q = 0; q < n; ++q) {
        if (!live[i][q] || !s.entries(q, p)) continue;
        if (eval2(states[i], states[i + 1], view, edge_label(ts, s, q, p))) {
          live[i + 1][p] = true;
          back[i + 1][p] = q;
          break;
        }
      }
    }
  }

  TraceMembership m;
  size_t last = states.size() - 1;
  size_t at = SIZE_MAX;
  for (size_t p = 0; p < n; ++p)
    if (live[last][p]) {
      at = p;
      break;
    }
  if (at == SIZE_MAX) return m;
  m.member = true;
  m.phase_trace.assign(states.size(), 0);
  for (size_t i = last;; --i) {
    m.phase_trace[i] = at;
    if (i == 0) break;
    at = back[i][at];
  }
  return m;
}

Formula flatten(const PhaseAutomaton& a) {
  return Formula::forall(a.structure.view, Formula::disj(a.eta));
}

PhaseAutomaton wrap_invariant(const Formula& inv, const TransitionSystem& ts) {
  if (!inv.is_closed())
    throw std::invalid_argument("a wrapped invariant must be closed");
  PhaseAutomaton a;
  a.structure.vocab = ts.vocab;
  a.structure.phases = {"inv"};
  a.structure.init_phase = 0;
  std::vector<EdgeEntry> loop;
  for (size_t i = 0; i < ts.actions.size(); ++i) {
    EdgeEntry e;
    e.action = i;
    e.pattern.assign(ts.actions[i].params.size(), EdgePat::wild());
    e.guard = Formula::tru();
    loop.push_back(std::move(e));
  }
  a.structure.delta[{0, 0}] = std::move(loop);
  a.eta = {inv};
  return a;
}

}  // namespace pf

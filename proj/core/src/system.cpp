/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/system.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pf {
namespace {

// Internal binder names start with '_' so they cannot collide with surface
// identifiers (those must start with a letter).
std::string frame_var_name(size_t i) { return "_z" + std::to_string(i); }

void check_update(const Vocabulary& voc, const std::vector<Var>& params,
                  const Update& u) {
  const auto& rel = voc.rel(u.rel);
  if (u.args.size() != rel.sig.size())
    throw std::invalid_argument("update arity mismatch for " + rel.name);
  for (size_t j = 0; j < u.args.size(); ++j) {
    const UpdateArg& a = u.args[j];
    SortId want = rel.sig[j];
    switch (a.k) {
      case UpdateArg::K::kParam:
        if (a.param >= params.size())
          throw std::invalid_argument("update refers to missing parameter");
        if (params[a.param].sort != want)
          throw std::invalid_argument("update argument sort mismatch in " +
                                      rel.name);
        break;
      case UpdateArg::K::kConst:
        if (voc.constant(a.cid).sort != want)
          throw std::invalid_argument("update argument sort mismatch in " +
                                      rel.name);
        break;
      case UpdateArg::K::kWild:
        break;
    }
  }
}

// Tuple-level equalities pinning the quantified z vector to the pattern.
Formula match_formula(const Vocabulary& voc, const std::vector<Var>& params,
                      const std::vector<Var>& zs, const Update& u) {
  std::vector<Formula> eqs;
  for (size_t j = 0; j < u.args.size(); ++j) {
    const UpdateArg& a = u.args[j];
    Term z = Term::mk_var(zs[j]);
    switch (a.k) {
      case UpdateArg::K::kParam:
        eqs.push_back(Formula::eq(z, Term::mk_var(params[a.param])));
        break;
      case UpdateArg::K::kConst:
        eqs.push_back(Formula::eq(z, Term::mk_const(a.cid)));
        break;
      case UpdateArg::K::kWild:
        break;
    }
  }
  (void)voc;
  return Formula::conj(std::move(eqs));
}

}  // namespace

const CompiledAction* TransitionSystem::find_action(
    const std::string& name) const {
  for (const auto& a : actions)
    if (a.name == name) return &a;
  return nullptr;
}

size_t TransitionSystem::action_index(const std::string& name) const {
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i].name == name) return i;
  throw std::invalid_argument("no action named " + name);
}

Formula compile_tr_body(const Vocabulary& voc, const std::vector<Var>& params,
                        const std::vector<Update>& updates) {
  for (const Update& u : updates) check_update(voc, params, u);

  std::vector<Formula> conjuncts;
  for (RelId r = 0; r < voc.num_rels(); ++r) {
    const auto& sig = voc.rel(r).sig;
    std::vector<Var> zs;
    std::vector<Term> zterms;
    for (size_t j = 0; j < sig.size(); ++j) {
      zs.push_back(Var{frame_var_name(j), sig[j]});
      zterms.push_back(Term::mk_var(zs.back()));
    }

    // Later updates win: fold them in order, each wrapping the previous
    // value. ite(c, true, e) is c | e; ite(c, false, e) is !c & e.
    Formula val = Formula::rel(r, false, zterms);
    for (const Update& u : updates) {
      if (u.rel != r) continue;
      Formula m = match_formula(voc, params, zs, u);
      if (u.value)
        val = Formula::disj({m, val});
      else
        val = Formula::conj({Formula::mk_not(m), val});
    }

    Formula body = Formula::iff(Formula::rel(r, true, zterms), val);
    conjuncts.push_back(Formula::forall(zs, body));
  }
  return Formula::conj(std::move(conjuncts));
}

Formula action_tr(const CompiledAction& a) {
  return Formula::exists(a.params, Formula::conj({a.guard, a.tr_body}));
}

Formula global_tr(const TransitionSystem& ts) {
  if (ts.actions.empty())
    throw std::invalid_argument("transition system has no actions");
  std::vector<Formula> ds;
  for (const auto& a : ts.actions) ds.push_back(action_tr(a));
  return Formula::disj(std::move(ds));
}

static Val args_val(const CompiledAction& a, const std::vector<uint32_t>& args) {
  if (args.size() != a.params.size())
    throw std::invalid_argument("argument count mismatch for " + a.name);
  Val v;
  for (size_t i = 0; i < args.size(); ++i)
    v[a.params[i].name] = Element{a.params[i].sort, args[i]};
  return v;
}

bool enabled(const Structure& s, const CompiledAction& a,
             const std::vector<uint32_t>& args) {
  return eval(s, args_val(a, args), a.guard);
}

std::vector<Structure> step(const Structure& s, const CompiledAction& a,
                            const std::vector<uint32_t>& args) {
  if (!enabled(s, a, args)) return {};
  Structure post = s;
  for (const Update& u : a.updates) {
    const auto& sig = s.vocab->rel(u.rel).sig;
    // Enumerate all tuples matching the pattern; wildcards sweep their sort.
    std::vector<uint32_t> tuple(sig.size(), 0);
    std::vector<size_t> wilds;
    for (size_t j = 0; j < sig.size(); ++j) {
      switch (u.args[j].k) {
        case UpdateArg::K::kParam:
          tuple[j] = args[u.args[j].param];
          break;
        case UpdateArg::K::kConst:
          tuple[j] = s.consts[u.args[j].cid];
          break;
        case UpdateArg::K::kWild:
          wilds.push_back(j);
          break;
      }
    }
    while (true) {
      post.set(u.rel, tuple, u.value);
      size_t k = 0;
      for (; k < wilds.size(); ++k) {
        size_t j = wilds[k];
        if (++tuple[j] < s.size(sig[j])) break;
        tuple[j] = 0;
      }
      if (k == wilds.size()) break;
    }
  }
  return {post};
}

// Exact-cardinality constraint for one sort: n mutually distinct witnesses
// that also cover every element. Stays inside the decidable fragment because
// the universal sits under the existential prefix.
static Formula cardinality_formula(SortId s, size_t n) {
  std::vector<Var> xs;
  for (size_t i = 0; i < n; ++i)
    xs.push_back(Var{"_c" + std::to_string(s) + "_" + std::to_string(i), s});
  std::vector<Formula> parts;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      parts.push_back(
          Formula::neq(Term::mk_var(xs[i]), Term::mk_var(xs[j])));
  Var y{"_y" + std::to_string(s), s};
  std::vector<Formula> eqs;
  for (size_t i = 0; i < n; ++i)
    eqs.push_back(Formula::eq(Term::mk_var(y), Term::mk_var(xs[i])));
  parts.push_back(Formula::forall({y}, Formula::disj(std::move(eqs))));
  return Formula::exists(std::move(xs), Formula::conj(std::move(parts)));
}

// Lexicographic sweep over all structures of the given sizes; calls cb until
// it returns true. Returns false if the space is too big to sweep.
static bool sweep_structures(const VocabPtr& voc, const std::vector<size_t>& sizes,
                             const std::function<bool(const Structure&)>& cb,
                             Structure* found) {
  double combos = 1;
  std::vector<size_t> tuple_counts;
  for (RelId r = 0; r < voc->num_rels(); ++r) {
    size_t tuples = 1;
    for (SortId s : voc->rel(r).sig) tuples *= sizes[s];
    tuple_counts.push_back(tuples);
    combos *= std::pow(2.0, static_cast<double>(tuples));
    if (combos > 4e6) return false;
  }
  for (ConstId c = 0; c < voc->num_consts(); ++c) {
    combos *= static_cast<double>(sizes[voc->constant(c).sort]);
    if (combos > 4e6) return false;
  }

  Structure s = Structure::empty(voc, sizes);
  std::vector<uint64_t> masks(voc->num_rels(), 0);
  auto apply_mask = [&](RelId r) {
    const auto& sig = voc->rel(r).sig;
    std::vector<uint32_t> t(sig.size(), 0);
    for (size_t bit = 0; bit < tuple_counts[r]; ++bit) {
      s.set(r, t, (masks[r] >> bit) & 1);
      for (size_t j = 0; j < sig.size(); ++j) {
        if (++t[j] < sizes[sig[j]]) break;
        t[j] = 0;
      }
    }
  };
  for (RelId r = 0; r < voc->num_rels(); ++r) {
    if (tuple_counts[r] > 22) return false;
    apply_mask(r);
  }

  while (true) {
    if (cb(s)) {
      if (found) *found = s;
      return true;
    }
    // Odometer over constants first, then relation masks.
    size_t c = 0;
    for (; c < voc->num_consts(); ++c) {
      if (++s.consts[c] < sizes[voc->constant(c).sort]) break;
      s.consts[c] = 0;
    }
    if (c < voc->num_consts()) continue;
    size_t r = 0;
    for (; r < voc->num_rels(); ++r) {
      if (++masks[r] < (uint64_t{1} << tuple_counts[r])) {
        apply_mask(r);
        break;
      }
      masks[r] = 0;
      apply_mask(r);
    }
    if (r == voc->num_rels()) return false;
  }
}

std::optional<Structure> find_init_structure(const TransitionSystem& ts,
                                             const std::vector<size_t>& sizes,
                                             SolverSession& solver) {
  if (sizes.size() != ts.vocab->num_sorts())
    throw std::invalid_argument("one size per sort required");
  for (size_t n : sizes)
    if (n == 0) throw std::invalid_argument("universes must be nonempty");

  std::vector<Formula> probe{ts.init};
  for (SortId s = 0; s < ts.vocab->num_sorts(); ++s)
    probe.push_back(cardinality_formula(s, sizes[s]));

  solver.set_base({});
  QueryResult res = solver.check(probe);
  if (res.status == QueryStatus::kSat && res.model) {
    const Structure& m = res.model->pre;
    for (SortId s = 0; s < ts.vocab->num_sorts(); ++s)
      if (m.size(s) != sizes[s]) return std::nullopt;
    return m;
  }
  if (res.status == QueryStatus::kUnsat) return std::nullopt;

  // Solver unavailable: bounded sweep for tiny domains.
  Structure found = Structure::empty(ts.vocab, sizes);
  if (sweep_structures(
          ts.vocab, sizes,
          [&](const Structure& s) { return eval(s, {}, ts.init); }, &found))
    return found;
  return std::nullopt;
}

std::optional<SysTrace> random_trace(const TransitionSystem& ts,
                                     const std::vector<size_t>& sizes,
                                     size_t length, uint64_t seed,
                                     SolverSession& solver) {
  auto init = find_init_structure(ts, sizes, solver);
  if (!init) return std::nullopt;

  std::mt19937_64 rng(seed);

  // Solver models tend to be minimal, which starves actions guarded on
  // nonempty relations. Random-walk over init models: flip atoms, keep
  // flips that preserve init.
  Structure start = std::move(*init);
  if (ts.vocab->num_rels() > 0) {
    size_t natoms = 0;
    for (RelId r = 0; r < ts.vocab->num_rels(); ++r) {
      size_t n = 1;
      for (SortId s : ts.vocab->rel(r).sig) n *= start.size(s);
      natoms += n;
    }
    for (size_t i = 0; i < 2 * natoms; ++i) {
      RelId r = static_cast<RelId>(rng() % ts.vocab->num_rels());
      std::vector<uint32_t> t;
      for (SortId s : ts.vocab->rel(r).sig)
        t.push_back(static_cast<uint32_t>(rng() % start.size(s)));
      start.set(r, t, !start.has(r, t));
      if (!eval(start, {}, ts.init)) start.set(r, t, !start.has(r, t));
    }
  }

  SysTrace tr;
  tr.states.push_back(std::move(start));
  for (size_t t = 0; t < length; ++t) {
    const Structure& cur = tr.states.back();
    // Deterministic candidate enumeration: actions in declaration order,
    // argument tuples lexicographic.
    std::vector<TraceEvent> candidates;
    for (size_t ai = 0; ai < ts.actions.size(); ++ai) {
      const CompiledAction& a = ts.actions[ai];
      std::vector<uint32_t> args(a.params.size(), 0);
      while (true) {
        if (enabled(cur, a, args)) candidates.push_back({ai, args});
        size_t k = 0;
        for (; k < args.size(); ++k) {
          if (++args[k] < cur.size(a.params[k].sort)) break;
          args[k] = 0;
        }
        if (k == args.size()) break;
      }
    }
    if (candidates.empty()) {
      tr.complete = false;
      return tr;
    }
    const TraceEvent& ev = candidates[rng() % candidates.size()];
    auto posts = step(cur, ts.actions[ev.action], ev.args);
    tr.events.push_back(ev);
    tr.states.push_back(posts.at(0));
  }
  return tr;
}

}  // namespace pf

/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
// Semantic transition systems: actions compiled to two-vocabulary formulas
// with explicit frame conditions, plus a finite-domain executor used by the
// randomized property tests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseforge/logic.hpp"
#include "phaseforge/solver.hpp"

namespace pf {

// One argument position of an update pattern.
struct UpdateArg {
  enum class K { kParam, kConst, kWild };
  K k = K::kWild;
  size_t param = 0;  // kParam: index into the action's parameter list
  ConstId cid = 0;   // kConst

  static UpdateArg wild() { return {}; }
  static UpdateArg of_param(size_t i) { return {K::kParam, i, 0}; }
  static UpdateArg of_const(ConstId c) { return {K::kConst, 0, c}; }
  bool operator==(const UpdateArg&) const = default;
};

// `r(pattern) := value`. Wildcard positions range over the whole sort, so a
// false update deletes every matching tuple. Updates apply in order; the last
// matching update wins on any given tuple.
struct Update {
  RelId rel = 0;
  std::vector<UpdateArg> args;
  bool value = true;
  bool operator==(const Update&) const = default;
};

struct CompiledAction {
  std::string name;
  std::vector<Var> params;
  Formula guard;    // unprimed, free variables among params
  std::vector<Update> updates;
  Formula tr_body;  // two-vocabulary; compiled by compile_tr_body
};

struct TransitionSystem {
  VocabPtr vocab;
  Formula init;  // closed, unprimed
  std::vector<CompiledAction> actions;

  const CompiledAction* find_action(const std::string& name) const;
  size_t action_index(const std::string& name) const;  // throws if absent
};

// Per-relation update semantics as one formula: for every relation r,
// forall z. r'(z) <-> (last matching update's value, else r(z)).
Formula compile_tr_body(const Vocabulary& voc, const std::vector<Var>& params,
                        const std::vector<Update>& updates);

// exists params. guard and tr_body (closed two-vocabulary formula).
Formula action_tr(const CompiledAction& a);

// Disjunction of action_tr over all actions.
Formula global_tr(const TransitionSystem& ts);

// Guard evaluation under a concrete argument binding.
bool enabled(const Structure& s, const CompiledAction& a,
             const std::vector<uint32_t>& args);

// All post-states over s's domain reachable by firing a(args); empty iff the
// guard fails. Updates here are deterministic, so the set is 0- or 1-element.
std::vector<Structure> step(const Structure& s, const CompiledAction& a,
                            const std::vector<uint32_t>& args);

// A structure satisfying init with exactly the requested universe sizes.
// Solver-backed; falls back to bounded enumeration when the solver is
// unavailable and the domain is tiny.
std::optional<Structure> find_init_structure(const TransitionSystem& ts,
                                             const std::vector<size_t>& sizes,
                                             SolverSession& solver);

struct TraceEvent {
  size_t action = 0;
  std::vector<uint32_t> args;
};

struct SysTrace {
  std::vector<Structure> states;  // states.size() == events.size() + 1
  std::vector<TraceEvent> events;
  bool complete = true;  // false: deadlock cut the trace short
};

// Random walk of the given length from a random-ish initial structure.
// Deterministic for a fixed seed.
std::optional<SysTrace> random_trace(const TransitionSystem& ts,
                                     const std::vector<size_t>& sizes,
                                     size_t length, uint64_t seed,
                                     SolverSession& solver);

}  // namespace pf

/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
// Quantified phase automata over a transition system: a finite phase graph
// whose edges are labeled with action entries, parameterized by a tuple of
// view variables. Phase characterizations (one formula per phase) turn a
// structure into a full automaton.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "phaseforge/logic.hpp"
#include "phaseforge/solver.hpp"
#include "phaseforge/system.hpp"

namespace pf {

// One argument position of an edge pattern: either a view variable (the
// transition is tracked by that view component) or a wildcard.
struct EdgePat {
  enum class K { kView, kWild };
  K k = K::kWild;
  size_t view = 0;  // kView: index into the view tuple

  static EdgePat wild() { return {}; }
  static EdgePat of_view(size_t v) { return {K::kView, v}; }
  bool operator==(const EdgePat&) const = default;
};

// One action entry on an edge. The guard is over view variables and the
// action's parameters; it must be alternation-free so edge labels stay in
// the decidable fragment after negation.
struct EdgeEntry {
  size_t action = 0;
  std::vector<EdgePat> pattern;  // one per action parameter
  Formula guard;                 // default true
  bool operator==(const EdgeEntry& o) const {
    return action == o.action && pattern == o.pattern && guard == o.guard;
  }
};

// The automaton minus its characterizations: what the user writes down and
// what guides inference.
struct PhaseStructure {
  VocabPtr vocab;
  std::vector<std::string> phases;
  size_t init_phase = 0;
  std::vector<Var> view;
  std::map<std::pair<size_t, size_t>, std::vector<EdgeEntry>> delta;

  size_t find_phase(const std::string& name) const;  // throws if absent
  const std::vector<EdgeEntry>* entries(size_t q, size_t p) const;
};

struct PhaseAutomaton {
  PhaseStructure structure;
  std::vector<Formula> eta;  // one per phase, free vars among the view
};

// Edges with at least one entry, in (source, target) order.
std::vector<std::pair<size_t, size_t>> edges(const PhaseStructure& s);

// Pattern equalities plus guard, over the action's parameters and the view.
// This is the "entry fires on this action instance" condition used by both
// covering checks and determinization. In a guard, a name that is both a view
// variable and a parameter denotes the view variable.
Formula entry_enabled(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e);

// Same condition over caller-chosen parameter variables (used when several
// entries' conditions must share one parameter tuple, e.g. covering checks).
Formula entry_enabled(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e, const std::vector<Var>& params);

// Closed-over-parameters transition formula of one entry: the action's guard
// and update semantics with view-bound parameters replaced by view variables
// and the remaining parameters existentially quantified. Two-vocabulary; free
// variables among the view.
Formula entry_formula(const TransitionSystem& ts, const PhaseStructure& s,
                      const EdgeEntry& e);

// Disjunction of entry formulas of the (q, p) edge; false when absent.
Formula edge_label(const TransitionSystem& ts, const PhaseStructure& s,
                   size_t q, size_t p);

// A transition satisfying two edges out of one phase toward distinct targets.
struct OverlapWitness {
  size_t source = 0;
  size_t target1 = 0;
  size_t target2 = 0;
  Model model;
};

// Searches all same-source target pairs for an overlapping action instance:
// a step of one action whose argument tuple satisfies both entries' patterns
// and guards at once. nullopt means the structure is deterministic. Entries
// of distinct actions never overlap in this sense; the fired action tells
// them apart.
std::optional<OverlapWitness> overlap_witness(const TransitionSystem& ts,
                                              const PhaseStructure& s,
                                              SolverSession& solver);

bool is_deterministic(const TransitionSystem& ts, const PhaseStructure& s,
                      SolverSession& solver);

// Priority-ordered guard strengthening: each entry's guard is conjoined with
// the negation of every same-action entry on a higher-priority edge out of
// the same source. `order` ranks phases, highest priority first. Guards stay
// alternation-free. Entries of distinct actions are never subtracted from
// each other (action instances of distinct actions can legitimately overlap
// only when two actions fire on the same pre state, which determinism over
// action instances permits).
PhaseStructure determinize(const TransitionSystem& ts, const PhaseStructure& s,
                           const std::vector<size_t>& order);

struct TraceMembership {
  bool member = false;
  std::vector<size_t> phase_trace;  // one phase per state when member
};

// Subset-construction membership: does the automaton admit this state
// sequence under the given view valuation?
TraceMembership trace_member(const TransitionSystem& ts,
                             const PhaseAutomaton& a,
                             const std::vector<Structure>& states,
                             const Val& view);

// forall view. disjunction of all characterizations: the flat invariant
// denoted by the automaton.
Formula flatten(const PhaseAutomaton& a);

// One-phase automaton whose single characterization is the given invariant,
// with an unconstrained self-loop entry per action. check() on the result
// coincides with a plain inductive-invariant check.
PhaseAutomaton wrap_invariant(const Formula& inv, const TransitionSystem& ts);

}  // namespace pf

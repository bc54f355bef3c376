/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
// Verification conditions for phase automata: initiation, per-edge
// inductiveness, per-action edge covering, per-phase safety. The same four
// constraint families serialize as constrained Horn clauses with one
// unknown predicate per phase.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseforge/automaton.hpp"
#include "phaseforge/logic.hpp"
#include "phaseforge/solver.hpp"
#include "phaseforge/system.hpp"

namespace pf {

// One proof obligation. `formula` is closed; the claim is its validity, and
// the checker refutes the negation piecewise.
struct VC {
  enum class Kind { kInitiation, kInductiveness, kEdgeCovering, kSafety };
  Kind kind = Kind::kInitiation;
  size_t q = 0;       // phase: init phase / edge source / covered / guarded
  size_t p = 0;       // kInductiveness only: edge target
  size_t action = 0;  // kEdgeCovering only: the covered action
  Formula formula;

  std::string describe(const TransitionSystem& ts,
                       const PhaseStructure& s) const;
};

// All VCs of the automaton against `safety` (free variables among the view).
// Order: initiation, inductiveness by (source, target), covering by phase
// then action declaration order, safety by phase.
std::vector<VC> gen_vcs(const TransitionSystem& ts, const PhaseAutomaton& a,
                        const Formula& safety);

// The per-action covering obligations of one phase: any action instance
// enabled under eta(q) must match some entry out of q; an action with no
// entry must be disabled. Throws std::invalid_argument when an entry guard
// out of q is not alternation-free, naming the guard.
std::vector<VC> edge_cover_vcs(const TransitionSystem& ts,
                               const PhaseAutomaton& a, size_t q);

struct VCFailure {
  VC vc;
  std::optional<Model> countermodel;  // absent: solver gave up (see reason)
  std::vector<Formula> probe;         // the satisfiable negation instance
  std::string reason;
};

enum class Verdict { kValid, kInvalid, kInconclusive };

struct CheckResult {
  Verdict verdict = Verdict::kValid;
  std::vector<VCFailure> failures;
  uint64_t queries = 0;

  bool valid() const { return verdict == Verdict::kValid; }
};

// Deductive check: refutes each VC's negation, split per edge entry and per
// target conjunct so the constant count of every query stays at one action's
// parameters plus one clause's variables. Countermodels are finite two-state
// structures whose view valuation also witnesses the `_p<i>` parameters.
// A definite countermodel anywhere makes the verdict invalid; otherwise any
// solver timeout or unknown makes it inconclusive.
CheckResult check(const TransitionSystem& ts, const PhaseAutomaton& a,
                  const Formula& safety, SolverSession& solver);

// Constrained Horn clauses over the structure alone: one unknown predicate
// per phase with view-sorted parameters, clauses mirroring the four
// constraint families. Linear: at most one unknown application per body.
struct CHCSystem {
  struct Clause {
    std::string name;  // "initiation", "inductiveness Owned -> Transferring"
    Formula body;      // over `vocab`; applies at most one unknown
    Formula head;      // unknown application or plain constraint
  };

  VocabPtr vocab;               // system vocabulary + unknown relations
  std::vector<RelId> unknowns;  // one per phase, arity = |view|
  std::vector<Var> view;
  std::vector<Clause> clauses;

  Formula clause_formula(const Clause& c) const;  // forall view. body -> head
};

CHCSystem emit_chc(const TransitionSystem& ts, const PhaseStructure& s,
                   const Formula& safety);

// Byte-stable SMT-LIB rendering; |I_q'| names the post-state copy of I_q.
// Layout documented in docs/chc-format.md.
std::string chc_text(const CHCSystem& chc);

}  // namespace pf

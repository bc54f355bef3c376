/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
// Surface language: parser, canonical printer, and lowering to transition
// systems and phase automata. Formula syntax matches Formula::to_string, so
// printing and reparsing a model file is the identity on the AST.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseforge/automaton.hpp"
#include "phaseforge/logic.hpp"
#include "phaseforge/system.hpp"

namespace pf {

struct Diagnostic {
  size_t line = 0;  // 1-based
  size_t col = 0;   // 1-based
  std::string message;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& filename, Diagnostic d);
  const Diagnostic& diag() const { return d_; }

 private:
  Diagnostic d_;
};

struct ActionDecl {
  std::string name;
  std::vector<Var> params;
  std::vector<Formula> requires_;
  std::vector<Update> updates;

  bool operator==(const ActionDecl& o) const {
    return name == o.name && params == o.params && requires_ == o.requires_ &&
           updates == o.updates;
  }
};

struct PhaseDecl {
  std::string name;
  std::vector<Formula> invariants;
  bool operator==(const PhaseDecl& o) const {
    return name == o.name && invariants == o.invariants;
  }
};

struct EdgeDecl {
  size_t src = 0;
  size_t dst = 0;
  EdgeEntry entry;
  bool operator==(const EdgeDecl& o) const {
    return src == o.src && dst == o.dst && entry == o.entry;
  }
};

struct AutomatonDecl {
  std::vector<Var> view;
  size_t init_phase = 0;
  std::vector<PhaseDecl> phases;
  std::vector<EdgeDecl> edges;

  bool operator==(const AutomatonDecl& o) const {
    return view == o.view && init_phase == o.init_phase &&
           phases == o.phases && edges == o.edges;
  }
};

struct ModelFile {
  VocabPtr vocab;
  std::vector<Formula> init;
  std::vector<ActionDecl> actions;
  std::optional<Formula> safety;  // free variables among the automaton view
  std::vector<Formula> flat_invariant;
  std::optional<AutomatonDecl> automaton;

  bool operator==(const ModelFile& o) const;
};

// Structural vocabulary equality: same sorts, relations, constants, in order.
bool same_vocab(const Vocabulary& a, const Vocabulary& b);

// Throws ParseError with a 1-based source position on any lexical, syntactic,
// or scoping problem. `filename` only decorates error messages.
ModelFile parse_model(const std::string& text, const std::string& filename = "");

// Canonical emission; parse_model(pretty(m)) == m.
std::string pretty(const ModelFile& m);

struct Lowered {
  TransitionSystem ts;
  std::optional<Formula> safety;  // body; free variables among the view
  std::optional<PhaseStructure> structure;
  std::vector<Formula> eta;            // per phase, conjoined invariants
  bool has_characterizations = false;  // some phase block carried invariants
  std::vector<Formula> flat_invariant;
};

// Compiles actions and assembles the phase structure. Throws
// std::invalid_argument on semantic errors that survive parsing (only
// reachable through hand-built ASTs).
Lowered lower(const ModelFile& m);

}  // namespace pf

/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
// Client for an external SMT solver speaking SMT-LIB over pipes. Queries are
// satisfiability checks over one- or two-state formulas; satisfiable answers
// come back as explicit finite structures and are re-validated by evaluation
// before anyone gets to see them.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phaseforge/logic.hpp"

namespace pf {

struct SolverConfig {
  std::string binary;
  std::vector<std::string> args = {"-in"};
  uint64_t timeout_ms = 60000;  // per query
  uint64_t seed = 0;
  std::string transcript;  // append wire traffic to this file when nonempty
};

// Resolution order: explicit path, PHASEFORGE_SOLVER from the environment,
// a bundled solver next to the running executable, then PATH lookup.
SolverConfig default_solver(const std::string& explicit_path = "");

// Two-state countermodel. Primed relations live in `post`; universes are
// shared. `view` gives witnesses for the free variables of the query.
struct Model {
  Structure pre, post;
  Val view;
};

enum class QueryStatus { kSat, kUnsat, kUnknown };

struct QueryResult {
  QueryStatus status = QueryStatus::kUnknown;
  std::optional<Model> model;  // kSat only
  std::string reason;          // kUnknown only
};

// Formula rendering in SMT-LIB syntax. Free variables print through
// `free_var`; the default turns `k` into the witness constant `k!v`.
struct SmtOpts {
  std::function<std::string(const Var&)> free_var;
};
void write_smt_formula(std::ostream& os, const Vocabulary& voc,
                       const Formula& f, const SmtOpts& opts = {});
// Sort, relation (unprimed and primed copies) and constant declarations.
void write_smt_decls(std::ostream& os, const Vocabulary& voc);
std::string smt_quote(const std::string& name);

// A live solver process. Maintains a base assertion set shared by
// consecutive queries; each check pushes the probe on top and pops after.
// The process is restarted transparently if it dies or overruns its budget.
class SolverSession {
 public:
  SolverSession(VocabPtr vocab, SolverConfig cfg);
  ~SolverSession();
  SolverSession(const SolverSession&) = delete;
  SolverSession& operator=(const SolverSession&) = delete;

  void set_base(std::vector<Formula> base);
  QueryResult check(const std::vector<Formula>& probe);

  uint64_t num_queries() const { return queries_; }
  int num_restarts() const { return restarts_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  VocabPtr vocab_;
  SolverConfig cfg_;
  std::vector<Formula> base_;
  bool base_sent_ = false;
  uint64_t queries_ = 0;
  int restarts_ = -1;  // first spawn brings it to 0

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string rdbuf_;

  void spawn();
  void shutdown(bool hard);
  void send(const std::string& text);
  std::string read_line(int64_t deadline_ms);
  std::string read_sexpr(int64_t deadline_ms);
  void sync(const char* tag, int64_t deadline_ms);
  void send_base();
  Model parse_model(const std::string& text) const;
};

}  // namespace pf

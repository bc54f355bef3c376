// Conflict-driven clause learning SAT core: two-watched literals, first-UIP
// learning, activity-ordered decisions, Luby restarts, phase saving.
#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace eprsmt {

class Sat {
 public:
  enum class Res { kSat, kUnsat, kUnknown };

  // Vars are 1-based; `pol` is the initial branching phase.
  int new_var(bool pol);
  // DIMACS convention: positive literal v, negative -v.
  void add_clause(std::vector<int> lits);

  Res solve(std::chrono::steady_clock::time_point deadline, uint64_t seed);
  bool value(int var) const { return val_[static_cast<size_t>(var) - 1] == 1; }

 private:
  // internal literal encoding: var v (0-based) -> 2v | 2v+1
  static int lit_of(int dimacs) {
    int v = dimacs > 0 ? dimacs : -dimacs;
    return 2 * (v - 1) + (dimacs < 0 ? 1 : 0);
  }
  static int neg(int l) { return l ^ 1; }
  static int var(int l) { return l >> 1; }

  struct Watch {
    uint32_t clause;
    int blocker;
  };

  std::vector<std::vector<int>> clauses_;
  std::vector<std::vector<Watch>> watches_;  // per internal literal
  std::vector<int8_t> val_;                  // per var: 0 undef, 1 true, -1 false
  std::vector<int8_t> phase_;                // saved phase per var
  std::vector<int> level_;
  std::vector<int> reason_;                  // clause index or -1
  std::vector<int> trail_;
  std::vector<size_t> trail_lim_;
  size_t qhead_ = 0;
  bool ok_ = true;

  std::vector<double> activity_;
  double var_inc_ = 1.0;
  // binary max-heap over activity
  std::vector<int> heap_;      // var ids
  std::vector<int> heap_pos_;  // var -> heap index or -1

  bool lit_true(int l) const {
    int8_t v = val_[static_cast<size_t>(var(l))];
    return (l & 1) ? v == -1 : v == 1;
  }
  bool lit_false(int l) const {
    int8_t v = val_[static_cast<size_t>(var(l))];
    return (l & 1) ? v == 1 : v == -1;
  }
  bool assigned(int v) const { return val_[static_cast<size_t>(v)] != 0; }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  void heap_insert(int v);
  void heap_sift_up(size_t i);
  void heap_sift_down(size_t i);
  int heap_pop();
  void bump(int v);
  void decay() { var_inc_ /= 0.95; }

  void attach(uint32_t ci);
  void enqueue(int l, int reason);
  int propagate();  // returns conflicting clause index or -1
  void analyze(int confl, std::vector<int>& learnt, int& bt_level);
  void backtrack(int lvl);
  static uint64_t luby(uint64_t i);
};

}  // namespace eprsmt

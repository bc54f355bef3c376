// Reduction of function-free first-order assertions to propositional CNF:
// negation normal form, witness constants for outer existentials, grounding
// of universals over the constant pool, equality and congruence axioms.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "terms.hpp"

namespace eprsmt {

// Raised when an existential occurs under a universal: outside the fragment.
class NotInFragment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundResult {
  // CNF in DIMACS literal convention, vars 1-based.
  std::vector<std::vector<int>> clauses;
  int num_vars = 0;
  std::vector<char> polarity;  // default branching polarity per var, 1-based at [v-1]

  // atom bookkeeping for model reconstruction
  std::map<SortId, std::vector<uint32_t>> candidates;     // constant pool
  std::map<std::pair<uint32_t, uint32_t>, int> eq_vars;   // (lo fn, hi fn) -> var
  std::map<std::pair<uint32_t, std::vector<uint32_t>>, int> rel_vars;
  std::vector<uint32_t> rels_used;
};

// Grounds every live assertion of ctx. Adds witness and seed constants to ctx
// as internal symbols; repeated calls reuse cached per-assertion results.
GroundResult ground_all(Ctx& ctx);

TermPtr to_nnf(const TermPtr& t, bool neg);

}  // namespace eprsmt

// Sorted terms and the declaration context.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sexpr.hpp"

namespace eprsmt {

using SortId = uint32_t;
constexpr SortId kSortBool = 0xffffffffu;

struct FuncDecl {
  std::string name;
  std::vector<SortId> args;
  SortId ret = kSortBool;
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class K {
    kTrue, kFalse, kAnd, kOr, kNot, kImplies, kIff,
    kEq,        // two children of the same non-Bool sort
    kApp,       // fn applied to children
    kVar,       // bound variable occurrence
    kForall, kExists
  };
  K k = K::kTrue;
  std::vector<TermPtr> ch;
  uint32_t fn = 0;                              // kApp
  std::string var;                              // kVar
  SortId sort = kSortBool;                      // kVar: variable sort
  std::vector<std::pair<std::string, SortId>> binders;  // quantifiers
};

TermPtr mk(Term t);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Declarations plus the assertion stack. push/pop scope both.
class Ctx {
 public:
  Ctx();

  SortId declare_sort(const std::string& name);
  uint32_t declare_fun(const std::string& name, std::vector<SortId> args,
                       SortId ret);
  std::optional<SortId> find_sort(const std::string& name) const;
  std::optional<uint32_t> find_fun(const std::string& name) const;

  size_t num_sorts() const { return sorts_.size(); }
  size_t num_funs() const { return funs_.size(); }
  const std::string& sort_name(SortId s) const;
  const FuncDecl& fun(uint32_t f) const { return funs_.at(f); }

  void push();
  void pop(size_t n);
  void reset();

  void assert_term(TermPtr t);
  // live assertions with a per-assertion cache slot for skolemized forms
  struct Assertion {
    TermPtr t;
    TermPtr skolemized;            // filled lazily
    std::vector<uint32_t> skolems; // internal constants introduced for t
  };
  std::vector<Assertion>& assertions() { return asserts_; }

  // internal constants (skolem witnesses, seed elements); not printed in models
  uint32_t add_internal_const(SortId s);
  bool is_internal(uint32_t f) const { return funs_.at(f).name[0] == '.'; }

  // Parse a formula or term from an s-expression. env maps bound names.
  TermPtr parse_term(const Sexpr& e,
                     std::vector<std::pair<std::string, SortId>>& env) const;
  SortId parse_sort(const Sexpr& e) const;

  std::string print_term(const TermPtr& t) const;

 private:
  std::vector<std::string> sorts_;
  std::vector<FuncDecl> funs_;
  std::map<std::string, SortId> sort_index_;
  std::map<std::string, uint32_t> fun_index_;
  std::vector<Assertion> asserts_;
  struct Frame {
    size_t n_sorts, n_funs, n_asserts;
  };
  std::vector<Frame> frames_;
  uint32_t internal_counter_ = 0;

  SortId sort_of(const TermPtr& t) const;
};

}  // namespace eprsmt

// Incremental s-expression reader for the command stream.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eprsmt {

struct Sexpr {
  bool is_atom = true;
  std::string atom;          // is_atom; symbols keep their spelling, |..| stripped
  bool quoted = false;       // atom came from |..| or ".."
  std::vector<Sexpr> kids;   // !is_atom
};

class SexprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Feed arbitrary chunks; poll() yields one complete toplevel expression at a
// time. Comments (; to end of line), |symbols| and "strings" are handled.
class Reader {
 public:
  void feed(const std::string& chunk);
  std::optional<Sexpr> poll();
  bool idle() const { return toks_.empty(); }

 private:
  enum class Mode { kPlain, kComment, kBars, kString };
  Mode mode_ = Mode::kPlain;
  std::string cur_;
  bool have_cur_ = false;
  struct Tok {
    char punct = 0;  // '(' or ')' or 0 for atom
    std::string text;
    bool quoted = false;
  };
  std::vector<Tok> toks_;
  size_t pos_ = 0;
  int depth_ = 0;

  void end_atom(bool quoted);
  Sexpr parse_at(size_t& i) const;
};

}  // namespace eprsmt

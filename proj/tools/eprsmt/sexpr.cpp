#include "sexpr.hpp"

namespace eprsmt {

void Reader::end_atom(bool quoted) {
  if (have_cur_ || quoted) {
    toks_.push_back(Tok{0, cur_, quoted});
    cur_.clear();
    have_cur_ = false;
  }
}

void Reader::feed(const std::string& chunk) {
  for (char c : chunk) {
    switch (mode_) {
      case Mode::kComment:
        if (c == '\n') mode_ = Mode::kPlain;
        break;
      case Mode::kBars:
        if (c == '|') {
          mode_ = Mode::kPlain;
          end_atom(true);
        } else {
          cur_.push_back(c);
        }
        break;
      case Mode::kString:
        if (c == '"') {
          mode_ = Mode::kPlain;
          end_atom(true);
        } else {
          cur_.push_back(c);
        }
        break;
      case Mode::kPlain:
        if (c == ';') {
          end_atom(false);
          mode_ = Mode::kComment;
        } else if (c == '|') {
          end_atom(false);
          mode_ = Mode::kBars;
        } else if (c == '"') {
          end_atom(false);
          mode_ = Mode::kString;
        } else if (c == '(' || c == ')') {
          end_atom(false);
          toks_.push_back(Tok{c, "", false});
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
          end_atom(false);
        } else {
          cur_.push_back(c);
          have_cur_ = true;
        }
        break;
    }
  }
  if (mode_ == Mode::kPlain) end_atom(false);
}

Sexpr Reader::parse_at(size_t& i) const {
  const Tok& t = toks_[i++];
  if (t.punct == '(') {
    Sexpr e;
    e.is_atom = false;
    while (toks_[i].punct != ')') e.kids.push_back(parse_at(i));
    ++i;  // closing paren
    return e;
  }
  if (t.punct == ')') throw SexprError("unexpected )");
  Sexpr e;
  e.atom = t.text;
  e.quoted = t.quoted;
  return e;
}

std::optional<Sexpr> Reader::poll() {
  // find one balanced toplevel expression starting at pos_ 0
  int depth = 0;
  size_t end = 0;
  bool complete = false;
  for (size_t i = 0; i < toks_.size(); ++i) {
    if (toks_[i].punct == '(') depth++;
    else if (toks_[i].punct == ')') {
      depth--;
      if (depth < 0) {
        toks_.clear();
        throw SexprError("unbalanced )");
      }
    }
    if (depth == 0) {
      end = i + 1;
      complete = true;
      break;
    }
  }
  if (!complete) return std::nullopt;
  size_t i = 0;
  Sexpr e = parse_at(i);
  toks_.erase(toks_.begin(), toks_.begin() + static_cast<long>(end));
  return e;
}

}  // namespace eprsmt

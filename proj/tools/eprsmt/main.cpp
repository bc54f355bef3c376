// Command stream REPL. Reads SMT-LIB style commands from stdin or a file and
// answers on stdout. Unknown command line flags are accepted and ignored so
// the binary can be invoked with the flag conventions of other solvers.
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "ground.hpp"
#include "model.hpp"
#include "sexpr.hpp"
#include "terms.hpp"

using namespace eprsmt;

namespace {

struct Repl {
  Ctx ctx;
  uint64_t timeout_ms = 0;  // 0: none
  uint64_t seed = 0;
  std::string model;
  bool have_model = false;
  std::string reason_unknown = "ok";
  bool done = false;

  void err(const std::string& m) { std::cout << "(error \"" << m << "\")\n"; }

  void check_sat() {
    have_model = false;
    try {
      GroundResult g = ground_all(ctx);
      Sat sat;
      for (int i = 0; i < g.num_vars; ++i)
        sat.new_var(g.polarity[static_cast<size_t>(i)] != 0);
      for (auto& c : g.clauses) sat.add_clause(std::move(c));
      auto deadline = timeout_ms == 0
                          ? std::chrono::steady_clock::time_point::max()
                          : std::chrono::steady_clock::now() +
                                std::chrono::milliseconds(timeout_ms);
      switch (sat.solve(deadline, seed)) {
        case Sat::Res::kSat:
          model = render_model(ctx, g, sat);
          have_model = true;
          std::cout << "sat\n";
          break;
        case Sat::Res::kUnsat:
          std::cout << "unsat\n";
          break;
        case Sat::Res::kUnknown:
          reason_unknown = "timeout";
          std::cout << "unknown\n";
          break;
      }
    } catch (const NotInFragment& e) {
      reason_unknown = std::string("unsupported quantifier structure: ") + e.what();
      std::cout << "unknown\n";
    }
  }

  void dispatch(const Sexpr& e) {
    if (e.is_atom) {
      err("stray atom: " + e.atom);
      return;
    }
    if (e.kids.empty() || !e.kids[0].is_atom) {
      err("bad command");
      return;
    }
    const std::string& cmd = e.kids[0].atom;
    try {
      if (cmd == "set-logic" || cmd == "set-info") {
        // accepted for compatibility
      } else if (cmd == "set-option") {
        if (e.kids.size() == 3 && e.kids[1].is_atom && e.kids[2].is_atom) {
          const std::string& k = e.kids[1].atom;
          if (k == ":timeout")
            timeout_ms = std::stoull(e.kids[2].atom);
          else if (k == ":random-seed")
            seed = std::stoull(e.kids[2].atom);
          // anything else is accepted and ignored
        }
      } else if (cmd == "declare-sort") {
        if (e.kids.size() < 2 || !e.kids[1].is_atom) throw SolverError("bad declare-sort");
        if (e.kids.size() >= 3 && e.kids[2].atom != "0")
          throw SolverError("parametric sorts are not supported");
        ctx.declare_sort(e.kids[1].atom);
      } else if (cmd == "declare-fun") {
        if (e.kids.size() != 4 || !e.kids[1].is_atom || e.kids[2].is_atom)
          throw SolverError("bad declare-fun");
        std::vector<SortId> args;
        for (const Sexpr& a : e.kids[2].kids) args.push_back(ctx.parse_sort(a));
        ctx.declare_fun(e.kids[1].atom, std::move(args),
                        ctx.parse_sort(e.kids[3]));
      } else if (cmd == "declare-const") {
        if (e.kids.size() != 3 || !e.kids[1].is_atom)
          throw SolverError("bad declare-const");
        ctx.declare_fun(e.kids[1].atom, {}, ctx.parse_sort(e.kids[2]));
      } else if (cmd == "assert") {
        if (e.kids.size() != 2) throw SolverError("assert takes one formula");
        std::vector<std::pair<std::string, SortId>> env;
        TermPtr t = ctx.parse_term(e.kids[1], env);
        if (t->k == Term::K::kApp && ctx.fun(t->fn).ret != kSortBool)
          throw SolverError("assertion is not a formula");
        ctx.assert_term(t);
        have_model = false;
      } else if (cmd == "check-sat") {
        check_sat();
      } else if (cmd == "get-model") {
        if (have_model)
          std::cout << model << "\n";
        else
          err("model is not available");
      } else if (cmd == "get-info") {
        if (e.kids.size() == 2 && e.kids[1].is_atom &&
            e.kids[1].atom == ":reason-unknown")
          std::cout << "(:reason-unknown \"" << reason_unknown << "\")\n";
        else
          err("unsupported get-info");
      } else if (cmd == "push") {
        size_t n = e.kids.size() >= 2 ? std::stoull(e.kids[1].atom) : 1;
        while (n--) ctx.push();
        have_model = false;
      } else if (cmd == "pop") {
        size_t n = e.kids.size() >= 2 ? std::stoull(e.kids[1].atom) : 1;
        ctx.pop(n);
        have_model = false;
      } else if (cmd == "reset") {
        ctx.reset();
        have_model = false;
        timeout_ms = 0;
      } else if (cmd == "echo") {
        std::cout << (e.kids.size() >= 2 ? e.kids[1].atom : "") << "\n";
      } else if (cmd == "exit") {
        done = true;
      } else {
        err("unsupported command: " + cmd);
      }
    } catch (const SolverError& ex) {
      err(ex.what());
    } catch (const std::exception& ex) {
      err(ex.what());
    }
    std::cout.flush();
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::string file;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (!a.empty() && a[0] == '-') continue;  // foreign flags are fine
    file = a;
  }
  std::istream* in = &std::cin;
  std::ifstream fs;
  if (!file.empty()) {
    fs.open(file);
    if (!fs) {
      std::cerr << "cannot open " << file << "\n";
      return 1;
    }
    in = &fs;
  }
  Repl repl;
  Reader reader;
  std::string line;
  while (!repl.done && std::getline(*in, line)) {
    try {
      reader.feed(line + "\n");
      while (auto e = reader.poll()) {
        repl.dispatch(*e);
        if (repl.done) break;
      }
    } catch (const SexprError& ex) {
      std::cout << "(error \"" << ex.what() << "\")\n";
      std::cout.flush();
    }
  }
  return 0;
}

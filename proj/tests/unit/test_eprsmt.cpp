// End-to-end tests for the bundled solver binary: drives the command REPL
// through a file and checks the exact answer stream.
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> run_solver(const std::string& input,
                                    const std::string& extra_flags = "") {
  std::string in_path = "eprsmt_case_in.smt2";
  std::string out_path = "eprsmt_case_out.txt";
  {
    std::ofstream f(in_path);
    f << input;
  }
  std::string cmd = std::string(EPRSMT_PATH) + " " + extra_flags + " < " +
                    in_path + " > " + out_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc == 0);
  std::ifstream f(out_path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

// answer lines only: sat/unsat/unknown and (error ...) / (:reason ...) lines
std::vector<std::string> answers(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines)
    if (l == "sat" || l == "unsat" || l == "unknown" ||
        l.rfind("(error", 0) == 0 || l.rfind("(:reason-unknown", 0) == 0)
      out.push_back(l);
  return out;
}

std::string whole(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("total order axioms: models and refutations") {
  auto lines = run_solver(R"(
(declare-sort node 0)
(declare-fun le (node node) Bool)
(declare-const a node)
(declare-const b node)
(assert (forall ((x node) (y node)) (or (le x y) (le y x))))
(assert (not (le a b)))
(check-sat)
(assert (forall ((x node) (y node) (z node)) (=> (and (le x y) (le y z)) (le x z))))
(assert (not (= a b)))
(assert (le b a))
(check-sat)
(push 1)
(assert (forall ((x node) (y node)) (=> (and (le x y) (le y x)) (= x y))))
(assert (le a b))
(check-sat)
(pop 1)
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"sat", "sat", "unsat", "sat"});
}

TEST_CASE("witness constants and congruence over a collapsed universe") {
  auto lines = run_solver(R"(
(declare-sort S 0)
(declare-fun p (S) Bool)
(assert (exists ((x S)) (p x)))
(assert (exists ((y S)) (not (p y))))
(check-sat)
(assert (forall ((x S) (y S)) (= x y)))
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"sat", "unsat"});
}

TEST_CASE("model output has z3 finite-universe shape") {
  auto lines = run_solver(R"(
(declare-sort S 0)
(declare-fun p (S) Bool)
(declare-fun flag () Bool)
(declare-const c S)
(assert (p c))
(assert flag)
(assert (exists ((y S)) (not (p y))))
(check-sat)
(get-model)
)");
  std::string all = whole(lines);
  CHECK(all.find("sat\n(") != std::string::npos);
  CHECK(all.find(";; universe for S:") != std::string::npos);
  CHECK(all.find("(declare-fun S!val!0 () S)") != std::string::npos);
  CHECK(all.find("(declare-fun S!val!1 () S)") != std::string::npos);
  CHECK(all.find("cardinality constraint") != std::string::npos);
  CHECK(all.find("(define-fun flag () Bool true)") != std::string::npos);
  CHECK(all.find("(define-fun c () S") != std::string::npos);
  CHECK(all.find("(define-fun p ((x!0 S)) Bool") != std::string::npos);
  // internal witness constants must not leak into the model
  CHECK(all.find(".k!") == std::string::npos);
}

TEST_CASE("quantifier alternation is reported as unknown with a reason") {
  auto lines = run_solver(R"(
(declare-sort S 0)
(declare-fun p (S S) Bool)
(assert (forall ((x S)) (exists ((y S)) (p x y))))
(check-sat)
(get-info :reason-unknown)
)");
  auto a = answers(lines);
  REQUIRE(a.size() == 2);
  CHECK(a[0] == "unknown");
  CHECK(a[1].find("quantifier") != std::string::npos);
}

TEST_CASE("empty sorts get a seed element") {
  auto lines = run_solver(R"(
(declare-sort T 0)
(declare-fun q (T) Bool)
(assert (forall ((x T)) (q x)))
(check-sat)
(assert (exists ((x T)) (not (q x))))
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"sat", "unsat"});
}

TEST_CASE("bare boolean constants survive the pipeline") {
  auto lines = run_solver(R"(
(declare-sort s 0)
(declare-const a s)
(assert true)
(check-sat)
(assert (exists ((x s)) (and true (= x a))))
(check-sat)
(assert false)
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"sat", "sat", "unsat"});
}

TEST_CASE("boolean equality is equivalence") {
  auto lines = run_solver(R"(
(declare-fun f () Bool)
(declare-fun g () Bool)
(assert (= f (not g)))
(assert (= f g))
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"unsat"});
}

TEST_CASE("distinct and chained equality") {
  auto lines = run_solver(R"(
(declare-sort S 0)
(declare-const a S)
(declare-const b S)
(declare-const c S)
(assert (forall ((x S)) (or (= x a) (= x b))))
(assert (distinct a b c))
(check-sat)
(reset)
(declare-sort S 0)
(declare-const a S)
(declare-const b S)
(declare-const c S)
(assert (= a b c))
(assert (not (= a c)))
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"unsat", "unsat"});
}

TEST_CASE("ite on booleans") {
  auto lines = run_solver(R"(
(declare-fun f () Bool)
(declare-fun g () Bool)
(assert (ite f g (not g)))
(assert (not g))
(check-sat)
(assert f)
(check-sat)
)");
  CHECK(answers(lines) == std::vector<std::string>{"sat", "unsat"});
}

TEST_CASE("declarations are scoped by push and pop") {
  auto lines = run_solver(R"(
(push 1)
(declare-sort S 0)
(declare-const a S)
(assert (= a a))
(check-sat)
(pop 1)
(declare-sort S 0)
(check-sat)
)");
  // redeclaring S after the pop must succeed; everything stays sat
  CHECK(answers(lines) == std::vector<std::string>{"sat", "sat"});
}

TEST_CASE("errors are reported without aborting the session") {
  auto lines = run_solver(R"(
(assert (p q))
(get-model)
(frobnicate)
(declare-fun r () Bool)
(assert r)
(check-sat)
)");
  auto a = answers(lines);
  REQUIRE(a.size() == 4);
  CHECK(a[0].rfind("(error", 0) == 0);
  CHECK(a[1] == "(error \"model is not available\")");
  CHECK(a[2].rfind("(error \"unsupported command", 0) == 0);
  CHECK(a[3] == "sat");
}

TEST_CASE("foreign command line flags are ignored") {
  auto lines = run_solver("(check-sat)\n", "-in -smt2 -nw");
  CHECK(answers(lines) == std::vector<std::string>{"sat"});
}

TEST_CASE("a tight timeout yields unknown with reason timeout") {
  // pigeonhole instance large enough to exhaust any conflict-driven search
  // within the allotted 50ms
  std::ostringstream in;
  int n = 12;
  in << "(set-option :timeout 50)\n(declare-sort P 0)\n(declare-sort H 0)\n";
  in << "(declare-fun sits (P H) Bool)\n";
  for (int i = 0; i < n; ++i) in << "(declare-const p" << i << " P)\n";
  for (int j = 0; j < n - 1; ++j) in << "(declare-const h" << j << " H)\n";
  in << "(assert (distinct";
  for (int i = 0; i < n; ++i) in << " p" << i;
  in << "))\n(assert (distinct";
  for (int j = 0; j < n - 1; ++j) in << " h" << j;
  in << "))\n";
  for (int i = 0; i < n; ++i) {
    in << "(assert (or";
    for (int j = 0; j < n - 1; ++j) in << " (sits p" << i << " h" << j << ")";
    in << "))\n";
  }
  in << "(assert (forall ((x P) (y P) (h H)) (=> (and (sits x h) (sits y h)) "
        "(= x y))))\n";
  in << "(check-sat)\n(get-info :reason-unknown)\n";
  auto lines = run_solver(in.str());
  auto a = answers(lines);
  REQUIRE(a.size() == 2);
  CHECK(a[0] == "unknown");
  CHECK(a[1] == "(:reason-unknown \"timeout\")");
}

TEST_CASE("small pigeonhole instances are decided") {
  std::ostringstream in;
  int n = 5;
  in << "(declare-sort P 0)\n(declare-sort H 0)\n(declare-fun sits (P H) Bool)\n";
  for (int i = 0; i < n; ++i) in << "(declare-const p" << i << " P)\n";
  for (int j = 0; j < n - 1; ++j) in << "(declare-const h" << j << " H)\n";
  in << "(assert (distinct";
  for (int i = 0; i < n; ++i) in << " p" << i;
  in << "))\n";
  for (int i = 0; i < n; ++i) {
    in << "(assert (or";
    for (int j = 0; j < n - 1; ++j) in << " (sits p" << i << " h" << j << ")";
    in << "))\n";
  }
  in << "(assert (forall ((x P) (y P) (h H)) (=> (and (sits x h) (sits y h)) "
        "(= x y))))\n";
  in << "(check-sat)\n";
  auto lines = run_solver(in.str());
  CHECK(answers(lines) == std::vector<std::string>{"unsat"});
}

TEST_CASE("random seed is accepted and the answer is stable") {
  std::string base = R"(
(set-option :random-seed 7)
(declare-sort S 0)
(declare-fun p (S S) Bool)
(declare-const a S)
(declare-const b S)
(assert (forall ((x S)) (p x x)))
(assert (not (p a b)))
(check-sat)
)";
  CHECK(answers(run_solver(base)) == std::vector<std::string>{"sat"});
}

// Surface language: parsing, the printer round trip, diagnostics, lowering.
#include "doctest.h"

#include <string>

#include "phaseforge/frontend.hpp"

using namespace pf;

namespace {

const char* kLockServer = R"(# Single lock server.
sort node

relation lock_msg(node)
relation grant_msg(node)
relation holds_lock(node)
relation server_holds()

init server_holds
init forall n:node. !lock_msg(n) & !grant_msg(n) & !holds_lock(n)

action request(n: node) {
  lock_msg(n) := true
}

action grant(n: node) {
  require lock_msg(n) & server_holds
  lock_msg(n) := false
  server_holds() := false
  grant_msg(n) := true
}

action accept(n: node) {
  require grant_msg(n)
  grant_msg(n) := false
  holds_lock(n) := true
}

action release(n: node) {
  require holds_lock(n)
  holds_lock(n) := false
  server_holds() := true
}

automaton {
  view w: node

  init phase Idle

  phase Idle {
    invariant !holds_lock(w)
    invariant !grant_msg(w)
  }
  phase Granted {
    invariant grant_msg(w) | holds_lock(w)
  }

  self Idle on request(*)
  self Idle on grant(*) where n != w
  Idle Granted on grant(w)
  self Idle on accept(*) where n != w
  self Idle on release(*)
  Granted Idle on release(w)
  self Granted on request(*)
  self Granted on accept(w)
  self Granted on accept(*) where n != w
  self Granted on release(*) where n != w
}

safety forall a:node, b:node. holds_lock(a) & holds_lock(b) -> a = b
)";

Diagnostic diag_of(const std::string& text) {
  try {
    parse_model(text, "m.pfz");
  } catch (const ParseError& e) {
    return e.diag();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("a full model file parses") {
  ModelFile m = parse_model(kLockServer, "lock.pfz");
  const Vocabulary& v = *m.vocab;
  CHECK(v.num_sorts() == 1);
  CHECK(v.num_rels() == 4);
  CHECK(v.num_consts() == 0);
  REQUIRE(m.init.size() == 2);
  CHECK(m.init[0].to_string(v) == "server_holds");
  REQUIRE(m.actions.size() == 4);
  CHECK(m.actions[1].name == "grant");
  REQUIRE(m.actions[1].requires_.size() == 1);
  CHECK(m.actions[1].requires_[0].to_string(v) ==
        "lock_msg(n) & server_holds");
  CHECK(m.actions[1].updates.size() == 3);
  CHECK(m.actions[1].updates[1].args.empty());
  CHECK_FALSE(m.actions[1].updates[1].value);
  REQUIRE(m.safety.has_value());
  REQUIRE(m.automaton.has_value());
  const AutomatonDecl& a = *m.automaton;
  REQUIRE(a.view.size() == 1);
  CHECK(a.view[0].name == "w");
  CHECK(a.init_phase == 0);
  REQUIRE(a.phases.size() == 2);
  CHECK(a.phases[0].invariants.size() == 2);
  CHECK(a.phases[1].invariants.size() == 1);
  REQUIRE(a.edges.size() == 10);
  CHECK(a.edges[2].src == 0);
  CHECK(a.edges[2].dst == 1);
  CHECK(a.edges[2].entry.pattern[0] == EdgePat::of_view(0));
  CHECK(a.edges[1].entry.guard.to_string(v) == "n != w");
  CHECK(a.edges[0].entry.guard.kind() == FKind::kTrue);
}

TEST_CASE("printing and reparsing is the identity") {
  ModelFile m1 = parse_model(kLockServer);
  std::string p1 = pretty(m1);
  ModelFile m2 = parse_model(p1, "pretty.pfz");
  CHECK(m1 == m2);
  CHECK(pretty(m2) == p1);

  const char* flat = R"(sort s

relation p(s)

init forall x:s. p(x)

action touch(y: s) {
  p(y) := true
}

invariant forall x:s. p(x)
)";
  ModelFile f1 = parse_model(flat);
  CHECK_FALSE(f1.automaton.has_value());
  CHECK_FALSE(f1.safety.has_value());
  CHECK(f1.flat_invariant.size() == 1);
  CHECK(parse_model(pretty(f1)) == f1);
  CHECK(pretty(f1) == flat);
}

TEST_CASE("formula surface syntax matches the printer") {
  const std::string header =
      "sort node\nsort key\nrelation owner(node, key)\nrelation flag()\n"
      "constant k0: key\ninit ";
  const char* cases[] = {
      "forall n:node, k:key. owner(n, k)",
      "forall n:node. owner(n, k0) -> n = n",
      "!(flag & flag)",
      "flag | !flag & flag",
      "(flag -> flag) -> flag",
      "flag <-> flag <-> flag",
      "exists x1:key. x1 = k0",
      "forall n:node, k:key. owner(n, k) | k != k0",
      "forall n:node. (exists k:key. owner(n, k)) -> flag",
      "true",
      "flag & (flag | flag) & flag",
  };
  for (const char* c : cases) {
    CAPTURE(c);
    ModelFile m = parse_model(header + c + "\n");
    REQUIRE(m.init.size() == 1);
    CHECK(m.init[0].to_string(*m.vocab) == c);
  }
}

TEST_CASE("parse errors carry positions and causes") {
  Diagnostic d = diag_of("sort node\nrelation r(nosuch)\n");
  CHECK(d.line == 2);
  CHECK(d.message.find("unknown sort") != std::string::npos);

  d = diag_of("init owner(x)\n");
  CHECK(d.line == 1);
  CHECK(d.message.find("unknown relation") != std::string::npos);

  d = diag_of("sort s\nrelation p(s)\ninit forall x:s. exists x:s. p(x)\n");
  CHECK(d.line == 3);
  CHECK(d.message.find("shadows") != std::string::npos);

  d = diag_of("sort s\nconstant c: s\nrelation p(s)\ninit forall c:s. p(c)\n");
  CHECK(d.line == 4);
  CHECK(d.message.find("shadow") != std::string::npos);

  d = diag_of("sort s\nsort s\n");
  CHECK(d.line == 2);
  CHECK(d.message.find("already declared") != std::string::npos);

  d = diag_of("sort s\nrelation p(s)\naction a() {\n  p() := true\n}\n");
  CHECK(d.line == 4);
  CHECK(d.message.find("expects 1 arguments") != std::string::npos);

  d = diag_of(
      "sort s\nrelation p(s)\naction a(x: s) {\n  p(x) := true\n}\n"
      "automaton {\n  view v: s\n  init phase P\n  phase P\n"
      "  self P on a(*) where forall y:s. exists z:s. y != z\n}\n");
  CHECK(d.line == 10);
  CHECK(d.message.find("alternation-free") != std::string::npos);

  d = diag_of(
      "sort s\naction a(x: s) {\n}\nautomaton {\n  view v: s\n"
      "  init phase P\n  phase P\n  self P on a(q)\n}\n");
  CHECK(d.message.find("not a view variable") != std::string::npos);

  d = diag_of("automaton {\n  phase P\n}\n");
  CHECK(d.message.find("init phase") != std::string::npos);

  d = diag_of(
      "sort s\naction a() {\n}\nautomaton {\n  init phase P\n"
      "  P Q on a()\n  phase P\n  phase Q\n}\n");
  CHECK(d.message.find("declare phases before edges") != std::string::npos);

  d = diag_of("sort s\nrelation p(s)\nsafety p(w)\n");
  CHECK(d.line == 3);
  CHECK(d.message.find("unknown term") != std::string::npos);

  d = diag_of("sort s\ninit true\ninit (true");
  CHECK(d.line == 3);
  CHECK(d.message.find("expected ')'") != std::string::npos);

  CHECK_THROWS_AS(parse_model("sort s\nsafety true\nsafety true\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_model("@"), ParseError);

  try {
    parse_model("sort s\nsort s\n", "dup.pfz");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("dup.pfz:2:6") != std::string::npos);
  }
}

TEST_CASE("lowering compiles actions and the phase structure") {
  ModelFile m = parse_model(kLockServer);
  Lowered lo = lower(m);
  const Vocabulary& v = *m.vocab;

  REQUIRE(lo.ts.actions.size() == 4);
  CHECK(lo.ts.init.is_closed());
  CHECK(lo.ts.actions[1].guard.to_string(v) == "lock_msg(n) & server_holds");
  CHECK(lo.ts.actions[0].guard.kind() == FKind::kTrue);
  CHECK(lo.ts.actions[1].tr_body.mentions_primed());

  REQUIRE(lo.structure.has_value());
  const PhaseStructure& ps = *lo.structure;
  CHECK((ps.phases == std::vector<std::string>{"Idle", "Granted"}));
  CHECK(ps.init_phase == 0);
  REQUIRE(ps.entries(0, 0) != nullptr);
  CHECK(ps.entries(0, 0)->size() == 4);
  CHECK(ps.entries(0, 1)->size() == 1);
  CHECK(ps.entries(1, 0)->size() == 1);
  CHECK(ps.entries(1, 1)->size() == 4);

  REQUIRE(lo.eta.size() == 2);
  CHECK(lo.has_characterizations);
  CHECK(lo.eta[0].to_string(v) == "!holds_lock(w) & !grant_msg(w)");
  CHECK(lo.eta[1].to_string(v) == "grant_msg(w) | holds_lock(w)");
  REQUIRE(lo.safety.has_value());
  CHECK(lo.safety->is_closed());

  // Semantic smoke test: fire the compiled grant action.
  RelId lock_msg = *v.find_rel("lock_msg");
  RelId server_holds = *v.find_rel("server_holds");
  RelId grant_msg = *v.find_rel("grant_msg");
  Structure s = Structure::empty(m.vocab, {2});
  s.set(server_holds, {}, true);
  s.set(lock_msg, {1}, true);
  auto posts = step(s, lo.ts.actions[1], {1});
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].has(grant_msg, {1}));
  CHECK_FALSE(posts[0].has(server_holds, {}));
  CHECK_FALSE(posts[0].has(lock_msg, {1}));
  CHECK(step(s, lo.ts.actions[1], {0}).empty());  // no lock_msg(0)
}

TEST_CASE("view names shadow parameter names in guards") {
  const char* text = R"(sort node
relation held(node)
relation free()

action acquire(w: node) {
  require free
  free() := false
  held(w) := true
}

automaton {
  view w: node

  init phase P

  phase P

  self P on acquire(*) where held(w)
}
)";
  ModelFile m = parse_model(text);
  Lowered lo = lower(m);
  const EdgeEntry& e = lo.structure->entries(0, 0)->at(0);
  CHECK(e.guard.to_string(*m.vocab) == "held(w)");

  // In the entry formula the guard's w stays the view variable even though
  // the wildcard parameter w is renamed and quantified.
  Formula f = entry_formula(lo.ts, *lo.structure, e);
  REQUIRE(f.free_vars().size() == 1);
  CHECK(f.free_vars()[0].name == "w");

  RelId held = *m.vocab->find_rel("held");
  RelId fr = *m.vocab->find_rel("free");
  Structure pre = Structure::empty(m.vocab, {2});
  pre.set(fr, {}, true);
  pre.set(held, {0}, true);
  auto posts = step(pre, lo.ts.actions[0], {1});
  REQUIRE(posts.size() == 1);
  Val view0{{"w", {*m.vocab->find_sort("node"), 0}}};
  Val view1{{"w", {*m.vocab->find_sort("node"), 1}}};
  CHECK(eval2(pre, posts[0], view0, f));        // held(view 0) in pre
  CHECK_FALSE(eval2(pre, posts[0], view1, f));  // view 1 holds nothing
}

TEST_CASE("hand-built models reject stray variables at lowering") {
  Vocabulary::Builder b;
  SortId s = b.add_sort("s");
  RelId p = b.add_rel("p", {s});
  ModelFile m;
  m.vocab = b.build();
  m.init = {Formula::rel(p, false, {Term::mk_var(Var{"x", s})})};
  CHECK_THROWS_AS(lower(m), std::invalid_argument);

  ModelFile m2;
  m2.vocab = m.vocab;
  ActionDecl a;
  a.name = "a";
  a.requires_ = {Formula::rel(p, false, {Term::mk_var(Var{"x", s})})};
  m2.actions.push_back(a);
  CHECK_THROWS_AS(lower(m2), std::invalid_argument);
}

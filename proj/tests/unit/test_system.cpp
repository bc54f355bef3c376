// Transition system compilation and execution: update chains, frames,
// solver-backed initial structures, and random walks.
#include "doctest.h"

#include <functional>

#include "phaseforge/logic.hpp"
#include "phaseforge/solver.hpp"
#include "phaseforge/system.hpp"

using namespace pf;

namespace {

SolverConfig bundled() {
  SolverConfig cfg;
  cfg.binary = EPRSMT_PATH;
  cfg.timeout_ms = 30000;
  return cfg;
}

// Single-server lock protocol: the standard four-action handshake.
struct LockServer {
  VocabPtr voc;
  SortId node;
  RelId lock_msg, grant_msg, holds_lock, server_holds;
  TransitionSystem ts;

  LockServer() {
    Vocabulary::Builder b;
    node = b.add_sort("node");
    lock_msg = b.add_rel("lock_msg", {node});
    grant_msg = b.add_rel("grant_msg", {node});
    holds_lock = b.add_rel("holds_lock", {node});
    server_holds = b.add_rel("server_holds", {});
    voc = b.build();

    Var n{"n", node};
    Term tn = Term::mk_var(n);
    auto no = [&](RelId r) {
      return Formula::mk_not(Formula::rel(r, false, {tn}));
    };
    ts.vocab = voc;
    ts.init = Formula::conj(
        {Formula::rel(server_holds, false, {}),
         Formula::forall({n}, Formula::conj({no(lock_msg), no(grant_msg),
                                             no(holds_lock)}))});

    auto act = [&](const std::string& name, Formula guard,
                   std::vector<Update> ups) {
      CompiledAction a;
      a.name = name;
      a.params = {n};
      a.guard = std::move(guard);
      a.updates = std::move(ups);
      a.tr_body = compile_tr_body(*voc, a.params, a.updates);
      ts.actions.push_back(std::move(a));
    };
    act("request", Formula::tru(),
        {{lock_msg, {UpdateArg::of_param(0)}, true}});
    act("grant",
        Formula::conj({Formula::rel(lock_msg, false, {tn}),
                       Formula::rel(server_holds, false, {})}),
        {{lock_msg, {UpdateArg::of_param(0)}, false},
         {server_holds, {}, false},
         {grant_msg, {UpdateArg::of_param(0)}, true}});
    act("accept", Formula::rel(grant_msg, false, {tn}),
        {{grant_msg, {UpdateArg::of_param(0)}, false},
         {holds_lock, {UpdateArg::of_param(0)}, true}});
    act("release", Formula::rel(holds_lock, false, {tn}),
        {{holds_lock, {UpdateArg::of_param(0)}, false},
         {server_holds, {}, true}});
  }
};

// Enumerates every structure of the given sizes.
void for_each_structure(const VocabPtr& voc, const std::vector<size_t>& sizes,
                        const std::function<void(const Structure&)>& cb) {
  std::vector<size_t> tuple_counts;
  size_t total_bits = 0;
  for (RelId r = 0; r < voc->num_rels(); ++r) {
    size_t tuples = 1;
    for (SortId s : voc->rel(r).sig) tuples *= sizes[s];
    tuple_counts.push_back(tuples);
    total_bits += tuples;
  }
  REQUIRE(total_bits <= 20);
  REQUIRE(voc->num_consts() == 0);

  for (uint64_t mask = 0; mask < (uint64_t{1} << total_bits); ++mask) {
    Structure s = Structure::empty(voc, sizes);
    size_t bit = 0;
    for (RelId r = 0; r < voc->num_rels(); ++r) {
      std::vector<uint32_t> t(voc->rel(r).sig.size(), 0);
      for (size_t j = 0; j < tuple_counts[r]; ++j) {
        s.set(r, t, (mask >> bit++) & 1);
        for (size_t k = 0; k < t.size(); ++k) {
          if (++t[k] < sizes[voc->rel(r).sig[k]]) break;
          t[k] = 0;
        }
      }
    }
    cb(s);
  }
}

Val bind_args(const CompiledAction& a, const std::vector<uint32_t>& args) {
  Val v;
  for (size_t i = 0; i < args.size(); ++i)
    v[a.params[i].name] = Element{a.params[i].sort, args[i]};
  return v;
}

}  // namespace

TEST_CASE("update chains apply in order with later updates winning") {
  Vocabulary::Builder b;
  SortId node = b.add_sort("node");
  SortId key = b.add_sort("key");
  RelId table = b.add_rel("table", {node, key});
  VocabPtr voc = b.build();

  // Classic overwrite: clear the row, then set one cell.
  Var n{"n", node}, k{"k", key};
  CompiledAction put;
  put.name = "put";
  put.params = {n, k};
  put.guard = Formula::tru();
  put.updates = {{table, {UpdateArg::of_param(0), UpdateArg::wild()}, false},
                 {table, {UpdateArg::of_param(0), UpdateArg::of_param(1)}, true}};
  put.tr_body = compile_tr_body(*voc, put.params, put.updates);

  Structure s = Structure::empty(voc, {2, 3});
  s.set(table, {0, 0}, true);
  s.set(table, {0, 2}, true);
  s.set(table, {1, 1}, true);

  auto posts = step(s, put, {0, 1});
  REQUIRE(posts.size() == 1);
  const Structure& post = posts[0];
  CHECK(post.has(table, {0, 1}));
  CHECK_FALSE(post.has(table, {0, 0}));
  CHECK_FALSE(post.has(table, {0, 2}));
  CHECK(post.has(table, {1, 1}));  // other rows untouched

  // Reversed update order leaves the row empty: the clear wins.
  CompiledAction bad = put;
  std::swap(bad.updates[0], bad.updates[1]);
  bad.tr_body = compile_tr_body(*voc, bad.params, bad.updates);
  auto posts2 = step(s, bad, {0, 1});
  REQUIRE(posts2.size() == 1);
  CHECK_FALSE(posts2[0].has(table, {0, 1}));

  CHECK(eval2(s, post, bind_args(put, {0, 1}), put.tr_body));
  CHECK_FALSE(eval2(s, s, bind_args(put, {0, 1}), put.tr_body));
}

TEST_CASE("step agrees with the compiled transition formula") {
  LockServer L;
  size_t checked = 0;
  for_each_structure(L.voc, {2}, [&](const Structure& pre) {
    for (const CompiledAction& a : L.ts.actions) {
      for (uint32_t arg = 0; arg < 2; ++arg) {
        Val v = bind_args(a, {arg});
        auto posts = step(pre, a, {arg});
        Formula tr = Formula::conj({a.guard, a.tr_body});
        std::vector<Structure> sem;
        for_each_structure(L.voc, {2}, [&](const Structure& post) {
          if (eval2(pre, post, v, tr)) sem.push_back(post);
        });
        REQUIRE(posts.size() == sem.size());
        if (!posts.empty()) {
          CHECK(posts[0] == sem[0]);
          CHECK(enabled(pre, a, {arg}));
        } else {
          CHECK_FALSE(enabled(pre, a, {arg}));
        }
        ++checked;
      }
    }
  });
  CHECK(checked == 128 * 4 * 2);
}

TEST_CASE("frames keep untouched relations intact") {
  LockServer L;
  Structure s = Structure::empty(L.voc, {2});
  s.set(L.server_holds, {}, true);
  s.set(L.holds_lock, {1}, true);
  auto posts = step(s, L.ts.actions[0], {0});  // request(0)
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].has(L.lock_msg, {0}));
  CHECK(posts[0].tables[L.grant_msg] == s.tables[L.grant_msg]);
  CHECK(posts[0].tables[L.holds_lock] == s.tables[L.holds_lock]);
  CHECK(posts[0].has(L.server_holds, {}));
}

TEST_CASE("the global transition formula is the union of the actions") {
  LockServer L;
  Formula g = global_tr(L.ts);
  CHECK(g.is_closed());
  size_t transitions = 0;
  for_each_structure(L.voc, {1}, [&](const Structure& pre) {
    for_each_structure(L.voc, {1}, [&](const Structure& post) {
      bool semantic = eval2(pre, post, {}, g);
      bool concrete = false;
      for (const CompiledAction& a : L.ts.actions)
        for (auto& r : step(pre, a, {0}))
          if (r == post) concrete = true;
      CHECK(semantic == concrete);
      if (concrete) ++transitions;
    });
  });
  CHECK(transitions > 0);

  TransitionSystem empty;
  empty.vocab = L.voc;
  empty.init = Formula::tru();
  CHECK_THROWS_AS(global_tr(empty), std::invalid_argument);
}

TEST_CASE("initial structure search honors the requested sizes") {
  LockServer L;
  SolverSession solver(L.voc, bundled());
  for (size_t n : {1u, 2u, 3u}) {
    auto s = find_init_structure(L.ts, {n}, solver);
    REQUIRE(s.has_value());
    CHECK(s->size(L.node) == n);
    CHECK(eval(*s, {}, L.ts.init));
  }
}

TEST_CASE("initial structure search degrades to enumeration") {
  LockServer L;
  SolverConfig dead;
  dead.binary = "/bin/false";
  SolverSession solver(L.voc, dead);
  auto s = find_init_structure(L.ts, {2}, solver);
  REQUIRE(s.has_value());
  CHECK(eval(*s, {}, L.ts.init));

  TransitionSystem contradictory = L.ts;
  contradictory.init = Formula::conj(
      {Formula::rel(L.server_holds, false, {}),
       Formula::mk_not(Formula::rel(L.server_holds, false, {}))});
  CHECK_FALSE(find_init_structure(contradictory, {2}, solver).has_value());
}

TEST_CASE("unsatisfiable init yields no structure") {
  LockServer L;
  SolverSession solver(L.voc, bundled());
  TransitionSystem contradictory = L.ts;
  contradictory.init = Formula::fls();
  CHECK_FALSE(find_init_structure(contradictory, {2}, solver).has_value());
}

TEST_CASE("random traces are deterministic and step-valid") {
  LockServer L;
  SolverSession solver(L.voc, bundled());
  auto t1 = random_trace(L.ts, {2}, 8, 42, solver);
  auto t2 = random_trace(L.ts, {2}, 8, 42, solver);
  REQUIRE(t1.has_value());
  REQUIRE(t2.has_value());
  CHECK(t1->complete);
  REQUIRE(t1->states.size() == 9);
  REQUIRE(t1->events.size() == 8);
  for (size_t i = 0; i < t2->states.size(); ++i)
    CHECK(t1->states[i] == t2->states[i]);

  Formula g = global_tr(L.ts);
  for (size_t i = 0; i < t1->events.size(); ++i) {
    const TraceEvent& ev = t1->events[i];
    auto posts = step(t1->states[i], L.ts.actions[ev.action], ev.args);
    REQUIRE(posts.size() == 1);
    CHECK(posts[0] == t1->states[i + 1]);
    CHECK(eval2(t1->states[i], t1->states[i + 1], {}, g));
  }
}

TEST_CASE("deadlock cuts a random trace short") {
  Vocabulary::Builder b;
  RelId flag = b.add_rel("flag", {});
  VocabPtr voc = b.build();
  TransitionSystem ts;
  ts.vocab = voc;
  ts.init = Formula::rel(flag, false, {});
  CompiledAction off;
  off.name = "off";
  off.guard = Formula::rel(flag, false, {});
  off.updates = {{flag, {}, false}};
  off.tr_body = compile_tr_body(*voc, off.params, off.updates);
  ts.actions.push_back(off);

  SolverSession solver(voc, bundled());
  auto t = random_trace(ts, {}, 5, 7, solver);
  REQUIRE(t.has_value());
  CHECK_FALSE(t->complete);
  CHECK(t->events.size() == 1);
  CHECK(t->states.size() == 2);
  CHECK_FALSE(t->states[1].has(flag, {}));
}

TEST_CASE("malformed updates are rejected") {
  LockServer L;
  CHECK_THROWS_AS(
      compile_tr_body(*L.voc, {}, {{L.lock_msg, {}, true}}),
      std::invalid_argument);  // arity
  CHECK_THROWS_AS(
      compile_tr_body(*L.voc, {}, {{L.lock_msg, {UpdateArg::of_param(0)}, true}}),
      std::invalid_argument);  // missing parameter
  CHECK_THROWS_AS(step(Structure::empty(L.voc, {1}), L.ts.actions[0], {}),
                  std::invalid_argument);  // wrong argument count
}

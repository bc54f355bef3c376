// The protocol corpus under models/: every file parses, survives the
// printer round trip, and lowers; published shape figures are pinned; and
// sampled executions of each system are accepted by its automaton.
#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phaseforge/automaton.hpp"
#include "phaseforge/frontend.hpp"
#include "phaseforge/solver.hpp"
#include "phaseforge/system.hpp"

using namespace pf;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(MODELS_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelFile load(const std::string& name) {
  return parse_model(slurp(name), name);
}

const char* kAll[] = {
    "cache.pfz",          "consensus.pfz", "kv_basic.pfz",
    "kv_broken_structure.pfz", "kvr.pfz",  "kvr_flat.pfz",
    "lockserv_multi.pfz", "lockserv_single.pfz", "ring.pfz", "unsafe.pfz"};

size_t max_arity(const Vocabulary& voc) {
  size_t m = 0;
  for (RelId r = 0; r < voc.num_rels(); ++r)
    m = std::max(m, voc.rel(r).sig.size());
  return m;
}

std::map<std::pair<size_t, size_t>, size_t> delta_sizes(
    const PhaseStructure& s) {
  std::map<std::pair<size_t, size_t>, size_t> out;
  for (const auto& [qp, entries] : s.delta) out[qp] = entries.size();
  return out;
}

SolverConfig bundled() {
  SolverConfig cfg;
  cfg.binary = EPRSMT_PATH;
  cfg.timeout_ms = 30000;
  return cfg;
}

// Every assignment of the view variables over `st`'s universes.
std::vector<Val> all_views(const Structure& st, const std::vector<Var>& view) {
  std::vector<Val> out{{}};
  for (const Var& v : view) {
    std::vector<Val> next;
    for (uint32_t i = 0; i < st.size(v.sort); ++i)
      for (Val base : out) {
        base[v.name] = Element{v.sort, i};
        next.push_back(base);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("corpus files parse, round-trip, and lower") {
  for (const char* name : kAll) {
    CAPTURE(name);
    ModelFile m = load(name);
    CHECK(parse_model(pretty(m), name) == m);
    Lowered low = lower(m);
    CHECK(low.structure.has_value() == m.automaton.has_value());
    if (low.structure)
      CHECK(low.eta.size() == low.structure->phases.size());
  }
}

TEST_CASE("published shape figures") {
  struct Shape {
    const char* file;
    size_t phases, view, rels, arity;
  };
  const Shape rows[] = {
      {"lockserv_single.pfz", 4, 1, 5, 1}, {"lockserv_multi.pfz", 4, 1, 5, 2},
      {"consensus.pfz", 3, 1, 7, 2},       {"kv_basic.pfz", 2, 1, 3, 3},
      {"ring.pfz", 2, 2, 4, 3},            {"kvr.pfz", 2, 1, 7, 5},
      {"cache.pfz", 10, 1, 11, 2},
  };
  for (const Shape& row : rows) {
    CAPTURE(row.file);
    ModelFile m = load(row.file);
    REQUIRE(m.automaton.has_value());
    CHECK(m.automaton->phases.size() == row.phases);
    CHECK(m.automaton->view.size() == row.view);
    CHECK(m.vocab->num_rels() == row.rels);
    CHECK(max_arity(*m.vocab) == row.arity);
    CHECK(m.safety.has_value());
  }
}

TEST_CASE("key-value transfer structure carries its characterizations") {
  ModelFile m = load("kvr.pfz");
  Lowered low = lower(m);
  REQUIRE(low.structure.has_value());
  const PhaseStructure& s = *low.structure;

  CHECK(low.has_characterizations);
  REQUIRE(s.phases == std::vector<std::string>{"Owned", "Transferring"});
  CHECK(s.init_phase == s.find_phase("Owned"));
  REQUIRE(s.view.size() == 1);
  CHECK(s.view[0].name == "K");
  for (const PhaseDecl& p : m.automaton->phases)
    CHECK(p.invariants.size() == 5);

  const size_t O = s.find_phase("Owned"), T = s.find_phase("Transferring");
  std::map<std::pair<size_t, size_t>, size_t> want{
      {{O, O}, 14}, {{O, T}, 1}, {{T, T}, 14}, {{T, O}, 1}};
  CHECK(delta_sizes(s) == want);
  CHECK(edges(s).size() == 4);

  // The transfer edge tracks the viewed key in the pattern's third slot.
  REQUIRE(s.entries(O, T) != nullptr);
  const EdgeEntry& out = (*s.entries(O, T))[0];
  CHECK(out.action == low.ts.action_index("reshard"));
  REQUIRE(out.pattern.size() == 5);
  CHECK(out.pattern[2] == EdgePat::of_view(0));
  CHECK(out.pattern[0] == EdgePat::wild());
}

TEST_CASE("broken sketch lacks the return edge and characterizations") {
  ModelFile whole = load("kvr.pfz");
  ModelFile broken = load("kv_broken_structure.pfz");
  CHECK(same_vocab(*whole.vocab, *broken.vocab));
  CHECK(whole.actions == broken.actions);

  Lowered low = lower(broken);
  REQUIRE(low.structure.has_value());
  CHECK_FALSE(low.has_characterizations);
  const PhaseStructure& s = *low.structure;
  const size_t O = s.find_phase("Owned"), T = s.find_phase("Transferring");
  CHECK(s.delta.count({T, O}) == 0);
  std::map<std::pair<size_t, size_t>, size_t> want{
      {{O, O}, 14}, {{O, T}, 1}, {{T, T}, 14}};
  CHECK(delta_sizes(s) == want);
}

TEST_CASE("flat variant states the whole invariant without a structure") {
  ModelFile whole = load("kvr.pfz");
  ModelFile flat = load("kvr_flat.pfz");
  CHECK(same_vocab(*whole.vocab, *flat.vocab));
  CHECK(whole.actions == flat.actions);
  CHECK_FALSE(flat.automaton.has_value());
  CHECK(flat.flat_invariant.size() == 8);
  CHECK(flat.safety.has_value());
  Lowered low = lower(flat);
  CHECK(low.flat_invariant.size() == 8);
  CHECK_FALSE(low.structure.has_value());
}

TEST_CASE("remaining structure counts") {
  struct Pair {
    const char* src;
    const char* dst;
    size_t n;
  };
  struct Row {
    const char* file;
    const char* init;
    std::vector<Pair> pairs;
  };
  const Row rows[] = {
      {"kv_basic.pfz",
       "Owned",
       {{"Owned", "Owned", 4},
        {"Owned", "Transferring", 1},
        {"Transferring", "Transferring", 3},
        {"Transferring", "Owned", 1}}},
      {"consensus.pfz",
       "NoLeader",
       {{"NoLeader", "NoLeader", 2},
        {"NoLeader", "Elected", 1},
        {"Elected", "Elected", 4},
        {"Elected", "Decided", 1},
        {"Decided", "Decided", 4}}},
      {"ring.pfz",
       "NotPast",
       {{"NotPast", "NotPast", 3},
        {"NotPast", "Past", 2},
        {"Past", "Past", 3}}},
      {"unsafe.pfz", "Up", {{"Up", "Up", 1}}},
  };
  for (const Row& row : rows) {
    CAPTURE(row.file);
    Lowered low = lower(load(row.file));
    REQUIRE(low.structure.has_value());
    const PhaseStructure& s = *low.structure;
    CHECK_FALSE(lower(load(row.file)).has_characterizations);
    CHECK(s.init_phase == s.find_phase(row.init));
    std::map<std::pair<size_t, size_t>, size_t> want;
    for (const Pair& p : row.pairs)
      want[{s.find_phase(p.src), s.find_phase(p.dst)}] = p.n;
    CHECK(delta_sizes(s) == want);
  }

  // The lock service splits into one cycle plus per-phase self entries.
  for (const char* name : {"lockserv_single.pfz", "lockserv_multi.pfz"}) {
    CAPTURE(name);
    Lowered low = lower(load(name));
    const PhaseStructure& s = *low.structure;
    CHECK(s.init_phase == s.find_phase("ServerHolds"));
    const size_t selves = std::string(name) == "lockserv_single.pfz" ? 1 : 5;
    for (size_t q = 0; q < 4; ++q) CHECK(s.entries(q, q)->size() == selves);
    CHECK(edges(s).size() == 8);
  }

  Lowered cache = lower(load("cache.pfz"));
  const PhaseStructure& cs = *cache.structure;
  REQUIRE(cs.phases.size() == 10);
  CHECK(cs.init_phase == cs.find_phase("Invalid"));
  size_t diag = 0, cross = 0;
  for (const auto& [qp, entries] : cs.delta)
    (qp.first == qp.second ? diag : cross) += entries.size();
  CHECK(diag == 150);  // 15 actions observed from each of the 10 phases
  CHECK(cross == 17);
  for (size_t q = 0; q < 10; ++q) CHECK(cs.entries(q, q)->size() == 15);
}

TEST_CASE("sampled executions are accepted at every view valuation") {
  struct Run {
    const char* file;
    std::vector<size_t> sizes;  // per sort, declaration order
    size_t length;
  };
  const Run runs[] = {
      {"lockserv_single.pfz", {2}, 6},    {"lockserv_multi.pfz", {2, 2}, 6},
      {"consensus.pfz", {2, 2}, 6},       {"kv_basic.pfz", {2, 2, 2}, 6},
      {"ring.pfz", {3}, 6},               {"kvr.pfz", {2, 2, 2, 2}, 5},
      {"cache.pfz", {2}, 8},              {"unsafe.pfz", {2}, 4},
  };
  for (const Run& run : runs) {
    CAPTURE(run.file);
    Lowered low = lower(load(run.file));
    REQUIRE(low.structure.has_value());
    PhaseAutomaton aut{*low.structure, low.eta};
    SolverSession solver(low.ts.vocab, bundled());
    size_t steps = 0;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
      auto tr = random_trace(low.ts, run.sizes, run.length, seed, solver);
      REQUIRE(tr.has_value());
      steps += tr->events.size();
      for (const Val& v : all_views(tr->states.front(), low.structure->view)) {
        TraceMembership got = trace_member(low.ts, aut, tr->states, v);
        CHECK(got.member);
        if (got.member) {
          CHECK(got.phase_trace.size() == tr->states.size());
          CHECK(got.phase_trace.front() == low.structure->init_phase);
        }
      }
    }
    CHECK(steps > 0);  // the sampler found real steps, not just stutters
  }
}

#include "sat.hpp"

#include <algorithm>
#include <random>

namespace eprsmt {

int Sat::new_var(bool pol) {
  val_.push_back(0);
  phase_.push_back(pol ? 1 : -1);
  level_.push_back(0);
  reason_.push_back(-1);
  activity_.push_back(0.0);
  heap_pos_.push_back(-1);
  watches_.emplace_back();
  watches_.emplace_back();
  int v = static_cast<int>(val_.size());
  heap_insert(v - 1);
  return v;
}

void Sat::add_clause(std::vector<int> lits) {
  if (!ok_) return;
  // normalize: drop duplicates and false lits would need level-0 values; at
  // load time nothing is assigned yet, so only handle dup/taut.
  std::vector<int> c;
  for (int d : lits) {
    int l = lit_of(d);
    if (std::find(c.begin(), c.end(), l) != c.end()) continue;
    if (std::find(c.begin(), c.end(), neg(l)) != c.end()) return;  // tautology
    if (lit_true(l)) return;       // satisfied by a level-0 unit
    if (lit_false(l)) continue;    // already false at level 0
    c.push_back(l);
  }
  if (c.empty()) {
    ok_ = false;
    return;
  }
  if (c.size() == 1) {
    if (lit_false(c[0])) {
      ok_ = false;
      return;
    }
    if (!lit_true(c[0])) {
      enqueue(c[0], -1);
      if (propagate() != -1) ok_ = false;
    }
    return;
  }
  clauses_.push_back(std::move(c));
  attach(static_cast<uint32_t>(clauses_.size() - 1));
}

void Sat::attach(uint32_t ci) {
  const auto& c = clauses_[ci];
  watches_[static_cast<size_t>(c[0])].push_back(Watch{ci, c[1]});
  watches_[static_cast<size_t>(c[1])].push_back(Watch{ci, c[0]});
}

void Sat::enqueue(int l, int reason) {
  int v = var(l);
  val_[static_cast<size_t>(v)] = (l & 1) ? -1 : 1;
  phase_[static_cast<size_t>(v)] = (l & 1) ? -1 : 1;
  level_[static_cast<size_t>(v)] = decision_level();
  reason_[static_cast<size_t>(v)] = reason;
  trail_.push_back(l);
}

int Sat::propagate() {
  while (qhead_ < trail_.size()) {
    int p = trail_[qhead_++];
    int fl = neg(p);  // literal that became false
    auto& ws = watches_[static_cast<size_t>(fl)];
    size_t keep = 0;
    for (size_t i = 0; i < ws.size(); ++i) {
      Watch w = ws[i];
      if (lit_true(w.blocker)) {
        ws[keep++] = w;
        continue;
      }
      auto& c = clauses_[w.clause];
      if (c[0] == fl) std::swap(c[0], c[1]);
      // c[1] == fl now
      if (lit_true(c[0])) {
        ws[keep++] = Watch{w.clause, c[0]};
        continue;
      }
      bool moved = false;
      for (size_t k = 2; k < c.size(); ++k) {
        if (!lit_false(c[k])) {
          std::swap(c[1], c[k]);
          watches_[static_cast<size_t>(c[1])].push_back(Watch{w.clause, c[0]});
          moved = true;
          break;
        }
      }
      if (moved) continue;
      // unit or conflict on c[0]
      ws[keep++] = Watch{w.clause, c[0]};
      if (lit_false(c[0])) {
        for (size_t j = i + 1; j < ws.size(); ++j) ws[keep++] = ws[j];
        ws.resize(keep);
        qhead_ = trail_.size();
        return static_cast<int>(w.clause);
      }
      enqueue(c[0], static_cast<int>(w.clause));
    }
    ws.resize(keep);
  }
  return -1;
}

void Sat::analyze(int confl, std::vector<int>& learnt, int& bt_level) {
  learnt.clear();
  learnt.push_back(0);  // slot for the asserting literal
  std::vector<char> seen(val_.size(), 0);
  int counter = 0;
  int p = -1;
  size_t idx = trail_.size();
  int ci = confl;
  do {
    const auto& c = clauses_[static_cast<size_t>(ci)];
    for (size_t k = (p == -1 ? 0 : 1); k < c.size(); ++k) {
      int q = c[k];
      int v = var(q);
      if (seen[static_cast<size_t>(v)] || level_[static_cast<size_t>(v)] == 0)
        continue;
      seen[static_cast<size_t>(v)] = 1;
      bump(v);
      if (level_[static_cast<size_t>(v)] == decision_level())
        counter++;
      else
        learnt.push_back(q);
    }
    // pick next marked literal from the trail
    while (!seen[static_cast<size_t>(var(trail_[idx - 1]))]) idx--;
    p = trail_[--idx];
    seen[static_cast<size_t>(var(p))] = 0;
    ci = reason_[static_cast<size_t>(var(p))];
    counter--;
  } while (counter > 0);
  learnt[0] = neg(p);

  // backtrack level: second highest level in learnt
  bt_level = 0;
  size_t hi = 1;
  for (size_t i = 1; i < learnt.size(); ++i) {
    int lv = level_[static_cast<size_t>(var(learnt[i]))];
    if (lv > bt_level) {
      bt_level = lv;
      hi = i;
    }
  }
  if (learnt.size() > 1) std::swap(learnt[1], learnt[hi]);
}

void Sat::backtrack(int lvl) {
  if (decision_level() <= lvl) return;
  size_t lim = trail_lim_[static_cast<size_t>(lvl)];
  for (size_t i = trail_.size(); i-- > lim;) {
    int v = var(trail_[i]);
    val_[static_cast<size_t>(v)] = 0;
    reason_[static_cast<size_t>(v)] = -1;
    if (heap_pos_[static_cast<size_t>(v)] < 0) heap_insert(v);
  }
  trail_.resize(lim);
  trail_lim_.resize(static_cast<size_t>(lvl));
  qhead_ = trail_.size();
}

uint64_t Sat::luby(uint64_t x) {
  // the reluctant doubling sequence 1 1 2 1 1 2 4 ...
  uint64_t size = 1, seq = 0;
  while (size < x + 1) {
    seq++;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    seq--;
    x %= size;
  }
  return 1ull << seq;
}

void Sat::bump(int v) {
  activity_[static_cast<size_t>(v)] += var_inc_;
  if (activity_[static_cast<size_t>(v)] > 1e100) {
    for (auto& a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_pos_[static_cast<size_t>(v)] >= 0)
    heap_sift_up(static_cast<size_t>(heap_pos_[static_cast<size_t>(v)]));
}

void Sat::heap_insert(int v) {
  heap_pos_[static_cast<size_t>(v)] = static_cast<int>(heap_.size());
  heap_.push_back(v);
  heap_sift_up(heap_.size() - 1);
}

void Sat::heap_sift_up(size_t i) {
  int v = heap_[i];
  while (i > 0) {
    size_t p = (i - 1) / 2;
    if (activity_[static_cast<size_t>(heap_[p])] >=
        activity_[static_cast<size_t>(v)])
      break;
    heap_[i] = heap_[p];
    heap_pos_[static_cast<size_t>(heap_[i])] = static_cast<int>(i);
    i = p;
  }
  heap_[i] = v;
  heap_pos_[static_cast<size_t>(v)] = static_cast<int>(i);
}

void Sat::heap_sift_down(size_t i) {
  int v = heap_[i];
  for (;;) {
    size_t l = 2 * i + 1, r = 2 * i + 2, best = i;
    double bv = activity_[static_cast<size_t>(v)];
    if (l < heap_.size() && activity_[static_cast<size_t>(heap_[l])] > bv) {
      best = l;
      bv = activity_[static_cast<size_t>(heap_[l])];
    }
    if (r < heap_.size() && activity_[static_cast<size_t>(heap_[r])] > bv)
      best = r;
    if (best == i) break;
    heap_[i] = heap_[best];
    heap_pos_[static_cast<size_t>(heap_[i])] = static_cast<int>(i);
    i = best;
  }
  heap_[i] = v;
  heap_pos_[static_cast<size_t>(v)] = static_cast<int>(i);
}

int Sat::heap_pop() {
  int v = heap_[0];
  heap_pos_[static_cast<size_t>(v)] = -1;
  heap_[0] = heap_.back();
  heap_pos_[static_cast<size_t>(heap_[0])] = 0;
  heap_.pop_back();
  if (!heap_.empty()) heap_sift_down(0);
  return v;
}

Sat::Res Sat::solve(std::chrono::steady_clock::time_point deadline,
                    uint64_t seed) {
  if (!ok_) return Res::kUnsat;
  if (propagate() != -1) return Res::kUnsat;
  std::mt19937_64 rng(seed * 2654435761u + 1);
  uint64_t conflicts = 0, restart_idx = 0;
  uint64_t restart_budget = 100 * luby(restart_idx);
  uint64_t since_check = 0;
  std::vector<int> learnt;
  for (;;) {
    int confl = propagate();
    if (confl != -1) {
      conflicts++;
      if (decision_level() == 0) return Res::kUnsat;
      int bt;
      analyze(confl, learnt, bt);
      backtrack(bt);
      if (learnt.size() == 1) {
        enqueue(learnt[0], -1);
      } else {
        clauses_.push_back(learnt);
        attach(static_cast<uint32_t>(clauses_.size() - 1));
        enqueue(learnt[0], static_cast<int>(clauses_.size() - 1));
      }
      decay();
      if (conflicts >= restart_budget) {
        backtrack(0);
        restart_idx++;
        restart_budget = conflicts + 100 * luby(restart_idx);
      }
      if (++since_check >= 256) {
        since_check = 0;
        if (std::chrono::steady_clock::now() >= deadline) return Res::kUnknown;
      }
    } else {
      // decide
      int v = -1;
      if ((rng() & 63) == 0 && !heap_.empty()) {
        // occasional random decision to diversify
        size_t i = rng() % heap_.size();
        if (!assigned(heap_[i])) v = heap_[i];
      }
      while (v == -1) {
        if (heap_.empty()) return Res::kSat;
        int w = heap_pop();
        if (!assigned(w)) v = w;
      }
      if (++since_check >= 256) {
        since_check = 0;
        if (std::chrono::steady_clock::now() >= deadline) return Res::kUnknown;
      }
      trail_lim_.push_back(trail_.size());
      enqueue(phase_[static_cast<size_t>(v)] == 1 ? 2 * v : 2 * v + 1, -1);
    }
  }
}

}  // namespace eprsmt

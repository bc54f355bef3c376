#include "model.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace eprsmt {

namespace {

struct Quotient {
  // per sort: class index per candidate position, and class count
  std::map<SortId, std::vector<size_t>> cls;
  std::map<SortId, size_t> count;
  std::map<uint32_t, std::pair<SortId, size_t>> of_const;  // fn -> (sort, class)
};

Quotient quotient(const GroundResult& g, const Sat& sat) {
  Quotient q;
  for (const auto& [s, pool] : g.candidates) {
    std::vector<size_t> parent(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) parent[i] = i;
    std::function<size_t(size_t)> find = [&](size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (size_t i = 0; i < pool.size(); ++i)
      for (size_t j = i + 1; j < pool.size(); ++j) {
        auto it = g.eq_vars.find({std::min(pool[i], pool[j]),
                                  std::max(pool[i], pool[j])});
        if (it != g.eq_vars.end() && sat.value(it->second)) {
          size_t a = find(i), b = find(j);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      }
    // number classes by first occurrence
    std::map<size_t, size_t> num;
    std::vector<size_t> cls(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
      size_t r = find(i);
      auto [it, fresh] = num.emplace(r, num.size());
      (void)fresh;
      cls[i] = it->second;
    }
    for (size_t i = 0; i < pool.size(); ++i)
      q.of_const[pool[i]] = {s, cls[i]};
    q.count[s] = num.size();
    q.cls[s] = std::move(cls);
  }
  return q;
}

std::string elem_name(const Ctx& ctx, SortId s, size_t k) {
  return ctx.sort_name(s) + "!val!" + std::to_string(k);
}

}  // namespace

std::string render_model(const Ctx& ctx, const GroundResult& g,
                         const Sat& sat) {
  Quotient q = quotient(g, sat);
  std::ostringstream os;
  os << "(\n";
  for (const auto& [s, n] : q.count) {
    const std::string& sn = ctx.sort_name(s);
    os << "  ;; universe for " << sn << ":\n  ;;  ";
    for (size_t k = 0; k < n; ++k) os << " " << elem_name(ctx, s, k);
    os << "\n  ;; -----------\n";
    os << "  ;; definitions for universe elements:\n";
    for (size_t k = 0; k < n; ++k)
      os << "  (declare-fun " << elem_name(ctx, s, k) << " () " << sn << ")\n";
    os << "  ;; cardinality constraint:\n";
    if (n == 1) {
      os << "  (forall ((x " << sn << ")) (= x " << elem_name(ctx, s, 0)
         << "))\n";
    } else {
      os << "  (forall ((x " << sn << ")) (or";
      for (size_t k = 0; k < n; ++k)
        os << " (= x " << elem_name(ctx, s, k) << ")";
      os << "))\n";
    }
    os << "  ;; -----------\n";
  }
  // constants, in declaration order, skipping internal witnesses
  for (uint32_t f = 0; f < ctx.num_funs(); ++f) {
    const FuncDecl& d = ctx.fun(f);
    if (!d.args.empty() || ctx.is_internal(f)) continue;
    if (d.ret == kSortBool) {
      // nullary predicate
      auto it = g.rel_vars.find({f, {}});
      bool val = it != g.rel_vars.end() && sat.value(it->second);
      os << "  (define-fun " << d.name << " () Bool " << (val ? "true" : "false")
         << ")\n";
      continue;
    }
    auto e = q.of_const.at(f);
    os << "  (define-fun " << d.name << " () " << ctx.sort_name(d.ret) << "\n"
       << "    " << elem_name(ctx, e.first, e.second) << ")\n";
  }
  // relations with arguments
  for (uint32_t f = 0; f < ctx.num_funs(); ++f) {
    const FuncDecl& d = ctx.fun(f);
    if (d.args.empty() || ctx.is_internal(f) || d.ret != kSortBool) continue;
    // true class tuples via any representative
    std::set<std::vector<size_t>> pos;
    size_t total = 1;
    for (SortId s : d.args) total *= q.count.at(s);
    for (const auto& [key, var] : g.rel_vars) {
      if (key.first != f || !sat.value(var)) continue;
      std::vector<size_t> ct;
      for (uint32_t c : key.second) ct.push_back(q.of_const.at(c).second);
      pos.insert(std::move(ct));
    }
    os << "  (define-fun " << d.name << " (";
    for (size_t i = 0; i < d.args.size(); ++i) {
      if (i) os << " ";
      os << "(x!" << i << " " << ctx.sort_name(d.args[i]) << ")";
    }
    os << ") Bool\n";
    if (pos.empty()) {
      os << "    false)\n";
    } else if (pos.size() == total) {
      os << "    true)\n";
    } else {
      os << "    (or";
      for (const auto& ct : pos) {
        os << "\n      (and";
        for (size_t i = 0; i < ct.size(); ++i)
          os << " (= x!" << i << " " << elem_name(ctx, d.args[i], ct[i]) << ")";
        os << ")";
      }
      os << "))\n";
    }
  }
  os << ")";
  return os.str();
}

}  // namespace eprsmt

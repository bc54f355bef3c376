/*
 * Copyright (c) 2026 The phaseforge authors
 * SPDX-License-Identifier: MIT
 */
#include "phaseforge/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pf {

namespace {

int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct TimeoutError {};
struct DeadError {};
struct ProtocolError {
  std::string msg;
};

bool file_executable(const std::string& p) {
  return access(p.c_str(), X_OK) == 0;
}

std::string exe_dir() {
  char buf[4096];
  ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "";
  buf[n] = 0;
  std::string p(buf);
  size_t slash = p.rfind('/');
  return slash == std::string::npos ? "" : p.substr(0, slash);
}

}  // namespace

SolverConfig default_solver(const std::string& explicit_path) {
  SolverConfig cfg;
  if (!explicit_path.empty()) {
    cfg.binary = explicit_path;
    return cfg;
  }
  if (const char* env = std::getenv("PHASEFORGE_SOLVER")) {
    if (*env) {
      cfg.binary = env;
      return cfg;
    }
  }
  std::string dir = exe_dir();
  if (!dir.empty()) {
    for (const char* rel : {"/eprsmt", "/../eprsmt/eprsmt"}) {
      std::string cand = dir + rel;
      if (file_executable(cand)) {
        cfg.binary = cand;
        return cfg;
      }
    }
  }
  cfg.binary = "eprsmt";  // PATH lookup
  return cfg;
}

// ---------------------------------------------------------------------------
// SMT-LIB rendering

std::string smt_quote(const std::string& name) {
  bool plain = !name.empty() && !isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name) {
    if (isalnum(static_cast<unsigned char>(c))) continue;
    if (std::string("~!@$%^&*_-+=<>.?/").find(c) != std::string::npos) continue;
    plain = false;
    break;
  }
  if (plain) return name;
  return "|" + name + "|";
}

namespace {

void write_term(std::ostream& os, const Vocabulary& voc, const Term& t,
                const std::set<std::string>& bound, const SmtOpts& opts) {
  if (t.is_var()) {
    if (bound.count(t.var.name)) {
      os << smt_quote(t.var.name);
    } else if (opts.free_var) {
      os << smt_quote(opts.free_var(t.var));
    } else {
      os << smt_quote(t.var.name + "!v");
    }
    return;
  }
  std::string n = voc.constant(t.cid).name;
  if (t.primed)
    throw std::invalid_argument("primed constant in solver query: " + n);
  os << smt_quote(n);
}

void write_formula(std::ostream& os, const Vocabulary& voc, const Formula& f,
                   std::set<std::string>& bound, const SmtOpts& opts) {
  switch (f.kind()) {
    case FKind::kTrue: os << "true"; return;
    case FKind::kFalse: os << "false"; return;
    case FKind::kRel: {
      std::string name = voc.rel(f.rel_id()).name;
      if (f.rel_primed()) name += "'";
      if (f.args().empty()) {
        os << smt_quote(name);
        return;
      }
      os << "(" << smt_quote(name);
      for (const Term& t : f.args()) {
        os << " ";
        write_term(os, voc, t, bound, opts);
      }
      os << ")";
      return;
    }
    case FKind::kEq:
      os << "(= ";
      write_term(os, voc, f.lhs(), bound, opts);
      os << " ";
      write_term(os, voc, f.rhs(), bound, opts);
      os << ")";
      return;
    case FKind::kNot:
      os << "(not ";
      write_formula(os, voc, f.children()[0], bound, opts);
      os << ")";
      return;
    case FKind::kAnd:
    case FKind::kOr:
    case FKind::kImplies:
    case FKind::kIff: {
      const char* op = f.kind() == FKind::kAnd       ? "and"
                       : f.kind() == FKind::kOr      ? "or"
                       : f.kind() == FKind::kImplies ? "=>"
                                                     : "=";
      os << "(" << op;
      for (const Formula& c : f.children()) {
        os << " ";
        write_formula(os, voc, c, bound, opts);
      }
      os << ")";
      return;
    }
    case FKind::kForall:
    case FKind::kExists: {
      os << "(" << (f.kind() == FKind::kForall ? "forall" : "exists") << " (";
      bool first = true;
      for (const Var& v : f.qvars()) {
        if (!first) os << " ";
        first = false;
        os << "(" << smt_quote(v.name) << " " << voc.sort_name(v.sort) << ")";
      }
      os << ") ";
      std::vector<std::string> added;
      for (const Var& v : f.qvars())
        if (bound.insert(v.name).second) added.push_back(v.name);
      write_formula(os, voc, f.body(), bound, opts);
      for (const auto& n : added) bound.erase(n);
      os << ")";
      return;
    }
  }
}

}  // namespace

void write_smt_formula(std::ostream& os, const Vocabulary& voc,
                       const Formula& f, const SmtOpts& opts) {
  std::set<std::string> bound;
  write_formula(os, voc, f, bound, opts);
}

void write_smt_decls(std::ostream& os, const Vocabulary& voc) {
  for (SortId s = 0; s < voc.num_sorts(); ++s)
    os << "(declare-sort " << voc.sort_name(s) << " 0)\n";
  for (RelId r = 0; r < voc.num_rels(); ++r) {
    for (int primed = 0; primed < 2; ++primed) {
      os << "(declare-fun "
         << smt_quote(voc.rel(r).name + (primed ? "'" : "")) << " (";
      bool first = true;
      for (SortId s : voc.rel(r).sig) {
        if (!first) os << " ";
        first = false;
        os << voc.sort_name(s);
      }
      os << ") Bool)\n";
    }
  }
  for (ConstId c = 0; c < voc.num_consts(); ++c)
    os << "(declare-const " << smt_quote(voc.constant(c).name) << " "
       << voc.sort_name(voc.constant(c).sort) << ")\n";
}

// ---------------------------------------------------------------------------
// process plumbing

SolverSession::SolverSession(VocabPtr vocab, SolverConfig cfg)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
  signal(SIGPIPE, SIG_IGN);
}

SolverSession::~SolverSession() { shutdown(false); }

void SolverSession::spawn() {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw std::runtime_error("pipe() failed");
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("fork() failed");
  if (pid_ == 0) {
    dup2(to_child[0], 0);
    dup2(from_child[1], 1);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, 2);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(cfg_.binary.c_str()));
    for (const auto& a : cfg_.args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(cfg_.binary.c_str(), argv.data());
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];
  rdbuf_.clear();
  restarts_++;

  std::ostringstream os;
  os << "(set-option :produce-models true)\n";
  os << "(set-option :timeout " << cfg_.timeout_ms << ")\n";
  os << "(set-option :random-seed " << cfg_.seed << ")\n";
  write_smt_decls(os, *vocab_);
  send(os.str());
  sync("ready", now_ms() + 10000);
}

void SolverSession::shutdown(bool hard) {
  if (pid_ < 0) return;
  if (!hard) {
    try {
      send("(exit)\n");
    } catch (...) {
    }
  }
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (hard) kill(pid_, SIGKILL);
  for (int i = 0; i < 100; ++i) {
    int status;
    pid_t r = waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      break;
    }
    if (i == 50) kill(pid_, SIGKILL);
    usleep(2000);
  }
  if (pid_ >= 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  base_sent_ = false;
}

void SolverSession::send(const std::string& text) {
  if (!cfg_.transcript.empty()) {
    std::ofstream t(cfg_.transcript, std::ios::app);
    t << text;
  }
  size_t off = 0;
  while (off < text.size()) {
    ssize_t n = write(to_child_, text.data() + off, text.size() - off);
    if (n <= 0) {
      if (errno == EINTR) continue;
      throw DeadError{};
    }
    off += static_cast<size_t>(n);
  }
}

std::string SolverSession::read_line(int64_t deadline_ms) {
  for (;;) {
    size_t nl = rdbuf_.find('\n');
    if (nl != std::string::npos) {
      std::string line = rdbuf_.substr(0, nl);
      rdbuf_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!cfg_.transcript.empty()) {
        std::ofstream t(cfg_.transcript, std::ios::app);
        t << ";; <- " << line << "\n";
      }
      return line;
    }
    int64_t left = deadline_ms - now_ms();
    if (left <= 0) throw TimeoutError{};
    struct pollfd pfd{from_child_, POLLIN, 0};
    int pr = poll(&pfd, 1, static_cast<int>(std::min<int64_t>(left, 1000)));
    if (pr < 0 && errno != EINTR) throw DeadError{};
    if (pr > 0) {
      char buf[65536];
      ssize_t n = read(from_child_, buf, sizeof(buf));
      if (n == 0) throw DeadError{};
      if (n < 0) {
        if (errno == EINTR) continue;
        throw DeadError{};
      }
      rdbuf_.append(buf, static_cast<size_t>(n));
    }
  }
}

std::string SolverSession::read_sexpr(int64_t deadline_ms) {
  // pull whole lines until the parens balance outside comments and quotes
  std::string acc;
  int depth = 0;
  bool any = false;
  for (;;) {
    std::string line = read_line(deadline_ms);
    acc += line + "\n";
    bool comment = false, bars = false, str = false;
    depth = 0;
    any = false;
    for (char c : acc) {
      if (comment) {
        if (c == '\n') comment = false;
      } else if (bars) {
        if (c == '|') bars = false;
      } else if (str) {
        if (c == '"') str = false;
      } else if (c == ';') {
        comment = true;
      } else if (c == '|') {
        bars = true;
      } else if (c == '"') {
        str = true;
      } else if (c == '(') {
        depth++;
        any = true;
      } else if (c == ')') {
        depth--;
      }
    }
    if (any && depth == 0) return acc;
    if (!any && acc.find_first_not_of(" \t\r\n") != std::string::npos)
      throw ProtocolError{"expected an s-expression, got: " + acc};
  }
}

void SolverSession::sync(const char* tag, int64_t deadline_ms) {
  send(std::string("(echo \"") + tag + "\")\n");
  std::vector<std::string> noise;
  for (;;) {
    std::string line = read_line(deadline_ms);
    if (line == tag) break;
    if (!line.empty()) noise.push_back(line);
    if (noise.size() > 100) break;
  }
  if (!noise.empty()) {
    std::string all;
    for (const auto& l : noise) all += l + "\n";
    throw ProtocolError{"unexpected solver output: " + all};
  }
}

// ---------------------------------------------------------------------------
// query protocol

void SolverSession::set_base(std::vector<Formula> base) {
  if (base_sent_ && base_ == base) return;
  if (pid_ >= 0 && base_sent_) {
    try {
      send("(pop 1)\n");
    } catch (...) {
      shutdown(true);
    }
  }
  base_ = std::move(base);
  base_sent_ = false;
}

void SolverSession::send_base() {
  std::ostringstream os;
  os << "(push 1)\n";
  std::map<std::string, SortId> views;
  for (const Formula& f : base_)
    for (const Var& v : f.free_vars()) {
      auto [it, fresh] = views.emplace(v.name, v.sort);
      if (!fresh && it->second != v.sort)
        throw std::invalid_argument("free variable at two sorts: " + v.name);
    }
  for (const auto& [name, sort] : views)
    os << "(declare-const " << smt_quote(name + "!v") << " "
       << vocab_->sort_name(sort) << ")\n";
  for (const Formula& f : base_) {
    os << "(assert ";
    write_smt_formula(os, *vocab_, f);
    os << ")\n";
  }
  send(os.str());
  sync("base", now_ms() + 10000);
  base_sent_ = true;
}

QueryResult SolverSession::check(const std::vector<Formula>& probe) {
  queries_++;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      if (pid_ < 0) spawn();
      if (!base_sent_) send_base();

      std::map<std::string, SortId> base_views;
      for (const Formula& f : base_)
        for (const Var& v : f.free_vars()) base_views.emplace(v.name, v.sort);
      std::map<std::string, SortId> new_views;
      for (const Formula& f : probe)
        for (const Var& v : f.free_vars()) {
          if (base_views.count(v.name)) {
            if (base_views[v.name] != v.sort)
              throw std::invalid_argument("free variable at two sorts: " +
                                          v.name);
            continue;
          }
          auto [it, fresh] = new_views.emplace(v.name, v.sort);
          if (!fresh && it->second != v.sort)
            throw std::invalid_argument("free variable at two sorts: " +
                                        v.name);
        }

      std::ostringstream os;
      os << "(push 1)\n";
      for (const auto& [name, sort] : new_views)
        os << "(declare-const " << smt_quote(name + "!v") << " "
           << vocab_->sort_name(sort) << ")\n";
      for (const Formula& f : probe) {
        os << "(assert ";
        write_smt_formula(os, *vocab_, f);
        os << ")\n";
      }
      send(os.str());
      int64_t deadline = now_ms() + static_cast<int64_t>(cfg_.timeout_ms) + 2500;
      sync("probe", deadline);
      send("(check-sat)\n");
      std::string verdict = read_line(deadline);

      QueryResult res;
      if (verdict == "sat") {
        send("(get-model)\n");
        std::string text = read_sexpr(deadline);
        if (text.find("(error") == 0)
          throw ProtocolError{"get-model failed: " + text};
        Model m = parse_model(text);
        send("(pop 1)\n");
        sync("done", deadline);
        // never trust the solver: replay the query on the parsed structures
        std::string why;
        bool holds = true;
        try {
          for (const Formula& f : base_)
            if (!eval2(m.pre, m.post, m.view, f)) {
              holds = false;
              why = "base formula fails in the reported model";
              break;
            }
          if (holds)
            for (const Formula& f : probe)
              if (!eval2(m.pre, m.post, m.view, f)) {
                holds = false;
                why = "probe formula fails in the reported model";
                break;
              }
        } catch (const std::exception& e) {
          holds = false;
          why = std::string("model replay failed: ") + e.what();
        }
        if (!holds) {
          res.status = QueryStatus::kUnknown;
          res.reason = why;
          return res;
        }
        res.status = QueryStatus::kSat;
        res.model = std::move(m);
        return res;
      }
      if (verdict == "unsat") {
        send("(pop 1)\n");
        sync("done", deadline);
        res.status = QueryStatus::kUnsat;
        return res;
      }
      if (verdict == "unknown") {
        send("(get-info :reason-unknown)\n");
        std::string why = read_line(deadline);
        send("(pop 1)\n");
        sync("done", deadline);
        res.status = QueryStatus::kUnknown;
        size_t q1 = why.find('"'), q2 = why.rfind('"');
        res.reason = (q1 != std::string::npos && q2 > q1)
                         ? why.substr(q1 + 1, q2 - q1 - 1)
                         : why;
        return res;
      }
      throw ProtocolError{"unexpected check-sat answer: " + verdict};
    } catch (const TimeoutError&) {
      shutdown(true);
      return QueryResult{QueryStatus::kUnknown, std::nullopt,
                         "solver timed out and was killed"};
    } catch (const DeadError&) {
      shutdown(true);
      // fall through: one respawn attempt
    } catch (const ProtocolError& e) {
      shutdown(true);
      return QueryResult{QueryStatus::kUnknown, std::nullopt, e.msg};
    } catch (const std::runtime_error& e) {
      shutdown(true);
      return QueryResult{QueryStatus::kUnknown, std::nullopt, e.what()};
    }
  }
  return QueryResult{QueryStatus::kUnknown, std::nullopt,
                     "solver process died twice on one query (binary: " +
                         cfg_.binary + ")"};
}

// ---------------------------------------------------------------------------
// model parsing

namespace {

struct SNode {
  bool is_atom = true;
  std::string atom;
  std::vector<SNode> kids;
};

struct SParser {
  const std::string& s;
  size_t i = 0;

  void skip() {
    for (;;) {
      while (i < s.size() && isspace(static_cast<unsigned char>(s[i]))) i++;
      if (i < s.size() && s[i] == ';') {
        while (i < s.size() && s[i] != '\n') i++;
        continue;
      }
      return;
    }
  }

  SNode parse() {
    skip();
    if (i >= s.size()) throw std::runtime_error("truncated model");
    if (s[i] == '(') {
      i++;
      SNode n;
      n.is_atom = false;
      for (;;) {
        skip();
        if (i >= s.size()) throw std::runtime_error("truncated model");
        if (s[i] == ')') {
          i++;
          return n;
        }
        n.kids.push_back(parse());
      }
    }
    SNode n;
    if (s[i] == '|') {
      i++;
      while (i < s.size() && s[i] != '|') n.atom.push_back(s[i++]);
      i++;
    } else if (s[i] == '"') {
      i++;
      while (i < s.size() && s[i] != '"') n.atom.push_back(s[i++]);
      i++;
    } else {
      while (i < s.size() && !isspace(static_cast<unsigned char>(s[i])) &&
             s[i] != '(' && s[i] != ')' && s[i] != ';')
        n.atom.push_back(s[i++]);
    }
    return n;
  }
};

// body evaluator for define-fun entries; names resolve through the
// parameter environment first, then stand for themselves (universe elements)
struct BodyEval {
  const std::map<std::string, std::string>* env;

  std::string resolve(const SNode& n) const {
    if (!n.is_atom) throw std::runtime_error("bad term in model body");
    auto it = env->find(n.atom);
    if (it != env->end()) return it->second;
    return n.atom;
  }

  bool eval(const SNode& n) const {
    if (n.is_atom) {
      if (n.atom == "true") return true;
      if (n.atom == "false") return false;
      throw std::runtime_error("bad boolean atom in model: " + n.atom);
    }
    if (n.kids.empty() || !n.kids[0].is_atom)
      throw std::runtime_error("bad application in model body");
    const std::string& h = n.kids[0].atom;
    if (h == "=") {
      return resolve(n.kids[1]) == resolve(n.kids[2]);
    }
    if (h == "and") {
      for (size_t k = 1; k < n.kids.size(); ++k)
        if (!eval(n.kids[k])) return false;
      return true;
    }
    if (h == "or") {
      for (size_t k = 1; k < n.kids.size(); ++k)
        if (eval(n.kids[k])) return true;
      return false;
    }
    if (h == "not") return !eval(n.kids[1]);
    if (h == "ite") return eval(n.kids[1]) ? eval(n.kids[2]) : eval(n.kids[3]);
    throw std::runtime_error("unsupported operator in model body: " + h);
  }
};

}  // namespace

Model SolverSession::parse_model(const std::string& text) const {
  SParser p{text};
  SNode root = p.parse();
  if (root.is_atom) throw ProtocolError{"model is not a list"};
  // optional leading `model` keyword used by some solvers
  size_t first = 0;
  if (!root.kids.empty() && root.kids[0].is_atom && root.kids[0].atom == "model")
    first = 1;

  const Vocabulary& voc = *vocab_;
  // universe elements per sort in declaration order
  std::vector<std::vector<std::string>> universe(voc.num_sorts());
  std::map<std::string, std::pair<SortId, uint32_t>> elems;
  for (size_t k = first; k < root.kids.size(); ++k) {
    const SNode& e = root.kids[k];
    if (e.is_atom || e.kids.size() < 4 || !e.kids[0].is_atom) continue;
    if (e.kids[0].atom != "declare-fun") continue;
    if (!e.kids[2].kids.empty() || !e.kids[2].atom.empty()) continue;
    if (!e.kids[3].is_atom) continue;
    auto s = voc.find_sort(e.kids[3].atom);
    if (!s) continue;
    elems[e.kids[1].atom] = {*s, static_cast<uint32_t>(universe[*s].size())};
    universe[*s].push_back(e.kids[1].atom);
  }
  for (SortId s = 0; s < voc.num_sorts(); ++s) {
    if (universe[s].empty()) {
      std::string name = voc.sort_name(s) + "!val!0";
      elems[name] = {s, 0};
      universe[s].push_back(name);
    }
  }

  std::vector<size_t> sizes;
  for (const auto& u : universe) sizes.push_back(u.size());
  Model m{Structure::empty(vocab_, sizes), Structure::empty(vocab_, sizes), {}};
  m.pre.universe = universe;
  m.post.universe = universe;

  auto elem_of = [&](const std::string& name) -> std::pair<SortId, uint32_t> {
    auto it = elems.find(name);
    if (it == elems.end())
      throw std::runtime_error("unknown universe element: " + name);
    return it->second;
  };

  std::set<ConstId> seen_consts;
  for (size_t k = first; k < root.kids.size(); ++k) {
    const SNode& e = root.kids[k];
    if (e.is_atom || e.kids.size() < 5 || !e.kids[0].is_atom) continue;
    if (e.kids[0].atom != "define-fun") continue;
    const std::string& name = e.kids[1].atom;
    const SNode& params = e.kids[2];
    const SNode& ret = e.kids[3];
    const SNode& body = e.kids[4];

    bool primed = !name.empty() && name.back() == '\'';
    std::string base_name = primed ? name.substr(0, name.size() - 1) : name;

    if (params.kids.empty() && params.atom.empty()) {
      // nullary entries: constants, view witnesses, nullary predicates
      if (ret.is_atom && ret.atom == "Bool") {
        auto r = voc.find_rel(base_name);
        if (!r || !voc.rel(*r).sig.empty()) continue;
        std::map<std::string, std::string> empty_env;
        BodyEval ev{&empty_env};
        if (ev.eval(body)) (primed ? m.post : m.pre).set(*r, {}, true);
        continue;
      }
      if (!body.is_atom) continue;
      auto [s, idx] = elem_of(body.atom);
      if (auto c = voc.find_const(name)) {
        if (voc.constant(*c).sort == s) {
          m.pre.consts[*c] = idx;
          m.post.consts[*c] = idx;
          seen_consts.insert(*c);
        }
        continue;
      }
      if (name.size() > 2 && name.compare(name.size() - 2, 2, "!v") == 0) {
        m.view[name.substr(0, name.size() - 2)] = Element{s, idx};
      }
      continue;
    }

    // relations with arguments
    if (!ret.is_atom || ret.atom != "Bool") continue;
    auto r = voc.find_rel(base_name);
    if (!r) continue;
    const auto& sig = voc.rel(*r).sig;
    if (params.kids.size() != sig.size()) continue;
    std::vector<std::string> pnames;
    for (const SNode& prm : params.kids) {
      if (prm.is_atom || prm.kids.size() != 2) break;
      pnames.push_back(prm.kids[0].atom);
    }
    if (pnames.size() != sig.size()) continue;

    std::map<std::string, std::string> env;
    BodyEval ev{&env};
    std::vector<uint32_t> tup(sig.size(), 0);
    Structure& target = primed ? m.post : m.pre;
    std::function<void(size_t)> walk = [&](size_t d) {
      if (d == sig.size()) {
        if (ev.eval(body)) target.set(*r, tup, true);
        return;
      }
      for (tup[d] = 0; tup[d] < universe[sig[d]].size(); ++tup[d]) {
        env[pnames[d]] = universe[sig[d]][tup[d]];
        walk(d + 1);
      }
    };
    walk(0);
  }

  for (ConstId c = 0; c < voc.num_consts(); ++c) {
    if (!seen_consts.count(c)) {
      m.pre.consts[c] = 0;  // solver left it unconstrained
      m.post.consts[c] = 0;
    }
  }
  return m;
}

}  // namespace pf

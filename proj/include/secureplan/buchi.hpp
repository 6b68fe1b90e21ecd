#pragma once

// Nondeterministic Buchi automata over 2^AP, the tableau translation from
// LTL, and HOA v1 interchange.
//
// Letters are read on transitions: delta(s, a) is the set of targets of the
// edges leaving s whose guard admits a. The first letter of a word is read
// from an initial state.

#include <secureplan/ltl.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace secureplan {

/// Conjunction of literals: admits a iff every pos bit is set and no neg bit.
struct Guard {
  Symbol pos = 0;
  Symbol neg = 0;

  bool admits(Symbol a) const { return (a & pos) == pos && (a & neg) == 0; }
  bool satisfiable() const { return (pos & neg) == 0; }
  auto operator<=>(const Guard&) const = default;
};

struct BuchiEdge {
  Guard guard;
  std::size_t target = 0;
  auto operator<=>(const BuchiEdge&) const = default;
};

struct BuchiAutomaton {
  Alphabet alphabet;
  std::vector<std::vector<BuchiEdge>> edges;  // per state
  std::vector<std::size_t> initial;
  std::vector<bool> accepting;

  std::size_t size() const { return edges.size(); }

  std::vector<std::size_t> successors(std::size_t s, Symbol a) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges.at(s))
      if (e.guard.admits(a)) out.push_back(e.target);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& e : edges) n += e.size();
    return n;
  }

  void validate() const {
    if (accepting.size() != edges.size()) throw StructuralError("acceptance vector size mismatch");
    for (auto s : initial)
      if (s >= size()) throw StructuralError("initial state out of range");
    for (const auto& out : edges)
      for (const auto& e : out) {
        if (e.target >= size()) throw StructuralError("edge target out of range");
        if (((e.guard.pos | e.guard.neg) & ~alphabet.full_mask()) != 0)
          throw StructuralError("guard mentions an atom outside the alphabet");
      }
  }
};

/// State-labelled generalized Buchi automaton from the tableau. Entering
/// node n requires the letter to satisfy n's literal guard.
struct GeneralizedBuchi {
  Alphabet alphabet;
  std::vector<Guard> label;                     // per node
  std::vector<std::vector<std::size_t>> succ;   // node -> nodes
  std::vector<std::size_t> initial;             // nodes entered on the first letter
  std::vector<std::vector<bool>> acceptance;    // one set per Until subformula

  std::size_t size() const { return label.size(); }
};

namespace detail {

// States from which some run reading cycle^omega is accepting. Product
// node (s, i): automaton in s, about to read cycle[i]. A node is good when
// it reaches a nontrivial SCC meeting every acceptance set. With no sets,
// any nontrivial SCC will do.
template <class Step>
std::vector<bool> cycle_acceptors(std::size_t num_states, Step step, const std::vector<std::vector<bool>>& acc_sets,
                                  const std::vector<Symbol>& cycle) {
  if (cycle.empty()) throw StructuralError("lasso cycle must be non-empty");
  const std::size_t len = cycle.size(), total = num_states * len;
  std::vector<std::vector<std::size_t>> adj(total);
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t i = 0; i < len; ++i)
      for (auto t : step(s, cycle[i])) adj[s * len + i].push_back(t * len + (i + 1) % len);

  std::vector<long> index(total, -1), low(total, 0), comp_of(total, -1);
  std::vector<bool> on_stack(total, false), comp_good;
  std::vector<std::size_t> tstack;
  long counter = 0;
  for (std::size_t root = 0; root < total; ++root) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
    index[root] = low[root] = counter++;
    tstack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, k] = call.back();
      if (k < adj[v].size()) {
        const std::size_t w = adj[v][k++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          tstack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        // SCCs complete in reverse topological order: successors first
        const long c = static_cast<long>(comp_good.size());
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = tstack.back();
          tstack.pop_back();
          on_stack[w] = false;
          comp_of[w] = c;
          comp.push_back(w);
        } while (w != v);
        bool self_loop = false;
        for (auto u : comp)
          for (auto x : adj[u]) self_loop = self_loop || x == u;
        bool good = false;
        if (comp.size() > 1 || self_loop) {
          good = true;
          for (const auto& set : acc_sets)
            good = good && std::any_of(comp.begin(), comp.end(), [&](std::size_t u) { return set[u / len]; });
        }
        for (auto u : comp)
          for (auto x : adj[u])
            if (comp_of[x] != c && comp_good[static_cast<std::size_t>(comp_of[x])]) good = true;
        comp_good.push_back(good);
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  std::vector<bool> out(num_states);
  for (std::size_t s = 0; s < num_states; ++s) out[s] = comp_good[static_cast<std::size_t>(comp_of[s * len])];
  return out;
}

}  // namespace detail

/// States reachable from the initial states by reading `word`.
inline std::vector<bool> reach(const BuchiAutomaton& nba, const std::vector<Symbol>& word) {
  std::vector<bool> cur(nba.size(), false);
  for (auto s : nba.initial) cur[s] = true;
  for (Symbol a : word) {
    std::vector<bool> nxt(nba.size(), false);
    for (std::size_t s = 0; s < nba.size(); ++s)
      if (cur[s])
        for (const auto& e : nba.edges[s])
          if (e.guard.admits(a)) nxt[e.target] = true;
    cur = std::move(nxt);
  }
  return cur;
}

/// States from which cycle^omega has an accepting run.
inline std::vector<bool> cycle_acceptors(const BuchiAutomaton& nba, const std::vector<Symbol>& cycle) {
  return detail::cycle_acceptors(
      nba.size(), [&](std::size_t s, Symbol a) { return nba.successors(s, a); }, {nba.accepting}, cycle);
}

inline bool accepts_lasso(const BuchiAutomaton& nba, const std::vector<Symbol>& prefix,
                          const std::vector<Symbol>& cycle) {
  const auto from = reach(nba, prefix);
  const auto good = cycle_acceptors(nba, cycle);
  for (std::size_t s = 0; s < nba.size(); ++s)
    if (from[s] && good[s]) return true;
  return false;
}

inline bool accepts_lasso(const GeneralizedBuchi& gba, const std::vector<Symbol>& prefix,
                          const std::vector<Symbol>& cycle) {
  // State gba.size() is a virtual start entering the initial nodes.
  const std::size_t start = gba.size();
  auto step = [&](std::size_t s, Symbol a) {
    std::vector<std::size_t> out;
    const auto& cand = s == start ? gba.initial : gba.succ[s];
    for (auto t : cand)
      if (gba.label[t].admits(a)) out.push_back(t);
    return out;
  };
  std::vector<std::vector<bool>> sets;
  for (auto set : gba.acceptance) {
    set.push_back(false);
    sets.push_back(std::move(set));
  }
  std::vector<bool> cur(gba.size() + 1, false);
  cur[start] = true;
  for (Symbol a : prefix) {
    std::vector<bool> nxt(cur.size(), false);
    for (std::size_t s = 0; s < cur.size(); ++s)
      if (cur[s])
        for (auto t : step(s, a)) nxt[t] = true;
    cur = std::move(nxt);
  }
  const auto good = detail::cycle_acceptors(gba.size() + 1, step, sets, cycle);
  for (std::size_t s = 0; s < cur.size(); ++s)
    if (cur[s] && good[s]) return true;
  return false;
}

namespace detail {

// Hash-consed NNF subformulas with F a == true U a and G a == false R a.
class FormulaTable {
 public:
  struct Entry {
    ltl::Op op;
    std::size_t atom = 0;
    int lhs = -1, rhs = -1;
    auto operator<=>(const Entry&) const = default;
  };

  int intern(const ltl::Formula& f) {
    using ltl::Op;
    Entry e{f->op, 0, -1, -1};
    switch (f->op) {
      case Op::Atom: e.atom = f->atom; break;
      case Op::Not:
        if (f->lhs->op != Op::Atom) throw StructuralError("tableau input must be in negation normal form");
        e.atom = f->lhs->atom;
        break;
      case Op::Eventually:
        e = {Op::Until, 0, intern(ltl::top()), intern(f->lhs)};
        break;
      case Op::Globally:
        e = {Op::Release, 0, intern(ltl::bottom()), intern(f->lhs)};
        break;
      case Op::Implies:
      case Op::Equiv: throw StructuralError("tableau input must be in negation normal form");
      default:
        if (f->lhs) e.lhs = intern(f->lhs);
        if (f->rhs) e.rhs = intern(f->rhs);
    }
    auto [it, inserted] = ids_.emplace(e, static_cast<int>(entries_.size()));
    if (inserted) entries_.push_back(e);
    return it->second;
  }

  const Entry& at(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Entry, int> ids_;
  std::vector<Entry> entries_;
};

class Tableau {
 public:
  explicit Tableau(FormulaTable& table) : table_(table) {}

  struct Node {
    std::set<int> incoming;  // -1 is the virtual init
    std::set<int> old_set, next_set;
  };

  std::vector<Node> build(int root) {
    expand({-1}, {root}, {}, {});
    return std::move(nodes_);
  }

 private:
  bool contradicts(const std::set<int>& old_set, int f) const {
    using ltl::Op;
    const auto& e = table_.at(f);
    if (e.op == Op::False) return true;
    for (int g : old_set) {
      const auto& o = table_.at(g);
      if (e.op == Op::Atom && o.op == Op::Not && o.atom == e.atom) return true;
      if (e.op == Op::Not && o.op == Op::Atom && o.atom == e.atom) return true;
    }
    return false;
  }

  void expand(std::set<int> incoming, std::set<int> todo, std::set<int> old_set, std::set<int> next_set) {
    using ltl::Op;
    while (!todo.empty()) {
      const int f = *todo.begin();
      todo.erase(todo.begin());
      if (old_set.count(f)) continue;
      const auto& e = table_.at(f);
      switch (e.op) {
        case Op::True:
        case Op::False:
        case Op::Atom:
        case Op::Not:
          if (contradicts(old_set, f)) return;
          old_set.insert(f);
          continue;
        case Op::And:
          old_set.insert(f);
          if (!old_set.count(e.lhs)) todo.insert(e.lhs);
          if (!old_set.count(e.rhs)) todo.insert(e.rhs);
          continue;
        case Op::Next:
          old_set.insert(f);
          next_set.insert(e.lhs);
          continue;
        case Op::Or:
        case Op::Until:
        case Op::Release: {
          // branch 1 / branch 2 per GPVW
          std::set<int> new1, next1, new2;
          if (e.op == Op::Or) {
            new1 = {e.lhs};
            new2 = {e.rhs};
          } else if (e.op == Op::Until) {
            new1 = {e.lhs};
            next1 = {f};
            new2 = {e.rhs};
          } else {
            new1 = {e.rhs};
            next1 = {f};
            new2 = {e.lhs, e.rhs};
          }
          old_set.insert(f);
          auto todo1 = todo, todo2 = todo;
          for (int g : new1)
            if (!old_set.count(g)) todo1.insert(g);
          for (int g : new2)
            if (!old_set.count(g)) todo2.insert(g);
          auto nx1 = next_set;
          nx1.insert(next1.begin(), next1.end());
          expand(incoming, std::move(todo1), old_set, std::move(nx1));
          expand(std::move(incoming), std::move(todo2), std::move(old_set), std::move(next_set));
          return;
        }
        default: throw StructuralError("unexpected operator in tableau");
      }
    }
    for (auto& n : nodes_) {
      if (n.old_set == old_set && n.next_set == next_set) {
        n.incoming.insert(incoming.begin(), incoming.end());
        return;
      }
    }
    const int me = static_cast<int>(nodes_.size());
    nodes_.push_back({std::move(incoming), old_set, next_set});
    expand({me}, std::move(next_set), {}, {});
  }

  FormulaTable& table_;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Generalized Buchi automaton of an NNF formula (GPVW tableau): one node
/// per (Old, Next) pair, one acceptance set per Until subformula a U b,
/// holding nodes with b in Old or a U b not in Old.
inline GeneralizedBuchi tableau(const ltl::Formula& nnf, const Alphabet& ap) {
  detail::FormulaTable table;
  const int root = table.intern(nnf);
  auto nodes = detail::Tableau(table).build(root);

  GeneralizedBuchi gba;
  gba.alphabet = ap;
  gba.succ.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Guard g;
    for (int f : nodes[i].old_set) {
      const auto& e = table.at(f);
      if (e.op == ltl::Op::Atom) g.pos |= Symbol{1} << e.atom;
      if (e.op == ltl::Op::Not) g.neg |= Symbol{1} << e.atom;
    }
    gba.label.push_back(g);
    for (int src : nodes[i].incoming) {
      if (src < 0)
        gba.initial.push_back(i);
      else
        gba.succ[static_cast<std::size_t>(src)].push_back(i);
    }
  }
  for (std::size_t f = 0; f < table.size(); ++f) {
    const auto& e = table.at(static_cast<int>(f));
    if (e.op != ltl::Op::Until) continue;
    std::vector<bool> set(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      set[i] = nodes[i].old_set.count(e.rhs) || !nodes[i].old_set.count(static_cast<int>(f));
    gba.acceptance.push_back(std::move(set));
  }
  return gba;
}

/// Counter degeneralization. State 0 is a fresh initial state; state
/// (n, i) for node n and counter i in [0, k). The counter moves from i to
/// i+1 mod k when leaving a node of set i; (n, 0) with n in set 0 accepts.
inline BuchiAutomaton degeneralize(const GeneralizedBuchi& gba) {
  const std::size_t k = std::max<std::size_t>(1, gba.acceptance.size());
  auto in_set = [&](std::size_t n, std::size_t i) { return gba.acceptance.empty() || gba.acceptance[i][n]; };
  BuchiAutomaton nba;
  nba.alphabet = gba.alphabet;
  const std::size_t total = 1 + gba.size() * k;
  nba.edges.resize(total);
  nba.accepting.assign(total, false);
  nba.initial = {0};
  auto id = [&](std::size_t n, std::size_t i) { return 1 + n * k + i; };
  for (std::size_t n : gba.initial) nba.edges[0].push_back({gba.label[n], id(n, 0)});
  for (std::size_t n = 0; n < gba.size(); ++n) {
    for (std::size_t i = 0; i < k; ++i) {
      nba.accepting[id(n, i)] = i == 0 && in_set(n, 0);
      const std::size_t j = in_set(n, i) ? (i + 1) % k : i;
      for (std::size_t t : gba.succ[n]) nba.edges[id(n, i)].push_back({gba.label[t], id(t, j)});
    }
  }
  return nba;
}

/// Drops unsatisfiable edges and unreachable states, renumbering in BFS
/// order from the initial states.
inline BuchiAutomaton prune_unreachable(const BuchiAutomaton& in) {
  std::vector<long> remap(in.size(), -1);
  std::vector<std::size_t> order;
  for (auto s : in.initial)
    if (remap[s] < 0) {
      remap[s] = static_cast<long>(order.size());
      order.push_back(s);
    }
  for (std::size_t h = 0; h < order.size(); ++h)
    for (const auto& e : in.edges[order[h]])
      if (e.guard.satisfiable() && remap[e.target] < 0) {
        remap[e.target] = static_cast<long>(order.size());
        order.push_back(e.target);
      }
  BuchiAutomaton out;
  out.alphabet = in.alphabet;
  out.edges.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.accepting.push_back(in.accepting[order[i]]);
    for (const auto& e : in.edges[order[i]])
      if (e.guard.satisfiable()) out.edges[i].push_back({e.guard, static_cast<std::size_t>(remap[e.target])});
    std::sort(out.edges[i].begin(), out.edges[i].end());
    out.edges[i].erase(std::unique(out.edges[i].begin(), out.edges[i].end()), out.edges[i].end());
  }
  for (auto s : in.initial) out.initial.push_back(static_cast<std::size_t>(remap[s]));
  std::sort(out.initial.begin(), out.initial.end());
  out.initial.erase(std::unique(out.initial.begin(), out.initial.end()), out.initial.end());
  return out;
}

/// Merges states with equal acceptance and equal (guard, target-class)
/// edge sets, refining from the accepting/non-accepting split until stable.
inline BuchiAutomaton merge_equivalent(const BuchiAutomaton& in) {
  const std::size_t n = in.size();
  std::vector<std::size_t> cls(n);
  for (std::size_t s = 0; s < n; ++s) cls[s] = in.accepting[s] ? 1 : 0;
  for (;;) {
    std::map<std::pair<std::size_t, std::set<std::pair<Guard, std::size_t>>>, std::size_t> sig_ids;
    std::vector<std::size_t> next(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::set<std::pair<Guard, std::size_t>> sig;
      for (const auto& e : in.edges[s]) sig.insert({e.guard, cls[e.target]});
      auto key = std::make_pair(cls[s], std::move(sig));
      auto it = sig_ids.find(key);
      if (it == sig_ids.end()) it = sig_ids.emplace(std::move(key), sig_ids.size()).first;
      next[s] = it->second;
    }
    const std::size_t before = std::set<std::size_t>(cls.begin(), cls.end()).size();
    cls = std::move(next);
    if (sig_ids.size() == before) break;
  }
  // number classes by first occurrence so the result is canonical
  std::map<std::size_t, std::size_t> renum;
  for (std::size_t s = 0; s < n; ++s) renum.emplace(cls[s], renum.size());
  BuchiAutomaton out;
  out.alphabet = in.alphabet;
  out.edges.resize(renum.size());
  out.accepting.assign(renum.size(), false);
  std::vector<bool> filled(renum.size(), false);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t c = renum[cls[s]];
    if (filled[c]) continue;
    filled[c] = true;
    out.accepting[c] = in.accepting[s];
    for (const auto& e : in.edges[s]) out.edges[c].push_back({e.guard, renum[cls[e.target]]});
    std::sort(out.edges[c].begin(), out.edges[c].end());
    out.edges[c].erase(std::unique(out.edges[c].begin(), out.edges[c].end()), out.edges[c].end());
  }
  for (auto s : in.initial) out.initial.push_back(renum[cls[s]]);
  std::sort(out.initial.begin(), out.initial.end());
  out.initial.erase(std::unique(out.initial.begin(), out.initial.end()), out.initial.end());
  return out;
}

/// States outside all cycles of the edge graph. Any run visits such a
/// state at most once, so its acceptance flag does not affect the language.
inline std::vector<bool> transient_states(const BuchiAutomaton& nba) {
  const std::size_t n = nba.size();
  std::vector<bool> out(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack;
    for (const auto& e : nba.edges[s])
      if (!seen[e.target]) {
        seen[e.target] = true;
        stack.push_back(e.target);
      }
    while (!stack.empty() && !seen[s]) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& e : nba.edges[u])
        if (!seen[e.target]) {
          seen[e.target] = true;
          stack.push_back(e.target);
        }
    }
    out[s] = !seen[s];
  }
  return out;
}

/// Full translation: NNF, tableau, degeneralization, pruning, merging.
/// Acceptance flags of transient states are chosen to maximize merging:
/// greedy single-state flips starting from all-false and from all-true.
inline BuchiAutomaton ltl_to_nba(const ltl::Formula& f, const Alphabet& ap) {
  const auto nnf = ltl::is_nnf(f) ? f : ltl::to_nnf(f);
  const auto base = prune_unreachable(degeneralize(tableau(nnf, ap)));
  const auto transient = transient_states(base);
  std::optional<BuchiAutomaton> best;
  for (bool start : {false, true}) {
    auto work = base;
    for (std::size_t s = 0; s < work.size(); ++s)
      if (transient[s]) work.accepting[s] = start;
    auto local = prune_unreachable(merge_equivalent(work));
    for (std::size_t s = 0; s < work.size(); ++s) {
      if (!transient[s]) continue;
      work.accepting[s] = !start;
      auto trial = prune_unreachable(merge_equivalent(work));
      if (trial.size() < local.size())
        local = std::move(trial);
      else
        work.accepting[s] = start;
    }
    if (!best || local.size() < best->size()) best = std::move(local);
  }
  return *best;
}

// ---------------------------------------------------------------------------
// HOA v1

namespace detail {

inline std::string hoa_guard(const Guard& g, std::size_t num_ap) {
  std::string out;
  for (std::size_t i = 0; i < num_ap; ++i) {
    const bool p = g.pos >> i & 1u, q = g.neg >> i & 1u;
    if (!p && !q) continue;
    if (!out.empty()) out += "&";
    out += (q ? "!" : "") + std::to_string(i);
  }
  return out.empty() ? "t" : out;
}

inline std::string hoa_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class HoaLexer {
 public:
  explicit HoaLexer(std::string_view text) : text_(text) {}

  struct Token {
    enum Kind { Header, Ident, Int, String, Punct, End } kind;
    std::string text;
    std::size_t pos;
  };

  Token peek() {
    const auto save = pos_;
    auto t = next();
    pos_ = save;
    return t;
  }

  Token next() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (text_.substr(pos_, 2) == "/*") {
        const auto end = text_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) throw ParseError("unterminated comment", pos_);
        pos_ = end + 2;
        continue;
      }
      break;
    }
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) return {Token::End, "", start};
    const char c = text_[pos_];
    if (c == '"') {
      std::string s;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        s += text_[pos_++];
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated string", start);
      ++pos_;
      return {Token::String, s, start};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return {Token::Int, std::string(text_.substr(start, pos_ - start)), start};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '@') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '-' ||
              text_[pos_] == '@'))
        ++pos_;
      if (pos_ < text_.size() && text_[pos_] == ':') {
        ++pos_;
        return {Token::Header, std::string(text_.substr(start, pos_ - start)), start};
      }
      return {Token::Ident, std::string(text_.substr(start, pos_ - start)), start};
    }
    if (text_.substr(pos_, 2) == "--") {
      const auto end = text_.find("--", pos_ + 2);
      if (end == std::string_view::npos) throw ParseError("malformed '--' marker", start);
      pos_ = end + 2;
      return {Token::Punct, std::string(text_.substr(start, pos_ - start)), start};
    }
    ++pos_;
    return {Token::Punct, std::string(1, c), start};
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

// Label expression -> DNF over AP indices.
class HoaLabelParser {
 public:
  HoaLabelParser(HoaLexer& lex, std::size_t num_ap) : lex_(lex), num_ap_(num_ap) {}

  std::vector<Guard> parse() { return disj(); }

 private:
  std::vector<Guard> disj() {
    auto out = conj();
    while (lex_.peek().text == "|") {
      lex_.next();
      auto rhs = conj();
      out.insert(out.end(), rhs.begin(), rhs.end());
    }
    return out;
  }

  std::vector<Guard> conj() {
    auto out = atom();
    while (lex_.peek().text == "&") {
      lex_.next();
      auto rhs = atom();
      std::vector<Guard> prod;
      for (const auto& a : out)
        for (const auto& b : rhs) {
          Guard g{a.pos | b.pos, a.neg | b.neg};
          if (g.satisfiable()) prod.push_back(g);
        }
      out = std::move(prod);
    }
    return out;
  }

  std::vector<Guard> atom() {
    auto t = lex_.next();
    if (t.text == "t") return {Guard{}};
    if (t.text == "f") return {};
    if (t.text == "(") {
      auto inner = disj();
      if (lex_.next().text != ")") throw ParseError("expected ')' in label", t.pos);
      return inner;
    }
    if (t.text == "!") {
      auto inner = atom();
      // negation of a DNF: conjunction of negated cubes
      std::vector<Guard> out{Guard{}};
      for (const auto& cube : inner) {
        std::vector<Guard> alts;
        for (std::size_t i = 0; i < num_ap_; ++i) {
          if (cube.pos >> i & 1u) alts.push_back({0, Symbol{1} << i});
          if (cube.neg >> i & 1u) alts.push_back({Symbol{1} << i, 0});
        }
        std::vector<Guard> prod;
        for (const auto& a : out)
          for (const auto& b : alts) {
            Guard g{a.pos | b.pos, a.neg | b.neg};
            if (g.satisfiable()) prod.push_back(g);
          }
        out = std::move(prod);
      }
      return out;
    }
    if (t.kind == Token::Int) {
      const auto i = std::stoul(t.text);
      if (i >= num_ap_) throw ParseError("AP index " + t.text + " out of range", t.pos);
      return {Guard{Symbol{1} << i, 0}};
    }
    if (t.text == "@") throw UnsupportedFeature("HOA label aliases are not supported");
    throw ParseError("unexpected '" + t.text + "' in label", t.pos);
  }

  using Token = HoaLexer::Token;
  HoaLexer& lex_;
  std::size_t num_ap_;
};

}  // namespace detail

inline std::string to_hoa(const BuchiAutomaton& nba, const std::string& name = "") {
  std::ostringstream os;
  os << "HOA: v1\n";
  if (!name.empty()) os << "name: " << detail::hoa_quote(name) << "\n";
  os << "States: " << nba.size() << "\n";
  for (auto s : nba.initial) os << "Start: " << s << "\n";
  os << "AP: " << nba.alphabet.size();
  for (const auto& a : nba.alphabet.names()) os << " " << detail::hoa_quote(a);
  os << "\nacc-name: Buchi\nAcceptance: 1 Inf(0)\nproperties: trans-labels explicit-labels state-acc\n--BODY--\n";
  for (std::size_t s = 0; s < nba.size(); ++s) {
    os << "State: " << s << (nba.accepting[s] ? " {0}" : "") << "\n";
    for (const auto& e : nba.edges[s]) os << "[" << detail::hoa_guard(e.guard, nba.alphabet.size()) << "] " << e.target << "\n";
  }
  os << "--END--\n";
  return os.str();
}

/// Reads a state-based Buchi automaton ("Acceptance: 1 Inf(0)") with explicit
/// transition labels. Other acceptance conditions, alternation, implicit
/// labels and transition-based marks raise UnsupportedFeature.
inline BuchiAutomaton from_hoa(std::string_view text) {
  using Token = detail::HoaLexer::Token;
  detail::HoaLexer lex(text);
  auto t = lex.next();
  if (t.kind != Token::Header || t.text != "HOA:") throw ParseError("expected 'HOA:'", t.pos);
  if (lex.next().text != "v1") throw UnsupportedFeature("only HOA v1 is supported");

  BuchiAutomaton nba;
  std::optional<std::size_t> states;
  bool have_acceptance = false;
  for (;;) {
    t = lex.next();
    if (t.kind == Token::Punct && t.text == "--BODY--") break;
    if (t.kind == Token::End) throw ParseError("missing --BODY--", t.pos);
    if (t.kind != Token::Header) throw ParseError("expected header item", t.pos);
    if (t.text == "States:") {
      states = std::stoul(lex.next().text);
    } else if (t.text == "Start:") {
      nba.initial.push_back(std::stoul(lex.next().text));
      if (lex.peek().text == "&") throw UnsupportedFeature("alternating initial states are not supported");
    } else if (t.text == "AP:") {
      const auto count = std::stoul(lex.next().text);
      for (std::size_t i = 0; i < count; ++i) {
        auto a = lex.next();
        if (a.kind != Token::String) throw ParseError("expected AP name", a.pos);
        if (nba.alphabet.index(a.text)) throw ParseError("duplicate AP '" + a.text + "'", a.pos);
        nba.alphabet.add(a.text);
      }
    } else if (t.text == "Acceptance:") {
      std::string cond;
      const auto first = lex.next();
      for (auto p = lex.peek(); p.kind != Token::Header && p.kind != Token::End && p.text != "--BODY--";
           p = lex.peek())
        cond += lex.next().text;
      if (first.text != "1" || cond != "Inf(0)")
        throw UnsupportedFeature("unsupported acceptance condition '" + first.text + " " + cond + "'");
      have_acceptance = true;
    } else {
      // name:, acc-name:, tool:, properties:, Alias:, ... skip their values
      while (lex.peek().kind != Token::Header && lex.peek().text != "--BODY--" && lex.peek().kind != Token::End)
        lex.next();
      if (t.text == "Alias:") throw UnsupportedFeature("HOA aliases are not supported");
    }
  }
  if (!states) throw ParseError("missing States: header", 0);
  if (!have_acceptance) throw ParseError("missing Acceptance: header", 0);
  nba.edges.resize(*states);
  nba.accepting.assign(*states, false);

  std::optional<std::size_t> current;
  for (;;) {
    t = lex.next();
    if (t.kind == Token::Punct && t.text == "--END--") break;
    if (t.kind == Token::End) throw ParseError("missing --END--", t.pos);
    if (t.kind == Token::Header && t.text == "State:") {
      if (lex.peek().text == "[") throw UnsupportedFeature("state labels are not supported");
      current = std::stoul(lex.next().text);
      if (*current >= *states) throw ParseError("state id out of range", t.pos);
      if (lex.peek().kind == Token::String) lex.next();
      if (lex.peek().text == "{") {
        lex.next();
        for (auto a = lex.next(); a.text != "}"; a = lex.next()) {
          if (a.text != "0") throw UnsupportedFeature("acceptance set " + a.text + " not supported");
          nba.accepting[*current] = true;
        }
      }
      continue;
    }
    if (!current) throw ParseError("edge before any State:", t.pos);
    if (t.text != "[") throw UnsupportedFeature("implicit edge labels are not supported");
    auto cubes = detail::HoaLabelParser(lex, nba.alphabet.size()).parse();
    if (lex.next().text != "]") throw ParseError("expected ']'", t.pos);
    auto target = lex.next();
    if (target.kind != Token::Int) throw ParseError("expected target state", target.pos);
    if (lex.peek().text == "&") throw UnsupportedFeature("universal branching is not supported");
    if (lex.peek().text == "{") throw UnsupportedFeature("transition-based acceptance marks are not supported");
    const std::size_t to = std::stoul(target.text);
    if (to >= *states) throw ParseError("edge target out of range", target.pos);
    for (const auto& g : cubes) nba.edges[*current].push_back({g, to});
  }
  nba.validate();
  return nba;
}

/// Re-expresses the automaton's guards over another alphabet; every atom
/// of the automaton must exist there.
inline BuchiAutomaton with_alphabet(const BuchiAutomaton& nba, const Alphabet& target) {
  std::vector<Symbol> bit(nba.alphabet.size());
  for (std::size_t i = 0; i < nba.alphabet.size(); ++i) bit[i] = target.bit(nba.alphabet.name(i));
  auto map = [&](Symbol s) {
    Symbol out = 0;
    for (std::size_t i = 0; i < bit.size(); ++i)
      if (s >> i & 1u) out |= bit[i];
    return out;
  };
  BuchiAutomaton out = nba;
  out.alphabet = target;
  for (auto& es : out.edges)
    for (auto& e : es) e.guard = {map(e.guard.pos), map(e.guard.neg)};
  return out;
}

}  // namespace secureplan

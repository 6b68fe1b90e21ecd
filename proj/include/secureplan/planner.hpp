#pragma once

// Product of a (secure, pruned) transition system with a Buchi automaton, the
// prefix-suffix search over it, and trajectory assembly from cached segments.

#include <secureplan/buchi.hpp>
#include <secureplan/feasibility.hpp>
#include <secureplan/transition_system.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace secureplan {

/// States are (system state, automaton state) pairs in lexicographic order.
struct ProductAutomaton {
  std::vector<std::pair<std::size_t, std::size_t>> states;
  std::vector<std::vector<Transition>> succ;
  std::vector<std::size_t> initial;
  std::vector<bool> accepting;

  std::size_t size() const { return states.size(); }
  std::size_t num_transitions() const {
    std::size_t n = 0;
    for (const auto& s : succ) n += s.size();
    return n;
  }
  std::optional<std::size_t> find(std::size_t sys, std::size_t nba) const {
    auto it = std::lower_bound(states.begin(), states.end(), std::make_pair(sys, nba));
    if (it == states.end() || *it != std::make_pair(sys, nba)) return std::nullopt;
    return static_cast<std::size_t>(it - states.begin());
  }
};

/// Reachable product. A product state (x, s) means the automaton is in s after
/// reading the labels up to and including x's, so the initial states read
/// the label of an initial system state from an initial automaton state.
inline ProductAutomaton build_pba(const TransitionSystem& sys, const BuchiAutomaton& nba) {
  const Symbol known = nba.alphabet.full_mask();
  for (std::size_t x = 0; x < sys.size(); ++x)
    if (sys.label(x) & ~known)
      throw ConfigError("state label has an atom missing from the automaton alphabet");

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  std::vector<std::pair<std::size_t, std::size_t>> order;
  std::vector<std::size_t> init;
  auto visit = [&](std::size_t x, std::size_t s) {
    auto [it, inserted] = seen.emplace(std::make_pair(x, s), order.size());
    if (inserted) order.emplace_back(x, s);
    return it->second;
  };
  for (auto x : sys.initial())
    for (auto s0 : nba.initial)
      for (auto s : nba.successors(s0, sys.label(x))) init.push_back(visit(x, s));
  std::vector<std::vector<Transition>> raw;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto [x, s] = order[i];
    std::vector<Transition> out;
    for (const auto& t : sys.successors(x))
      for (auto s2 : nba.successors(s, sys.label(t.target))) out.push_back({visit(t.target, s2), t.weight});
    raw.push_back(std::move(out));
  }

  // renumber lexicographically
  std::vector<std::size_t> rank(order.size());
  ProductAutomaton pba;
  pba.states.reserve(order.size());
  for (const auto& [key, id] : seen) {
    rank[id] = pba.states.size();
    pba.states.push_back(key);
  }
  pba.succ.resize(order.size());
  pba.accepting.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& out = pba.succ[rank[i]];
    for (const auto& t : raw[i]) out.push_back({rank[t.target], t.weight});
    std::sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) { return a.target < b.target; });
    pba.accepting[rank[i]] = nba.accepting[order[i].second];
  }
  for (auto i : init) pba.initial.push_back(rank[i]);
  std::sort(pba.initial.begin(), pba.initial.end());
  pba.initial.erase(std::unique(pba.initial.begin(), pba.initial.end()), pba.initial.end());
  return pba;
}

/// prefix ends just before the accepting state suffix.front(); the suffix
/// closes with the edge suffix.back() -> suffix.front().
struct PrefixSuffixPlan {
  std::vector<std::size_t> prefix, suffix;  // product states
  double J_prefix = 0.0, J_suffix = 0.0, J = 0.0, beta = 0.5;
};

namespace detail {

struct ShortestPaths {
  std::vector<double> dist;
  std::vector<long> parent;
  std::vector<bool> settled;
};

// Dijkstra from weighted sources, ties on (distance, state id). Stops after
// popping `stop` or when the next distance exceeds `limit`.
inline ShortestPaths dijkstra(const ProductAutomaton& g, const std::vector<std::pair<std::size_t, double>>& sources,
                              std::optional<std::size_t> stop = std::nullopt,
                              double limit = std::numeric_limits<double>::infinity()) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ShortestPaths sp{std::vector<double>(g.size(), inf), std::vector<long>(g.size(), -1),
                   std::vector<bool>(g.size(), false)};
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (const auto& [s, d] : sources)
    if (d < sp.dist[s]) {
      sp.dist[s] = d;
      pq.emplace(d, s);
    }
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (sp.settled[v] || d > sp.dist[v]) continue;
    if (d > limit) break;
    sp.settled[v] = true;
    if (stop && v == *stop) break;
    for (const auto& t : g.succ[v]) {
      const double nd = d + t.weight;
      if (nd < sp.dist[t.target]) {
        sp.dist[t.target] = nd;
        sp.parent[t.target] = static_cast<long>(v);
        pq.emplace(nd, t.target);
      }
    }
  }
  return sp;
}

inline std::vector<std::size_t> trace(const ShortestPaths& sp, std::size_t v) {
  std::vector<std::size_t> path{v};
  while (sp.parent[path.back()] >= 0) path.push_back(static_cast<std::size_t>(sp.parent[path.back()]));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Minimizes J = beta J_prefix + (1 - beta) J_suffix over accepting states;
/// ties go to the smaller J_prefix, then the smaller accepting state.
inline std::optional<PrefixSuffixPlan> search_prefix_suffix(const ProductAutomaton& g, double beta = 0.5) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  std::vector<std::pair<std::size_t, double>> roots;
  for (auto s : g.initial) roots.emplace_back(s, 0.0);
  const auto pre = detail::dijkstra(g, roots);

  std::optional<PrefixSuffixPlan> best;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (!g.accepting[a] || !std::isfinite(pre.dist[a])) continue;
    const double jp = pre.dist[a];
    double limit = std::numeric_limits<double>::infinity();
    if (best) {
      if (beta * jp > best->J) continue;
      if (beta < 1.0) limit = (best->J - beta * jp) / (1.0 - beta) * (1.0 + 1e-12);
    }
    std::vector<std::pair<std::size_t, double>> first;
    for (const auto& t : g.succ[a]) first.emplace_back(t.target, t.weight);
    const auto suf = detail::dijkstra(g, first, a, limit);
    if (!suf.settled[a]) continue;
    const double js = suf.dist[a];
    const double j = beta * jp + (1.0 - beta) * js;
    if (best && std::make_pair(j, jp) >= std::make_pair(best->J, best->J_prefix)) continue;

    PrefixSuffixPlan plan;
    plan.beta = beta;
    plan.J_prefix = jp;
    plan.J_suffix = js;
    plan.J = j;
    plan.prefix = detail::trace(pre, a);
    plan.prefix.pop_back();
    // the cycle a -> v ... -> a, with the first hop carried by the sources
    std::vector<std::size_t> back = detail::trace(suf, a);
    plan.suffix.push_back(a);
    plan.suffix.insert(plan.suffix.end(), back.begin(), back.end() - 1);
    best = std::move(plan);
  }
  return best;
}

/// Edge weight in the product, or nullopt.
inline std::optional<double> pba_weight(const ProductAutomaton& g, std::size_t a, std::size_t b) {
  for (const auto& t : g.succ.at(a))
    if (t.target == b) return t.weight;
  return std::nullopt;
}

/// System states of a run of product states.
inline std::vector<std::size_t> system_states(const ProductAutomaton& g, const std::vector<std::size_t>& run) {
  std::vector<std::size_t> out;
  for (auto s : run) out.push_back(g.states.at(s).first);
  return out;
}

/// Letters of the plan's lasso trace (prefix, then suffix).
inline std::pair<std::vector<Symbol>, std::vector<Symbol>> plan_trace(const ProductAutomaton& g,
                                                                      const TransitionSystem& sys,
                                                                      const PrefixSuffixPlan& plan) {
  std::pair<std::vector<Symbol>, std::vector<Symbol>> out;
  for (auto x : system_states(g, plan.prefix)) out.first.push_back(sys.label(x));
  for (auto x : system_states(g, plan.suffix)) out.second.push_back(sys.label(x));
  return out;
}

/// Concatenated per-role samples along prefix, suffix^repeats and the closing
/// transition back to the first suffix state.
struct TrajectoryBundle {
  double dt = 0.0;
  int steps = 0;                    // samples per transition
  std::vector<std::size_t> states;  // system states, one more than transitions
  std::size_t prefix_transitions = 0;
  std::vector<Matrix> x;  // per role, n x (steps * transitions + 1)
  std::vector<Matrix> u;  // per role, m x (steps * transitions)
  double objective = 0.0;

  std::size_t transitions() const { return states.empty() ? 0 : states.size() - 1; }
  double duration() const { return dt * steps * static_cast<double>(transitions()); }
};

inline TrajectoryBundle assemble_trajectory(const ProductAutomaton& g, const TransitionSystem& sys,
                                            const PrefixSuffixPlan& plan, const SegmentCache& cache,
                                            const Team& team, const FeasibilityParams& par,
                                            int suffix_repeats = 2) {
  if (suffix_repeats < 1) throw ConfigError("suffix_repeats must be at least 1");
  if (plan.suffix.empty()) throw ConsistencyError("plan has an empty suffix");
  TrajectoryBundle b;
  b.dt = par.dt();
  b.steps = par.N;
  b.states = system_states(g, plan.prefix);
  b.prefix_transitions = b.states.size();
  const auto cycle = system_states(g, plan.suffix);
  for (int r = 0; r < suffix_repeats; ++r) b.states.insert(b.states.end(), cycle.begin(), cycle.end());
  b.states.push_back(cycle.front());

  const std::size_t roles = sys.width();
  const Eigen::Index T = static_cast<Eigen::Index>(b.transitions());
  for (std::size_t r = 0; r < roles; ++r) {
    const auto& ag = team.agent(r % team.num_agents());
    b.x.emplace_back(ag.state_dim(), T * par.N + 1);
    b.u.emplace_back(ag.input_dim(), T * par.N);
  }
  for (Eigen::Index k = 0; k < T; ++k) {
    const auto from = b.states[static_cast<std::size_t>(k)], to = b.states[static_cast<std::size_t>(k) + 1];
    if (!sys.has_transition(from, to)) throw ConsistencyError("plan step is not a system transition");
    const auto seg = cache.segment(transition_roles(sys.tuple(from), sys.tuple(to), team.num_agents()), par);
    if (!seg) throw ConsistencyError("plan transition has no cached segment");
    b.objective += seg->objective;
    for (std::size_t r = 0; r < roles; ++r) {
      const auto& piece = seg->roles[r];
      if (k > 0 && (b.x[r].col(k * par.N) - piece.x.col(0)).cwiseAbs().maxCoeff() > 1e-5)
        throw ConsistencyError("segments do not join");
      b.x[r].middleCols(k * par.N, par.N + 1) = piece.x;
      b.u[r].middleCols(k * par.N, par.N) = piece.u;
    }
  }
  return b;
}

}  // namespace secureplan

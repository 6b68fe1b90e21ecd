#pragma once

// Agent models and the transition-system abstractions built from a
// partition: per-agent WTS, the synchronous global product (gWTS), and the
// security restrictions (Type-B gWTS, Twin-gWTS, Secure Twin-gWTS).
//
// Labels are flattened: atom `a` of agent i (1-based) becomes `a_i`, so the
// global label of a tuple is a plain atom set.

#include <secureplan/geometry.hpp>
#include <secureplan/ltl.hpp>
#include <secureplan/transition_system.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace secureplan {

struct AgentModel {
  std::string name;
  Matrix A, B;
  Vector b;
  HPolytope input_set;
  std::vector<RegionId> initial;
  std::vector<bool> secret;                      // per region
  std::vector<std::string> observation;          // per region
  std::vector<std::vector<std::string>> labels;  // per region, unsuffixed atoms

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  bool is_secret(RegionId q) const { return secret.at(q); }
};

inline std::string agent_atom(const std::string& atom, std::size_t agent) {
  return atom + "_" + std::to_string(agent + 1);
}

/// Per-agent observation ids and secret flags, indexed by region. Observation
/// ids are shared across agents so they can be compared between agents.
struct SecurityModel {
  std::vector<std::vector<int>> observation;
  std::vector<std::vector<bool>> secret;

  std::size_t num_agents() const { return observation.size(); }
  int obs(std::size_t agent, RegionId q) const { return observation.at(agent).at(q); }
  bool is_secret(std::size_t agent, RegionId q) const { return secret.at(agent).at(q); }

  std::vector<int> obs(const Tuple& global) const {
    std::vector<int> y(global.size());
    for (std::size_t i = 0; i < global.size(); ++i) y[i] = obs(i, global[i]);
    return y;
  }
};

/// Partition plus agents, with the atom registry and interned observations.
class Team {
 public:
  Team(Partition partition, std::vector<AgentModel> agents, const std::vector<std::string>& extra_atoms = {})
      : partition_(std::move(partition)), agents_(std::move(agents)) {
    if (agents_.empty()) throw StructuralError("at least one agent is required");
    const std::size_t p = partition_.size();
    const Eigen::Index n = partition_.dimension();
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& a = agents_[i];
      const std::string who = "agent " + (a.name.empty() ? std::to_string(i + 1) : a.name);
      if (a.A.rows() != n || a.A.cols() != n) throw StructuralError(who + ": A must be " + std::to_string(n) + "x" + std::to_string(n));
      if (a.B.rows() != n) throw StructuralError(who + ": B must have " + std::to_string(n) + " rows");
      if (a.b.size() != n) throw StructuralError(who + ": b must have length " + std::to_string(n));
      if (a.input_set.dimension() != a.B.cols()) throw StructuralError(who + ": input set dimension differs from B's columns");
      const auto u = validate_polytope(a.input_set);
      if (!u.bounded || !u.full_dimensional) throw GeometryError(who + ": input set must be bounded and full-dimensional");
      if (a.secret.size() != p || a.observation.size() != p || a.labels.size() != p)
        throw StructuralError(who + ": per-region maps must cover all " + std::to_string(p) + " regions");
      if (a.initial.empty()) throw StructuralError(who + ": no initial region");
      for (auto q : a.initial)
        if (q >= p) throw StructuralError(who + ": initial region out of range");
    }
    for (std::size_t i = 0; i < agents_.size(); ++i)
      for (RegionId q = 0; q < p; ++q)
        for (const auto& atom : agents_[i].labels[q]) ap_.add(agent_atom(atom, i));
    for (const auto& a : extra_atoms) ap_.add(a);
    security_.observation.assign(agents_.size(), std::vector<int>(p));
    security_.secret.assign(agents_.size(), std::vector<bool>(p));
    for (std::size_t i = 0; i < agents_.size(); ++i)
      for (RegionId q = 0; q < p; ++q) {
        const auto& y = agents_[i].observation[q];
        auto it = std::find(obs_names_.begin(), obs_names_.end(), y);
        if (it == obs_names_.end()) it = obs_names_.insert(obs_names_.end(), y);
        security_.observation[i][q] = static_cast<int>(it - obs_names_.begin());
        security_.secret[i][q] = agents_[i].secret[q];
      }
  }

  const Partition& partition() const { return partition_; }
  const std::vector<AgentModel>& agents() const { return agents_; }
  const AgentModel& agent(std::size_t i) const { return agents_.at(i); }
  std::size_t num_agents() const { return agents_.size(); }
  const Alphabet& alphabet() const { return ap_; }

  const SecurityModel& security() const { return security_; }
  const std::string& observation_name(int id) const { return obs_names_.at(static_cast<std::size_t>(id)); }

  Symbol label(std::size_t agent, RegionId q) const {
    Symbol s = 0;
    for (const auto& atom : agents_.at(agent).labels.at(q)) s |= ap_.bit(agent_atom(atom, agent));
    return s;
  }

  Symbol label(const Tuple& global) const {
    Symbol s = 0;
    for (std::size_t i = 0; i < global.size(); ++i) s |= label(i, global[i]);
    return s;
  }

  /// Remark-1 preconditions for Type-A security.
  void require_type_a_preconditions() const {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& a = agents_[i];
      const bool some_public = std::any_of(a.secret.begin(), a.secret.end(), [](bool s) { return !s; });
      const bool public_start =
          std::any_of(a.initial.begin(), a.initial.end(), [&](RegionId q) { return !a.secret[q]; });
      if (!some_public || !public_start)
        throw ConfigError("agent " + std::to_string(i + 1) +
                          ": Type-A security needs a non-secret region and a non-secret initial region");
    }
  }

 private:
  Partition partition_;
  std::vector<AgentModel> agents_;
  Alphabet ap_;
  SecurityModel security_;
  std::vector<std::string> obs_names_;
};

enum class WeightRule { CentroidDistance, Unit };

struct WtsOptions {
  WeightRule rule = WeightRule::CentroidDistance;
  double self_loop_weight = 0.1;
};

/// Regions as states; self-loops plus one transition per shared facet.
inline TransitionSystem build_wts(const Team& team, std::size_t agent, const WtsOptions& opt = {}) {
  if (!(opt.self_loop_weight > 0.0)) throw ConfigError("self-loop weight must be positive");
  const auto& part = team.partition();
  TransitionSystem ts(1);
  for (RegionId q = 0; q < part.size(); ++q) ts.add_state({q}, team.label(agent, q));
  for (RegionId q = 0; q < part.size(); ++q) {
    for (RegionId r = 0; r < part.size(); ++r) {
      if (q == r) {
        ts.add_transition(q, r, opt.self_loop_weight);
      } else if (part.adjacent(q, r)) {
        const double w = opt.rule == WeightRule::Unit
                             ? 1.0
                             : (part.representative(q) - part.representative(r)).norm();
        ts.add_transition(q, r, w);
      }
    }
  }
  for (auto q : team.agent(agent).initial) ts.add_initial(q);
  return ts;
}

/// Synchronous product: every agent takes one transition per step, weights
/// add up, labels are unions. States in lexicographic tuple order.
inline TransitionSystem product_gwts(const std::vector<TransitionSystem>& wts) {
  if (wts.empty()) throw StructuralError("product of zero systems");
  const std::size_t m = wts.size();
  TransitionSystem g(m);
  std::vector<std::size_t> idx(m, 0);
  for (;;) {
    Tuple t(m);
    Symbol label = 0;
    for (std::size_t i = 0; i < m; ++i) {
      t[i] = wts[i].tuple(idx[i])[0];
      label |= wts[i].label(idx[i]);
    }
    g.add_state(t, label);
    std::size_t k = m;
    while (k-- > 0) {
      if (++idx[k] < wts[k].size()) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  // local index of a region inside each agent's system
  auto local = [&](std::size_t i, RegionId q) { return *wts[i].find({q}); };
  for (std::size_t s = 0; s < g.size(); ++s) {
    const Tuple& t = g.tuple(s);
    std::vector<const std::vector<Transition>*> outs(m);
    for (std::size_t i = 0; i < m; ++i) outs[i] = &wts[i].successors(local(i, t[i]));
    std::vector<std::size_t> pick(m, 0);
    if (std::any_of(outs.begin(), outs.end(), [](auto* o) { return o->empty(); })) continue;
    for (;;) {
      Tuple to(m);
      double w = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& tr = (*outs[i])[pick[i]];
        to[i] = wts[i].tuple(tr.target)[0];
        w += tr.weight;
      }
      g.add_transition(s, *g.find(to), w);
      std::size_t k = m;
      while (k-- > 0) {
        if (++pick[k] < outs[k]->size()) break;
        pick[k] = 0;
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
  }
  std::vector<std::size_t> first(m, 0);
  std::function<void(std::size_t, Tuple&)> initials = [&](std::size_t i, Tuple& t) {
    if (i == m) {
      g.add_initial(*g.find(t));
      return;
    }
    for (auto s : wts[i].initial()) {
      t[i] = wts[i].tuple(s)[0];
      initials(i + 1, t);
    }
  };
  Tuple t(m);
  initials(0, t);
  return g;
}

inline TransitionSystem build_gwts(const Team& team, const WtsOptions& opt = {}) {
  std::vector<TransitionSystem> wts;
  for (std::size_t i = 0; i < team.num_agents(); ++i) wts.push_back(build_wts(team, i, opt));
  return product_gwts(wts);
}

/// Every agent in a secret region shares its observation with another agent.
inline bool type_b_state(const SecurityModel& sec, const Tuple& global) {
  for (std::size_t i = 0; i < global.size(); ++i) {
    if (!sec.is_secret(i, global[i])) continue;
    bool covered = false;
    for (std::size_t k = 0; k < global.size() && !covered; ++k)
      covered = k != i && sec.obs(k, global[k]) == sec.obs(i, global[i]);
    if (!covered) return false;
  }
  return true;
}

inline TransitionSystem restrict_type_b(const TransitionSystem& gwts, const SecurityModel& sec) {
  return gwts.filter([&](std::size_t s) { return type_b_state(sec, gwts.tuple(s)); });
}

inline bool same_observation(const SecurityModel& sec, const Tuple& a, const Tuple& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (sec.obs(i, a[i]) != sec.obs(i, b[i])) return false;
  return true;
}

/// Pairs (q1, q2) of observation-equivalent global states; a pair moves when
/// both sides move and the targets are again equivalent. Weight and label
/// come from the real side q1.
inline TransitionSystem build_twin(const TransitionSystem& gwts, const SecurityModel& sec) {
  const std::size_t m = gwts.width();
  TransitionSystem twin(2 * m);
  std::vector<std::vector<long>> id(gwts.size(), std::vector<long>(gwts.size(), -1));
  for (std::size_t a = 0; a < gwts.size(); ++a)
    for (std::size_t b = 0; b < gwts.size(); ++b) {
      if (!same_observation(sec, gwts.tuple(a), gwts.tuple(b))) continue;
      Tuple t = gwts.tuple(a);
      t.insert(t.end(), gwts.tuple(b).begin(), gwts.tuple(b).end());
      id[a][b] = static_cast<long>(twin.add_state(std::move(t), gwts.label(a)));
    }
  for (std::size_t a = 0; a < gwts.size(); ++a)
    for (std::size_t b = 0; b < gwts.size(); ++b) {
      if (id[a][b] < 0) continue;
      for (const auto& ta : gwts.successors(a))
        for (const auto& tb : gwts.successors(b))
          if (id[ta.target][tb.target] >= 0)
            twin.add_transition(static_cast<std::size_t>(id[a][b]), static_cast<std::size_t>(id[ta.target][tb.target]),
                                ta.weight);
    }
  for (auto a : gwts.initial())
    for (auto b : gwts.initial())
      if (id[a][b] >= 0) twin.add_initial(static_cast<std::size_t>(id[a][b]));
  return twin;
}

/// No agent has both its real and its copy component in a secret region.
inline bool secure_twin_state(const SecurityModel& sec, const Tuple& twin) {
  const std::size_t m = twin.size() / 2;
  for (std::size_t i = 0; i < m; ++i)
    if (sec.is_secret(i, twin[i]) && sec.is_secret(i, twin[m + i])) return false;
  return true;
}

inline TransitionSystem restrict_secure_twin(const TransitionSystem& twin, const SecurityModel& sec) {
  return twin.filter([&](std::size_t s) { return secure_twin_state(sec, twin.tuple(s)); });
}

/// Real-side projection of a twin path, as global tuples. Throws on an
/// invalid twin path.
inline std::vector<Tuple> project_real(const TransitionSystem& twin, const std::vector<std::size_t>& path) {
  if (!twin.is_path(path)) throw StructuralError("not a path of the twin system");
  std::vector<Tuple> out;
  for (auto s : path) out.push_back(real_part(twin.tuple(s)));
  return out;
}

inline std::vector<Tuple> project_copy(const TransitionSystem& twin, const std::vector<std::size_t>& path) {
  if (!twin.is_path(path)) throw StructuralError("not a path of the twin system");
  std::vector<Tuple> out;
  for (auto s : path) out.push_back(copy_part(twin.tuple(s)));
  return out;
}

/// Maps a sequence of tuples to state ids of `ts`; nullopt if some tuple is
/// missing or consecutive states are not connected.
inline std::optional<std::vector<std::size_t>> as_path(const TransitionSystem& ts, const std::vector<Tuple>& tuples) {
  std::vector<std::size_t> ids;
  for (const auto& t : tuples) {
    auto s = ts.find(t);
    if (!s) return std::nullopt;
    ids.push_back(*s);
  }
  if (!ids.empty() && !ts.is_path(ids)) return std::nullopt;
  return ids;
}

}  // namespace secureplan

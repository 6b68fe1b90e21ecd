#pragma once

// Brute-force security verdicts for global paths and lassos, and the
// projection of sampled trajectories onto region paths.

#include <secureplan/abstraction.hpp>
#include <secureplan/geometry.hpp>
#include <secureplan/transition_system.hpp>

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace secureplan::oracle {

using GlobalPath = std::vector<Tuple>;

struct Violation {
  std::size_t agent = 0;  // 0-based
  std::size_t step = 0;   // 1-based
  bool operator==(const Violation&) const = default;
};

struct TypeBVerdict {
  bool secure = true;
  std::vector<Violation> violations;
};

struct TypeAVerdict {
  bool secure = false;
  GlobalPath witness;
  // first step at which no copy candidate survives
  std::optional<std::size_t> exhausted_at;
};

namespace detail {

inline std::vector<std::size_t> resolve(const GlobalPath& path, const TransitionSystem& gwts) {
  if (path.empty()) throw StructuralError("empty path");
  std::vector<std::size_t> ids;
  for (const auto& t : path) {
    auto s = gwts.find(t);
    if (!s) throw StructuralError("path visits a state outside the system");
    ids.push_back(*s);
  }
  if (!gwts.is_path(ids)) throw StructuralError("path uses a missing transition");
  return ids;
}

inline bool copy_ok(const SecurityModel& sec, const Tuple& real, const Tuple& copy) {
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (sec.obs(i, real[i]) != sec.obs(i, copy[i])) return false;
    if (sec.is_secret(i, real[i]) && sec.is_secret(i, copy[i])) return false;
  }
  return true;
}

}  // namespace detail

inline TypeBVerdict check_type_b(const GlobalPath& path, const TransitionSystem& gwts, const SecurityModel& sec) {
  detail::resolve(path, gwts);
  TypeBVerdict v;
  for (std::size_t j = 0; j < path.size(); ++j) {
    const Tuple& t = path[j];
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!sec.is_secret(i, t[i])) continue;
      bool shared = false;
      for (std::size_t k = 0; k < t.size() && !shared; ++k) shared = k != i && sec.obs(k, t[k]) == sec.obs(i, t[i]);
      if (!shared) v.violations.push_back({i, j + 1});
    }
  }
  v.secure = v.violations.empty();
  return v;
}

/// Layered search over copy paths of `gwts` with the same observations and
/// the secret-avoidance implication. With `from_initial` the copy path must
/// start in an initial state.
inline TypeAVerdict check_type_a(const GlobalPath& path, const TransitionSystem& gwts, const SecurityModel& sec,
                                 bool from_initial = false) {
  detail::resolve(path, gwts);
  const std::size_t n = gwts.size();
  std::vector<std::vector<long>> parent(path.size(), std::vector<long>(n, -2));
  std::vector<std::size_t> layer;
  auto start = [&](std::size_t s) {
    if (detail::copy_ok(sec, path[0], gwts.tuple(s))) {
      parent[0][s] = -1;
      layer.push_back(s);
    }
  };
  if (from_initial) {
    for (auto s : gwts.initial()) start(s);
  } else {
    for (std::size_t s = 0; s < n; ++s) start(s);
  }
  TypeAVerdict v;
  if (layer.empty()) {
    v.exhausted_at = 1;
    return v;
  }
  for (std::size_t j = 1; j < path.size(); ++j) {
    std::vector<std::size_t> next;
    for (auto s : layer)
      for (const auto& t : gwts.successors(s))
        if (parent[j][t.target] == -2 && detail::copy_ok(sec, path[j], gwts.tuple(t.target))) {
          parent[j][t.target] = static_cast<long>(s);
          next.push_back(t.target);
        }
    if (next.empty()) {
      v.exhausted_at = j + 1;
      return v;
    }
    layer = std::move(next);
  }
  std::size_t s = *std::min_element(layer.begin(), layer.end());
  v.witness.resize(path.size());
  for (std::size_t j = path.size(); j-- > 0;) {
    v.witness[j] = gwts.tuple(s);
    if (j > 0) s = static_cast<std::size_t>(parent[j][s]);
  }
  v.secure = true;
  return v;
}

/// Replays a witness: same observations, secret avoidance, valid path.
inline bool witness_valid(const GlobalPath& path, const GlobalPath& witness, const TransitionSystem& gwts,
                          const SecurityModel& sec) {
  if (witness.size() != path.size()) return false;
  try {
    detail::resolve(witness, gwts);
  } catch (const StructuralError&) {
    return false;
  }
  for (std::size_t j = 0; j < path.size(); ++j)
    if (!detail::copy_ok(sec, path[j], witness[j])) return false;
  return true;
}

enum class LassoTypeA { Secure, Insecure, PeriodicWitnessNotFound };

inline const char* to_string(LassoTypeA v) {
  switch (v) {
    case LassoTypeA::Secure: return "secure";
    case LassoTypeA::Insecure: return "insecure";
    case LassoTypeA::PeriodicWitnessNotFound: return "periodic witness not found";
  }
  return "?";
}

struct LassoVerdict {
  LassoTypeA type_a = LassoTypeA::Insecure;
  TypeBVerdict type_b;
  // witness for prefix . cycle^w, as copy prefix and copy cycle; the copy
  // cycle length is a multiple of the real cycle length
  GlobalPath witness_prefix, witness_cycle;
  std::size_t witness_period = 0;  // copy cycle length / real cycle length
  bool secure() const { return type_a == LassoTypeA::Secure && type_b.secure; }
};

/// Type-A for the infinite path prefix . cycle^w: a greatest fixpoint over
/// (lasso position, copy state) pairs decides whether an infinite copy path
/// exists. Insecure means no copy even for prefix plus one cycle.
inline LassoVerdict check_lasso(const GlobalPath& prefix, const GlobalPath& cycle, const TransitionSystem& gwts,
                                const SecurityModel& sec, bool from_initial = false) {
  if (cycle.empty()) throw StructuralError("lasso cycle is empty");
  GlobalPath once = prefix;
  once.insert(once.end(), cycle.begin(), cycle.end());
  GlobalPath twice = once;
  twice.push_back(cycle.front());
  detail::resolve(twice, gwts);

  LassoVerdict v;
  v.type_b = check_type_b(once, gwts, sec);

  const std::size_t P = prefix.size(), L = once.size(), n = gwts.size();
  auto next_pos = [&](std::size_t p) { return p + 1 < L ? p + 1 : P; };
  std::vector<std::vector<char>> alive(L, std::vector<char>(n, 0));
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t s = 0; s < n; ++s) alive[p][s] = detail::copy_ok(sec, once[p], gwts.tuple(s));
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t p = 0; p < L; ++p)
      for (std::size_t s = 0; s < n; ++s) {
        if (!alive[p][s]) continue;
        bool any = false;
        for (const auto& t : gwts.successors(s))
          if (alive[next_pos(p)][t.target]) {
            any = true;
            break;
          }
        if (!any) {
          alive[p][s] = 0;
          changed = true;
        }
      }
  }
  std::vector<std::size_t> starts;
  if (from_initial) {
    starts = gwts.initial();
  } else {
    for (std::size_t s = 0; s < n; ++s) starts.push_back(s);
  }
  std::optional<std::size_t> start;
  for (auto s : starts)
    if (alive[0][s]) {
      start = s;
      break;
    }
  if (start) {
    // walk the surviving graph until a (position, state) pair repeats
    std::vector<std::pair<std::size_t, std::size_t>> walk{{0, *start}};
    std::vector<std::vector<long>> seen(L, std::vector<long>(n, -1));
    seen[0][*start] = 0;
    for (;;) {
      auto [p, s] = walk.back();
      const std::size_t q = next_pos(p);
      std::size_t succ = n;
      for (const auto& t : gwts.successors(s))
        if (alive[q][t.target] && t.target < succ) succ = t.target;
      if (seen[q][succ] >= 0) {
        const auto loop = static_cast<std::size_t>(seen[q][succ]);
        for (std::size_t k = 0; k < loop; ++k) v.witness_prefix.push_back(gwts.tuple(walk[k].second));
        for (std::size_t k = loop; k < walk.size(); ++k) v.witness_cycle.push_back(gwts.tuple(walk[k].second));
        break;
      }
      seen[q][succ] = static_cast<long>(walk.size());
      walk.emplace_back(q, succ);
    }
    v.witness_period = v.witness_cycle.size() / cycle.size();
    v.type_a = LassoTypeA::Secure;
    return v;
  }
  v.type_a = check_type_a(once, gwts, sec, from_initial).secure ? LassoTypeA::PeriodicWitnessNotFound
                                                                 : LassoTypeA::Insecure;
  return v;
}

/// Expands a lasso witness (or any lasso) into its first `length` states.
inline GlobalPath unroll(const GlobalPath& prefix, const GlobalPath& cycle, std::size_t length) {
  GlobalPath out;
  for (std::size_t k = 0; k < length; ++k)
    out.push_back(k < prefix.size() ? prefix[k] : cycle[(k - prefix.size()) % cycle.size()]);
  return out;
}

struct ProjectedPath {
  GlobalPath path;
  std::vector<std::size_t> switch_samples;  // sample index of each global state
  bool repeats = true;                      // final state is held to the end
};

/// Region sequence of sampled per-agent trajectories. Samples inside several
/// regions (facet samples) go to the region that differs from the agent's
/// current one; samples outside every region beyond `tol` are an error.
inline ProjectedPath trajectory_to_path(const std::vector<std::vector<Vector>>& samples, const Partition& partition,
                                        double tol = 1e-6) {
  if (samples.empty()) throw StructuralError("no agents to project");
  const std::size_t K = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != K || K == 0) throw StructuralError("agents must have the same positive number of samples");
  std::vector<std::vector<RegionId>> f(samples.size(), std::vector<RegionId>(K));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const Vector& x = samples[i][k];
      std::vector<RegionId> in;
      for (RegionId r = 0; r < partition.size(); ++r)
        if (partition.region(r).contains(x, tol)) in.push_back(r);
      if (in.empty())
        throw GeometryError("agent " + std::to_string(i + 1) + " sample " + std::to_string(k) +
                            " lies outside every region");
      RegionId pick = in.front();
      if (in.size() > 1) {
        auto best = [&](auto pred) {
          std::optional<RegionId> b;
          for (auto r : in)
            if (pred(r) && (!b || partition.normalized_margin(r, x) > partition.normalized_margin(*b, x))) b = r;
          return b;
        };
        std::optional<RegionId> chosen;
        if (k > 0) chosen = best([&](RegionId r) { return r != f[i][k - 1]; });
        if (!chosen) chosen = best([](RegionId) { return true; });
        pick = *chosen;
      }
      f[i][k] = pick;
    }
  }
  ProjectedPath out;
  for (std::size_t k = 0; k < K; ++k) {
    bool change = k == 0;
    for (std::size_t i = 0; i < f.size() && !change; ++i) change = f[i][k] != f[i][k - 1];
    if (!change) continue;
    Tuple t(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) t[i] = f[i][k];
    out.path.push_back(std::move(t));
    out.switch_samples.push_back(k);
  }
  return out;
}

/// Removes consecutive repeats.
inline GlobalPath destutter(const GlobalPath& path) {
  GlobalPath out;
  for (const auto& t : path)
    if (out.empty() || out.back() != t) out.push_back(t);
  return out;
}

}  // namespace secureplan::oracle

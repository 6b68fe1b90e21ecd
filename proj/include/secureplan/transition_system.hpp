#pragma once

// Weighted labelled transition systems over region tuples. A state's tuple
// has one region per component: 1 for a single-agent WTS, M for a global
// system, 2M (real components first, then copy) for a twin system.

#include <secureplan/common.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace secureplan {

using Tuple = std::vector<RegionId>;

struct Transition {
  std::size_t target = 0;
  double weight = 0.0;
};

class TransitionSystem {
 public:
  TransitionSystem() = default;
  explicit TransitionSystem(std::size_t width) : width_(width) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return tuples_.size(); }

  std::size_t add_state(Tuple tuple, Symbol label) {
    if (tuple.size() != width_) throw StructuralError("state tuple has wrong width");
    auto [it, inserted] = index_.emplace(tuple, tuples_.size());
    if (!inserted) throw StructuralError("duplicate state");
    tuples_.push_back(std::move(tuple));
    labels_.push_back(label);
    succ_.emplace_back();
    return it->second;
  }

  void add_transition(std::size_t from, std::size_t to, double weight) {
    if (from >= size() || to >= size()) throw StructuralError("transition endpoint out of range");
    if (!(weight > 0.0)) throw StructuralError("transition weights must be strictly positive");
    succ_[from].push_back({to, weight});
  }

  void add_initial(std::size_t s) {
    if (s >= size()) throw StructuralError("initial state out of range");
    if (std::find(initial_.begin(), initial_.end(), s) == initial_.end()) initial_.push_back(s);
    std::sort(initial_.begin(), initial_.end());
  }

  const Tuple& tuple(std::size_t s) const { return tuples_.at(s); }
  Symbol label(std::size_t s) const { return labels_.at(s); }
  const std::vector<Transition>& successors(std::size_t s) const { return succ_.at(s); }
  const std::vector<std::size_t>& initial() const { return initial_; }

  std::optional<std::size_t> find(const Tuple& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> weight(std::size_t from, std::size_t to) const {
    for (const auto& t : succ_.at(from))
      if (t.target == to) return t.weight;
    return std::nullopt;
  }

  bool has_transition(std::size_t from, std::size_t to) const { return weight(from, to).has_value(); }

  std::size_t num_transitions() const {
    std::size_t n = 0;
    for (const auto& s : succ_) n += s.size();
    return n;
  }

  bool is_path(const std::vector<std::size_t>& path) const {
    if (path.empty()) return false;
    for (auto s : path)
      if (s >= size()) return false;
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
      if (!has_transition(path[k], path[k + 1])) return false;
    return true;
  }

  /// Sub-system on the kept states (order preserved) and kept transitions.
  TransitionSystem filter(const std::function<bool(std::size_t)>& keep_state,
                          const std::function<bool(std::size_t, std::size_t)>& keep_transition = nullptr) const {
    TransitionSystem out(width_);
    std::vector<long> remap(size(), -1);
    for (std::size_t s = 0; s < size(); ++s)
      if (keep_state(s)) remap[s] = static_cast<long>(out.add_state(tuples_[s], labels_[s]));
    for (std::size_t s = 0; s < size(); ++s) {
      if (remap[s] < 0) continue;
      for (const auto& t : succ_[s]) {
        if (remap[t.target] < 0) continue;
        if (keep_transition && !keep_transition(s, t.target)) continue;
        out.add_transition(static_cast<std::size_t>(remap[s]), static_cast<std::size_t>(remap[t.target]), t.weight);
      }
    }
    for (auto s : initial_)
      if (remap[s] >= 0) out.add_initial(static_cast<std::size_t>(remap[s]));
    return out;
  }

 private:
  std::size_t width_ = 1;
  std::vector<Tuple> tuples_;
  std::vector<Symbol> labels_;
  std::vector<std::vector<Transition>> succ_;
  std::vector<std::size_t> initial_;
  std::map<Tuple, std::size_t> index_;
};

inline Tuple real_part(const Tuple& twin) { return Tuple(twin.begin(), twin.begin() + static_cast<long>(twin.size() / 2)); }
inline Tuple copy_part(const Tuple& twin) { return Tuple(twin.begin() + static_cast<long>(twin.size() / 2), twin.end()); }

}  // namespace secureplan

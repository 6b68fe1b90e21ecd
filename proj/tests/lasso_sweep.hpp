#pragma once

// Exhaustive comparison of NBA lasso acceptance with the LTL semantics on
// every lasso prefix . cycle^omega with |prefix| <= bound, 1 <= |cycle| <= bound
// over the letters 2^{first k atoms}.
//
// Both sides share work across lassos: reachable NBA state sets are
// tabulated per prefix, accepting states and formula values per cycle,
// and prefixes are walked backwards through the formula evaluator.

#include <secureplan/buchi.hpp>

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace secureplan::test {

struct SweepResult {
  std::size_t lassos = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

inline std::string lasso_text(const std::vector<Symbol>& prefix, const std::vector<Symbol>& cycle) {
  std::ostringstream os;
  os << "[";
  for (auto a : prefix) os << " " << a;
  os << " ] ( ";
  for (auto a : cycle) os << a << " ";
  os << ")^w";
  return os.str();
}

inline SweepResult sweep_lassos(const ltl::Formula& f, const BuchiAutomaton& nba, std::size_t num_atoms,
                                std::size_t bound) {
  const std::size_t letters = std::size_t{1} << num_atoms;
  const std::size_t words = (nba.size() + 63) / 64;
  using Bits = std::vector<std::uint64_t>;
  auto pack = [&](const std::vector<bool>& v) {
    Bits b(words, 0);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i]) b[i / 64] |= std::uint64_t{1} << (i % 64);
    return b;
  };

  // prefixes of length len are coded a_1 ... a_len in base `letters`,
  // a_1 most significant; offset[len] is the first table slot of that length
  std::vector<std::size_t> offset{0}, count{1};
  for (std::size_t len = 1; len <= bound; ++len) {
    offset.push_back(offset.back() + count.back());
    count.push_back(count.back() * letters);
  }
  std::vector<Bits> reach(offset.back() + count.back());
  reach[0] = pack(secureplan::reach(nba, {}));
  for (std::size_t len = 0; len < bound; ++len) {
    for (std::size_t code = 0; code < count[len]; ++code) {
      const Bits& from = reach[offset[len] + code];
      for (std::size_t a = 0; a < letters; ++a) {
        Bits to(words, 0);
        for (std::size_t s = 0; s < nba.size(); ++s)
          if (from[s / 64] >> (s % 64) & 1u)
            for (const auto& e : nba.edges[s])
              if (e.guard.admits(a)) to[e.target / 64] |= std::uint64_t{1} << (e.target % 64);
        reach[offset[len + 1] + code * letters + a] = std::move(to);
      }
    }
  }

  const ltl::LassoEvaluator eval(f);
  SweepResult result;
  std::vector<Symbol> cycle;
  std::function<void()> each_cycle;
  std::function<void(const ltl::LassoEvaluator::Values&, std::size_t, std::size_t, const Bits&)> each_prefix =
      [&](const ltl::LassoEvaluator::Values& values, std::size_t code, std::size_t len, const Bits& good) {
        const Bits& from = reach[offset[len] + code];
        bool accepted = false;
        for (std::size_t w = 0; w < words && !accepted; ++w) accepted = (from[w] & good[w]) != 0;
        ++result.lassos;
        if (accepted != eval.root(values)) {
          if (result.mismatches++ == 0) {
            std::vector<Symbol> prefix;
            for (std::size_t i = len, c = code; i-- > 0; c /= letters) prefix.insert(prefix.begin(), c % letters);
            result.first_mismatch = lasso_text(prefix, cycle) + (accepted ? " accepted, formula false" : " rejected, formula true");
          }
        }
        if (len == bound) return;
        std::size_t scale = 1;
        for (std::size_t i = 0; i < len; ++i) scale *= letters;
        for (std::size_t a = 0; a < letters; ++a) each_prefix(eval.step(a, values), a * scale + code, len + 1, good);
      };
  each_cycle = [&]() {
    if (!cycle.empty()) {
      const Bits good = pack(cycle_acceptors(nba, cycle));
      each_prefix(eval.cycle_values(cycle), 0, 0, good);
    }
    if (cycle.size() == bound) return;
    for (std::size_t a = 0; a < letters; ++a) {
      cycle.push_back(a);
      each_cycle();
      cycle.pop_back();
    }
  };
  each_cycle();
  return result;
}

// Formulas over p, q, r with at most four temporal operators.
inline const std::vector<std::string>& ltl_corpus() {
  static const std::vector<std::string> corpus = {
      "F p",
      "G p",
      "G F p",
      "F G p",
      "p U q",
      "p R q",
      "X p",
      "X X p",
      "G (p -> F q)",
      "G (p -> X q)",
      "F p & F q",
      "F p | G q",
      "!(p U q)",
      "(p U q) U r",
      "p U (q U r)",
      "G F p & G F q",
      "F G p | G F q",
      "G !p",
      "G (p -> X !p)",
      "F (p & X q)",
      "p U (q & X r)",
      "(p R q) & F r",
      "G (p | q) & F r",
      "X (p U q)",
      "!F G p",
      "F (p & F (q & F r))",
      "G (p <-> X q)",
      "G F p -> G F q",
      "true",
      "false",
      "p & !p",
      "G F (p & F q) & G !r",
      "(X p) U (X q)",
      "F p -> (!p U q)",
      "G (q -> (p R r))",
      "!(G (p -> F q))",
  };
  return corpus;
}

}  // namespace secureplan::test

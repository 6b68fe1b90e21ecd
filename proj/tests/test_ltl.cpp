#include <secureplan/buchi.hpp>
#include <secureplan/ltl.hpp>

#include <gtest/gtest.h>

#include <random>

#include "lasso_sweep.hpp"

using namespace secureplan;
namespace L = secureplan::ltl;

namespace {

const Alphabet pqr{"p", "q", "r"};

L::Formula parse(const std::string& text, const Alphabet& ap = pqr) { return L::parse(text, ap); }

// Direct recursive semantics on the unrolled word. From any position the
// lasso visits at most |prefix|+|cycle| distinct positions, so the first
// witness of an eventuality lies within that many steps.
class Unrolled {
 public:
  Unrolled(std::vector<Symbol> prefix, std::vector<Symbol> cycle) : loop_(prefix.size()), period_(cycle.size()) {
    word_ = std::move(prefix);
    word_.insert(word_.end(), cycle.begin(), cycle.end());
  }

  bool holds(const L::Formula& f, std::size_t i = 0) const {
    i = norm(i);
    const std::size_t horizon = i + word_.size() + 1;
    switch (f->op) {
      case L::Op::True: return true;
      case L::Op::False: return false;
      case L::Op::Atom: return word_[i] >> f->atom & 1u;
      case L::Op::Not: return !holds(f->lhs, i);
      case L::Op::And: return holds(f->lhs, i) && holds(f->rhs, i);
      case L::Op::Or: return holds(f->lhs, i) || holds(f->rhs, i);
      case L::Op::Implies: return !holds(f->lhs, i) || holds(f->rhs, i);
      case L::Op::Equiv: return holds(f->lhs, i) == holds(f->rhs, i);
      case L::Op::Next: return holds(f->lhs, i + 1);
      case L::Op::Eventually:
        for (std::size_t j = i; j < horizon; ++j)
          if (holds(f->lhs, j)) return true;
        return false;
      case L::Op::Globally:
        for (std::size_t j = i; j < horizon; ++j)
          if (!holds(f->lhs, j)) return false;
        return true;
      case L::Op::Until:
        for (std::size_t j = i; j < horizon; ++j) {
          if (holds(f->rhs, j)) return true;
          if (!holds(f->lhs, j)) return false;
        }
        return false;
      case L::Op::Release:
        // b holds until and including the first a, or forever
        for (std::size_t j = i; j < horizon; ++j) {
          if (!holds(f->rhs, j)) return false;
          if (holds(f->lhs, j)) return true;
        }
        return true;
    }
    return false;
  }

 private:
  std::size_t norm(std::size_t j) const { return j < word_.size() ? j : loop_ + (j - loop_) % period_; }

  std::vector<Symbol> word_;
  std::size_t loop_, period_;
};

std::vector<Symbol> random_word(std::mt19937_64& rng, std::size_t len, Symbol letters) {
  std::vector<Symbol> w(len);
  for (auto& a : w) a = rng() % letters;
  return w;
}

}  // namespace

TEST(Parse, CaseStudyMission) {
  const Alphabet ap{"scan_1", "encode_1", "transmit_2", "inspect_2", "obs_1", "obs_2"};
  const auto f = L::parse("G F (scan_1 & F (encode_1 & F transmit_2)) & F inspect_2 & G !obs_1 & G !obs_2", ap);
  EXPECT_EQ(L::to_string(f, ap),
            "(((G F (scan_1 & F (encode_1 & F transmit_2)) & F inspect_2) & G !obs_1) & G !obs_2)");
  EXPECT_EQ(L::temporal_depth_count(f), 7u);
}

TEST(Parse, SingleObstacleAtom) {
  const Alphabet ap{"scan_1", "encode_1", "transmit_2", "inspect_2", "obs"};
  EXPECT_NO_THROW(L::parse("G F (scan_1 & F (encode_1 & F transmit_2)) & F inspect_2 & G !obs", ap));
}

TEST(Parse, RoundTripsThroughText) {
  for (const auto& text : test::ltl_corpus()) {
    const auto f = parse(text);
    EXPECT_TRUE(L::equal(f, parse(L::to_string(f, pqr)))) << text;
  }
}

TEST(Parse, Precedence) {
  EXPECT_EQ(L::to_string(parse("p & q U r | !p"), pqr), "((p & (q U r)) | !p)");
  EXPECT_EQ(L::to_string(parse("p -> q -> r"), pqr), "(p -> (q -> r))");
  EXPECT_EQ(L::to_string(parse("p U q U r"), pqr), "(p U (q U r))");
  EXPECT_EQ(L::to_string(parse("[]<> p"), pqr), "G F p");
}

TEST(Parse, TrueIsEquivalentToExcludedMiddle) {
  const auto t = parse("true");
  const auto em = parse("p | !p");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto pre = random_word(rng, rng() % 4, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
    EXPECT_TRUE(L::eval_on_lasso(t, pre, cyc));
    EXPECT_EQ(L::eval_on_lasso(t, pre, cyc), L::eval_on_lasso(em, pre, cyc));
  }
}

TEST(Parse, Errors) {
  try {
    parse("a U", Alphabet{"a"});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  try {
    parse("G (p & q");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 8u);
  }
  try {
    parse("F p & zap");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 6u);
  }
  EXPECT_THROW(parse("p &"), ParseError);
  EXPECT_THROW(parse("U p"), ParseError);
  EXPECT_THROW(parse("p q"), ParseError);
  EXPECT_THROW(parse(")"), ParseError);
}

TEST(Parse, SourceSpans) {
  const auto f = parse("p & (q U r)");
  EXPECT_EQ(f->begin, 0u);
  EXPECT_EQ(f->end, 11u);
  EXPECT_EQ(f->rhs->begin, 5u);
  EXPECT_EQ(f->rhs->end, 10u);
}

TEST(Nnf, Dualities) {
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!G p")), parse("F !p")));
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!(p U q)")), parse("!p R !q")));
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!!p")), parse("p")));
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!X p")), parse("X !p")));
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!(p R q)")), parse("!p U !q")));
  EXPECT_TRUE(L::equal(L::to_nnf(parse("!(p -> q)")), parse("p & !q")));
}

TEST(Nnf, OutputIsNnfAndPreservesSemantics) {
  std::mt19937_64 rng(2);
  for (const auto& text : test::ltl_corpus()) {
    const auto f = parse(text);
    const auto g = L::to_nnf(f);
    EXPECT_TRUE(L::is_nnf(g)) << text;
    for (int i = 0; i < 300; ++i) {
      const auto pre = random_word(rng, rng() % 5, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
      ASSERT_EQ(L::eval_on_lasso(f, pre, cyc), L::eval_on_lasso(g, pre, cyc))
          << text << " on " << test::lasso_text(pre, cyc);
    }
  }
}

TEST(EvalOnLasso, Examples) {
  const Symbol p = 1, q = 2;
  EXPECT_TRUE(L::eval_on_lasso(parse("F p"), {0}, {p}));
  EXPECT_FALSE(L::eval_on_lasso(parse("G p"), {p}, {0}));
  EXPECT_TRUE(L::eval_on_lasso(parse("p U q"), {p, p}, {q}));
  EXPECT_FALSE(L::eval_on_lasso(parse("p U q"), {p, 0}, {q}));
  EXPECT_TRUE(L::eval_on_lasso(parse("G F p"), {}, {0, 0, p}));
  EXPECT_FALSE(L::eval_on_lasso(parse("F G p"), {p, p}, {p, 0}));
  EXPECT_THROW(L::eval_on_lasso(parse("p"), {p}, {}), StructuralError);
}

TEST(EvalOnLasso, MatchesUnrolledSemantics) {
  std::mt19937_64 rng(3);
  for (const auto& text : test::ltl_corpus()) {
    const auto f = parse(text);
    for (int i = 0; i < 300; ++i) {
      const auto pre = random_word(rng, rng() % 5, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
      ASSERT_EQ(L::eval_on_lasso(f, pre, cyc), Unrolled(pre, cyc).holds(f))
          << text << " on " << test::lasso_text(pre, cyc);
    }
  }
}

TEST(Translation, EventuallyIsTwoStates) {
  const Alphabet ap{"p"};
  const auto nba = ltl_to_nba(parse("F p", ap), ap);
  EXPECT_EQ(nba.size(), 2u);
  ASSERT_EQ(nba.initial.size(), 1u);
  const auto s0 = nba.initial[0];
  EXPECT_FALSE(nba.accepting[s0]);
  // s0 loops on everything, p leads to the accepting sink
  EXPECT_EQ(nba.successors(s0, 0), std::vector<std::size_t>{s0});
  const auto on_p = nba.successors(s0, 1);
  ASSERT_EQ(on_p.size(), 2u);
  const auto sink = on_p[0] == s0 ? on_p[1] : on_p[0];
  EXPECT_TRUE(nba.accepting[sink]);
  EXPECT_EQ(nba.successors(sink, 0), std::vector<std::size_t>{sink});
  EXPECT_EQ(nba.successors(sink, 1), std::vector<std::size_t>{sink});
}

TEST(Translation, TrueIsOneAcceptingState) {
  const Alphabet ap{"p"};
  const auto nba = ltl_to_nba(parse("true", ap), ap);
  ASSERT_EQ(nba.size(), 1u);
  EXPECT_TRUE(nba.accepting[0]);
  EXPECT_EQ(nba.successors(0, 0), std::vector<std::size_t>{0});
  EXPECT_EQ(nba.successors(0, 1), std::vector<std::size_t>{0});
}

TEST(Translation, AlwaysNotObstacleIsOneState) {
  const Alphabet ap{"obs"};
  const auto nba = ltl_to_nba(parse("G !obs", ap), ap);
  ASSERT_EQ(nba.size(), 1u);
  EXPECT_TRUE(nba.accepting[0]);
  EXPECT_EQ(nba.successors(0, 0), std::vector<std::size_t>{0});
  EXPECT_TRUE(nba.successors(0, 1).empty());
  EXPECT_EQ(test::sweep_lassos(parse("G !obs", ap), nba, 1, 4).mismatches, 0u);
}

TEST(Translation, FalseHasNoAcceptingRun) {
  const auto nba = ltl_to_nba(parse("false"), pqr);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) EXPECT_FALSE(accepts_lasso(nba, random_word(rng, 2, 8), random_word(rng, 2, 8)));
}

// Exhaustive at bound 3 here; the acceptance binary runs bound 4.
TEST(Translation, CorpusMatchesSemanticsExhaustively) {
  for (const auto& text : test::ltl_corpus()) {
    const auto f = parse(text);
    const auto nba = ltl_to_nba(f, pqr);
    nba.validate();
    const auto r = test::sweep_lassos(f, nba, 3, 3);
    EXPECT_EQ(r.mismatches, 0u) << text << ": " << r.first_mismatch;
  }
}

TEST(Translation, SweepAgreesWithSingleLassoFunctions) {
  std::mt19937_64 rng(5);
  for (const auto& text : {"G F p & G F q", "p U (q U r)", "F G p | G F q"}) {
    const auto f = parse(text);
    const auto nba = ltl_to_nba(f, pqr);
    for (int i = 0; i < 300; ++i) {
      const auto pre = random_word(rng, rng() % 5, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
      EXPECT_EQ(accepts_lasso(nba, pre, cyc), Unrolled(pre, cyc).holds(f)) << text;
    }
  }
}

TEST(Translation, DegeneralizationPreservesLanguage) {
  std::mt19937_64 rng(6);
  for (const auto& text : test::ltl_corpus()) {
    const auto nnf = L::to_nnf(parse(text));
    const auto gba = tableau(nnf, pqr);
    const auto raw = degeneralize(gba);
    const auto reduced = ltl_to_nba(nnf, pqr);
    EXPECT_LE(reduced.size(), raw.size());
    for (int i = 0; i < 200; ++i) {
      const auto pre = random_word(rng, rng() % 5, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
      const bool g = accepts_lasso(gba, pre, cyc);
      ASSERT_EQ(g, accepts_lasso(raw, pre, cyc)) << text << " on " << test::lasso_text(pre, cyc);
      ASSERT_EQ(g, accepts_lasso(reduced, pre, cyc)) << text << " on " << test::lasso_text(pre, cyc);
    }
  }
}

TEST(Translation, UnreachablePruningKeepsOnlyReachable) {
  for (const auto& text : test::ltl_corpus()) {
    const auto nba = ltl_to_nba(parse(text), pqr);
    const auto all = [&] {
      std::vector<bool> seen(nba.size(), false);
      std::vector<std::size_t> stack(nba.initial.begin(), nba.initial.end());
      for (auto s : stack) seen[s] = true;
      while (!stack.empty()) {
        auto s = stack.back();
        stack.pop_back();
        for (const auto& e : nba.edges[s])
          if (!seen[e.target]) {
            seen[e.target] = true;
            stack.push_back(e.target);
          }
      }
      return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    }();
    EXPECT_TRUE(all) << text;
  }
}

TEST(Hoa, RoundTripIsIdentical) {
  const Alphabet ap{"p"};
  const auto nba = ltl_to_nba(parse("F p", ap), ap);
  const auto back = from_hoa(to_hoa(nba, "F p"));
  EXPECT_EQ(back.alphabet.names(), nba.alphabet.names());
  EXPECT_EQ(back.initial, nba.initial);
  EXPECT_EQ(back.accepting, nba.accepting);
  EXPECT_EQ(back.edges, nba.edges);
}

TEST(Hoa, RoundTripPreservesCorpusLanguages) {
  std::mt19937_64 rng(7);
  for (const auto& text : test::ltl_corpus()) {
    const auto f = parse(text);
    const auto nba = ltl_to_nba(f, pqr);
    const auto back = from_hoa(to_hoa(nba));
    for (int i = 0; i < 100; ++i) {
      const auto pre = random_word(rng, rng() % 5, 8), cyc = random_word(rng, 1 + rng() % 4, 8);
      ASSERT_EQ(accepts_lasso(back, pre, cyc), accepts_lasso(nba, pre, cyc)) << text;
    }
  }
}

TEST(Hoa, GeneralizedAcceptanceIsUnsupported) {
  const std::string text =
      "HOA: v1\nStates: 1\nStart: 0\nAP: 1 \"p\"\nAcceptance: 2 Inf(0)&Inf(1)\n--BODY--\n"
      "State: 0 {0 1}\n[t] 0\n--END--\n";
  EXPECT_THROW(from_hoa(text), UnsupportedFeature);
}

TEST(Hoa, TransitionMarksAreUnsupported) {
  const std::string text =
      "HOA: v1\nStates: 1\nStart: 0\nAP: 1 \"p\"\nAcceptance: 1 Inf(0)\n--BODY--\n"
      "State: 0\n[0] 0 {0}\n[!0] 0\n--END--\n";
  EXPECT_THROW(from_hoa(text), UnsupportedFeature);
}

TEST(Hoa, MalformedInputIsAParseError) {
  EXPECT_THROW(from_hoa("HOA: v1\nStates: 1\n--BODY--\n--END--\n"), ParseError);
  EXPECT_THROW(from_hoa("HOA: v1\nStates: 1\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[0] 3\n--END--\n"),
               ParseError);
}

// Automaton for G F p in the layout typical external translators emit
// (state 0: "just saw p"), with a composite label expression.
TEST(Hoa, ExternalAutomatonMatchesInternalTranslation) {
  const std::string external = R"(HOA: v1
name: "G F p"
States: 2
Start: 1
AP: 2 "p" "q"
acc-name: Buchi
Acceptance: 1 Inf(0)
properties: trans-labels explicit-labels state-acc complete
--BODY--
State: 0 {0}
[0] 0
[!0 & (1 | !1)] 1
State: 1 /* waiting */
[0] 0
[!(0)] 1
--END--
)";
  const auto ext = from_hoa(external);
  const Alphabet ap{"p", "q"};
  const auto internal = ltl_to_nba(parse("G F p", ap), ap);
  const auto ext_here = with_alphabet(ext, ap);
  // every lasso of bound 5 over AP = {p}
  std::size_t checked = 0;
  std::vector<Symbol> pre, cyc;
  std::function<void(std::size_t)> cycles, prefixes;
  prefixes = [&](std::size_t depth) {
    ASSERT_EQ(accepts_lasso(ext_here, pre, cyc), accepts_lasso(internal, pre, cyc))
        << test::lasso_text(pre, cyc);
    ++checked;
    if (depth == 5) return;
    for (Symbol a : {Symbol{0}, Symbol{1}}) {
      pre.push_back(a);
      prefixes(depth + 1);
      pre.pop_back();
    }
  };
  cycles = [&](std::size_t depth) {
    if (depth > 0) prefixes(0);
    if (depth == 5) return;
    for (Symbol a : {Symbol{0}, Symbol{1}}) {
      cyc.push_back(a);
      cycles(depth + 1);
      cyc.pop_back();
    }
  };
  cycles(0);
  EXPECT_EQ(checked, 63u * 62u);
}

TEST(Hoa, WithAlphabetRejectsMissingAtoms) {
  const Alphabet ap{"p"};
  const auto nba = ltl_to_nba(parse("F p", ap), ap);
  EXPECT_THROW(with_alphabet(nba, Alphabet{"q"}), ConfigError);
}

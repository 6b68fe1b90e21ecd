#include "fixtures.hpp"
#include "pba_instances.hpp"

#include <secureplan/oracle.hpp>
#include <secureplan/planner.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace secureplan;
using namespace secureplan::test;

namespace {

double path_cost(const ProductAutomaton& g, const std::vector<std::size_t>& run) {
  double c = 0.0;
  for (std::size_t k = 0; k + 1 < run.size(); ++k) {
    const auto w = pba_weight(g, run[k], run[k + 1]);
    if (!w) return std::numeric_limits<double>::quiet_NaN();
    c += *w;
  }
  return c;
}

// Recomputes a plan's costs from its edges.
void expect_consistent(const ProductAutomaton& g, const PrefixSuffixPlan& p) {
  ASSERT_FALSE(p.suffix.empty());
  EXPECT_TRUE(g.accepting[p.suffix.front()]);
  const std::size_t start = p.prefix.empty() ? p.suffix.front() : p.prefix.front();
  EXPECT_TRUE(std::binary_search(g.initial.begin(), g.initial.end(), start));
  std::vector<std::size_t> lead = p.prefix;
  lead.push_back(p.suffix.front());
  std::vector<std::size_t> loop = p.suffix;
  loop.push_back(p.suffix.front());
  EXPECT_NEAR(path_cost(g, lead), p.J_prefix, 1e-9);
  EXPECT_NEAR(path_cost(g, loop), p.J_suffix, 1e-9);
  EXPECT_DOUBLE_EQ(p.J, p.beta * p.J_prefix + (1.0 - p.beta) * p.J_suffix);
}

}  // namespace

TEST(Search, SingleAcceptingWithSelfLoop) {
  const auto g = graph(2, {0}, {1}, {{0, 1, 3.0}, {1, 1, 4.0}});
  const auto p = search_prefix_suffix(g, 0.5);
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(p->J, 3.5);
  EXPECT_EQ(p->prefix, (std::vector<std::size_t>{0}));
  EXPECT_EQ(p->suffix, (std::vector<std::size_t>{1}));
}

TEST(Search, PicksCheaperWeightedSum) {
  // acc 2: prefix 2, suffix 10; acc 3: prefix 5, suffix 4
  const auto g = graph(4, {0}, {2, 3}, {{0, 2, 2.0}, {2, 2, 10.0}, {0, 1, 1.0}, {1, 3, 4.0}, {3, 3, 4.0}});
  const auto p = search_prefix_suffix(g, 0.5);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->suffix.front(), 3u);
  EXPECT_DOUBLE_EQ(p->J, 4.5);
  EXPECT_DOUBLE_EQ(p->J_prefix, 5.0);
  EXPECT_DOUBLE_EQ(p->J_suffix, 4.0);
}

TEST(Search, TiesPreferShorterPrefixThenLowerState) {
  // beta = 0.5: acc 1 (pre 1, suf 3) and acc 2 (pre 3, suf 1) tie at J = 2
  const auto g = graph(4, {0}, {1, 2, 3},
                       {{0, 1, 1.0}, {1, 1, 3.0}, {0, 2, 3.0}, {2, 2, 1.0}, {0, 3, 1.0}, {3, 3, 3.0}});
  const auto p = search_prefix_suffix(g, 0.5);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->suffix.front(), 1u);
}

TEST(Search, InitialAcceptingStateHasEmptyPrefix) {
  const auto g = graph(2, {0}, {0}, {{0, 1, 1.0}, {1, 0, 2.0}});
  const auto p = search_prefix_suffix(g, 0.5);
  ASSERT_TRUE(p.has_value());
  EXPECT_TRUE(p->prefix.empty());
  EXPECT_EQ(p->suffix, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(p->J_suffix, 3.0);
}

TEST(Search, NoCycleThroughAcceptingMeansNoPlan) {
  const auto g = graph(3, {0}, {1}, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 2, 1.0}});
  EXPECT_FALSE(search_prefix_suffix(g, 0.5).has_value());
  EXPECT_THROW(search_prefix_suffix(g, 1.5), ConfigError);
}

TEST(Search, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(71);
  int with_plan = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto g = random_pba(rng);
    for (double beta : {0.5, 0.0, 1.0, 0.3}) {
      const auto want = brute_force(g, beta);
      const auto got = search_prefix_suffix(g, beta);
      ASSERT_EQ(want.has_value(), got.has_value()) << "trial " << trial << " beta " << beta;
      if (!got) continue;
      with_plan += beta == 0.5;
      EXPECT_NEAR(got->J, *want, 1e-9) << "trial " << trial << " beta " << beta;
      expect_consistent(g, *got);
    }
  }
  EXPECT_GE(with_plan, 60);
}

TEST(Search, RemovingAnEdgeNeverLowersCost) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_pba(rng);
    const auto before = search_prefix_suffix(g);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t a = 0; a < g.size(); ++a)
      for (std::size_t k = 0; k < g.succ[a].size(); ++k) edges.emplace_back(a, k);
    if (edges.empty()) continue;
    const auto [a, k] = edges[std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng)];
    g.succ[a].erase(g.succ[a].begin() + static_cast<long>(k));
    const auto after = search_prefix_suffix(g);
    if (!before) {
      EXPECT_FALSE(after.has_value());
    } else if (after) {
      EXPECT_GE(after->J, before->J - 1e-12);
    }
  }
}

TEST(Pba, SelfLoopAndEventually) {
  TransitionSystem ts(1);
  Alphabet ap{"p"};
  ts.add_state({0}, ap.bit("p"));
  ts.add_transition(0, 0, 1.0);
  ts.add_initial(0);
  const auto nba = ltl_to_nba(ltl::parse("F p", ap), ap);
  const auto pba = build_pba(ts, nba);
  const auto plan = search_prefix_suffix(pba);
  ASSERT_TRUE(plan.has_value());
  EXPECT_DOUBLE_EQ(plan->J_suffix, 1.0);
}

TEST(Pba, AvoidedStateHasNoIncomingTransitions) {
  TransitionSystem ts(1);
  Alphabet ap{"obs"};
  for (RegionId q = 0; q < 3; ++q) ts.add_state({q}, q == 1 ? ap.bit("obs") : 0);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) ts.add_transition(a, b, 1.0);
  ts.add_initial(0);
  const auto nba = ltl_to_nba(ltl::parse("G !obs", ap), ap);
  const auto pba = build_pba(ts, nba);
  for (std::size_t s = 0; s < pba.size(); ++s) {
    EXPECT_NE(pba.states[s].first, 1u);
    for (const auto& t : pba.succ[s]) EXPECT_NE(pba.states[t.target].first, 1u);
  }
  const auto plan = search_prefix_suffix(pba);
  ASSERT_TRUE(plan.has_value());
  for (auto x : system_states(pba, plan->suffix)) EXPECT_NE(x, 1u);
}

TEST(Pba, UnknownLabelAtomRejected) {
  TransitionSystem ts(1);
  ts.add_state({0}, Symbol{1} << 3);
  ts.add_initial(0);
  Alphabet ap{"p"};
  EXPECT_THROW(build_pba(ts, ltl_to_nba(ltl::parse("F p", ap), ap)), ConfigError);
}

TEST(Pba, StatesSortedAndProductRespectsGuards) {
  const Team team = casestudy_team();
  const auto gwts = build_gwts(team);
  const auto& ap = team.alphabet();
  const auto nba = ltl_to_nba(ltl::parse("G !obs_1 && F scan_2 && G F transmit_1", ap), ap);
  const auto pba = build_pba(gwts, nba);
  EXPECT_TRUE(std::is_sorted(pba.states.begin(), pba.states.end()));
  EXPECT_LE(pba.size(), gwts.size() * nba.size());
  for (std::size_t s = 0; s < pba.size(); ++s) {
    const auto [x, q] = pba.states[s];
    EXPECT_EQ(pba.accepting[s], static_cast<bool>(nba.accepting[q]));
    for (const auto& t : pba.succ[s]) {
      const auto [x2, q2] = pba.states[t.target];
      EXPECT_EQ(gwts.weight(x, x2), t.weight);
      const auto next = nba.successors(q, gwts.label(x2));
      EXPECT_TRUE(std::binary_search(next.begin(), next.end(), q2));
    }
  }
  const auto plan = search_prefix_suffix(pba);
  ASSERT_TRUE(plan.has_value());
  const auto [pre, cyc] = plan_trace(pba, gwts, *plan);
  EXPECT_TRUE(accepts_lasso(nba, pre, cyc));
  EXPECT_TRUE(ltl::eval_on_lasso(ltl::parse("G !obs_1 && F scan_2 && G F transmit_1", ap), pre, cyc));
}

TEST(Assemble, ReplayReproducesThePlan) {
  const Team team = casestudy_team();
  FeasibilityParams par;
  const auto [sys, cache] = prune_infeasible(build_gwts(team), team, par);
  const auto& ap = team.alphabet();
  const auto nba = ltl_to_nba(ltl::parse("G !obs_1 && G !obs_2 && F scan_1 && G F transmit_2", ap), ap);
  const auto pba = build_pba(sys, nba);
  const auto plan = search_prefix_suffix(pba);
  ASSERT_TRUE(plan.has_value());
  const auto b = assemble_trajectory(pba, sys, *plan, cache, team, par, 2);
  EXPECT_EQ(b.transitions(), plan->prefix.size() + 2 * plan->suffix.size());
  EXPECT_DOUBLE_EQ(b.duration(), par.t_f * static_cast<double>(b.transitions()));
  const auto& part = team.partition();
  std::vector<std::vector<Vector>> samples(team.num_agents());
  for (std::size_t r = 0; r < team.num_agents(); ++r) {
    EXPECT_EQ(b.x[r].cols(), static_cast<Eigen::Index>(b.transitions()) * par.N + 1);
    for (std::size_t k = 0; k < b.states.size(); ++k) {
      const RegionId q = sys.tuple(b.states[k])[r];
      EXPECT_LE((b.x[r].col(static_cast<Eigen::Index>(k) * par.N) - part.representative(q)).norm(), 1e-5);
    }
    for (Eigen::Index k = 0; k < b.x[r].cols(); ++k) samples[r].push_back(b.x[r].col(k));
  }
  oracle::GlobalPath discrete;
  for (auto x : b.states) discrete.push_back(sys.tuple(x));
  const auto replay = oracle::trajectory_to_path(samples, part);
  EXPECT_EQ(oracle::destutter(replay.path), oracle::destutter(discrete));
}

TEST(Assemble, MissingSegmentIsAConsistencyError) {
  const Team team = casestudy_team();
  FeasibilityParams par;
  const auto gwts = build_gwts(team);
  const auto& ap = team.alphabet();
  const auto pba = build_pba(gwts, ltl_to_nba(ltl::parse("G F transmit_1", ap), ap));
  const auto plan = search_prefix_suffix(pba);
  ASSERT_TRUE(plan.has_value());
  EXPECT_THROW(assemble_trajectory(pba, gwts, *plan, SegmentCache{}, team, par), ConsistencyError);
}

#include "fixtures.hpp"
#include "security_instances.hpp"

#include <secureplan/oracle.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace secureplan;
using namespace secureplan::test;

namespace {

struct Example1 {
  Team team = example1_team();
  TransitionSystem gwts = build_gwts(team);
  oracle::GlobalPath path(std::initializer_list<std::initializer_list<const char*>> states) const {
    oracle::GlobalPath p;
    for (auto s : states) p.push_back(regions(team.partition(), s));
    return p;
  }
};

// One agent; region 0 secret, region 1 public with the same observation,
// region 2 public with another observation.
SecurityInstance chain(bool copy_self_loop) {
  SecurityInstance inst;
  TransitionSystem ts(1);
  for (RegionId q = 0; q < 3; ++q) ts.add_state({q}, 0);
  ts.add_transition(0, 0, 1.0);
  ts.add_transition(1, 2, 1.0);
  ts.add_transition(2, 1, 1.0);
  if (copy_self_loop) ts.add_transition(1, 1, 1.0);
  ts.add_initial(0);
  ts.add_initial(1);
  inst.wts.push_back(std::move(ts));
  inst.sec.observation = {{0, 0, 1}};
  inst.sec.secret = {{true, false, false}};
  return inst;
}

}  // namespace

TEST(TypeB, Example1SecurePath) {
  Example1 ex;
  const auto v = oracle::check_type_b(ex.path({{"D", "E"}, {"E", "B"}}), ex.gwts, ex.team.security());
  EXPECT_TRUE(v.secure);
  EXPECT_TRUE(v.violations.empty());
}

TEST(TypeB, Example1ViolationsAtFirstStep) {
  Example1 ex;
  const auto v = oracle::check_type_b(ex.path({{"A", "B"}, {"F", "A"}}), ex.gwts, ex.team.security());
  EXPECT_FALSE(v.secure);
  ASSERT_EQ(v.violations.size(), 2u);
  EXPECT_EQ(v.violations[0], (oracle::Violation{0, 1}));
  EXPECT_EQ(v.violations[1], (oracle::Violation{1, 1}));
}

TEST(TypeB, NoSecretsIsVacuous) {
  Example1 ex;
  EXPECT_TRUE(oracle::check_type_b(ex.path({{"C", "D"}, {"D", "E"}, {"E", "E"}}), ex.gwts, ex.team.security()).secure);
}

TEST(TypeB, InvalidPathThrows) {
  Example1 ex;
  EXPECT_THROW(oracle::check_type_b(ex.path({{"C", "D"}, {"A", "A"}}), ex.gwts, ex.team.security()), StructuralError);
  EXPECT_THROW(oracle::check_type_b({}, ex.gwts, ex.team.security()), StructuralError);
}

TEST(TypeA, Example1SecurePathWitness) {
  Example1 ex;
  const auto tau = ex.path({{"D", "E"}, {"E", "B"}});
  const auto v = oracle::check_type_a(tau, ex.gwts, ex.team.security());
  ASSERT_TRUE(v.secure);
  EXPECT_TRUE(oracle::witness_valid(tau, v.witness, ex.gwts, ex.team.security()));
  // the witness from the example is also accepted
  EXPECT_TRUE(oracle::witness_valid(tau, ex.path({{"C", "E"}, {"B", "E"}}), ex.gwts, ex.team.security()));
}

TEST(TypeA, Example1NonSecurePath) {
  Example1 ex;
  const auto v = oracle::check_type_a(ex.path({{"A", "B"}, {"F", "A"}}), ex.gwts, ex.team.security());
  EXPECT_FALSE(v.secure);
  EXPECT_TRUE(v.witness.empty());
  EXPECT_EQ(v.exhausted_at, 1u);
}

TEST(TypeA, PublicPathHasSelfWitness) {
  Example1 ex;
  const auto tau = ex.path({{"C", "D"}, {"D", "E"}});
  const auto v = oracle::check_type_a(tau, ex.gwts, ex.team.security());
  ASSERT_TRUE(v.secure);
  EXPECT_TRUE(oracle::witness_valid(tau, tau, ex.gwts, ex.team.security()));
}

TEST(TypeA, AnchoredWitnessStartsInitially) {
  Example1 ex;
  // initial state is (D,E); (C,E) is not initial, so an anchored copy of
  // (D,E)->(E,B) must start at (D,E)
  const auto tau = ex.path({{"D", "E"}, {"E", "B"}});
  const auto v = oracle::check_type_a(tau, ex.gwts, ex.team.security(), true);
  ASSERT_TRUE(v.secure);
  EXPECT_EQ(v.witness.front(), ex.path({{"D", "E"}}).front());
}

TEST(TypeA, WitnessesReplayOnRandomInstances) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 80; ++trial) {
    auto inst = random_security_instance(rng);
    const auto g = product_gwts(inst.wts);
    for (int walk = 0; walk < 10; ++walk) {
      std::vector<std::size_t> ids = {std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)};
      while (ids.size() < 5 && !g.successors(ids.back()).empty()) {
        const auto& out = g.successors(ids.back());
        ids.push_back(out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)].target);
      }
      oracle::GlobalPath tau;
      for (auto s : ids) tau.push_back(g.tuple(s));
      const auto v = oracle::check_type_a(tau, g, inst.sec);
      if (v.secure) {
        EXPECT_TRUE(oracle::witness_valid(tau, v.witness, g, inst.sec));
      } else {
        ASSERT_TRUE(v.exhausted_at.has_value());
        EXPECT_LE(*v.exhausted_at, tau.size());
      }
    }
  }
}

TEST(TypeA, InvariantUnderObservationRenaming) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_security_instance(rng);
    SecurityInstance renamed = inst;
    for (auto& row : renamed.sec.observation)
      for (auto& y : row) y = 7 - 2 * y;
    const auto g = product_gwts(inst.wts);
    std::vector<std::size_t> ids;
    std::function<void()> extend = [&]() {
      oracle::GlobalPath tau;
      for (auto s : ids) tau.push_back(g.tuple(s));
      ASSERT_EQ(oracle::check_type_a(tau, g, inst.sec).secure, oracle::check_type_a(tau, g, renamed.sec).secure);
      ASSERT_EQ(oracle::check_type_b(tau, g, inst.sec).violations,
                oracle::check_type_b(tau, g, renamed.sec).violations);
      if (ids.size() == 3) return;
      for (const auto& t : g.successors(ids.back())) {
        ids.push_back(t.target);
        extend();
        ids.pop_back();
      }
    };
    for (std::size_t s = 0; s < g.size(); ++s) {
      ids = {s};
      extend();
    }
  }
}

TEST(Lasso, PublicCycleIsSecure) {
  Example1 ex;
  const auto v = oracle::check_lasso(ex.path({{"D", "E"}}), ex.path({{"C", "D"}, {"D", "E"}}), ex.gwts,
                                     ex.team.security(), true);
  EXPECT_EQ(v.type_a, oracle::LassoTypeA::Secure);
  EXPECT_TRUE(v.type_b.secure);
  EXPECT_TRUE(v.secure());
  EXPECT_EQ(v.witness_period, 1u);
}

TEST(Lasso, DistinguishesMissingPeriodicWitness) {
  const auto with_loop = chain(true);
  const auto without = chain(false);
  const oracle::GlobalPath cycle = {{0}};
  EXPECT_EQ(oracle::check_lasso({}, cycle, without.wts[0], without.sec).type_a,
            oracle::LassoTypeA::PeriodicWitnessNotFound);
  EXPECT_EQ(oracle::check_lasso({}, cycle, with_loop.wts[0], with_loop.sec).type_a, oracle::LassoTypeA::Secure);

  SecurityInstance alone = without;
  alone.sec.observation = {{0, 1, 1}};
  EXPECT_EQ(oracle::check_lasso({}, cycle, alone.wts[0], alone.sec).type_a, oracle::LassoTypeA::Insecure);
}

TEST(Lasso, RejectsBrokenCycle) {
  Example1 ex;
  EXPECT_THROW(oracle::check_lasso({}, ex.path({{"C", "D"}, {"A", "A"}}), ex.gwts, ex.team.security()),
               StructuralError);
  EXPECT_THROW(oracle::check_lasso(ex.path({{"C", "D"}}), {}, ex.gwts, ex.team.security()), StructuralError);
}

// An infinite copy exists iff a finite copy exists for an unrolling longer
// than the number of (position, copy state) pairs.
TEST(Lasso, AgreesWithLongUnrolling) {
  std::mt19937_64 rng(31);
  std::size_t secure = 0, total = 0;
  for (int trial = 0; trial < 150; ++trial) {
    auto inst = random_security_instance(rng);
    const auto g = product_gwts(inst.wts);
    for (int walk = 0; walk < 5; ++walk) {
      // random lasso: walk until a state repeats
      std::vector<std::size_t> ids = {std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)};
      std::size_t loop = 0;
      bool closed = false;
      while (!closed && !g.successors(ids.back()).empty()) {
        const auto& out = g.successors(ids.back());
        const auto next = out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)].target;
        auto it = std::find(ids.begin(), ids.end(), next);
        if (it != ids.end()) {
          loop = static_cast<std::size_t>(it - ids.begin());
          closed = true;
        } else {
          ids.push_back(next);
        }
      }
      if (!closed) continue;
      oracle::GlobalPath prefix, cycle;
      for (std::size_t k = 0; k < ids.size(); ++k) (k < loop ? prefix : cycle).push_back(g.tuple(ids[k]));
      const auto v = oracle::check_lasso(prefix, cycle, g, inst.sec);
      const std::size_t horizon = (prefix.size() + cycle.size()) * g.size() + 1;
      const auto unrolled = oracle::unroll(prefix, cycle, horizon);
      const bool finite = oracle::check_type_a(unrolled, g, inst.sec).secure;
      ++total;
      ASSERT_EQ(v.type_a == oracle::LassoTypeA::Secure, finite);
      if (v.type_a == oracle::LassoTypeA::Secure) {
        ++secure;
        ASSERT_EQ(v.witness_cycle.size() % cycle.size(), 0u);
        const auto copy = oracle::unroll(v.witness_prefix, v.witness_cycle, horizon);
        EXPECT_TRUE(oracle::witness_valid(unrolled, copy, g, inst.sec));
      }
    }
  }
  EXPECT_GT(secure, 0u);
  EXPECT_LT(secure, total);
}

TEST(Projection, ConstantTrajectory) {
  const auto part = casestudy_partition();
  std::vector<std::vector<Vector>> x = {std::vector<Vector>(10, vec({2.0, 1.0}))};
  const auto p = oracle::trajectory_to_path(x, part);
  ASSERT_EQ(p.path.size(), 1u);
  EXPECT_EQ(p.path[0], Tuple{3});
  EXPECT_TRUE(p.repeats);
}

TEST(Projection, CrossingAssignsFacetSampleToSuccessor) {
  const auto part = casestudy_partition();
  // q4 -> q5 across x1 = 4, on the facet at sample 2
  std::vector<std::vector<Vector>> x = {
      {vec({3.0, 1.0}), vec({3.5, 1.0}), vec({4.0, 1.0}), vec({4.5, 1.0}), vec({5.0, 1.0})},
      {vec({2.0, 1.0}), vec({2.0, 1.0}), vec({2.0, 1.0}), vec({2.0, 1.0}), vec({2.0, 1.0})}};
  const auto p = oracle::trajectory_to_path(x, part);
  ASSERT_EQ(p.path.size(), 2u);
  EXPECT_EQ(p.path[0], (Tuple{3, 3}));
  EXPECT_EQ(p.path[1], (Tuple{4, 3}));
  EXPECT_EQ(p.switch_samples, (std::vector<std::size_t>{0, 2}));
}

TEST(Projection, OutsideWorkspaceThrows) {
  const auto part = casestudy_partition();
  std::vector<std::vector<Vector>> x = {{vec({2.0, 1.0}), vec({-1.0, 1.0})}};
  EXPECT_THROW(oracle::trajectory_to_path(x, part), GeometryError);
}

TEST(Projection, Destutter) {
  const oracle::GlobalPath p = {{1, 2}, {1, 2}, {3, 2}, {3, 2}, {1, 2}};
  EXPECT_EQ(oracle::destutter(p), (oracle::GlobalPath{{1, 2}, {3, 2}, {1, 2}}));
}

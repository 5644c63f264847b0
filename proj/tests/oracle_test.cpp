#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ehcoop/errors.hpp"
#include "ehcoop/optimizer.hpp"
#include "ehcoop/oracle.hpp"

namespace ehcoop {
namespace {

ScenarioConfig one_slot(double alpha, double b_max, double rs_bar) {
  ScenarioConfig cfg;
  cfg.n_slots = 1;
  cfg.alpha = alpha;
  cfg.b_max = b_max;
  cfg.rs_bar = rs_bar;
  return cfg;
}

TEST(BruteForce, StrongRelayTakesAllPrimaryEnergy) {
  const auto cfg = one_slot(1.0, 10.0, std::log(1.5));
  const ChannelRealization ch{{1.0}, {2.0}, {1.0}};
  const HarvestRealization hv{{2.0}, {0.0}};
  const auto r = brute_force_solve(cfg, ch, hv, 0.01);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.policy.p_d[0], 0.0, 1e-3);
  EXPECT_NEAR(r.policy.delta_r[0], 2.0, 1e-3);
  EXPECT_NEAR(r.policy.p_sp[0], 1.5, 1e-3);
  EXPECT_NEAR(r.policy.p_ss[0], 0.5, 1e-3);
  EXPECT_NEAR(r.objective, std::log(4.0), 1e-3);
}

TEST(BruteForce, StrongDirectLinkKeepsEnergy) {
  const auto cfg = one_slot(1.0, 10.0, 0.0);
  const ChannelRealization ch{{2.0}, {1.0}, {1.0}};
  const HarvestRealization hv{{3.0}, {0.0}};
  const auto r = brute_force_solve(cfg, ch, hv);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.policy.delta_r[0], 0.0, 1e-6);
  EXPECT_NEAR(r.policy.p_d[0], 3.0, 1e-4);
}

TEST(BruteForce, ZeroHarvests) {
  auto cfg = one_slot(0.5, 1.0, 0.0);
  cfg.n_slots = 2;
  const ChannelRealization ch{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
  const HarvestRealization hv{{0.0, 0.0}, {0.0, 0.0}};
  const auto free = brute_force_solve(cfg, ch, hv);
  EXPECT_TRUE(free.feasible);
  EXPECT_NEAR(free.objective, 0.0, 1e-5);
  cfg.rs_bar = 0.1;
  EXPECT_FALSE(brute_force_solve(cfg, ch, hv).feasible);
}

TEST(BruteForce, RejectsLongHorizon) {
  ScenarioConfig cfg;
  cfg.n_slots = 4;
  const ChannelRealization ch{{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}};
  const HarvestRealization hv{{1, 1, 1, 1}, {0, 0, 0, 0}};
  EXPECT_THROW(brute_force_solve(cfg, ch, hv), ConfigError);
}

TEST(BruteForce, RejectsOversizedGrid) {
  auto cfg = one_slot(1.0, 1e6, 0.0);
  cfg.n_slots = 3;
  const ChannelRealization ch{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  const HarvestRealization hv{{1000, 1000, 1000}, {0, 0, 0}};
  EXPECT_THROW(brute_force_solve(cfg, ch, hv, 1e-3), BudgetExceeded);
}

TEST(BruteForce, MatchesSolverOnShortHorizons) {
  ScenarioConfig cfg;
  cfg.n_slots = 2;
  cfg.rs_bar = 0.3;
  for (std::uint64_t i = 0; i < 6; ++i) {
    const auto inst = sample_realization(cfg, 7, i);
    const auto o = brute_force_solve(cfg, inst.channels, inst.harvests);
    const auto s = solve(cfg, inst.channels, inst.harvests);
    ASSERT_EQ(o.feasible, s.converged) << "instance " << i;
    if (!o.feasible) continue;
    EXPECT_LE(std::abs(o.objective - s.objective) / std::max(1.0, o.objective), 1e-2)
        << "instance " << i;
    const auto res = constraint_residuals(cfg, inst.channels, inst.harvests, o.policy, 0.0);
    EXPECT_TRUE(res.feasible(1e-5)) << "instance " << i;
  }
}

TEST(BruteForce, WorkerCountDoesNotChangeResult) {
  ScenarioConfig cfg;
  cfg.n_slots = 2;
  const auto inst = sample_realization(cfg, 5, 1);
  const auto a = brute_force_solve(cfg, inst.channels, inst.harvests, 0.0, 1);
  const auto b = brute_force_solve(cfg, inst.channels, inst.harvests, 0.0, 3);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.policy.delta_r, b.policy.delta_r);
}

TEST(BruteForce, RefinementIsStable) {
  ScenarioConfig cfg;
  cfg.n_slots = 2;
  cfg.theta_p = 1.0;
  const auto inst = sample_realization(cfg, 9, 0);
  const auto coarse = brute_force_solve(cfg, inst.channels, inst.harvests, 0.28);
  const auto fine = brute_force_solve(cfg, inst.channels, inst.harvests, 0.14);
  ASSERT_TRUE(coarse.feasible);
  EXPECT_LE(fine.objective - coarse.objective, 1e-2);
}

}  // namespace
}  // namespace ehcoop

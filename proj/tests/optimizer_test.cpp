#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "ehcoop/analysis.hpp"
#include "ehcoop/errors.hpp"
#include "ehcoop/optimizer.hpp"
#include "ehcoop/reference.hpp"

namespace ehcoop {
namespace {

using Vec = std::vector<double>;

double total(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Layer1Primal, ClosedForm) {
  constexpr double cap = 1e6;
  EXPECT_NEAR(layer1_primal(Vec{1}, Vec{1}, Vec{0}, Vec{0.5}, cap)[0], 1.0, 1e-12);
  EXPECT_EQ(layer1_primal(Vec{1}, Vec{1}, Vec{0}, Vec{2.0}, cap)[0], 0.0);
  EXPECT_NEAR(layer1_primal(Vec{2}, Vec{1}, Vec{1}, Vec{0.5}, cap)[0], 1.0, 1e-12);
}

TEST(Layer1Primal, TailSumsAndGuards) {
  // Tail sums 0.5 and 0.25 give levels 2 and 4.
  const auto p = layer1_primal(Vec{1, 1, 0}, Vec{1, 1, 1}, Vec{0, 0, 0}, Vec{0.25, 0.25, 0.0}, 7.0);
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 3.0, 1e-12);
  EXPECT_EQ(p[2], 0.0);  // zero gain
  const auto capped = layer1_primal(Vec{1}, Vec{1}, Vec{0}, Vec{0.0}, 7.0);
  EXPECT_NEAR(capped[0], 6.0, 1e-12);
}

TEST(Layer1DualUpdate, Examples) {
  EXPECT_EQ(layer1_dual_update(Vec{0.3, 0.2}, Vec{1, 1}, Vec{0, 0}, Vec{1, 1}, 0.1),
            (Vec{0.3, 0.2}));
  EXPECT_NEAR(layer1_dual_update(Vec{0.0}, Vec{2.0}, Vec{0.0}, Vec{1.0}, 0.1)[0], 0.1, 1e-12);
  EXPECT_EQ(layer1_dual_update(Vec{0.05}, Vec{0.0}, Vec{0.0}, Vec{1.0}, 0.1)[0], 0.0);
}

TEST(Layer2Primal, ClosedForm) {
  constexpr double cap = 1e6;
  const auto a = layer2_primal(Vec{1}, Vec{1}, Vec{4}, Vec{0}, 1.0, Vec{0.5}, Vec{0.0}, cap);
  EXPECT_NEAR(a.p_sp[0], 1.0, 1e-12);
  EXPECT_NEAR(a.p_ss[0], 1.75, 1e-12);
  const auto b = layer2_primal(Vec{1, 2}, Vec{1, 3}, Vec{4, 5}, Vec{0, 0}, 0.0, Vec{0.2, 0.3},
                               Vec{0.1, 0.1}, cap);
  EXPECT_EQ(b.p_ss, (Vec{0, 0}));
}

TEST(Layer2Primal, BatteryMultiplierLowersDenominator) {
  // D_1 = (0.4 + 0.3) - 0.2 = 0.5, D_2 = 0.3.
  const auto a = layer2_primal(Vec{1, 1}, Vec{1, 1}, Vec{1, 1}, Vec{0, 0}, 0.0, Vec{0.4, 0.3},
                               Vec{0.0, 0.2}, 1e6);
  EXPECT_NEAR(a.p_sp[0], 1.0, 1e-12);
  EXPECT_NEAR(a.p_sp[1], 1.0 / 0.3 - 1.0, 1e-12);
}

class Layer2DualUpdate : public ::testing::Test {
 protected:
  Layer2DualUpdate() {
    cfg.n_slots = 1;
    cfg.b_max = 2.0;
    cfg.rs_bar = 0.5;
  }
  ScenarioConfig cfg;
  ChannelRealization ch{{1.0}, {1.0}, {1.0}};
  HarvestRealization hv{{0.0}, {0.0}};
};

TEST_F(Layer2DualUpdate, SecondaryShortfallRaisesLambda) {
  DualState d{0.0, {0.0}, {0.4}, {0.0}};
  const auto out = layer2_dual_update(d, PowerPolicy::zeros(1), ch, hv, cfg, 0.2);
  EXPECT_NEAR(out.lambda, 0.1, 1e-12);
  EXPECT_NEAR(out.gamma[0], 0.4, 1e-12);
}

TEST_F(Layer2DualUpdate, SlackBatteryShrinksGammaPrime) {
  cfg.rs_bar = 0.0;
  DualState d{0.0, {0.0}, {0.0}, {0.3}};
  const auto out = layer2_dual_update(d, PowerPolicy::zeros(1), ch, hv, cfg, 0.1);
  EXPECT_NEAR(out.gamma_prime[0], 0.1, 1e-12);
}

TEST_F(Layer2DualUpdate, FixedPointWhenResidualsVanish) {
  cfg.rs_bar = std::log(2.0);
  cfg.b_max = 1.0;
  hv = {{0.0}, {1.0}};
  PowerPolicy p = PowerPolicy::zeros(1);
  p.p_ss[0] = 1.0;
  DualState d{0.7, {0.0}, {0.4}, {0.2}};
  const auto out = layer2_dual_update(d, p, ch, hv, cfg, 0.5);
  EXPECT_NEAR(out.lambda, 0.7, 1e-12);
  EXPECT_NEAR(out.gamma[0], 0.4, 1e-12);
  EXPECT_NEAR(out.gamma_prime[0], 0.2, 1e-12);
}

TEST(Layer3Update, Examples) {
  EXPECT_EQ(layer3_update(Vec{1.0, 2.0}, Vec{0, 0}, Vec{0, 0}, Vec{0, 0}, 0.5, 0.3),
            (Vec{1.0, 2.0}));
  EXPECT_NEAR(layer3_update(Vec{1.0}, Vec{2.0}, Vec{0.0}, Vec{0.0}, 0.5, 0.4)[0], 0.2, 1e-12);
  EXPECT_EQ(layer3_update(Vec{0.1}, Vec{2.0}, Vec{0.0}, Vec{0.0}, 0.5, 0.4)[0], 0.0);
}

TEST(Layer3Update, TailSumUsesAlpha) {
  // tail(1) = (1 - 0.5*1 + 0.5*0) + (0 - 0.5*2 + 0.5*1) = 0.
  const auto d = layer3_update(Vec{1.0, 1.0}, Vec{1.0, 0.0}, Vec{1.0, 2.0}, Vec{0.0, 1.0}, 0.5,
                               0.1);
  EXPECT_NEAR(d[0], 1.0, 1e-12);
  EXPECT_NEAR(d[1], 1.05, 1e-12);
  const auto g = transfer_supergradient(Vec{1.0, 0.0}, Vec{1.0, 2.0}, Vec{0.0, 1.0}, 0.5);
  EXPECT_NEAR(g[0], 0.0, 1e-12);
  EXPECT_NEAR(g[1], 0.5, 1e-12);
}

TEST(Solve, NoEnergy) {
  ScenarioConfig cfg;
  cfg.n_slots = 3;
  const ChannelRealization ch{{1, 2, 3}, {3, 2, 1}, {1, 1, 1}};
  const HarvestRealization hv{{0, 0, 0}, {0, 0, 0}};
  for (double rs : {0.0, 0.5}) {
    cfg.rs_bar = rs;
    const auto r = solve(cfg, ch, hv);
    EXPECT_EQ(total(r.policy.p_d) + total(r.policy.p_sp) + total(r.policy.p_ss), 0.0);
    EXPECT_EQ(r.objective, 0.0);
    EXPECT_EQ(r.cooperation_successful, rs == 0.0);
  }
}

TEST(Solve, SingleSlotRelayTakesEverything) {
  ScenarioConfig cfg;
  cfg.n_slots = 1;
  cfg.alpha = 1.0;
  cfg.b_max = 10.0;
  cfg.rs_bar = 0.0;
  const ChannelRealization ch{{1.0}, {3.0}, {1.0}};
  const HarvestRealization hv{{2.0}, {0.0}};
  const auto r = solve(cfg, ch, hv);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.policy.p_d[0], 0.0, 1e-4);
  EXPECT_NEAR(r.policy.delta_r[0], 2.0, 1e-4);
  EXPECT_NEAR(r.policy.p_sp[0], 2.0, 1e-4);
  EXPECT_NEAR(r.objective, std::log(7.0), 1e-4);
}

TEST(Solve, WorkedExample) {
  const auto cfg = worked_example_config();
  const auto inst = worked_example_instance();
  const auto r = solve(cfg, inst.channels, inst.harvests);
  ASSERT_TRUE(r.converged);
  EXPECT_TRUE(r.cooperation_successful);
  EXPECT_GE(r.objective, 19.161 - 1e-2);
  const auto& p = r.policy;
  EXPECT_NEAR(total(p.p_d) + total(p.delta_r), 14.0, 1e-2);
  EXPECT_NEAR(total(p.p_sp) + total(p.p_ss),
              total(inst.harvests.e_s) + cfg.alpha * total(p.delta_r), 1e-2);
  EXPECT_NEAR(r.baseline.r_p_bar, 3.0073, 1e-3);
}

TEST(Solve, InfoOnlyNeverTransfers) {
  const auto cfg = worked_example_config();
  const auto inst = worked_example_instance();
  const auto r = solve(cfg, inst.channels, inst.harvests, CooperationMode::kInfoOnly);
  EXPECT_EQ(r.mode, CooperationMode::kInfoOnly);
  for (double d : r.policy.delta_r) EXPECT_EQ(d, 0.0);
}

TEST(Solve, UnreachableSecondaryTargetIsInfeasible) {
  ScenarioConfig cfg;
  cfg.n_slots = 3;
  cfg.rs_bar = 50.0;
  const auto inst = sample_realization(cfg, 3, 0);
  const auto r = solve(cfg, inst.channels, inst.harvests);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.cooperation_successful);
  EXPECT_EQ(r.status, SolveStatus::kInfeasible);
  EXPECT_DOUBLE_EQ(r.effective_rate, r.baseline.r_p_bar);
}

TEST(Solve, RejectsMismatchedInstance) {
  ScenarioConfig cfg;
  cfg.n_slots = 2;
  const ChannelRealization ch{{1}, {1}, {1}};
  const HarvestRealization hv{{1}, {1}};
  EXPECT_THROW(solve(cfg, ch, hv), ShapeError);
}

TEST(Solve, Deterministic) {
  ScenarioConfig cfg;
  const auto inst = sample_realization(cfg, 21, 4);
  const auto a = solve(cfg, inst.channels, inst.harvests);
  const auto b = solve(cfg, inst.channels, inst.harvests);
  EXPECT_EQ(a.policy.p_d, b.policy.p_d);
  EXPECT_EQ(a.policy.delta_r, b.policy.delta_r);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Solve, BestObjectiveTraceIsMonotone) {
  auto cfg = worked_example_config();
  cfg.solver.record_trace = true;
  const auto inst = worked_example_instance();
  const auto r = solve(cfg, inst.channels, inst.harvests);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].best_objective, r.trace[i - 1].best_objective);
  }
}

TEST(Solve, DualGradientInnerAgrees) {
  auto cfg = worked_example_config();
  const auto inst = worked_example_instance();
  const auto exact = solve(cfg, inst.channels, inst.harvests);
  cfg.solver.inner_method = InnerMethod::kDualGradient;
  cfg.solver.max_inner_iters = 1000;
  const auto approx = solve(cfg, inst.channels, inst.harvests);
  EXPECT_NEAR(approx.objective, exact.objective, 0.1);
}

// Properties over random instances at the default scenario.
class RandomSolves : public ::testing::TestWithParam<double> {};

TEST_P(RandomSolves, CertificatesHold) {
  ScenarioConfig cfg;
  cfg.rs_bar = GetParam();
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto inst = sample_realization(cfg, 101, i);
    const auto& ch = inst.channels;
    const auto& hv = inst.harvests;
    const auto joint = solve(cfg, ch, hv);
    const auto info = solve(cfg, ch, hv, CooperationMode::kInfoOnly);
    if (joint.converged) {
      EXPECT_TRUE(joint.residuals.feasible(cfg.solver.feas_tol)) << "instance " << i;
      EXPECT_TRUE(check_kkt(joint, cfg, ch, hv).passed(cfg.solver.feas_tol)) << "instance " << i;
      EXPECT_TRUE(check_propositions(joint, cfg, ch, hv, 10 * cfg.solver.feas_tol).passed())
          << "instance " << i;
    }
    if (joint.converged && info.converged) {
      EXPECT_GE(joint.objective, info.objective - cfg.solver.feas_tol) << "instance " << i;
    }
    if (joint.cooperation_successful) {
      EXPECT_GE(joint.objective,
                cfg.n_slots * joint.baseline.r_p_bar - cfg.solver.feas_tol);
    }
    EXPECT_NE(joint.status, SolveStatus::kIterationLimit) << "instance " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(SecondaryTargets, RandomSolves, ::testing::Values(0.0, 0.5, 1.5));

TEST(StatusNames, Strings) {
  EXPECT_STREQ(to_string(SolveStatus::kConverged), "converged");
  EXPECT_STREQ(to_string(SolveStatus::kInfeasible), "infeasible");
  EXPECT_STREQ(to_string(SolveStatus::kIterationLimit), "iteration_limit");
  EXPECT_STREQ(to_string(CooperationMode::kInfoOnly), "info_only");
}

}  // namespace
}  // namespace ehcoop

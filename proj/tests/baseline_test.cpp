#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ehcoop/baseline.hpp"
#include "ehcoop/errors.hpp"
#include "ehcoop/reference.hpp"

namespace ehcoop {
namespace {

TEST(SolveNoCoop, SingleSlotSpendsEverything) {
  const std::vector<double> h{1.0}, e{3.0};
  const auto r = solve_no_coop(h, e);
  EXPECT_NEAR(r.p_d_prime[0], 3.0, 1e-12);
  EXPECT_NEAR(r.r_p_bar, std::log(4.0), 1e-12);
}

TEST(SolveNoCoop, EqualGainsSplitEvenly) {
  const std::vector<double> h{1.0, 1.0}, e{2.0, 0.0};
  const auto r = solve_no_coop(h, e);
  EXPECT_NEAR(r.p_d_prime[0], 1.0, 1e-12);
  EXPECT_NEAR(r.p_d_prime[1], 1.0, 1e-12);
}

TEST(SolveNoCoop, CausalityBlocksEarlySpending) {
  const std::vector<double> h{1.0, 1.0}, e{0.0, 2.0};
  const auto r = solve_no_coop(h, e);
  EXPECT_NEAR(r.p_d_prime[0], 0.0, 1e-12);
  EXPECT_NEAR(r.p_d_prime[1], 2.0, 1e-12);
}

TEST(SolveNoCoop, ZeroGainSlotGetsNothing) {
  const std::vector<double> h{0.0, 2.0}, e{1.0, 0.0};
  const auto r = solve_no_coop(h, e);
  EXPECT_EQ(r.p_d_prime[0], 0.0);
  EXPECT_NEAR(r.p_d_prime[1], 1.0, 1e-12);
}

TEST(SolveNoCoop, NoEnergyGivesZeroRate) {
  const std::vector<double> h{1.0, 2.0, 3.0}, e{0.0, 0.0, 0.0};
  const auto r = solve_no_coop(h, e);
  EXPECT_EQ(r.r_p_bar, 0.0);
  for (double p : r.p_d_prime) EXPECT_EQ(p, 0.0);
}

TEST(SolveNoCoop, RejectsMismatchedLengths) {
  const std::vector<double> h{1.0, 2.0}, e{1.0};
  EXPECT_THROW(solve_no_coop(h, e), ShapeError);
}

TEST(SolveNoCoop, RejectsNegativeHarvest) {
  const std::vector<double> h{1.0}, e{-1.0};
  EXPECT_THROW(solve_no_coop(h, e), DomainError);
}

TEST(SolveNoCoop, WorkedInstance) {
  const auto inst = worked_example_instance();
  const auto r = solve_no_coop(inst.channels.h_p, inst.harvests.e_p);
  EXPECT_NEAR(r.r_p_bar, 3.0073, 1e-3);
  const std::vector<double> expected{2.43269, 2.36004, 2.20727, 3.33368, 3.66632};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(r.p_d_prime[i], expected[i], 1e-3) << "slot " << i;
  }
}

TEST(SolveNoCoop, LevelsNonDecreasingAndCausal) {
  const std::vector<double> h{3.0, 0.5, 2.0, 1.0, 4.0, 0.2};
  const std::vector<double> e{1.0, 0.0, 2.0, 0.5, 0.0, 1.0};
  const auto r = solve_no_coop(h, e);
  double spent = 0.0, harvested = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    spent += r.p_d_prime[i];
    harvested += e[i];
    EXPECT_LE(spent, harvested + 1e-12);
    if (i + 1 < h.size()) EXPECT_LE(r.water_levels[i], r.water_levels[i + 1] + 1e-9);
  }
  EXPECT_NEAR(spent, harvested, 1e-9);
}

}  // namespace
}  // namespace ehcoop

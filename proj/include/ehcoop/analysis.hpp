#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ehcoop/model.hpp"
#include "ehcoop/optimizer.hpp"

namespace ehcoop {

// Structural properties every optimal cooperative policy satisfies.
struct PropositionAudit {
  // False for non-converged reports; the numbers are then advisory.
  bool applicable = true;
  double prop1_gap = 0.0;  // |N Rs_bar - sum ln(1 + h_ss P_ss)|
  double prop2_gap = 0.0;  // |sum (P_d + delta_r) - sum E_p|
  double prop3_gap = 0.0;  // |sum (P_sp + P_ss) - sum E_s - alpha sum delta_r|
  // Slots with h_p > h_sp where both delta_r and P_sp exceed tol.
  std::vector<std::size_t> prop4_violations;
  // Slots with h_p < alpha h_sp and a non-full battery where P_d exceeds tol.
  std::vector<std::size_t> prop5_violations;
  double tol = 0.0;

  bool passed() const;
};

PropositionAudit audit_policy(const PowerPolicy& policy, const ScenarioConfig& cfg,
                              const ChannelRealization& channels,
                              const HarvestRealization& harvests, double tol);

PropositionAudit check_propositions(const SolveReport& report, const ScenarioConfig& cfg,
                                    const ChannelRealization& channels,
                                    const HarvestRealization& harvests, double tol);

// Stationarity and complementary slackness of the returned primal/dual pair.
struct KktAudit {
  bool applicable = true;
  // Largest |closed form - returned| over slots where the returned power is
  // positive.
  double stationarity = 0.0;
  // Largest closed-form value at slots the solver left at zero.
  double clamp = 0.0;
  // Largest |multiplier x residual| over the lambda, mu, gamma, gamma' families.
  double complementarity = 0.0;

  bool passed(double feas_tol) const;
};

KktAudit check_kkt(const SolveReport& report, const ScenarioConfig& cfg,
                   const ChannelRealization& channels, const HarvestRealization& harvests);

// Runs fn(i) for i in [0, count) on up to `workers` threads and returns the
// results in index order, so any reduction over them is worker-independent.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, Fn&& fn);

double cooperation_probability(const ScenarioConfig& cfg, std::size_t realizations,
                               CooperationMode mode, std::uint64_t master_seed,
                               std::size_t workers = 1);

struct SweepPoint {
  double parameter = 0.0;
  double rate_joint = 0.0;   // mean effective primary rate
  double rate_info = 0.0;
  double rate_nocoop = 0.0;
  double p_joint = 0.0;      // cooperation probability
  double p_info = 0.0;
};

struct SweepResult {
  std::string parameter;     // "rs_bar" or "b_max"
  std::vector<SweepPoint> points;
  std::size_t realizations = 0;
  std::uint64_t master_seed = 0;
};

// Both modes on the same realizations for every grid value of rs_bar.
SweepResult cooperation_sweep(const ScenarioConfig& cfg, std::span<const double> rs_grid,
                              std::size_t realizations, std::uint64_t master_seed,
                              std::size_t workers = 1);

// Both modes on the same realizations for every grid value of b_max
// (ascending).
SweepResult battery_sweep(const ScenarioConfig& cfg, std::span<const double> bmax_grid,
                          std::size_t realizations, std::uint64_t master_seed,
                          std::size_t workers = 1);

struct RegionPoint {
  double rs_bar = 0.0;
  double rp_joint = 0.0;  // NaN when the mode was not requested
  double rp_info = 0.0;
  double rp_nocoop = 0.0;
};

// Achieved average primary rate against the secondary target on one fixed
// realization; a failed cooperation records the no-cooperation rate.
std::vector<RegionPoint> rate_region(const ScenarioConfig& cfg, const Instance& realization,
                                     std::span<const double> rs_grid, bool joint, bool info,
                                     std::size_t workers = 1);

// Largest rs_bar at which cooperation still succeeds, by bisection on
// [0, rs_hi]. Returns 0 if it fails even at rs_bar = 0.
double cooperation_cutoff(const ScenarioConfig& cfg, const Instance& realization,
                          CooperationMode mode, double rs_hi, double tol = 1e-4);

}  // namespace ehcoop

#include "ehcoop/detail/parallel_map.hpp"

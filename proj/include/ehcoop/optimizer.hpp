#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ehcoop/baseline.hpp"
#include "ehcoop/model.hpp"

namespace ehcoop {

enum class CooperationMode {
  kJoint,     // information and energy cooperation
  kInfoOnly,  // delta_r pinned to zero, Layer 3 disabled
};

// Multipliers of the secondary-rate constraint (lambda), PT energy causality
// (mu), ST energy causality (gamma) and the ST battery limit (gamma_prime).
struct DualState {
  double lambda = 1.0;
  std::vector<double> mu;
  std::vector<double> gamma;
  std::vector<double> gamma_prime;

  // lambda = 1 and 1/N everywhere else.
  static DualState initial(std::size_t n);
};

enum class SolveStatus {
  kConverged,
  kInfeasible,      // no transfer profile meets the secondary rate / battery
  kIterationLimit,  // ran out of outer iterations
};

struct TraceEntry {
  std::size_t iteration = 0;
  double objective = 0.0;       // sum R_pc of this iterate
  double best_objective = 0.0;  // best feasible so far (-inf before the first)
  double max_residual = 0.0;
};

struct SolveReport {
  PowerPolicy policy;
  DualState duals;
  RateSummary rates;
  ConstraintResiduals residuals;
  BaselineResult baseline;
  double objective = 0.0;
  // Average primary rate PU ends up with: objective / N when cooperation
  // succeeds, otherwise the no-cooperation rate it falls back to.
  double effective_rate = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  bool cooperation_successful = false;
  SolveStatus status = SolveStatus::kIterationLimit;
  CooperationMode mode = CooperationMode::kJoint;
  std::vector<TraceEntry> trace;
};

// Layer 1 closed form: P_d_i = [1/sum_{k>=i} mu_k - 1/h_p_i - (h_sp_i/h_p_i) P_sp_i]^+.
// A tail sum below 1e-12 is replaced by the level `level_cap`.
std::vector<double> layer1_primal(std::span<const double> h_p, std::span<const double> h_sp,
                                  std::span<const double> p_sp, std::span<const double> mu,
                                  double level_cap);

// Projected gradient step on the PT causality multipliers.
std::vector<double> layer1_dual_update(std::span<const double> mu, std::span<const double> p_d,
                                       std::span<const double> delta_r,
                                       std::span<const double> e_p, double step);

struct RelayAllocation {
  std::vector<double> p_sp;
  std::vector<double> p_ss;
};

// Layer 2 closed forms with D_i = sum_{k>=i} gamma_k - sum_{k>i} gamma'_k:
// P_sp_i = [1/D_i - 1/h_sp_i - (h_p_i/h_sp_i) P_d_i]^+, P_ss_i = [lambda/D_i - 1/h_ss_i]^+.
RelayAllocation layer2_primal(std::span<const double> h_p, std::span<const double> h_sp,
                              std::span<const double> h_ss, std::span<const double> p_d,
                              double lambda, std::span<const double> gamma,
                              std::span<const double> gamma_prime, double level_cap);

// Projected gradient steps on lambda, gamma and gamma'. mu is copied through.
DualState layer2_dual_update(const DualState& duals, const PowerPolicy& policy,
                             const ChannelRealization& channels,
                             const HarvestRealization& harvests, const ScenarioConfig& cfg,
                             double step);

// Layer 3 projected subgradient step on the transfer vector.
std::vector<double> layer3_update(std::span<const double> delta_r, std::span<const double> mu,
                                  std::span<const double> gamma,
                                  std::span<const double> gamma_prime, double alpha,
                                  double step);

// Same step with a separate step size per slot.
std::vector<double> layer3_update(std::span<const double> delta_r, std::span<const double> mu,
                                  std::span<const double> gamma,
                                  std::span<const double> gamma_prime, double alpha,
                                  std::span<const double> steps);

// Supergradient of the best primary sum rate with respect to delta_r:
// g_i = -sum_{j>=i} (mu_j - alpha gamma_j + alpha gamma'_j).
std::vector<double> transfer_supergradient(std::span<const double> mu,
                                           std::span<const double> gamma,
                                           std::span<const double> gamma_prime, double alpha);

// Water level used when a dual denominator underflows.
double effective_level_cap(const ScenarioConfig& cfg, const ChannelRealization& channels,
                           const HarvestRealization& harvests);

// Three-layer primal-decomposition solve of the cooperation problem.
SolveReport solve(const ScenarioConfig& cfg, const ChannelRealization& channels,
                  const HarvestRealization& harvests,
                  CooperationMode mode = CooperationMode::kJoint);

const char* to_string(SolveStatus status);
const char* to_string(CooperationMode mode);

}  // namespace ehcoop

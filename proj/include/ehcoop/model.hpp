#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ehcoop/random.hpp"
#include "ehcoop/settings.hpp"

namespace ehcoop {

// Exogenous parameters of one cooperation scenario. Energies in joules,
// distances in meters, noise in watts (configured in dBm). Slots have unit
// duration, so energy per slot and power are the same number.
struct ScenarioConfig {
  std::size_t n_slots = 5;
  double theta_p = 0.5;
  double theta_s = 0.5;
  double e_p_amount = 7.0;
  double e_s_amount = 1.0;
  double b_max = 3.5;
  double alpha = 0.3;
  double noise_power = 1e-3;
  double d_pp = 5.0;
  double d_sp = 5.0;
  double d_ss = 5.0;
  // PT-ST separation. Recorded only; no gain is derived from it.
  double d_ps = 0.5;
  double rho = 2.7;
  double rs_bar = 0.5;
  SolverSettings solver;

  void validate() const;
};

// Normalized power gains h = g / N0 for the PT-PR, ST-PR and ST-SR links.
struct ChannelRealization {
  std::vector<double> h_p;
  std::vector<double> h_sp;
  std::vector<double> h_ss;

  std::size_t size() const { return h_p.size(); }
  void validate(std::size_t n_slots) const;
};

// Energy harvested at the start of each slot by PT (e_p) and ST (e_s).
struct HarvestRealization {
  std::vector<double> e_p;
  std::vector<double> e_s;

  std::size_t size() const { return e_p.size(); }
  void validate(std::size_t n_slots) const;
};

struct Instance {
  ChannelRealization channels;
  HarvestRealization harvests;
};

// P_d: PT direct power, delta_r: energy PT hands to ST, P_sp: ST relaying
// power, P_ss: ST own-data power.
struct PowerPolicy {
  std::vector<double> p_d;
  std::vector<double> delta_r;
  std::vector<double> p_sp;
  std::vector<double> p_ss;

  static PowerPolicy zeros(std::size_t n);
  std::size_t size() const { return p_d.size(); }
  void validate(std::size_t n_slots) const;
};

struct RateEvaluation {
  std::vector<double> per_slot;
  double sum = 0.0;
  double average = 0.0;
};

struct RateSummary {
  std::vector<double> r_pc_slots;
  std::vector<double> r_s_slots;
  double r_pc_avg = 0.0;
  double r_s_avg = 0.0;
  double r_p_bar = 0.0;
};

// Constraint residuals in "<= 0 means satisfied" form.
struct ConstraintResiduals {
  double coop_rate = 0.0;               // N*Rp_bar - sum R_pc
  double sec_rate = 0.0;                // N*Rs_bar - sum ln(1 + h_ss P_ss)
  std::vector<double> pt_energy;        // PT energy causality, per k
  std::vector<double> st_energy;        // ST energy causality, per k
  std::vector<double> battery;          // ST storage limit, per k
  std::vector<double> battery_level;    // energy held by ST at start of slot i

  // Largest residual over the rate-floor-free constraints (secondary rate,
  // both causality families, battery). The cooperation floor is excluded
  // because the solver only checks it after the fact.
  double worst() const;
  bool feasible(double tol) const { return worst() <= tol; }
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Mean power gain of a link of length d under path-loss exponent rho.
double mean_path_gain(double distance, double rho);

double normalize_gain(double gain, double noise_power);

// Draws Rayleigh (exponential power) gains and Bernoulli harvests.
Instance sample_realization(const ScenarioConfig& cfg, RandomStream& stream);

// Realization `index` of the sweep driven by `master_seed`.
Instance sample_realization(const ScenarioConfig& cfg, std::uint64_t master_seed,
                            std::uint64_t index);

RateEvaluation primary_coop_rate(const ChannelRealization& channels,
                                 std::span<const double> p_d,
                                 std::span<const double> p_sp);

RateEvaluation secondary_rate(const ChannelRealization& channels,
                              std::span<const double> p_ss);

RateSummary summarize_rates(const ChannelRealization& channels,
                            const PowerPolicy& policy, double r_p_bar);

ConstraintResiduals constraint_residuals(const ScenarioConfig& cfg,
                                         const ChannelRealization& channels,
                                         const HarvestRealization& harvests,
                                         const PowerPolicy& policy,
                                         double r_p_bar);

}  // namespace ehcoop

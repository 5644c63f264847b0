#include "ehcoop/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ehcoop/errors.hpp"

namespace ehcoop {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_length(std::span<const double> v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw ShapeError(std::string(name) + ": expected " + std::to_string(n) +
                     " entries, got " + std::to_string(v.size()));
  }
}

void check_non_negative(std::span<const double> v, const char* name) {
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DomainError(std::string(name) + " entries must be finite and >= 0");
    }
  }
}

}  // namespace

void SolverSettings::validate() const {
  require(step0 > 0.0, "solver.step0 must be positive");
  require(max_outer_iters > 0, "solver.max_outer_iters must be positive");
  require(max_inner_iters > 0, "solver.max_inner_iters must be positive");
  require(primal_tol > 0.0, "solver.primal_tol must be positive");
  require(feas_tol > 0.0, "solver.feas_tol must be positive");
  require(level_cap >= 0.0, "solver.level_cap must be non-negative (0 = auto)");
}

void ScenarioConfig::validate() const {
  require(n_slots >= 1, "n_slots must be at least 1");
  require(theta_p >= 0.0 && theta_p <= 1.0, "theta_p must lie in [0, 1]");
  require(theta_s >= 0.0 && theta_s <= 1.0, "theta_s must lie in [0, 1]");
  require(e_p_amount > 0.0, "e_p_amount must be positive");
  require(e_s_amount > 0.0, "e_s_amount must be positive");
  require(b_max >= 0.0, "b_max must be non-negative");
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  require(noise_power > 0.0, "noise_power must be positive");
  require(d_pp > 0.0 && d_sp > 0.0 && d_ss > 0.0 && d_ps > 0.0,
          "distances must be positive");
  require(std::isfinite(rho), "rho must be finite");
  require(rs_bar >= 0.0, "rs_bar must be non-negative");
  solver.validate();
}

void ChannelRealization::validate(std::size_t n_slots) const {
  check_length(h_p, n_slots, "h_p");
  check_length(h_sp, n_slots, "h_sp");
  check_length(h_ss, n_slots, "h_ss");
  check_non_negative(h_p, "h_p");
  check_non_negative(h_sp, "h_sp");
  check_non_negative(h_ss, "h_ss");
}

void HarvestRealization::validate(std::size_t n_slots) const {
  check_length(e_p, n_slots, "e_p");
  check_length(e_s, n_slots, "e_s");
  check_non_negative(e_p, "e_p");
  check_non_negative(e_s, "e_s");
}

PowerPolicy PowerPolicy::zeros(std::size_t n) {
  return PowerPolicy{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                     std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

void PowerPolicy::validate(std::size_t n_slots) const {
  check_length(p_d, n_slots, "p_d");
  check_length(delta_r, n_slots, "delta_r");
  check_length(p_sp, n_slots, "p_sp");
  check_length(p_ss, n_slots, "p_ss");
  check_non_negative(p_d, "p_d");
  check_non_negative(delta_r, "delta_r");
  check_non_negative(p_sp, "p_sp");
  check_non_negative(p_ss, "p_ss");
}

double ConstraintResiduals::worst() const {
  double w = sec_rate;
  for (const auto* v : {&pt_energy, &st_energy, &battery}) {
    for (double x : *v) w = std::max(w, x);
  }
  return w;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

double mean_path_gain(double distance, double rho) {
  return std::pow(distance, -rho);
}

double normalize_gain(double gain, double noise_power) {
  if (!(noise_power > 0.0)) throw ConfigError("noise_power must be positive");
  if (!(gain >= 0.0)) throw DomainError("channel gain must be non-negative");
  return gain / noise_power;
}

Instance sample_realization(const ScenarioConfig& cfg, RandomStream& stream) {
  cfg.validate();
  const std::size_t n = cfg.n_slots;
  Instance inst;
  auto draw_link = [&](double distance) {
    const double mean = mean_path_gain(distance, cfg.rho);
    std::vector<double> h(n);
    for (auto& x : h) x = normalize_gain(stream.exponential(mean), cfg.noise_power);
    return h;
  };
  inst.channels.h_p = draw_link(cfg.d_pp);
  inst.channels.h_sp = draw_link(cfg.d_sp);
  inst.channels.h_ss = draw_link(cfg.d_ss);
  auto draw_harvest = [&](double theta, double amount) {
    std::vector<double> e(n);
    for (auto& x : e) x = stream.bernoulli(theta) ? amount : 0.0;
    return e;
  };
  inst.harvests.e_p = draw_harvest(cfg.theta_p, cfg.e_p_amount);
  inst.harvests.e_s = draw_harvest(cfg.theta_s, cfg.e_s_amount);
  return inst;
}

Instance sample_realization(const ScenarioConfig& cfg, std::uint64_t master_seed,
                            std::uint64_t index) {
  auto stream = RandomStream::child(master_seed, index);
  return sample_realization(cfg, stream);
}

RateEvaluation primary_coop_rate(const ChannelRealization& channels,
                                 std::span<const double> p_d,
                                 std::span<const double> p_sp) {
  const std::size_t n = channels.size();
  check_length(p_d, n, "p_d");
  check_length(p_sp, n, "p_sp");
  check_non_negative(p_d, "p_d");
  check_non_negative(p_sp, "p_sp");
  RateEvaluation out;
  out.per_slot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.per_slot[i] =
        std::log1p(channels.h_p[i] * p_d[i] + channels.h_sp[i] * p_sp[i]);
    out.sum += out.per_slot[i];
  }
  out.average = out.sum / static_cast<double>(n);
  return out;
}

RateEvaluation secondary_rate(const ChannelRealization& channels,
                              std::span<const double> p_ss) {
  const std::size_t n = channels.size();
  check_length(p_ss, n, "p_ss");
  check_non_negative(p_ss, "p_ss");
  RateEvaluation out;
  out.per_slot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.per_slot[i] = std::log1p(channels.h_ss[i] * p_ss[i]);
    out.sum += out.per_slot[i];
  }
  out.average = out.sum / static_cast<double>(n);
  return out;
}

RateSummary summarize_rates(const ChannelRealization& channels,
                            const PowerPolicy& policy, double r_p_bar) {
  auto pc = primary_coop_rate(channels, policy.p_d, policy.p_sp);
  auto s = secondary_rate(channels, policy.p_ss);
  return RateSummary{std::move(pc.per_slot), std::move(s.per_slot), pc.average,
                     s.average, r_p_bar};
}

ConstraintResiduals constraint_residuals(const ScenarioConfig& cfg,
                                         const ChannelRealization& channels,
                                         const HarvestRealization& harvests,
                                         const PowerPolicy& policy,
                                         double r_p_bar) {
  const std::size_t n = channels.size();
  channels.validate(n);
  harvests.validate(n);
  policy.validate(n);
  const double slots = static_cast<double>(n);

  ConstraintResiduals r;
  r.coop_rate = slots * r_p_bar - primary_coop_rate(channels, policy.p_d, policy.p_sp).sum;
  r.sec_rate = slots * cfg.rs_bar - secondary_rate(channels, policy.p_ss).sum;
  r.pt_energy.resize(n);
  r.st_energy.resize(n);
  r.battery.resize(n);
  r.battery_level.resize(n);

  double pt_out = 0.0, pt_in = 0.0, st_out = 0.0, st_in = 0.0;
  double level = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double income = harvests.e_s[k] + cfg.alpha * policy.delta_r[k];
    const double spend = policy.p_sp[k] + policy.p_ss[k];
    pt_out += policy.p_d[k] + policy.delta_r[k];
    pt_in += harvests.e_p[k];
    st_in += income;
    st_out += spend;
    // E_{k+1} = E_k + income_{k+1} - spend_k, with E_1 = income_1.
    level = (k == 0) ? income
                     : level + income - (policy.p_sp[k - 1] + policy.p_ss[k - 1]);
    r.pt_energy[k] = pt_out - pt_in;
    r.st_energy[k] = st_out - st_in;
    r.battery_level[k] = level;
    r.battery[k] = level - cfg.b_max;
  }
  return r;
}

}  // namespace ehcoop

#include "ehcoop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ehcoop/errors.hpp"

namespace ehcoop {

namespace {

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

// Per-realization outcome of one solve, reduced later in index order.
struct Outcome {
  double rate = 0.0;
  double nocoop = 0.0;
  bool success = false;
};

Outcome run_one(const ScenarioConfig& cfg, const Instance& inst, CooperationMode mode) {
  const auto rep = solve(cfg, inst.channels, inst.harvests, mode);
  return {rep.effective_rate, rep.baseline.r_p_bar, rep.cooperation_successful};
}

// Solves both modes for every grid value on realization i.
template <typename Apply>
std::vector<std::vector<std::pair<Outcome, Outcome>>> paired_runs(
    const ScenarioConfig& cfg, std::size_t grid_size, std::size_t realizations,
    std::uint64_t master_seed, std::size_t workers, Apply&& apply) {
  return parallel_map<std::vector<std::pair<Outcome, Outcome>>>(
      realizations, workers, [&](std::size_t i) {
        const Instance inst = sample_realization(cfg, master_seed, i);
        std::vector<std::pair<Outcome, Outcome>> row(grid_size);
        for (std::size_t g = 0; g < grid_size; ++g) {
          ScenarioConfig point = cfg;
          apply(point, g);
          row[g] = {run_one(point, inst, CooperationMode::kJoint),
                    run_one(point, inst, CooperationMode::kInfoOnly)};
        }
        return row;
      });
}

SweepResult reduce(std::string parameter, std::span<const double> grid,
                   const std::vector<std::vector<std::pair<Outcome, Outcome>>>& runs,
                   std::uint64_t master_seed) {
  SweepResult out;
  out.parameter = std::move(parameter);
  out.realizations = runs.size();
  out.master_seed = master_seed;
  const double m = static_cast<double>(runs.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepPoint p;
    p.parameter = grid[g];
    for (const auto& row : runs) {
      const auto& [joint, info] = row[g];
      p.rate_joint += joint.rate;
      p.rate_info += info.rate;
      p.rate_nocoop += joint.nocoop;
      p.p_joint += joint.success ? 1.0 : 0.0;
      p.p_info += info.success ? 1.0 : 0.0;
    }
    p.rate_joint /= m;
    p.rate_info /= m;
    p.rate_nocoop /= m;
    p.p_joint /= m;
    p.p_info /= m;
    out.points.push_back(p);
  }
  return out;
}

void require_realizations(std::size_t realizations) {
  if (realizations == 0) throw ConfigError("realizations must be at least 1");
}

}  // namespace

bool PropositionAudit::passed() const {
  return prop1_gap <= tol && prop2_gap <= tol && prop3_gap <= tol && prop4_violations.empty() &&
         prop5_violations.empty();
}

PropositionAudit audit_policy(const PowerPolicy& policy, const ScenarioConfig& cfg,
                              const ChannelRealization& channels,
                              const HarvestRealization& harvests, double tol) {
  const std::size_t n = cfg.n_slots;
  policy.validate(n);
  PropositionAudit a;
  a.tol = tol;
  const double secondary = secondary_rate(channels, policy.p_ss).sum;
  a.prop1_gap = std::abs(static_cast<double>(n) * cfg.rs_bar - secondary);
  a.prop2_gap = std::abs(sum(policy.p_d) + sum(policy.delta_r) - sum(harvests.e_p));
  a.prop3_gap = std::abs(sum(policy.p_sp) + sum(policy.p_ss) - sum(harvests.e_s) -
                         cfg.alpha * sum(policy.delta_r));
  const auto res = constraint_residuals(cfg, channels, harvests, policy, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (channels.h_p[i] > channels.h_sp[i] && std::min(policy.delta_r[i], policy.p_sp[i]) > tol) {
      a.prop4_violations.push_back(i);
    }
    if (channels.h_p[i] < cfg.alpha * channels.h_sp[i] &&
        res.battery_level[i] < cfg.b_max - tol && policy.p_d[i] > tol) {
      a.prop5_violations.push_back(i);
    }
  }
  return a;
}

PropositionAudit check_propositions(const SolveReport& report, const ScenarioConfig& cfg,
                                    const ChannelRealization& channels,
                                    const HarvestRealization& harvests, double tol) {
  PropositionAudit a = audit_policy(report.policy, cfg, channels, harvests, tol);
  a.applicable = report.converged;
  return a;
}

bool KktAudit::passed(double feas_tol) const {
  return stationarity <= 10.0 * feas_tol && clamp <= 10.0 * feas_tol &&
         complementarity <= feas_tol;
}

KktAudit check_kkt(const SolveReport& report, const ScenarioConfig& cfg,
                   const ChannelRealization& channels, const HarvestRealization& harvests) {
  KktAudit a;
  a.applicable = report.converged;
  const PowerPolicy& p = report.policy;
  const DualState& d = report.duals;
  const double cap = effective_level_cap(cfg, channels, harvests);
  const auto p_d = layer1_primal(channels.h_p, channels.h_sp, p.p_sp, d.mu, cap);
  const auto relay = layer2_primal(channels.h_p, channels.h_sp, channels.h_ss, p.p_d, d.lambda,
                                   d.gamma, d.gamma_prime, cap);
  auto compare = [&](std::span<const double> formula, std::span<const double> returned) {
    for (std::size_t i = 0; i < returned.size(); ++i) {
      if (returned[i] > 0.0) {
        a.stationarity = std::max(a.stationarity, std::abs(formula[i] - returned[i]));
      } else {
        a.clamp = std::max(a.clamp, formula[i]);
      }
    }
  };
  compare(p_d, p.p_d);
  compare(relay.p_sp, p.p_sp);
  compare(relay.p_ss, p.p_ss);

  const auto res = constraint_residuals(cfg, channels, harvests, p, report.baseline.r_p_bar);
  a.complementarity = std::abs(d.lambda * res.sec_rate);
  for (std::size_t k = 0; k < p.size(); ++k) {
    a.complementarity = std::max({a.complementarity, std::abs(d.mu[k] * res.pt_energy[k]),
                                  std::abs(d.gamma[k] * res.st_energy[k]),
                                  std::abs(d.gamma_prime[k] * res.battery[k])});
  }
  return a;
}

double cooperation_probability(const ScenarioConfig& cfg, std::size_t realizations,
                               CooperationMode mode, std::uint64_t master_seed,
                               std::size_t workers) {
  require_realizations(realizations);
  const auto ok = parallel_map<char>(realizations, workers, [&](std::size_t i) {
    const Instance inst = sample_realization(cfg, master_seed, i);
    return static_cast<char>(run_one(cfg, inst, mode).success);
  });
  std::size_t hits = 0;
  for (char c : ok) hits += c ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(realizations);
}

SweepResult cooperation_sweep(const ScenarioConfig& cfg, std::span<const double> rs_grid,
                              std::size_t realizations, std::uint64_t master_seed,
                              std::size_t workers) {
  require_realizations(realizations);
  for (double rs : rs_grid) {
    if (!(rs >= 0.0)) throw ConfigError("rs_bar grid values must be non-negative");
  }
  const auto runs = paired_runs(cfg, rs_grid.size(), realizations, master_seed, workers,
                                [&](ScenarioConfig& c, std::size_t g) { c.rs_bar = rs_grid[g]; });
  return reduce("rs_bar", rs_grid, runs, master_seed);
}

SweepResult battery_sweep(const ScenarioConfig& cfg, std::span<const double> bmax_grid,
                          std::size_t realizations, std::uint64_t master_seed,
                          std::size_t workers) {
  require_realizations(realizations);
  for (std::size_t g = 0; g < bmax_grid.size(); ++g) {
    if (!(bmax_grid[g] >= 0.0)) throw ConfigError("b_max grid values must be non-negative");
    if (g > 0 && bmax_grid[g] < bmax_grid[g - 1]) {
      throw ConfigError("b_max grid must be ascending");
    }
  }
  const auto runs = paired_runs(cfg, bmax_grid.size(), realizations, master_seed, workers,
                                [&](ScenarioConfig& c, std::size_t g) { c.b_max = bmax_grid[g]; });
  return reduce("b_max", bmax_grid, runs, master_seed);
}

std::vector<RegionPoint> rate_region(const ScenarioConfig& cfg, const Instance& realization,
                                     std::span<const double> rs_grid, bool joint, bool info,
                                     std::size_t workers) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return parallel_map<RegionPoint>(rs_grid.size(), workers, [&](std::size_t g) {
    ScenarioConfig point = cfg;
    point.rs_bar = rs_grid[g];
    RegionPoint r{rs_grid[g], nan, nan, nan};
    if (joint) {
      const auto o = run_one(point, realization, CooperationMode::kJoint);
      r.rp_joint = o.rate;
      r.rp_nocoop = o.nocoop;
    }
    if (info) {
      const auto o = run_one(point, realization, CooperationMode::kInfoOnly);
      r.rp_info = o.rate;
      r.rp_nocoop = o.nocoop;
    }
    if (!joint && !info) {
      r.rp_nocoop = solve_no_coop(realization.channels.h_p, realization.harvests.e_p).r_p_bar;
    }
    return r;
  });
}

double cooperation_cutoff(const ScenarioConfig& cfg, const Instance& realization,
                          CooperationMode mode, double rs_hi, double tol) {
  auto succeeds = [&](double rs) {
    ScenarioConfig point = cfg;
    point.rs_bar = rs;
    return run_one(point, realization, mode).success;
  };
  if (!succeeds(0.0)) return 0.0;
  if (succeeds(rs_hi)) return rs_hi;
  double lo = 0.0, hi = rs_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (succeeds(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace ehcoop

#include "ehcoop/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "ehcoop/errors.hpp"
#include "ehcoop/waterfill.hpp"

namespace ehcoop {

namespace {

using waterfill::kInf;
using waterfill::SpendCurve;
using waterfill::Tunnel;

constexpr double kDenominatorFloor = 1e-12;

void require_same_size(std::size_t n, std::size_t m, const char* what) {
  if (n != m) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                     std::to_string(m));
  }
}

std::vector<double> tail_sums(std::span<const double> x) {
  std::vector<double> tail(x.size() + 1, 0.0);
  for (std::size_t i = x.size(); i-- > 0;) tail[i] = tail[i + 1] + x[i];
  return tail;
}

double level_from(double denominator, double level_cap) {
  return denominator <= kDenominatorFloor ? level_cap : 1.0 / denominator;
}

double inverse_level(double level) { return std::isfinite(level) ? 1.0 / level : 0.0; }

double sum_log1p(std::span<const double> h, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += std::log1p(h[i] * p[i]);
  return s;
}

// Clip a transfer vector to ST's single-slot storage and PT's prefix budget.
void project_transfer(std::vector<double>& delta, std::span<const double> e_p,
                      std::span<const double> box) {
  double harvested = 0.0, given = 0.0;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    harvested += e_p[k];
    delta[k] = std::clamp(delta[k], 0.0, std::max(0.0, box[k]));
    delta[k] = std::min(delta[k], std::max(0.0, harvested - given));
    given += delta[k];
  }
}

double harvests_total(const HarvestRealization& hv) {
  double s = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) s += hv.e_p[i] + hv.e_s[i];
  return s;
}

// Split consecutive marginal values D_i into upper-bound (gamma) and
// lower-bound (gamma') multipliers: D falls where the upper bound binds and
// rises where the battery limit binds.
void split_st_multipliers(std::span<const double> d, std::vector<double>& gamma,
                          std::vector<double>& gamma_prime) {
  const std::size_t n = d.size();
  gamma.assign(n, 0.0);
  gamma_prime.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double diff = d[k] - d[k + 1];
    if (diff > 0.0) gamma[k] = diff;
    else gamma_prime[k + 1] = -diff;
  }
  if (n > 0) gamma[n - 1] = d[n - 1];
}

// Everything one exact inner solve produces.
struct InnerState {
  std::vector<double> p_d, p_sp, p_ss;
  // Multipliers of the primary problem, or of the max-secondary-rate problem
  // while the secondary target is out of reach.
  DualState duals;
  bool secondary_reachable = true;
  double secondary_max = 0.0;
};

class ExactInner {
 public:
  ExactInner(const ScenarioConfig& cfg, const ChannelRealization& ch,
             const HarvestRealization& hv)
      : cfg_(cfg), ch_(ch), hv_(hv), n_(ch.size()), target_(n_ * cfg.rs_bar) {}

  // Solves Layers 1 and 2 for a fixed transfer vector by block coordinate
  // ascent, starting from `st.p_sp`.
  void solve(std::span<const double> delta, InnerState& st) {
    set_transfer(delta);
    st.p_sp.resize(n_, 0.0);
    st.p_ss.assign(n_, 0.0);
    st.secondary_reachable = secondary_feasible(st);
    if (!st.secondary_reachable) {
      st.p_sp.assign(n_, 0.0);
      layer1(st);
      return;
    }
    const double scale = 1.0 + total_energy_;
    for (std::size_t round = 0; round < std::max<std::size_t>(1, cfg_.solver.max_inner_iters);
         ++round) {
      const std::vector<double> prev_sp = st.p_sp;
      const std::vector<double> prev_d = st.p_d;
      layer1(st);
      layer2(st);
      double change = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        change = std::max(change, std::abs(st.p_sp[i] - prev_sp[i]));
        if (prev_d.size() == n_) change = std::max(change, std::abs(st.p_d[i] - prev_d[i]));
      }
      if (change <= 1e-13 * scale) break;
    }
  }

  bool at_secondary_boundary(const InnerState& st) const {
    return target_ > 0.0 && st.secondary_reachable &&
           st.secondary_max <= target_ + 1e-9 * std::max(1.0, target_);
  }

  // When ST only just reaches its target, the transfer-conditional lambda
  // diverges although the full problem's multiplier is finite. The full
  // multipliers are then the max-secondary-rate ones scaled by the lambda
  // that best balances the transfer stationarity condition
  // sum_{j>=i} mu_j = alpha (D_i - gamma'_i) over slots with delta_r > 0.
  void boundary_duals(std::span<const double> delta, InnerState& st) {
    set_transfer(delta);
    const std::vector<double> no_pd(n_, 0.0);
    const auto curves = st_curves(1.0, no_pd, false);
    auto filled = waterfill::fill(curves, st_tunnel_);
    if (!filled) return;
    InnerState unit;
    set_st_duals(1.0, curves, filled->spend, unit);
    const auto mu_tail = tail_sums(st.duals.mu);
    const auto g_tail = tail_sums(unit.duals.gamma);
    const auto gp_tail = tail_sums(unit.duals.gamma_prime);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (delta[i] <= 0.0) continue;
      const double b = cfg_.alpha * (g_tail[i] - gp_tail[i]);
      num += mu_tail[i] * b;
      den += b * b;
    }
    if (!(num > 0.0 && den > 0.0)) return;
    // Re-read the levels with the relay ramps present so that slots where ST
    // spends nothing also keep relaying clamped at zero.
    const double lambda = num / den;
    std::vector<double> spend(n_);
    for (std::size_t i = 0; i < n_; ++i) spend[i] = st.p_sp[i] + st.p_ss[i];
    set_st_duals(lambda, st_curves(lambda, st.p_d, true), spend, st);
  }

 private:
  void set_transfer(std::span<const double> delta) {
    pt_budget_.assign(n_, 0.0);
    st_income_.assign(n_, 0.0);
    double pt = 0.0, st = 0.0;
    total_energy_ = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      pt += hv_.e_p[k] - delta[k];
      st += hv_.e_s[k] + cfg_.alpha * delta[k];
      pt_budget_[k] = std::max(0.0, pt);
      st_income_[k] = st;
      total_energy_ += hv_.e_p[k] + hv_.e_s[k];
    }
    st_tunnel_.upper = st_income_;
    st_tunnel_.lower.assign(n_, -kInf);
    for (std::size_t k = 0; k + 1 < n_; ++k) st_tunnel_.lower[k] = st_income_[k + 1] - cfg_.b_max;
  }

  void layer1(InnerState& st) {
    std::vector<SpendCurve> curves(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (ch_.h_p[i] > 0.0) curves[i].add(1.0, (1.0 + ch_.h_sp[i] * st.p_sp[i]) / ch_.h_p[i]);
    }
    const Tunnel tunnel = Tunnel::upper_only(pt_budget_);
    auto filled = waterfill::fill(curves, tunnel);
    st.p_d = std::move(filled->spend);
    const auto rec = waterfill::recover_levels(curves, st.p_d, tunnel);
    std::vector<double> tail(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) tail[i] = inverse_level(rec.level[i]);
    st.duals.mu.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) st.duals.mu[i] = std::max(0.0, tail[i] - tail[i + 1]);
  }

  std::vector<SpendCurve> st_curves(double lambda, std::span<const double> p_d,
                                    bool relay) const {
    std::vector<SpendCurve> curves(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (relay && ch_.h_sp[i] > 0.0) {
        curves[i].add(1.0, (1.0 + ch_.h_p[i] * p_d[i]) / ch_.h_sp[i]);
      }
      if (lambda > 0.0 && ch_.h_ss[i] > 0.0) curves[i].add(lambda, 1.0 / (lambda * ch_.h_ss[i]));
    }
    return curves;
  }

  void own_data_split(double lambda, std::span<const double> p_d,
                      std::span<const double> level, InnerState& st) const {
    st.p_sp.assign(n_, 0.0);
    st.p_ss.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(level[i])) continue;
      if (ch_.h_sp[i] > 0.0) {
        st.p_sp[i] = std::max(0.0, level[i] - (1.0 + ch_.h_p[i] * p_d[i]) / ch_.h_sp[i]);
      }
      if (lambda > 0.0 && ch_.h_ss[i] > 0.0) {
        st.p_ss[i] = std::max(0.0, lambda * level[i] - 1.0 / ch_.h_ss[i]);
      }
    }
  }

  void set_st_duals(double lambda, std::span<const SpendCurve> curves,
                    std::span<const double> spend, InnerState& st) const {
    const auto rec = waterfill::recover_levels(curves, spend, st_tunnel_);
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = inverse_level(rec.level[i]);
    st.duals.lambda = lambda;
    split_st_multipliers(d, st.duals.gamma, st.duals.gamma_prime);
  }

  // Highest secondary rate any ST schedule reaches for the current transfer.
  // When it falls short of the target the multipliers describe that
  // max-rate problem instead, which drives the phase-1 search over delta_r.
  bool secondary_feasible(InnerState& st) {
    const std::vector<double> no_pd(n_, 0.0);
    const auto curves = st_curves(1.0, no_pd, false);
    auto filled = waterfill::fill(curves, st_tunnel_);
    if (!filled) {
      st.secondary_max = -kInf;
      st.duals.gamma.assign(n_, 0.0);
      st.duals.gamma_prime.assign(n_, 0.0);
      return false;
    }
    std::vector<double> p_ss(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (ch_.h_ss[i] > 0.0) p_ss[i] = filled->spend[i];
    }
    st.secondary_max = sum_log1p(ch_.h_ss, p_ss);
    if (st.secondary_max >= target_ - 1e-12 * std::max(1.0, target_)) return true;
    st.p_ss = std::move(p_ss);
    set_st_duals(1.0, curves, filled->spend, st);
    return false;
  }

  double secondary_at(double lambda, std::span<const double> p_d) const {
    const auto curves = st_curves(lambda, p_d, true);
    auto filled = waterfill::fill(curves, st_tunnel_);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (lambda > 0.0 && ch_.h_ss[i] > 0.0 && std::isfinite(filled->level[i])) {
        s += std::log1p(std::max(0.0, lambda * ch_.h_ss[i] * filled->level[i] - 1.0));
      }
    }
    return s;
  }

  double find_lambda(std::span<const double> p_d, double warm) const {
    if (target_ <= 0.0) return 0.0;
    auto gap = [&](double lambda) { return secondary_at(lambda, p_d) - target_; };
    double hi = warm > 0.0 && std::isfinite(warm) ? warm : 1.0;
    double g_hi = gap(hi);
    double lo = 0.0, g_lo = -target_;
    while (g_hi < 0.0 && hi < 1e15) {
      lo = hi;
      g_lo = g_hi;
      hi *= 4.0;
      g_hi = gap(hi);
    }
    if (g_hi < 0.0) return hi;
    if (lo == 0.0) {
      // Tighten the lower end near the warm start before bracketing.
      double probe = hi / 4.0;
      while (probe > 1e-300) {
        const double g = gap(probe);
        if (g < 0.0) {
          lo = probe;
          g_lo = g;
          break;
        }
        hi = probe;
        g_hi = g;
        probe /= 4.0;
      }
    }
    if (g_hi == 0.0) return hi;
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        gap, lo, hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return bracket.second;
  }

  void layer2(InnerState& st) {
    const double lambda = find_lambda(st.p_d, st.duals.lambda);
    const auto curves = st_curves(lambda, st.p_d, true);
    auto filled = waterfill::fill(curves, st_tunnel_);
    own_data_split(lambda, st.p_d, filled->level, st);
    set_st_duals(lambda, curves, filled->spend, st);
  }

  const ScenarioConfig& cfg_;
  const ChannelRealization& ch_;
  const HarvestRealization& hv_;
  std::size_t n_;
  double target_;
  double total_energy_ = 0.0;
  std::vector<double> pt_budget_, st_income_;
  Tunnel st_tunnel_;
};

// Closed-form layers with projected dual-gradient steps. A step that would
// more than halve a water-level denominator is halved until it does not, so
// one overshoot cannot send every level to the cap.
class GradientInner {
 public:
  GradientInner(const ScenarioConfig& cfg, const ChannelRealization& ch,
                const HarvestRealization& hv, double level_cap)
      : cfg_(cfg), ch_(ch), hv_(hv), cap_(level_cap) {}

  void solve(std::span<const double> delta, InnerState& st) {
    const std::size_t n = ch_.size();
    if (st.duals.mu.size() != n) st.duals = DualState::initial(n);
    st.p_sp.resize(n, 0.0);
    PowerPolicy policy = PowerPolicy::zeros(n);
    policy.delta_r.assign(delta.begin(), delta.end());
    for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg_.solver.max_inner_iters); ++r) {
      ++rounds_;
      const double step = cfg_.solver.step0 / std::sqrt(static_cast<double>(rounds_));
      st.p_d = layer1_primal(ch_.h_p, ch_.h_sp, st.p_sp, st.duals.mu, cap_);
      for (double s = step;; s *= 0.5) {
        auto mu = layer1_dual_update(st.duals.mu, st.p_d, delta, hv_.e_p, s);
        if (s < 1e-12 || !collapses(tail_sums(st.duals.mu), tail_sums(mu))) {
          st.duals.mu = std::move(mu);
          break;
        }
      }
      auto relay = layer2_primal(ch_.h_p, ch_.h_sp, ch_.h_ss, st.p_d, st.duals.lambda,
                                 st.duals.gamma, st.duals.gamma_prime, cap_);
      st.p_sp = std::move(relay.p_sp);
      st.p_ss = std::move(relay.p_ss);
      policy.p_d = st.p_d;
      policy.p_sp = st.p_sp;
      policy.p_ss = st.p_ss;
      for (double s = step;; s *= 0.5) {
        auto next = layer2_dual_update(st.duals, policy, ch_, hv_, cfg_, s);
        if (s < 1e-12 || !collapses(denominators(st.duals), denominators(next))) {
          st.duals = std::move(next);
          break;
        }
      }
    }
    st.secondary_reachable = true;
  }

 private:
  static std::vector<double> denominators(const DualState& d) {
    const auto g = tail_sums(d.gamma);
    const auto gp = tail_sums(d.gamma_prime);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] - (i + 1 < gp.size() ? gp[i + 1] : 0.0);
    return out;
  }

  static bool collapses(std::span<const double> before, std::span<const double> after) {
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] > 1e-12 && after[i] < 0.5 * before[i]) return true;
    }
    return false;
  }

  const ScenarioConfig& cfg_;
  const ChannelRealization& ch_;
  const HarvestRealization& hv_;
  double cap_;
  std::size_t rounds_ = 0;
};

}  // namespace

DualState DualState::initial(std::size_t n) {
  DualState d;
  const double v = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  d.lambda = 1.0;
  d.mu.assign(n, v);
  d.gamma.assign(n, v);
  d.gamma_prime.assign(n, v);
  return d;
}

std::vector<double> layer1_primal(std::span<const double> h_p, std::span<const double> h_sp,
                                  std::span<const double> p_sp, std::span<const double> mu,
                                  double level_cap) {
  const std::size_t n = h_p.size();
  require_same_size(n, h_sp.size(), "layer1_primal h_sp");
  require_same_size(n, p_sp.size(), "layer1_primal p_sp");
  require_same_size(n, mu.size(), "layer1_primal mu");
  const auto tail = tail_sums(mu);
  std::vector<double> p_d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (h_p[i] <= 0.0) continue;
    const double level = level_from(tail[i], level_cap);
    p_d[i] = std::max(0.0, level - 1.0 / h_p[i] - h_sp[i] / h_p[i] * p_sp[i]);
  }
  return p_d;
}

std::vector<double> layer1_dual_update(std::span<const double> mu, std::span<const double> p_d,
                                       std::span<const double> delta_r,
                                       std::span<const double> e_p, double step) {
  const std::size_t n = mu.size();
  require_same_size(n, p_d.size(), "layer1_dual_update p_d");
  require_same_size(n, delta_r.size(), "layer1_dual_update delta_r");
  require_same_size(n, e_p.size(), "layer1_dual_update e_p");
  std::vector<double> out(n);
  double excess = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    excess += p_d[k] + delta_r[k] - e_p[k];
    out[k] = std::max(0.0, mu[k] + step * excess);
  }
  return out;
}

RelayAllocation layer2_primal(std::span<const double> h_p, std::span<const double> h_sp,
                              std::span<const double> h_ss, std::span<const double> p_d,
                              double lambda, std::span<const double> gamma,
                              std::span<const double> gamma_prime, double level_cap) {
  const std::size_t n = h_p.size();
  require_same_size(n, h_sp.size(), "layer2_primal h_sp");
  require_same_size(n, h_ss.size(), "layer2_primal h_ss");
  require_same_size(n, p_d.size(), "layer2_primal p_d");
  require_same_size(n, gamma.size(), "layer2_primal gamma");
  require_same_size(n, gamma_prime.size(), "layer2_primal gamma_prime");
  const auto g_tail = tail_sums(gamma);
  const auto gp_tail = tail_sums(gamma_prime);
  RelayAllocation out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double level = level_from(g_tail[i] - gp_tail[i + 1], level_cap);
    if (h_sp[i] > 0.0) {
      out.p_sp[i] = std::max(0.0, level - 1.0 / h_sp[i] - h_p[i] / h_sp[i] * p_d[i]);
    }
    if (h_ss[i] > 0.0) out.p_ss[i] = std::max(0.0, lambda * level - 1.0 / h_ss[i]);
  }
  return out;
}

DualState layer2_dual_update(const DualState& duals, const PowerPolicy& policy,
                             const ChannelRealization& channels,
                             const HarvestRealization& harvests, const ScenarioConfig& cfg,
                             double step) {
  const std::size_t n = policy.size();
  require_same_size(n, duals.gamma.size(), "layer2_dual_update gamma");
  require_same_size(n, duals.gamma_prime.size(), "layer2_dual_update gamma_prime");
  require_same_size(n, channels.size(), "layer2_dual_update channels");
  require_same_size(n, harvests.size(), "layer2_dual_update harvests");
  DualState out = duals;
  const double rate = sum_log1p(channels.h_ss, policy.p_ss);
  out.lambda = std::max(0.0, duals.lambda + step * (static_cast<double>(n) * cfg.rs_bar - rate));
  double income = 0.0, spent = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    income += harvests.e_s[k] + cfg.alpha * policy.delta_r[k];
    // Stored energy at the start of slot k: income so far minus what slots
    // before k consumed.
    const double stored = income - spent;
    spent += policy.p_sp[k] + policy.p_ss[k];
    out.gamma[k] = std::max(0.0, duals.gamma[k] + step * (spent - income));
    out.gamma_prime[k] = std::max(0.0, duals.gamma_prime[k] + step * (stored - cfg.b_max));
  }
  return out;
}

std::vector<double> layer3_update(std::span<const double> delta_r, std::span<const double> mu,
                                  std::span<const double> gamma,
                                  std::span<const double> gamma_prime, double alpha,
                                  double step) {
  const std::vector<double> steps(delta_r.size(), step);
  return layer3_update(delta_r, mu, gamma, gamma_prime, alpha, steps);
}

std::vector<double> layer3_update(std::span<const double> delta_r, std::span<const double> mu,
                                  std::span<const double> gamma,
                                  std::span<const double> gamma_prime, double alpha,
                                  std::span<const double> steps) {
  const std::size_t n = delta_r.size();
  require_same_size(n, steps.size(), "layer3_update steps");
  const auto g = transfer_supergradient(mu, gamma, gamma_prime, alpha);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, delta_r[i] + steps[i] * g[i]);
  return out;
}

std::vector<double> transfer_supergradient(std::span<const double> mu,
                                           std::span<const double> gamma,
                                           std::span<const double> gamma_prime, double alpha) {
  const std::size_t n = mu.size();
  require_same_size(n, gamma.size(), "transfer_supergradient gamma");
  require_same_size(n, gamma_prime.size(), "transfer_supergradient gamma_prime");
  std::vector<double> g(n);
  double tail = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    tail += mu[i] - alpha * gamma[i] + alpha * gamma_prime[i];
    g[i] = -tail;
  }
  return g;
}

double effective_level_cap(const ScenarioConfig& cfg, const ChannelRealization& channels,
                           const HarvestRealization& harvests) {
  if (cfg.solver.level_cap > 0.0) return cfg.solver.level_cap;
  double energy = 0.0, h_max = 0.0, inv_h_max = 0.0;
  for (std::size_t i = 0; i < harvests.size(); ++i) energy += harvests.e_p[i] + harvests.e_s[i];
  for (const auto* h : {&channels.h_p, &channels.h_sp, &channels.h_ss}) {
    for (double x : *h) {
      h_max = std::max(h_max, x);
      if (x > 0.0) inv_h_max = std::max(inv_h_max, 1.0 / x);
    }
  }
  // A level this high already spends every joule in one slot.
  return 10.0 * (std::max(energy, 1.0) + inv_h_max) * std::max(h_max, 1.0);
}

SolveReport solve(const ScenarioConfig& cfg, const ChannelRealization& channels,
                  const HarvestRealization& harvests, CooperationMode mode) {
  cfg.validate();
  channels.validate(cfg.n_slots);
  harvests.validate(cfg.n_slots);
  const std::size_t n = cfg.n_slots;
  const SolverSettings& opt = cfg.solver;

  SolveReport report;
  report.mode = mode;
  report.baseline = solve_no_coop(channels.h_p, harvests.e_p);
  const double r_p_bar = report.baseline.r_p_bar;

  std::vector<double> box(n);
  bool storable = true;
  for (std::size_t k = 0; k < n; ++k) {
    box[k] = (cfg.b_max - harvests.e_s[k]) / cfg.alpha;
    if (harvests.e_s[k] > cfg.b_max) storable = false;
  }
  if (mode == CooperationMode::kInfoOnly) box.assign(n, 0.0);

  auto finish = [&](const PowerPolicy& policy, const DualState& duals) {
    report.policy = policy;
    report.duals = duals;
    report.rates = summarize_rates(channels, policy, r_p_bar);
    report.residuals = constraint_residuals(cfg, channels, harvests, policy, r_p_bar);
    report.objective = primary_coop_rate(channels, policy.p_d, policy.p_sp).sum;
    report.cooperation_successful = report.converged &&
                                    report.residuals.coop_rate <= opt.feas_tol &&
                                    report.residuals.sec_rate <= opt.feas_tol;
    report.effective_rate = report.cooperation_successful
                                ? report.objective / static_cast<double>(std::max<std::size_t>(n, 1))
                                : r_p_bar;
    return report;
  };

  if (!storable) {
    // A single harvest overflows the battery whatever anyone does.
    report.status = SolveStatus::kInfeasible;
    return finish(PowerPolicy::zeros(n), DualState::initial(n));
  }

  const double level_cap = effective_level_cap(cfg, channels, harvests);
  ExactInner exact(cfg, channels, harvests);
  GradientInner gradient(cfg, channels, harvests, level_cap);
  auto inner = [&](std::span<const double> delta, InnerState& st) {
    if (opt.inner_method == InnerMethod::kWaterFilling) exact.solve(delta, st);
    else gradient.solve(delta, st);
  };

  std::vector<double> delta(n, 0.0);
  InnerState st;
  st.duals = DualState::initial(n);

  PowerPolicy best_policy = PowerPolicy::zeros(n);
  DualState best_duals = DualState::initial(n);
  double best = -kInf;
  bool have_best = false;

  const std::size_t window = 50;
  const std::size_t stall_limit = std::max<std::size_t>(500, opt.max_outer_iters / 5);
  std::vector<double> best_history;
  std::size_t phase1_stall = 0;
  double phase1_best = -kInf;
  PowerPolicy policy = PowerPolicy::zeros(n);
  bool infeasible = false;
  bool converged = false;
  std::size_t t = 0;

  // Per-coordinate step step0 / sqrt(sum of squared past supergradients),
  // which reduces to step0 / sqrt(t) for a supergradient of unit size.
  std::vector<double> g_squares(n, 0.0);
  auto adaptive_steps = [&](std::span<const double> mu) {
    const auto g = transfer_supergradient(mu, st.duals.gamma, st.duals.gamma_prime, cfg.alpha);
    std::vector<double> steps(n);
    for (std::size_t i = 0; i < n; ++i) {
      g_squares[i] += g[i] * g[i];
      steps[i] = g_squares[i] > 0.0 ? opt.step0 / std::sqrt(g_squares[i]) : 0.0;
    }
    return steps;
  };

  while (t < opt.max_outer_iters) {
    ++t;
    inner(delta, st);
    policy.p_d = st.p_d;
    policy.p_sp = st.p_sp;
    policy.p_ss = st.p_ss;
    policy.delta_r = delta;
    const double objective = primary_coop_rate(channels, policy.p_d, policy.p_sp).sum;
    const auto res = constraint_residuals(cfg, channels, harvests, policy, r_p_bar);
    const bool feasible = st.secondary_reachable && res.feasible(opt.feas_tol);
    if (feasible && objective > best) {
      best = objective;
      best_policy = policy;
      best_duals = st.duals;
      have_best = true;
    }
    if (opt.record_trace) report.trace.push_back({t, objective, best, res.worst()});

    if (mode == CooperationMode::kInfoOnly && opt.inner_method == InnerMethod::kWaterFilling) {
      // Nothing iterates once delta_r is pinned.
      converged = feasible;
      infeasible = !feasible;
      break;
    }

    // The best feasible objective is monotone, so its change across a
    // window is immune to the saw-tooth subgradient steps make at a kink.
    best_history.push_back(best);
    if (best_history.size() > window) {
      const double before = best_history[best_history.size() - 1 - window];
      if (std::isfinite(before) && best - before <= opt.primal_tol * std::max(1.0, std::abs(best))) {
        converged = true;
        break;
      }
    }

    std::vector<double> next;
    if (st.secondary_reachable) {
      phase1_stall = 0;
      phase1_best = -kInf;
      next = layer3_update(delta, st.duals.mu, st.duals.gamma, st.duals.gamma_prime, cfg.alpha,
                           adaptive_steps(st.duals.mu));
    } else {
      // Phase 1: climb the best reachable secondary rate.
      if (st.secondary_max > phase1_best + 1e-12 * std::max(1.0, std::abs(phase1_best))) {
        phase1_best = st.secondary_max;
        phase1_stall = 0;
      } else if (++phase1_stall >= stall_limit) {
        infeasible = true;
        break;
      }
      const std::vector<double> no_mu(n, 0.0);
      next = layer3_update(delta, no_mu, st.duals.gamma, st.duals.gamma_prime, cfg.alpha,
                           adaptive_steps(no_mu));
    }
    project_transfer(next, harvests.e_p, box);
    if (!st.secondary_reachable && next == delta) {
      // The phase-1 step is a fixed point: the target is out of reach.
      infeasible = true;
      break;
    }
    delta = std::move(next);
  }

  if (have_best && mode == CooperationMode::kJoint &&
      opt.inner_method == InnerMethod::kWaterFilling) {
    // Subgradient steps stall within a step size of a kink. Finish with
    // exchanges that strictly raise the objective whenever PT keeps power
    // where relaying beats it (h_p < alpha h_sp, battery not full) or ships
    // energy where it beats relaying (h_p > h_sp, ST relays in that slot).
    // Each exchange preserves every cumulative constraint, and the exact
    // inner re-solve can only improve on the exchanged point.
    const double tiny = 1e-12 * (1.0 + harvests_total(harvests));
    std::vector<double> d = best_policy.delta_r;
    InnerState polish = st;
    for (int round = 0; round < 50; ++round) {
      bool moved = false;
      const auto levels = constraint_residuals(cfg, channels, harvests, best_policy, r_p_bar)
                              .battery_level;
      for (std::size_t i = 0; i < n; ++i) {
        const double hp = channels.h_p[i], hsp = channels.h_sp[i];
        if (hp < cfg.alpha * hsp && best_policy.p_d[i] > tiny) {
          const double eps = std::min(best_policy.p_d[i], (cfg.b_max - levels[i]) / cfg.alpha);
          if (eps > tiny) {
            d[i] += eps;
            moved = true;
          }
        } else if (hp > hsp && best_policy.p_sp[i] > tiny && d[i] > tiny) {
          d[i] -= std::min(d[i], best_policy.p_sp[i] / cfg.alpha);
          moved = true;
        }
      }
      if (!moved) break;
      project_transfer(d, harvests.e_p, box);
      inner(d, polish);
      PowerPolicy candidate{polish.p_d, d, polish.p_sp, polish.p_ss};
      const double value = primary_coop_rate(channels, candidate.p_d, candidate.p_sp).sum;
      const bool ok = polish.secondary_reachable &&
                      constraint_residuals(cfg, channels, harvests, candidate, r_p_bar)
                          .feasible(opt.feas_tol);
      if (!ok || value < best) break;
      best = value;
      best_policy = std::move(candidate);
      best_duals = polish.duals;
    }
  }

  if (have_best && mode == CooperationMode::kJoint &&
      opt.inner_method == InnerMethod::kWaterFilling) {
    InnerState final_state = st;
    exact.solve(best_policy.delta_r, final_state);
    if (exact.at_secondary_boundary(final_state)) {
      exact.boundary_duals(best_policy.delta_r, final_state);
      best_duals = final_state.duals;
    }
  }

  report.iterations = t;
  report.converged = converged;
  report.status = converged ? SolveStatus::kConverged
                            : (infeasible || !have_best ? SolveStatus::kInfeasible
                                                        : SolveStatus::kIterationLimit);
  if (have_best) return finish(best_policy, best_duals);
  return finish(policy, st.duals);
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

const char* to_string(CooperationMode mode) {
  return mode == CooperationMode::kJoint ? "joint" : "info_only";
}

}  // namespace ehcoop

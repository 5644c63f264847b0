#include "ehcoop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ehcoop/errors.hpp"

namespace ehcoop {

namespace {

constexpr int kMaxSlots = 3;
constexpr double kMaxPoints = 1e8;
}
namespace {

// Up to 3 slots: 9 variables and 3*3 + 2*3 + 2 = 17 linear constraints.
constexpr int kMaxDim = 3 * kMaxSlots;
constexpr int kMaxRows = 3 * kMaxSlots + 3 * kMaxSlots;
using MatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRows, kMaxDim>;
using VectorXd = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxRows, 1>;
using Hessian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// max f(x) s.t. A x <= b (and optionally sum ln(1 + h_ss P_ss) >= floor)
// for x = (P_d, P_sp, P_ss), by a log-barrier Newton method.
class BarrierProblem {
 public:
  BarrierProblem(const ChannelRealization& ch, MatrixXd a, VectorXd b)
      : ch_(ch), n_(ch.size()), a_(std::move(a)), b_(std::move(b)) {}

  double primary(const Point& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += std::log1p(ch_.h_p[i] * x[i] + ch_.h_sp[i] * x[n_ + i]);
    return s;
  }

  double secondary(const Point& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += std::log1p(ch_.h_ss[i] * x[2 * n_ + i]);
    return s;
  }

  // Maximize the secondary rate, stopping early once it exceeds `stop_at`.
  Point maximize_secondary(Point x, double stop_at) const {
    return run(std::move(x), Goal::kSecondary, std::nullopt, stop_at);
  }

  Point maximize_primary(Point x, std::optional<double> secondary_floor) const {
    return run(std::move(x), Goal::kPrimary, secondary_floor,
               std::numeric_limits<double>::infinity());
  }

 private:
  enum class Goal { kPrimary, kSecondary };

  struct Eval {
    double value = 0.0;
    Point grad;
    Hessian hess;
  };

  // Barrier-augmented negative objective; nullopt outside the domain.
  std::optional<double> value(const Point& x, double t, Goal goal,
                              const std::optional<double>& floor) const {
    const VectorXd slack = b_ - a_ * x;
    if ((slack.array() <= 0.0).any()) return std::nullopt;
    double v = -slack.array().log().sum();
    const double f = goal == Goal::kPrimary ? primary(x) : secondary(x);
    v -= t * f;
    if (floor) {
      const double g = secondary(x) - *floor;
      if (g <= 0.0) return std::nullopt;
      v -= std::log(g);
    }
    return v;
  }

  Eval evaluate(const Point& x, double t, Goal goal, const std::optional<double>& floor) const {
    const std::size_t dim = 3 * n_;
    Eval e;
    e.grad = Point::Zero(dim);
    e.hess = Hessian::Zero(dim, dim);
    const VectorXd slack = b_ - a_ * x;
    const VectorXd inv = slack.cwiseInverse();
    e.grad += a_.transpose() * inv;
    e.hess += a_.transpose() * inv.cwiseAbs2().asDiagonal() * a_;
    for (std::size_t i = 0; i < n_; ++i) {
      if (goal == Goal::kPrimary) {
        const double u = 1.0 + ch_.h_p[i] * x[i] + ch_.h_sp[i] * x[n_ + i];
        const std::size_t p = i, q = n_ + i;
        const double hp = ch_.h_p[i], hs = ch_.h_sp[i];
        e.grad[p] -= t * hp / u;
        e.grad[q] -= t * hs / u;
        const double w = t / (u * u);
        e.hess(p, p) += w * hp * hp;
        e.hess(p, q) += w * hp * hs;
        e.hess(q, p) += w * hp * hs;
        e.hess(q, q) += w * hs * hs;
      } else {
        const std::size_t r = 2 * n_ + i;
        const double u = 1.0 + ch_.h_ss[i] * x[r];
        e.grad[r] -= t * ch_.h_ss[i] / u;
        e.hess(r, r) += t * ch_.h_ss[i] * ch_.h_ss[i] / (u * u);
      }
    }
    if (floor) {
      const double g = secondary(x) - *floor;
      Point dg = Point::Zero(dim);
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t r = 2 * n_ + i;
        const double u = 1.0 + ch_.h_ss[i] * x[r];
        dg[r] = ch_.h_ss[i] / u;
        // -log g: Hessian = dg dg^T / g^2 - (d2g) / g, d2g diagonal negative.
        e.hess(r, r) += ch_.h_ss[i] * ch_.h_ss[i] / (u * u) / g;
      }
      e.grad -= dg / g;
      e.hess += dg * dg.transpose() / (g * g);
    }
    return e;
  }

  Point run(Point x, Goal goal, std::optional<double> floor, double stop_at) const {
    const double constraints = static_cast<double>(b_.size() + (floor ? 1 : 0));
    for (double t = 1.0; constraints / t > 1e-10; t *= 20.0) {
      for (int it = 0; it < 60; ++it) {
        const Eval e = evaluate(x, t, goal, floor);
        const Point step = e.hess.ldlt().solve(-e.grad);
        const double decrement = -e.grad.dot(step);
        // Barrier values reach ~t, so a finer decrement is round-off.
        if (!(decrement > 1e-10)) break;
        const double here = *value(x, t, goal, floor);
        double s = 1.0;
        bool moved = false;
        while (s > 1e-12) {
          const Point trial = x + s * step;
          const auto v = value(trial, t, goal, floor);
          if (v && *v <= here - 0.25 * s * decrement) {
            x = trial;
            moved = true;
            break;
          }
          s *= 0.5;
        }
        if (!moved) break;
        if (goal == Goal::kSecondary && secondary(x) > stop_at) return x;
      }
      if (goal == Goal::kSecondary && secondary(x) > stop_at) return x;
    }
    return x;
  }

  const ChannelRealization& ch_;
  std::size_t n_;
  MatrixXd a_;
  VectorXd b_;
};

struct Candidate {
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<double> delta;
  PowerPolicy policy;
  bool feasible = false;
};

class Evaluator {
 public:
  Evaluator(const ScenarioConfig& cfg, const ChannelRealization& ch,
            const HarvestRealization& hv)
      : cfg_(cfg), ch_(ch), hv_(hv), n_(ch.size()) {
    double scale = 1.0;
    for (std::size_t i = 0; i < n_; ++i) scale = std::max({scale, hv.e_p[i], hv.e_s[i]});
    slack_ = 1e-7 * scale;
  }

  // Best (P_d, P_sp, P_ss) for a fixed transfer vector.
  std::optional<Candidate> at(const std::vector<double>& delta) const {
    const std::size_t n = n_, dim = 3 * n;
    std::vector<double> pt_cap(n), st_cap(n);
    double pt = 0.0, st = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      pt += hv_.e_p[k] - delta[k];
      st += hv_.e_s[k] + cfg_.alpha * delta[k];
      if (pt < -slack_) return std::nullopt;
      if (hv_.e_s[k] + cfg_.alpha * delta[k] > cfg_.b_max + slack_) return std::nullopt;
      pt_cap[k] = pt + slack_;
      st_cap[k] = st + slack_;
    }
    // ST's cumulative spend must keep the next slot's income storable.
    std::vector<double> st_floor(n, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k + 1 < n; ++k) st_floor[k] = st_cap[k + 1] - cfg_.b_max - 2.0 * slack_;

    const std::size_t rows = dim + 2 * n + (n - 1);
    MatrixXd a = MatrixXd::Zero(rows, dim);
    VectorXd b = VectorXd::Zero(rows);
    std::size_t r = 0;
    for (std::size_t j = 0; j < dim; ++j, ++r) {
      a(r, j) = -1.0;
      b[r] = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k, ++r) {
      for (std::size_t i = 0; i <= k; ++i) a(r, i) = 1.0;
      b[r] = pt_cap[k];
    }
    for (std::size_t k = 0; k < n; ++k, ++r) {
      for (std::size_t i = 0; i <= k; ++i) a(r, n + i) = a(r, 2 * n + i) = 1.0;
      b[r] = st_cap[k];
    }
    for (std::size_t k = 0; k + 1 < n; ++k, ++r) {
      for (std::size_t i = 0; i <= k; ++i) a(r, n + i) = a(r, 2 * n + i) = -1.0;
      b[r] = -st_floor[k];
    }
    BarrierProblem problem(ch_, a, b);

    // Strictly interior start: PT spends a fraction of what is left, ST
    // tracks the middle of its cumulative corridor.
    Point x(dim);
    double used = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double room = std::numeric_limits<double>::infinity();
      for (std::size_t j = k; j < n; ++j) room = std::min(room, pt_cap[j] - used);
      x[k] = 0.5 * room / static_cast<double>(n);
      used += x[k];
    }
    double path = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double hi = std::numeric_limits<double>::infinity();
      for (std::size_t j = k; j < n; ++j) hi = std::min(hi, st_cap[j]);
      double lo = path;
      for (std::size_t j = 0; j <= k; ++j) lo = std::max(lo, st_floor[j]);
      const double next = lo + 0.5 * (hi - lo);
      x[n + k] = x[2 * n + k] = 0.5 * (next - path);
      path = next;
    }

    const double target = static_cast<double>(n) * cfg_.rs_bar;
    std::optional<double> floor;
    if (target > 0.0) {
      x = problem.maximize_secondary(x, target - 0.5 * slack_);
      if (problem.secondary(x) <= target - 0.5 * slack_) return std::nullopt;
      floor = target - slack_;
    }
    x = problem.maximize_primary(x, floor);

    Candidate c;
    c.delta = delta;
    c.policy = PowerPolicy::zeros(n);
    c.policy.delta_r = delta;
    for (std::size_t i = 0; i < n; ++i) {
      c.policy.p_d[i] = x[i];
      c.policy.p_sp[i] = x[n + i];
      c.policy.p_ss[i] = x[2 * n + i];
    }
    c.objective = problem.primary(x);
    c.feasible = true;
    return c;
  }

 private:
  const ScenarioConfig& cfg_;
  const ChannelRealization& ch_;
  const HarvestRealization& hv_;
  std::size_t n_;
  double slack_;
};

// One grid axis: values from `lo` in steps of `step` strictly below `hi`,
// then `hi` itself.
std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  if (hi < lo) return v;
  if (step <= 0.0) return {lo};
  for (std::size_t j = 0;; ++j) {
    const double x = lo + static_cast<double>(j) * step;
    if (x >= hi - 1e-12 * std::max(1.0, hi)) break;
    v.push_back(x);
  }
  v.push_back(hi);
  return v;
}

struct Box {
  std::vector<double> lo, hi;
};

// Enumerates transfer vectors inside the PT prefix budget and storage box,
// restricted to `window`, in lexicographic order.
class Grid {
 public:
  Grid(const ScenarioConfig& cfg, const HarvestRealization& hv, Box window, double step)
      : cfg_(cfg), hv_(hv), window_(std::move(window)), step_(step) {}

  double count_bound() const {
    double total = 1.0, harvested = 0.0;
    for (std::size_t k = 0; k < hv_.size(); ++k) {
      harvested += hv_.e_p[k];
      const double store = std::max(0.0, (cfg_.b_max - hv_.e_s[k]) / cfg_.alpha);
      const double hi = std::min({window_.hi[k], store, harvested});
      const double width = std::max(0.0, hi - window_.lo[k]);
      total *= (step_ > 0.0 ? width / step_ : 0.0) + 2.0;
    }
    return total;
  }

  std::vector<double> first_axis() const { return axis_at(0, 0.0); }

  template <typename Visit>
  void for_each(double first, Visit&& visit) const {
    std::vector<double> delta(hv_.size(), 0.0);
    delta[0] = first;
    recurse(1, first, delta, visit);
  }

 private:
  std::vector<double> axis_at(std::size_t k, double given) const {
    double harvested = 0.0;
    for (std::size_t i = 0; i <= k; ++i) harvested += hv_.e_p[i];
    const double store = std::max(0.0, (cfg_.b_max - hv_.e_s[k]) / cfg_.alpha);
    const double hi = std::min({window_.hi[k], store, std::max(0.0, harvested - given)});
    const double lo = std::max(0.0, window_.lo[k]);
    return axis(lo, hi, step_);
  }

  template <typename Visit>
  void recurse(std::size_t k, double given, std::vector<double>& delta, Visit& visit) const {
    if (k == delta.size()) {
      visit(delta);
      return;
    }
    for (double v : axis_at(k, given)) {
      delta[k] = v;
      recurse(k + 1, given + v, delta, visit);
    }
  }

  const ScenarioConfig& cfg_;
  const HarvestRealization& hv_;
  Box window_;
  double step_;
};

bool better(const Candidate& a, const Candidate& b) {
  if (!a.feasible) return false;
  if (!b.feasible) return true;
  if (a.objective != b.objective) return a.objective > b.objective;
  return a.delta < b.delta;
}

Candidate search(const Grid& grid, const Evaluator& eval, std::size_t workers,
                 std::size_t& evaluated) {
  const auto first = grid.first_axis();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, first.size()));
  std::vector<Candidate> best(workers);
  std::vector<std::size_t> counts(workers, 0);
  auto job = [&](std::size_t w) {
    for (std::size_t j = w; j < first.size(); j += workers) {
      grid.for_each(first[j], [&](const std::vector<double>& delta) {
        ++counts[w];
        if (auto c = eval.at(delta); c && better(*c, best[w])) best[w] = std::move(*c);
      });
    }
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(job, w);
    for (auto& t : pool) t.join();
  }
  Candidate out;
  for (std::size_t w = 0; w < workers; ++w) {
    evaluated += counts[w];
    if (better(best[w], out)) out = std::move(best[w]);
  }
  return out;
}

}  // namespace

OracleResult brute_force_solve(const ScenarioConfig& cfg, const ChannelRealization& channels,
                               const HarvestRealization& harvests, double grid_step,
                               std::size_t workers) {
  cfg.validate();
  channels.validate(cfg.n_slots);
  harvests.validate(cfg.n_slots);
  const std::size_t n = cfg.n_slots;
  if (n > static_cast<std::size_t>(kMaxSlots)) {
    throw ConfigError("brute_force_solve handles at most " + std::to_string(kMaxSlots) +
                      " slots, got " + std::to_string(n));
  }
  double pt_total = 0.0;
  for (double e : harvests.e_p) pt_total += e;
  const double step = grid_step > 0.0 ? grid_step : pt_total / 50.0;

  const double inf = std::numeric_limits<double>::infinity();
  const Grid coarse(cfg, harvests, Box{std::vector<double>(n, 0.0), std::vector<double>(n, inf)},
                    step);
  if (coarse.count_bound() > kMaxPoints) {
    throw BudgetExceeded("oracle grid would exceed 1e8 points at step " + std::to_string(step));
  }
  const Evaluator eval(cfg, channels, harvests);

  OracleResult result;
  result.grid_step = step;
  Candidate best = search(coarse, eval, workers, result.points_evaluated);
  if (best.feasible && step > 0.0) {
    Box window{best.delta, best.delta};
    for (std::size_t k = 0; k < n; ++k) {
      window.lo[k] = std::max(0.0, best.delta[k] - step);
      window.hi[k] = best.delta[k] + step;
    }
    const Grid fine(cfg, harvests, window, step / 10.0);
    Candidate refined = search(fine, eval, workers, result.points_evaluated);
    if (better(refined, best)) best = std::move(refined);
  }

  result.feasible = best.feasible;
  if (best.feasible) {
    result.policy = std::move(best.policy);
    result.objective = best.objective;
  } else {
    result.policy = PowerPolicy::zeros(n);
  }
  return result;
}

}  // namespace ehcoop

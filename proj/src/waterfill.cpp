#include "ehcoop/waterfill.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ehcoop::waterfill {

namespace {

// Sum of ramps kept sorted by threshold.
class RampSum {
 public:
  void add(std::span<const Ramp> ramps) {
    for (const Ramp& r : ramps) {
      auto pos = std::upper_bound(
          ramps_.begin(), ramps_.end(), r,
          [](const Ramp& a, const Ramp& b) { return a.threshold < b.threshold; });
      ramps_.insert(pos, r);
    }
  }
  void clear() { ramps_.clear(); }
  bool empty() const { return ramps_.empty(); }
  double floor() const { return ramps_.empty() ? kInf : ramps_.front().threshold; }

  // Smallest level spending `amount` > 0; kInf when the sum is bounded.
  double inverse(double amount) const {
    double slope = 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < ramps_.size(); ++i) {
      slope += ramps_[i].slope;
      const double here = ramps_[i].threshold;
      const double next = i + 1 < ramps_.size() ? ramps_[i + 1].threshold : kInf;
      const double at_next = next == kInf ? kInf : value + slope * (next - here);
      if (amount <= at_next) return here + (amount - value) / slope;
      value = at_next;
    }
    return kInf;
  }

 private:
  std::vector<Ramp> ramps_;
};

double bound_scale(const Tunnel& t) {
  double s = 1.0;
  for (double x : t.upper) {
    if (std::isfinite(x)) s = std::max(s, std::abs(x));
  }
  for (double x : t.lower) {
    if (std::isfinite(x)) s = std::max(s, std::abs(x));
  }
  return s;
}

}  // namespace

void SpendCurve::add(double slope, double threshold) {
  assert(size_ < ramps_.size());
  assert(slope > 0.0);
  Ramp r{slope, threshold};
  if (size_ == 1 && threshold < ramps_[0].threshold) {
    ramps_[1] = ramps_[0];
    ramps_[0] = r;
  } else {
    ramps_[size_] = r;
  }
  ++size_;
}

double SpendCurve::operator()(double level) const {
  double total = 0.0;
  for (const Ramp& r : ramps()) {
    if (level > r.threshold) total += r.slope * (level - r.threshold);
  }
  return total;
}

double SpendCurve::floor() const { return size_ == 0 ? kInf : ramps_[0].threshold; }

double SpendCurve::inverse(double amount) const {
  RampSum sum;
  sum.add(ramps());
  return sum.inverse(amount);
}

Tunnel Tunnel::upper_only(std::vector<double> upper) {
  Tunnel t;
  t.lower.assign(upper.size(), -kInf);
  t.upper = std::move(upper);
  return t;
}

std::optional<Fill> fill(std::span<const SpendCurve> curves, const Tunnel& tunnel) {
  const std::size_t n = curves.size();
  assert(tunnel.upper.size() == n && tunnel.lower.size() == n);
  const double eps = 1e-12 * bound_scale(tunnel);

  // Consumption is non-decreasing, so a later upper bound caps every earlier
  // prefix and an earlier lower bound props up every later one.
  std::vector<double> hi(tunnel.upper), lo(tunnel.lower);
  for (std::size_t k = n; k-- > 1;) hi[k - 1] = std::min(hi[k - 1], hi[k]);
  for (std::size_t k = 1; k < n; ++k) lo[k] = std::max(lo[k], lo[k - 1]);
  for (std::size_t k = 0; k < n; ++k) {
    if (hi[k] < -eps || lo[k] > hi[k] + eps) return std::nullopt;
  }

  Fill out;
  out.spend.assign(n, 0.0);
  out.level.assign(n, kInf);

  RampSum sum;
  double consumed = 0.0;
  std::size_t start = 0;
  while (start < n) {
    double floor_level = -kInf, ceil_level = kInf;
    std::size_t floor_at = n, ceil_at = n;
    std::size_t end = n;
    double level = kInf;
    sum.clear();
    for (std::size_t j = start; j < n; ++j) {
      sum.add(curves[j].ramps());
      const double room = hi[j] - consumed;
      const double cap = room > eps ? sum.inverse(room) : sum.floor();
      const double need = lo[j] - consumed;
      double must = -kInf;
      if (need > eps) {
        must = sum.inverse(need);
        if (must == kInf) return std::nullopt;
      }
      if (cap < floor_level) {
        end = floor_at;
        level = floor_level;
        break;
      }
      if (must > ceil_level) {
        end = ceil_at;
        level = ceil_level;
        break;
      }
      if (must > floor_level) {
        floor_level = must;
        floor_at = j;
      }
      if (cap < ceil_level) {
        ceil_level = cap;
        ceil_at = j;
      }
    }
    if (end == n) {
      if (ceil_at < n) {
        end = ceil_at;
        level = ceil_level;
      } else {
        // Nothing left can spend: remaining slots stay at an infinite level.
        end = n - 1;
        level = kInf;
      }
    }
    for (std::size_t i = start; i <= end; ++i) {
      out.level[i] = level;
      out.spend[i] = level == kInf ? 0.0 : curves[i](level);
      consumed += out.spend[i];
    }
    start = end + 1;
  }
  return out;
}

LevelRecovery recover_levels(std::span<const SpendCurve> curves,
                             std::span<const double> spend, const Tunnel& tunnel,
                             double rel_tol) {
  const std::size_t n = curves.size();
  assert(spend.size() == n);
  const double tol = rel_tol * bound_scale(tunnel);

  LevelRecovery rec;
  rec.level.assign(n, kInf);
  rec.upper_tight.assign(n, false);
  rec.lower_tight.assign(n, false);
  if (n == 0) return rec;

  // Admissible level interval per slot.
  std::vector<double> lo_level(n), hi_level(n);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (spend[i] > 0.0) {
      lo_level[i] = hi_level[i] = curves[i].inverse(spend[i]);
    } else {
      lo_level[i] = 0.0;
      hi_level[i] = curves[i].floor();
    }
    cumulative += spend[i];
    rec.upper_tight[i] = cumulative >= tunnel.upper[i] - tol;
    rec.lower_tight[i] =
        std::isfinite(tunnel.lower[i]) && cumulative <= tunnel.lower[i] + tol;
  }

  // Blocks of constant level, separated after every tight slot.
  enum class Step { kUp, kDown, kAny };
  std::vector<std::size_t> block_begin{0};
  std::vector<Step> step;  // step[b]: allowed change from block b to b + 1
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (rec.upper_tight[k] || rec.lower_tight[k]) {
      block_begin.push_back(k + 1);
      step.push_back(rec.upper_tight[k] && rec.lower_tight[k]
                         ? Step::kAny
                         : (rec.upper_tight[k] ? Step::kUp : Step::kDown));
    }
  }
  const std::size_t blocks = block_begin.size();
  auto block_end = [&](std::size_t b) {
    return b + 1 < blocks ? block_begin[b + 1] : n;
  };

  std::vector<double> lo_b(blocks), hi_b(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    lo_b[b] = 0.0;
    hi_b[b] = kInf;
    for (std::size_t i = block_begin[b]; i < block_end(b); ++i) {
      lo_b[b] = std::max(lo_b[b], lo_level[i]);
      hi_b[b] = std::min(hi_b[b], hi_level[i]);
    }
    if (lo_b[b] > hi_b[b]) hi_b[b] = lo_b[b];
  }
  // Energy left over at the horizon end carries no value.
  if (!rec.upper_tight[n - 1] && hi_b[blocks - 1] == kInf) lo_b[blocks - 1] = kInf;

  // Backward pass: levels from which the remaining blocks stay admissible.
  std::vector<double> lo_g(lo_b), hi_g(hi_b);
  for (std::size_t b = blocks - 1; b-- > 0;) {
    if (step[b] == Step::kUp) hi_g[b] = std::min(hi_g[b], hi_g[b + 1]);
    if (step[b] == Step::kDown) lo_g[b] = std::max(lo_g[b], lo_g[b + 1]);
    if (lo_g[b] > hi_g[b]) lo_g[b] = hi_g[b] = 0.5 * (lo_g[b] + hi_g[b]);
  }

  // Forward pass: stay as close as possible to the previous block's level.
  double reference = kInf;
  for (std::size_t b = 0; b < blocks; ++b) {
    if (lo_b[b] == hi_b[b]) {
      reference = lo_b[b];
      break;
    }
  }
  std::vector<double> chosen(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double lo = lo_g[b], hi = hi_g[b];
    if (b > 0) {
      if (step[b - 1] == Step::kUp) lo = std::max(lo, chosen[b - 1]);
      if (step[b - 1] == Step::kDown) hi = std::min(hi, chosen[b - 1]);
      reference = chosen[b - 1];
    }
    if (lo > hi) hi = lo;
    chosen[b] = std::clamp(reference, lo, hi);
    for (std::size_t i = block_begin[b]; i < block_end(b); ++i) rec.level[i] = chosen[b];
  }
  return rec;
}

}  // namespace ehcoop::waterfill

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace ehcoop::waterfill {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// slope * [level - threshold]^+
struct Ramp {
  double slope = 1.0;
  double threshold = 0.0;
};

// Energy one slot consumes as a function of its water level: a sum of at
// most two ramps (relay link and own-data link share the ST level). A curve
// with no ramps belongs to a slot that cannot use energy at all.
class SpendCurve {
 public:
  SpendCurve() = default;
  SpendCurve(double slope, double threshold) { add(slope, threshold); }

  void add(double slope, double threshold);
  bool empty() const { return size_ == 0; }
  std::span<const Ramp> ramps() const { return {ramps_.data(), size_}; }

  double operator()(double level) const;
  // Lowest threshold: the largest level at which nothing is spent.
  double floor() const;
  // Level at which the curve spends `amount` (> 0); kInf if unreachable.
  double inverse(double amount) const;

 private:
  std::array<Ramp, 2> ramps_{};
  std::size_t size_ = 0;
};

// Cumulative bounds on consumption: lower[k] <= sum_{i<=k} spend_i <= upper[k].
// Entries of `lower` may be -kInf.
struct Tunnel {
  std::vector<double> upper;
  std::vector<double> lower;

  static Tunnel upper_only(std::vector<double> upper);
};

struct Fill {
  std::vector<double> spend;
  // Common water level of the epoch each slot belongs to; kInf for a
  // trailing run of slots that cannot spend.
  std::vector<double> level;
};

// Maximizes a separable concave objective whose marginal value in slot i is
// 1/level_i, subject to the tunnel. Levels are constant within an epoch; an
// epoch ends where the consumption path touches a bound (string tautening).
// Ties between equally tight bounds resolve to the earliest slot. Returns
// nullopt if no consumption path fits inside the tunnel.
std::optional<Fill> fill(std::span<const SpendCurve> curves, const Tunnel& tunnel);

// Water levels consistent with the Lagrange multipliers of the tunnel
// constraints at a given (optimal) spend profile: the level may only rise
// across a slot boundary where the upper bound is tight and only fall where
// the lower bound is tight. Zero-spend slots take the neighbouring level
// whenever their curve allows it, so a multiplier is never attached to a
// slack constraint.
struct LevelRecovery {
  std::vector<double> level;
  std::vector<bool> upper_tight;
  std::vector<bool> lower_tight;
};

LevelRecovery recover_levels(std::span<const SpendCurve> curves,
                             std::span<const double> spend, const Tunnel& tunnel,
                             double rel_tol = 1e-10);

}  // namespace ehcoop::waterfill

#include "ehcoop/baseline.hpp"

#include <cmath>
#include <string>

#include "ehcoop/errors.hpp"
#include "ehcoop/waterfill.hpp"

namespace ehcoop {

BaselineResult solve_no_coop(std::span<const double> h_p, std::span<const double> e_p) {
  const std::size_t n = h_p.size();
  if (e_p.size() != n) {
    throw ShapeError("solve_no_coop: h_p has " + std::to_string(n) +
                     " entries, e_p has " + std::to_string(e_p.size()));
  }
  std::vector<waterfill::SpendCurve> curves(n);
  std::vector<double> budget(n);
  double harvested = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h_p[i] >= 0.0) || !(e_p[i] >= 0.0)) {
      throw DomainError("solve_no_coop: gains and harvests must be non-negative");
    }
    if (h_p[i] > 0.0) curves[i].add(1.0, 1.0 / h_p[i]);
    harvested += e_p[i];
    budget[i] = harvested;
  }

  // Non-negative harvests keep the all-zero path inside the tunnel.
  auto filled = waterfill::fill(curves, waterfill::Tunnel::upper_only(std::move(budget)));

  BaselineResult out;
  out.p_d_prime = std::move(filled->spend);
  out.water_levels = std::move(filled->level);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.p_d_prime[i] > 0.0) out.water_levels[i] = out.p_d_prime[i] + 1.0 / h_p[i];
    sum += std::log1p(h_p[i] * out.p_d_prime[i]);
  }
  out.r_p_bar = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return out;
}

}  // namespace ehcoop

#pragma once

#include <span>
#include <vector>

namespace ehcoop {

// Optimal PT policy when PT and ST do not cooperate.
struct BaselineResult {
  std::vector<double> p_d_prime;
  // P'_d + 1/h_p where power is allocated, the epoch level elsewhere.
  std::vector<double> water_levels;
  // Average no-cooperation rate; the floor cooperation has to beat.
  double r_p_bar = 0.0;
};

// Directional water-filling of PT's harvested energy over its own link.
// Slots with h_p = 0 receive nothing. With no usable slot at all the result
// is the zero policy with zero rate.
BaselineResult solve_no_coop(std::span<const double> h_p, std::span<const double> e_p);

}  // namespace ehcoop

#pragma once

#include <cstddef>

#include "ehcoop/model.hpp"

namespace ehcoop {

struct OracleResult {
  PowerPolicy policy;
  double objective = 0.0;
  // Coarse grid step actually used for the transfer vector.
  double grid_step = 0.0;
  bool feasible = false;
  std::size_t points_evaluated = 0;
};

// Exhaustive reference solver for horizons of at most three slots.
//
// The transfer vector delta_r is enumerated on a grid over PT's transfer
// polytope (coordinate bounds always included as grid values), then once
// more on a 10x finer grid around the best coarse point. For every grid
// point the remaining convex problem in (P_d, P_sp, P_ss) is solved by a
// log-barrier Newton method, sharing no code with the decomposition solver.
//
// grid_step <= 0 selects total PT energy / 50. Throws ConfigError for more
// than three slots and BudgetExceeded when the grid has over 1e8 points.
// Ties go to the lexicographically smallest transfer vector, whatever the
// number of workers.
OracleResult brute_force_solve(const ScenarioConfig& cfg, const ChannelRealization& channels,
                               const HarvestRealization& harvests, double grid_step = 0.0,
                               std::size_t workers = 1);

}  // namespace ehcoop

#pragma once

#include <cstddef>

namespace ehcoop {

// How Layers 1 and 2 are solved inside one outer iteration.
enum class InnerMethod {
  // Directional water-filling on the cumulative-energy tunnel, with the
  // multipliers read off the water levels. Exact; the default.
  kWaterFilling,
  // Closed-form primal update followed by a projected dual-gradient step,
  // repeated up to max_inner_iters times. Approximate: it needs an inner
  // budget in the hundreds and can stop a little short of the optimum.
  kDualGradient,
};

struct SolverSettings {
  double step0 = 0.5;
  std::size_t max_outer_iters = 50000;
  std::size_t max_inner_iters = 50;
  double primal_tol = 1e-6;
  double feas_tol = 1e-4;
  // Replacement water level when a dual denominator underflows. Zero means
  // "derive from the instance" (see effective_level_cap).
  double level_cap = 0.0;
  InnerMethod inner_method = InnerMethod::kWaterFilling;
  // Keep a per-iteration (objective, residual) trace in the report.
  bool record_trace = false;

  void validate() const;
};

}  // namespace ehcoop

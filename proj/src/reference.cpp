#include "ehcoop/reference.hpp"

#include <vector>

namespace ehcoop {

namespace {

std::vector<double> normalized(std::vector<double> gains, double noise_power) {
  for (double& g : gains) g = normalize_gain(g, noise_power);
  return gains;
}

}  // namespace

ScenarioConfig worked_example_config() {
  ScenarioConfig cfg;
  cfg.n_slots = 5;
  cfg.alpha = 1.0;
  cfg.b_max = 3.5;
  cfg.rs_bar = 0.5;
  cfg.noise_power = 1e-3;
  return cfg;
}

Instance worked_example_instance() {
  const double n0 = worked_example_config().noise_power;
  Instance inst;
  inst.channels.h_p = normalized({0.0191, 0.0080, 0.0036, 0.0024, 0.0119}, n0);
  inst.channels.h_sp = normalized({0.0065, 0.0074, 0.0194, 0.0256, 0.0067}, n0);
  inst.channels.h_ss = normalized({0.0027, 0.0140, 0.0164, 0.0201, 0.0010}, n0);
  inst.harvests.e_p = {7.0, 0.0, 0.0, 7.0, 0.0};
  inst.harvests.e_s = {0.0, 0.0, 1.0, 0.0, 1.0};
  return inst;
}

PowerPolicy worked_example_policy() {
  PowerPolicy p;
  p.p_ss = {0.0, 0.2249, 0.2354, 0.3165, 0.0};
  p.p_sp = {0.0, 0.0, 2.5014, 3.1835, 1.0};
  p.p_d = {2.5555, 2.4828, 0.0, 0.0, 3.5};
  p.delta_r = {0.7216, 0.4908, 0.7493, 3.5, 0.0};
  return p;
}

}  // namespace ehcoop

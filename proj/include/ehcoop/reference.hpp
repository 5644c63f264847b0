#pragma once

#include "ehcoop/model.hpp"

namespace ehcoop {

// Five-slot instance with fixed gains and harvests used throughout the tests
// and by `ehcoop example`: alpha = 1, B_max = 3.5, Rs_bar = 0.5, N0 = 1 mW.
ScenarioConfig worked_example_config();
Instance worked_example_instance();

// A known feasible policy for the worked instance (not the optimum).
PowerPolicy worked_example_policy();

}  // namespace ehcoop

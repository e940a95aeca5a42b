#pragma once

/// Built-in run configurations for the three reference scenarios: a double
/// integrator (1), a stable three-state plant with a perturbation study (2), and
/// an unstable three-state plant under observer-based feedback (3).

#include <string_view>

#include "cubic_observer/io.hpp"

namespace cubic_obs::fixtures {

/// JSON text of scenario n in {1, 2, 3}; throws std::out_of_range otherwise.
[[nodiscard]] std::string_view example_config_text(int n);

[[nodiscard]] io::json example_config(int n);
[[nodiscard]] io::RunSpec example_spec(int n);

/// Perturbation used for the scenario-2 robustness run.
inline constexpr double kExample2Eps = 0.02;
/// Gamma values swept for scenario 1 and scenario 2.
inline constexpr double kExample1Gammas[] = {0.0, 0.5, 1.0, 2.0, 4.0};
inline constexpr double kExample2Gammas[] = {0.01, 0.05, 0.1, 0.5, 1.0};

}  // namespace cubic_obs::fixtures

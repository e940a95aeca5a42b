#include "cubic_observer/fixtures.hpp"

#include <stdexcept>

namespace cubic_obs::fixtures {

namespace {

// Double integrator, u = sin t, x(0) = (-3, -3), xhat(0) = 0.
constexpr std::string_view kExample1 = R"json({
  "name": "example1",
  "system": {
    "a": [[0, 1], [0, 0]],
    "b": [[0], [1]],
    "c": [[1, 0]]
  },
  "observer": {
    "type": "cubic",
    "poles": [-2, -5],
    "q": [[10, 0], [0, 10]],
    "theta": [[10]],
    "gamma": 2
  },
  "sim": {
    "dt": 0.001,
    "horizon": 10,
    "x0": [-3, -3],
    "xhat0": [0, 0],
    "input": {"kind": "sinusoid", "amplitude": 1, "omega": 1, "phase": 0}
  },
  "compare_linear": true,
  "outputs": ["trace", "metrics", "certificate", "lyapunov"]
})json";

// Theta = 1 reproduces the reference Nc = -gamma [.1866, -.1748, -.0014]^T.
constexpr std::string_view kExample2 = R"json({
  "name": "example2",
  "system": {
    "a": [[-0.1, -0.2, 0], [0.3, 0, 0], [0.1, 0.2, -3]],
    "c": [[1, 1, 2]]
  },
  "observer": {
    "type": "cubic",
    "poles": [-30, -10, -5],
    "q": [[10, 0, 0], [0, 10, 0], [0, 0, 10]],
    "theta": [[1]],
    "gamma": 0.1
  },
  "perturbation": {"eps_min": 0, "eps_max": 0.06},
  "sim": {
    "dt": 0.001,
    "horizon": 10,
    "x0": [1, 1, 1],
    "xhat0": [0, 0, 0],
    "input": {"kind": "zero"}
  },
  "compare_linear": true,
  "outputs": ["trace", "metrics", "certificate", "lyapunov"]
})json";

// Nc = -10 Lc (the damping sign); the cubic term is stiff at the initial error,
// so the step is 5e-5 s.
constexpr std::string_view kExample3 = R"json({
  "name": "example3",
  "system": {
    "a": [[0.1, -2, 0], [0.3, 0, -1], [0.1, 0.2, 3]],
    "b": [[1, 2], [2, 0], [0, 1]],
    "c": [[1, 1, 2]]
  },
  "observer": {
    "type": "cubic-explicit",
    "gain": [[0.267], [-1.429], [3.904]],
    "gain_nc": [[-2.67], [14.29], [-39.04]],
    "theta": [[10]],
    "q": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
  },
  "feedback": {
    "k": [[-0.597, 2.004, 2.511], [-0.197, 0.757, 7.510]]
  },
  "lqr": {
    "q": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "r": [[1, 0], [0, 1]]
  },
  "sim": {
    "dt": 5e-5,
    "horizon": 60,
    "x0": [1, 1, 1],
    "xhat0": [0, 0, 0],
    "input": {"kind": "zero"}
  },
  "compare_linear": true,
  "csv_stride": 20,
  "outputs": ["trace", "metrics", "certificate"]
})json";

}  // namespace

std::string_view example_config_text(int n) {
    switch (n) {
        case 1: return kExample1;
        case 2: return kExample2;
        case 3: return kExample3;
        default: throw std::out_of_range("example number must be 1, 2 or 3");
    }
}

io::json example_config(int n) { return io::json::parse(example_config_text(n)); }

io::RunSpec example_spec(int n) { return io::parse_run_spec(example_config(n)); }

}  // namespace cubic_obs::fixtures

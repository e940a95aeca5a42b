#pragma once

/// JSON run configurations, design/certificate/metrics serialization and the trace
/// CSV column contract.

#include <complex>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cubic_observer/design.hpp"
#include "cubic_observer/sim.hpp"
#include "cubic_observer/sysmodel.hpp"

namespace cubic_obs::io {

using json = nlohmann::json;

/// Malformed configuration; `field()` is a JSON-pointer style path.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

enum class ObserverKind { Linear, Cubic, CubicExplicit };

/// Observer section of a run configuration. Exactly one of `gain` / `poles` is set
/// for Linear and Cubic; CubicExplicit needs `gain` and `gain_nc`.
struct ObserverSpec {
    ObserverKind kind = ObserverKind::Cubic;
    std::optional<Matrix> gain;
    std::vector<std::complex<double>> poles;
    Matrix q;
    Matrix theta;
    double gamma = 1.0;
    bool gamma_defaulted = true;
    std::optional<Matrix> gain_nc;
    bool allow_semidefinite_damping = false;
};

struct PerturbationSpec {
    double eps_min = 0.0;
    double eps_max = 0.0;
};

/// A fully parsed run configuration.
struct RunSpec {
    LinearSystem system;
    ObserverSpec observer;
    SimConfig sim;
    std::optional<Matrix> feedback_k;
    std::optional<PerturbationSpec> perturbation;
    std::optional<LqrWeights> lqr;
    bool compare_linear = false;
    std::vector<std::string> outputs;
    /// Write every k-th sample to trace CSVs (metrics always use every sample).
    std::size_t csv_stride = 1;
};

[[nodiscard]] Matrix matrix_from_json(const json& j, const std::string& field);
[[nodiscard]] Vector vector_from_json(const json& j, const std::string& field);
[[nodiscard]] json to_json(const Matrix& m);
[[nodiscard]] json to_json(const Vector& v);

[[nodiscard]] RunSpec parse_run_spec(const json& j);
/// Reads and parses a configuration file; I/O and syntax failures become ParseError.
[[nodiscard]] RunSpec load_run_spec(const std::string& path);
[[nodiscard]] json read_json_file(const std::string& path);

[[nodiscard]] json input_to_json(const InputSignal& sig);

/// Linear gain for the spec: explicit gain, or pole placement.
[[nodiscard]] Matrix resolve_observer_gain(const RunSpec& spec);
/// Cubic design for the spec (synthesized, explicit, or degenerate when gamma = 0).
[[nodiscard]] CubicObserverDesign build_cubic_design(const RunSpec& spec, const Matrix& gain_lc);

[[nodiscard]] json design_to_json(const CubicObserverDesign& d);
[[nodiscard]] json certificate_to_json(const Certificate& c);
/// Final-value metrics: peaks, settling times, J totals, optional LQR cost.
[[nodiscard]] json metrics_to_json(const Metrics& m);

/// Formats with 17 significant digits (round-trip exact).
[[nodiscard]] std::string format_number(double v);

/// t, x1..xn, xhat1..xn, e1..en, y1..y{ny}, u1..u{nu}[, V, V_cz][, uc1..uc{nu}]
[[nodiscard]] std::vector<std::string> trace_header(const Trace& tr);
void write_trace_csv(std::ostream& os, const Trace& tr, std::size_t stride = 1);
void write_trace_csv(const std::string& path, const Trace& tr, std::size_t stride = 1);

/// t, J1..Jn, J
void write_cumulative_csv(std::ostream& os, const Trace& tr, const Metrics& m, std::size_t stride = 1);

/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace cubic_obs::io

#pragma once

/// Command implementations behind the `cubic_obs` CLI. Each returns the process
/// exit code: 0 success, 1 domain failure (certificate or divergence), 2 usage or
/// parse error. Diagnostics go to `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cubic_observer/io.hpp"

namespace cubic_obs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

inline constexpr std::uint64_t kDefaultSeed = 0x5eed;
inline constexpr const char* kOutDirEnv = "CUBIC_OBS_OUT_DIR";

struct CommandOptions {
    std::optional<std::string> out;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<double> eps;
    std::vector<double> gammas;
    std::uint64_t seed = kDefaultSeed;
    std::string format = "json";
};

/// $CUBIC_OBS_OUT_DIR if set, otherwise "cubic_obs_out".
[[nodiscard]] std::filesystem::path default_output_dir();

/// Result of a single simulation; a divergent run keeps its partial trace.
struct RunOutcome {
    Trace trace;
    std::optional<double> diverged_at;
    std::string failure;
};

/// Runs the observer described by `spec` (cubic, linear, closed loop, perturbed).
/// With `linear_only`, the gain is used as a plain linear observer instead.
[[nodiscard]] RunOutcome run_spec(const io::RunSpec& spec, bool linear_only = false);

/// Design and certificates as JSON; `exit_code` is 0 iff every certificate passes.
struct DesignReport {
    io::json body;
    int exit_code = kExitOk;
};
[[nodiscard]] DesignReport design_report(const io::RunSpec& spec, std::uint64_t seed = kDefaultSeed);

/// One sweep row per gamma, in the given order. gamma = 0 uses the degenerate design.
struct SweepRow {
    double gamma;
    bool degenerate;
    Metrics metrics;
    std::optional<double> diverged_at;
};
[[nodiscard]] std::vector<SweepRow> sweep_gamma(const io::RunSpec& spec, const std::vector<double>& gammas);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Applies --dt / --horizon / --eps overrides.
void apply_overrides(io::RunSpec& spec, const CommandOptions& opts);

int cmd_design(const std::string& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep_gamma(const std::string& config_path, const CommandOptions& opts, std::ostream& out,
                    std::ostream& err);
/// Writes the full reproduction bundle for scenario n into opts.out (or
/// default_output_dir()/example<n>).
int cmd_example(int n, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace cubic_obs::cli

#include "cubic_observer/commands.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cubic_observer/fixtures.hpp"

namespace cubic_obs::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

/// Shortest round-trip decimal form, for use in file names.
std::string short_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::optional<Matrix> try_lyapunov(const LinearSystem& sys, const Matrix& gain, const Matrix& q) {
    try {
        return solve_lyapunov(Matrix(sys.a() - gain * sys.c()), q);
    } catch (const DesignError&) {
        return std::nullopt;
    }
}

json outcome_metrics(const RunOutcome& run, const std::optional<LqrWeights>& lqr) {
    json j;
    if (run.trace.size() > 0) {
        const bool want_lqr = lqr && run.trace.has_control();
        j = io::metrics_to_json(compute_metrics(run.trace, kSettleBand, want_lqr ? lqr : std::nullopt));
    } else {
        j = json::object();
    }
    j["diverged_at"] = run.diverged_at ? json(*run.diverged_at) : json(nullptr);
    j["samples"] = run.trace.size();
    return j;
}

fs::path example_dir(int n, const CommandOptions& opts) {
    if (opts.out) return fs::path(*opts.out);
    return default_output_dir() / ("example" + std::to_string(n));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

void write_cumulative(const fs::path& path, const Trace& tr, const Metrics& m, std::size_t stride) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    io::write_cumulative_csv(out, tr, m, stride);
}

/// Error component i of several traces side by side: t, <label_1>, <label_2>, ...
void write_component_csv(const fs::path& path, const std::vector<std::pair<std::string, const Trace*>>& traces,
                         Eigen::Index component) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t";
    for (const auto& [label, _] : traces) out << ',' << label;
    out << '\n';
    const std::size_t m = traces.front().second->size();
    for (std::size_t k = 0; k < m; ++k) {
        out << io::format_number(traces.front().second->times[k]);
        for (const auto& [_, tr] : traces)
            out << ',' << io::format_number(tr->errors(static_cast<Eigen::Index>(k), component));
        out << '\n';
    }
}

/// Running LQR cost of several closed-loop traces: t, <label_1>, ...
void write_lqr_series(const fs::path& path, const std::vector<std::pair<std::string, const Trace*>>& traces,
                      const LqrWeights& w, std::size_t stride) {
    std::vector<Vector> series;
    for (const auto& [_, tr] : traces) {
        const Vector integrand = (tr->plant_states * w.q).cwiseProduct(tr->plant_states).rowwise().sum() +
                                 (tr->control * w.r).cwiseProduct(tr->control).rowwise().sum();
        Vector acc = Vector::Zero(integrand.size());
        for (Eigen::Index k = 1; k < integrand.size(); ++k) {
            const double h = tr->times[static_cast<std::size_t>(k)] - tr->times[static_cast<std::size_t>(k - 1)];
            acc(k) = acc(k - 1) + 0.5 * h * (integrand(k) + integrand(k - 1));
        }
        series.push_back(std::move(acc));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "t";
    for (const auto& [label, _] : traces) out << ',' << label;
    out << '\n';
    const std::size_t m = traces.front().second->size();
    for (std::size_t k = 0; k < m; k += stride) {
        out << io::format_number(traces.front().second->times[k]);
        for (const auto& s : series) out << ',' << io::format_number(s(static_cast<Eigen::Index>(k)));
        out << '\n';
        if (k + stride >= m && k != m - 1) k = m - 1 - stride;
    }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json compare_entry(double cubic, double linear) {
    return {{"cubic", cubic}, {"linear", linear}, {"cubic_smaller", cubic < linear}};
}

}  // namespace

fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return fs::path(env);
    return fs::path("cubic_obs_out");
}

void apply_overrides(io::RunSpec& spec, const CommandOptions& opts) {
    if (opts.dt) spec.sim.dt = *opts.dt;
    if (opts.horizon) spec.sim.horizon = *opts.horizon;
    if (opts.eps) spec.sim.eps = *opts.eps;
}

RunOutcome run_spec(const io::RunSpec& spec, bool linear_only) {
    const LinearSystem& sys = spec.system;
    const Matrix gain = io::resolve_observer_gain(spec);
    const bool linear = linear_only || spec.observer.kind == io::ObserverKind::Linear;

    RunOutcome outcome;
    try {
        if (spec.feedback_k) {
            const CubicObserverDesign d = linear ? degenerate_linear(sys, gain, spec.observer.q, spec.observer.theta)
                                                 : io::build_cubic_design(spec, gain);
            outcome.trace = simulate_closed_loop(sys, d, *spec.feedback_k, spec.sim);
        } else if (spec.perturbation && spec.sim.eps) {
            const PerturbedFamily family(sys, spec.perturbation->eps_min, spec.perturbation->eps_max);
            const CubicObserverDesign d = linear ? degenerate_linear(sys, gain, spec.observer.q, spec.observer.theta)
                                                 : io::build_cubic_design(spec, gain);
            SimConfig cfg = spec.sim;
            cfg.eps.reset();
            outcome.trace = simulate_perturbed(family, d, *spec.sim.eps, cfg);
        } else if (linear) {
            outcome.trace = simulate_linear_observer(sys, {gain}, spec.sim, try_lyapunov(sys, gain, spec.observer.q));
        } else {
            outcome.trace = simulate_cubic_observer(sys, io::build_cubic_design(spec, gain), spec.sim);
        }
    } catch (const SimulationDiverged& e) {
        outcome.trace = e.partial();
        outcome.diverged_at = e.last_good_time();
        outcome.failure = e.what();
    }
    return outcome;
}

DesignReport design_report(const io::RunSpec& spec, std::uint64_t seed) {
    const LinearSystem& sys = spec.system;
    const Matrix gain = io::resolve_observer_gain(spec);
    DesignReport report;
    json& body = report.body;
    body["gamma"] = spec.observer.gamma;
    body["gamma_defaulted"] = spec.observer.gamma_defaulted;
    if (!spec.observer.poles.empty()) {
        json poles = json::array();
        for (const auto& p : spec.observer.poles) poles.push_back({p.real(), p.imag()});
        body["poles"] = poles;
    }

    const bool linear = spec.observer.kind == io::ObserverKind::Linear;
    const CubicObserverDesign design = linear ? degenerate_linear(sys, gain, spec.observer.q, spec.observer.theta)
                                              : io::build_cubic_design(spec, gain);
    body["observer"] = linear ? "linear" : (spec.observer.kind == io::ObserverKind::Cubic ? "cubic" : "cubic-explicit");
    json d = io::design_to_json(design);
    for (auto& [k, v] : d.items()) body[k] = v;
    body["lambda_max_p"] = symmetric_eigenvalues(design.lyapunov_p).maxCoeff();

    Certificate cert = spec.feedback_k ? feedback_certificate(sys, design, *spec.feedback_k)
                                       : certify_stability(sys, design);
    cert.robustness_eps_max = robustness_bound(design);
    body["certificate"] = io::certificate_to_json(cert);

    const auto eq = search_nonzero_equilibria(sys, design, seed);
    json roots = json::array();
    for (const auto& r : eq.nonzero_roots) roots.push_back(io::to_json(r));
    body["equilibrium_search"] = {{"seed", seed}, {"seeds", eq.seeds_tried}, {"nonzero_roots", roots}};

    const bool ok = linear ? cert.hurwitz_ok && cert.feedback_ok.value_or(true) : cert.all_ok();
    report.exit_code = ok ? kExitOk : kExitDomain;
    return report;
}

std::vector<SweepRow> sweep_gamma(const io::RunSpec& spec, const std::vector<double>& gammas) {
    if (spec.observer.kind == io::ObserverKind::CubicExplicit)
        throw ContractError("gamma sweep needs a synthesizable cubic observer (type 'cubic' or 'linear')");
    std::vector<SweepRow> rows;
    for (const double g : gammas) {
        if (g < 0.0 || !std::isfinite(g)) throw ContractError("gamma values must be >= 0");
        io::RunSpec s = spec;
        s.observer.kind = io::ObserverKind::Cubic;
        s.observer.gamma = g;
        s.observer.gamma_defaulted = false;
        RunOutcome r = run_spec(s);
        rows.push_back({g, g == 0.0, compute_metrics(r.trace), r.diverged_at});
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    const Eigen::Index n = rows.empty() ? 0 : rows.front().metrics.peak_error.size();
    os << "gamma,degenerate";
    for (const char* stem : {"peak", "overshoot", "settle", "J"})
        for (Eigen::Index i = 1; i <= n; ++i) os << ',' << stem << i;
    os << ",J_total,diverged_at\n";
    for (const auto& row : rows) {
        const Metrics& m = row.metrics;
        os << io::format_number(row.gamma) << ',' << (row.degenerate ? 1 : 0);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << io::format_number(m.peak_error(i));
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << io::format_number(m.overshoot_peak(i));
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',';
            if (const auto& st = m.settling_time[static_cast<std::size_t>(i)]) os << io::format_number(*st);
        }
        const Eigen::Index last = m.cumulative_squared.rows() - 1;
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << io::format_number(m.cumulative_squared(last, i));
        os << ',' << io::format_number(m.total_cost()) << ',';
        if (row.diverged_at) os << io::format_number(*row.diverged_at);
        os << '\n';
    }
}

namespace {

/// Shared error mapping for the config-driven commands.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const io::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DesignError& e) {
        err << "design failure: " << e.what() << '\n';
        return kExitDomain;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}

io::RunSpec load_with_overrides(const std::string& path, const CommandOptions& opts) {
    io::RunSpec spec = io::load_run_spec(path);
    apply_overrides(spec, opts);
    if (!(spec.sim.dt > 0.0)) throw io::ParseError("--dt", "must be positive");
    if (!(spec.sim.horizon >= spec.sim.dt)) throw io::ParseError("--horizon", "horizon must be >= dt");
    return spec;
}

}  // namespace

int cmd_design(const std::string& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const io::RunSpec spec = load_with_overrides(config_path, opts);
        const DesignReport report = design_report(spec, opts.seed);
        const std::string text = report.body.dump(2) + "\n";
        if (opts.out) {
            write_text(*opts.out, text);
        } else {
            out << text;
        }
        if (report.exit_code != kExitOk) {
            err << "certification failed:";
            for (const auto& note : report.body["certificate"]["notes"]) err << "\n  " << note.get<std::string>();
            err << "\n  margins: " << report.body["certificate"]["margins"].dump() << '\n';
        }
        return report.exit_code;
    });
}

int cmd_simulate(const std::string& config_path, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const io::RunSpec spec = load_with_overrides(config_path, opts);
        const fs::path trace_path = opts.out ? fs::path(*opts.out) : default_output_dir() / "trace.csv";
        if (trace_path.has_parent_path()) fs::create_directories(trace_path.parent_path());

        json report;
        const RunOutcome primary = run_spec(spec);
        io::write_trace_csv(trace_path.string(), primary.trace, spec.csv_stride);
        report["observer"] = outcome_metrics(primary, spec.lqr);
        report["trace_csv"] = trace_path.string();
        bool diverged = primary.diverged_at.has_value();
        if (diverged) err << "divergence: " << primary.failure << '\n';

        if (spec.compare_linear && spec.observer.kind != io::ObserverKind::Linear) {
            fs::path linear_path = trace_path;
            linear_path.replace_filename(trace_path.stem().string() + "_linear" + trace_path.extension().string());
            const RunOutcome linear = run_spec(spec, /*linear_only=*/true);
            io::write_trace_csv(linear_path.string(), linear.trace, spec.csv_stride);
            report["linear"] = outcome_metrics(linear, spec.lqr);
            report["linear_trace_csv"] = linear_path.string();
            if (linear.diverged_at) {
                err << "divergence (linear): " << linear.failure << '\n';
                diverged = true;
            }
        }
        report["diverged_at"] = primary.diverged_at ? json(*primary.diverged_at) : json(nullptr);

        if (opts.format == "csv") {
            const Metrics m = compute_metrics(primary.trace);
            write_sweep_csv(out, {{spec.observer.gamma, spec.observer.gamma == 0.0, m, primary.diverged_at}});
        } else {
            out << report.dump(2) << '\n';
        }
        return diverged ? kExitDomain : kExitOk;
    });
}

int cmd_sweep_gamma(const std::string& config_path, const CommandOptions& opts, std::ostream& out,
                    std::ostream& err) {
    return guarded(err, [&] {
        if (opts.gammas.empty()) throw io::ParseError("--gammas", "at least one gamma is required");
        for (const double g : opts.gammas)
            if (g < 0.0) throw io::ParseError("--gammas", "gamma values must be >= 0");
        const io::RunSpec spec = load_with_overrides(config_path, opts);
        const auto rows = sweep_gamma(spec, opts.gammas);
        std::ostringstream table;
        if (opts.format == "json") {
            json arr = json::array();
            for (const auto& r : rows) {
                json m = io::metrics_to_json(r.metrics);
                m["gamma"] = r.gamma;
                m["degenerate"] = r.degenerate;
                m["diverged_at"] = optional_json(r.diverged_at);
                arr.push_back(std::move(m));
            }
            table << arr.dump(2) << '\n';
        } else {
            write_sweep_csv(table, rows);
        }
        if (opts.out) {
            write_text(*opts.out, table.str());
        } else {
            out << table.str();
        }
        for (const auto& r : rows)
            if (r.diverged_at) return kExitDomain;
        return kExitOk;
    });
}

namespace {

json example1(const io::RunSpec& spec, const fs::path& dir, std::uint64_t seed) {
    json report;
    const DesignReport design = design_report(spec, seed);
    io::write_json_file((dir / "design.json").string(), design.body);
    report["design"] = design.body;

    const RunOutcome cubic = run_spec(spec);
    const RunOutcome linear = run_spec(spec, true);
    io::write_trace_csv((dir / "trace_cubic.csv").string(), cubic.trace);
    io::write_trace_csv((dir / "trace_linear.csv").string(), linear.trace);
    const Metrics mc = compute_metrics(cubic.trace);
    const Metrics ml = compute_metrics(linear.trace);
    report["metrics_cubic"] = io::metrics_to_json(mc);
    report["metrics_linear"] = io::metrics_to_json(ml);

    // The second state is the unmeasured one being estimated.
    const auto sc = mc.settling_time[1];
    const auto sl = ml.settling_time[1];
    report["comparison_e2"] = {
        {"peak", compare_entry(mc.overshoot_peak(1), ml.overshoot_peak(1))},
        {"settling_time", {{"cubic", optional_json(sc)}, {"linear", optional_json(sl)},
                           {"cubic_smaller", sc && sl && *sc < *sl}}}};

    std::vector<double> gammas(std::begin(fixtures::kExample1Gammas), std::end(fixtures::kExample1Gammas));
    const auto rows = sweep_gamma(spec, gammas);
    {
        std::ofstream os(dir / "sweep_gamma.csv", std::ios::binary);
        write_sweep_csv(os, rows);
    }
    std::vector<RunOutcome> runs;
    for (const double g : gammas) {
        io::RunSpec s = spec;
        s.observer.gamma = g;
        runs.push_back(run_spec(s));
    }
    std::vector<std::pair<std::string, const Trace*>> cols;
    for (std::size_t i = 0; i < gammas.size(); ++i) cols.emplace_back("gamma_" + io::format_number(gammas[i]), &runs[i].trace);
    write_component_csv(dir / "gamma_e2.csv", cols, 1);
    return report;
}

json example2(const io::RunSpec& spec, const fs::path& dir, std::uint64_t seed) {
    json report;
    const DesignReport design = design_report(spec, seed);
    io::write_json_file((dir / "design.json").string(), design.body);
    report["design"] = design.body;
    report["robustness_eps_max"] = design.body["certificate"]["robustness_eps_max"];
    report["lambda_max_p"] = design.body["lambda_max_p"];
    const double gamma = spec.observer.gamma;
    const Matrix nc = io::matrix_from_json(design.body["gain_nc"], "gain_nc");
    report["gain_nc_over_minus_gamma"] = io::to_json(Matrix(nc / -gamma));

    // Nominal gamma sweep (cumulative squared error per state and total).
    std::vector<double> gammas(std::begin(fixtures::kExample2Gammas), std::end(fixtures::kExample2Gammas));
    io::RunSpec nominal = spec;
    nominal.sim.eps.reset();
    const auto rows = sweep_gamma(nominal, gammas);
    {
        std::ofstream os(dir / "sweep_gamma.csv", std::ios::binary);
        write_sweep_csv(os, rows);
    }
    const RunOutcome nominal_linear = run_spec(nominal, true);
    const Metrics nl = compute_metrics(nominal_linear.trace);
    json sweep = json::array();
    for (const auto& r : rows)
        sweep.push_back({{"gamma", r.gamma},
                         {"J3", r.metrics.cumulative_squared(r.metrics.cumulative_squared.rows() - 1, 2)},
                         {"J", r.metrics.total_cost()}});
    report["nominal_sweep"] = sweep;
    report["nominal_linear_J"] = nl.total_cost();
    write_cumulative(dir / "cumulative_nominal_linear.csv", nominal_linear.trace, nl, 1);
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        io::RunSpec s = nominal;
        s.observer.gamma = gammas[i];
        const RunOutcome r = run_spec(s);
        write_cumulative(dir / ("cumulative_nominal_gamma_" + short_number(gammas[i]) + ".csv"), r.trace,
                         compute_metrics(r.trace), 1);
    }

    // Perturbed plant A + eps I with the nominal design.
    io::RunSpec perturbed = spec;
    perturbed.sim.eps = fixtures::kExample2Eps;
    const RunOutcome pc = run_spec(perturbed);
    const RunOutcome pl = run_spec(perturbed, true);
    io::write_trace_csv((dir / "trace_perturbed_cubic.csv").string(), pc.trace);
    io::write_trace_csv((dir / "trace_perturbed_linear.csv").string(), pl.trace);
    const Metrics mpc = compute_metrics(pc.trace);
    const Metrics mpl = compute_metrics(pl.trace);
    write_cumulative(dir / "cumulative_perturbed_cubic.csv", pc.trace, mpc, 1);
    write_cumulative(dir / "cumulative_perturbed_linear.csv", pl.trace, mpl, 1);
    report["perturbed"] = {{"eps", fixtures::kExample2Eps},
                           {"gamma", gamma},
                           {"J_total", compare_entry(mpc.total_cost(), mpl.total_cost())},
                           {"diverged", pc.diverged_at.has_value() || pl.diverged_at.has_value()}};
    return report;
}

json example3(const io::RunSpec& spec, const fs::path& dir, std::uint64_t seed) {
    json report;
    const DesignReport design = design_report(spec, seed);
    io::write_json_file((dir / "design.json").string(), design.body);
    report["design"] = design.body;
    report["feedback_ok"] = design.body["certificate"]["feedback_ok"];
    report["feedback_beta"] = design.body["certificate"]["feedback_beta"];

    const RunOutcome cubic = run_spec(spec);
    const RunOutcome linear = run_spec(spec, true);
    io::write_trace_csv((dir / "trace_cubic.csv").string(), cubic.trace, spec.csv_stride);
    io::write_trace_csv((dir / "trace_linear.csv").string(), linear.trace, spec.csv_stride);
    const Metrics mc = compute_metrics(cubic.trace, kSettleBand, spec.lqr);
    const Metrics ml = compute_metrics(linear.trace, kSettleBand, spec.lqr);
    report["metrics_cubic"] = io::metrics_to_json(mc);
    report["metrics_linear"] = io::metrics_to_json(ml);
    report["lqr_cost_cubic"] = *mc.lqr_cost;
    report["lqr_cost_linear"] = *ml.lqr_cost;
    report["lqr_cost_cubic_le_linear"] = *mc.lqr_cost <= *ml.lqr_cost;
    const auto last = static_cast<Eigen::Index>(cubic.trace.size()) - 1;
    const auto last_l = static_cast<Eigen::Index>(linear.trace.size()) - 1;
    report["final_norms"] = {
        {"cubic", {{"x", cubic.trace.plant_states.row(last).norm()}, {"e", cubic.trace.errors.row(last).norm()}}},
        {"linear", {{"x", linear.trace.plant_states.row(last_l).norm()}, {"e", linear.trace.errors.row(last_l).norm()}}}};
    write_lqr_series(dir / "lqr_cost.csv", {{"cubic", &cubic.trace}, {"linear", &linear.trace}}, *spec.lqr,
                     spec.csv_stride);
    return report;
}

}  // namespace

int cmd_example(int n, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    if (n < 1 || n > 3) {
        err << "error: example number must be 1, 2 or 3\n";
        return kExitUsage;
    }
    return guarded(err, [&] {
        io::RunSpec spec = fixtures::example_spec(n);
        apply_overrides(spec, opts);
        const fs::path dir = example_dir(n, opts);
        fs::create_directories(dir);
        write_text(dir / "config.json", std::string(fixtures::example_config_text(n)) + "\n");

        json report = n == 1 ? example1(spec, dir, opts.seed)
                    : n == 2 ? example2(spec, dir, opts.seed)
                             : example3(spec, dir, opts.seed);
        report["example"] = n;
        io::write_json_file((dir / "report.json").string(), report);
        out << "wrote " << dir.string() << '\n';
        return kExitOk;
    });
}

}  // namespace cubic_obs::cli

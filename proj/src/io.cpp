#include "cubic_observer/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cubic_obs::io {

namespace {

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ParseError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(field, "must be finite");
    return v;
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
    const json* j = find(obj, key);
    return j ? number(*j, path + "/" + key) : fallback;
}

void require_object(const json& j, const std::string& field) {
    if (!j.is_object()) throw ParseError(field, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError(path + "/" + key, "unknown field");
    }
}

std::vector<std::complex<double>> poles_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ParseError(field, "expected a nonempty array of poles");
    std::vector<std::complex<double>> poles;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string f = field + "/" + std::to_string(i);
        const json& p = j[i];
        if (p.is_number()) {
            poles.emplace_back(number(p, f), 0.0);
        } else if (p.is_array() && p.size() == 2) {
            poles.emplace_back(number(p[0], f + "/0"), number(p[1], f + "/1"));
        } else {
            throw ParseError(f, "pole must be a number or a [re, im] pair");
        }
    }
    return poles;
}

InputSignal input_from_json(const json& j, const std::string& field, Eigen::Index nu) {
    require_object(j, field);
    const json* kind = find(j, "kind");
    if (!kind || !kind->is_string()) throw ParseError(field + "/kind", "expected one of zero|sinusoid|constant|sampled");
    const std::string k = kind->get<std::string>();
    if (k == "zero") {
        reject_unknown(j, field, {"kind"});
        return InputSignal::zero(nu);
    }
    if (k == "sinusoid") {
        reject_unknown(j, field, {"kind", "amplitude", "omega", "phase"});
        return InputSignal::sinusoid(number_or(j, "amplitude", field, 1.0), number_or(j, "omega", field, 1.0),
                                     number_or(j, "phase", field, 0.0), nu);
    }
    if (k == "constant") {
        reject_unknown(j, field, {"kind", "level"});
        const json* level = find(j, "level");
        if (!level) throw ParseError(field + "/level", "missing");
        Vector v = vector_from_json(*level, field + "/level");
        if (v.size() != nu) throw ParseError(field + "/level", "must have n_u entries");
        return InputSignal::constant(std::move(v));
    }
    if (k == "sampled") {
        reject_unknown(j, field, {"kind", "times", "values"});
        const json* times = find(j, "times");
        const json* values = find(j, "values");
        if (!times || !times->is_array()) throw ParseError(field + "/times", "expected an array");
        if (!values || !values->is_array()) throw ParseError(field + "/values", "expected an array");
        std::vector<double> ts;
        std::vector<Vector> vs;
        for (std::size_t i = 0; i < times->size(); ++i) ts.push_back(number((*times)[i], field + "/times/" + std::to_string(i)));
        for (std::size_t i = 0; i < values->size(); ++i) {
            const std::string f = field + "/values/" + std::to_string(i);
            const json& v = (*values)[i];
            Vector vec = v.is_number() ? Vector::Constant(1, number(v, f)) : vector_from_json(v, f);
            if (vec.size() != nu) throw ParseError(f, "must have n_u entries");
            vs.push_back(std::move(vec));
        }
        try {
            return InputSignal::sampled(std::move(ts), std::move(vs));
        } catch (const std::invalid_argument& e) {
            throw ParseError(field, e.what());
        }
    }
    throw ParseError(field + "/kind", "unknown input kind '" + k + "'");
}

void check_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
        throw ParseError(field, os.str());
    }
}

std::string kind_name(CubicObserverDesign::Origin o) {
    switch (o) {
        case CubicObserverDesign::Origin::Synthesized: return "synthesized";
        case CubicObserverDesign::Origin::Degenerate: return "degenerate_linear";
        case CubicObserverDesign::Origin::Explicit: return "explicit";
    }
    return "explicit";
}

/// Strided sample walk that always ends on the final sample.
std::size_t next_sample(std::size_t k, std::size_t stride, std::size_t size) {
    const std::size_t last = size - 1;
    if (k == last) return size;
    return std::min(k + std::max<std::size_t>(stride, 1), last);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ParseError(field, "expected a nonempty array of row arrays");
    const std::size_t rows = j.size();
    if (!j[0].is_array()) throw ParseError(field + "/0", "expected a row array");
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rf = field + "/" + std::to_string(r);
        if (!j[r].is_array() || j[r].size() != cols) throw ParseError(rf, "rows must be arrays of equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], rf + "/" + std::to_string(c));
    }
    return m;
}

Vector vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ParseError(field, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], field + "/" + std::to_string(i));
    return v;
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

RunSpec parse_run_spec(const json& j) {
    require_object(j, "");
    reject_unknown(j, "", {"name", "system", "observer", "sim", "feedback", "perturbation", "lqr", "compare_linear",
                           "outputs", "csv_stride"});

    const json* sys_j = find(j, "system");
    if (!sys_j) throw ParseError("/system", "missing");
    require_object(*sys_j, "/system");
    reject_unknown(*sys_j, "/system", {"a", "b", "c"});
    const json* a_j = find(*sys_j, "a");
    const json* c_j = find(*sys_j, "c");
    if (!a_j) throw ParseError("/system/a", "missing");
    if (!c_j) throw ParseError("/system/c", "missing");
    Matrix a = matrix_from_json(*a_j, "/system/a");
    if (a.rows() != a.cols()) throw ParseError("/system/a", "must be square");
    const Eigen::Index n = a.rows();
    Matrix c = matrix_from_json(*c_j, "/system/c");
    if (c.cols() != n) throw ParseError("/system/c", "must have n columns");
    Matrix b = Matrix::Zero(n, 1);
    if (const json* b_j = find(*sys_j, "b")) {
        b = matrix_from_json(*b_j, "/system/b");
        if (b.rows() != n) throw ParseError("/system/b", "must have n rows");
    }
    std::optional<LinearSystem> system;
    try {
        system.emplace(std::move(a), std::move(b), std::move(c));
    } catch (const std::invalid_argument& e) {
        throw ParseError("/system", e.what());
    }
    const Eigen::Index ny = system->outputs();
    const Eigen::Index nu = system->inputs();

    RunSpec spec{*system, {}, {}, std::nullopt, std::nullopt, std::nullopt, false, {}};

    // observer
    const json* obs_j = find(j, "observer");
    if (!obs_j) throw ParseError("/observer", "missing");
    require_object(*obs_j, "/observer");
    reject_unknown(*obs_j, "/observer",
                   {"type", "gain", "poles", "q", "theta", "gamma", "gain_nc", "allow_semidefinite_damping"});
    ObserverSpec& obs = spec.observer;
    const json* type = find(*obs_j, "type");
    if (!type || !type->is_string()) throw ParseError("/observer/type", "expected linear|cubic|cubic-explicit");
    const std::string t = type->get<std::string>();
    if (t == "linear") {
        obs.kind = ObserverKind::Linear;
    } else if (t == "cubic") {
        obs.kind = ObserverKind::Cubic;
    } else if (t == "cubic-explicit") {
        obs.kind = ObserverKind::CubicExplicit;
    } else {
        throw ParseError("/observer/type", "unknown observer type '" + t + "'");
    }
    const json* gain_j = find(*obs_j, "gain");
    const json* poles_j = find(*obs_j, "poles");
    if ((gain_j != nullptr) == (poles_j != nullptr))
        throw ParseError("/observer", "exactly one of 'gain' or 'poles' is required");
    if (gain_j) {
        obs.gain = matrix_from_json(*gain_j, "/observer/gain");
        check_shape(*obs.gain, n, ny, "/observer/gain");
    } else {
        obs.poles = poles_from_json(*poles_j, "/observer/poles");
        if (static_cast<Eigen::Index>(obs.poles.size()) != n) throw ParseError("/observer/poles", "need exactly n poles");
    }
    if (obs.kind == ObserverKind::CubicExplicit && !gain_j)
        throw ParseError("/observer/gain", "cubic-explicit requires an explicit gain");
    obs.q = Matrix::Identity(n, n);
    if (const json* q_j = find(*obs_j, "q")) {
        obs.q = matrix_from_json(*q_j, "/observer/q");
        check_shape(obs.q, n, n, "/observer/q");
    }
    obs.theta = Matrix::Identity(ny, ny);
    if (const json* th_j = find(*obs_j, "theta")) {
        obs.theta = matrix_from_json(*th_j, "/observer/theta");
        check_shape(obs.theta, ny, ny, "/observer/theta");
    }
    if (const json* g_j = find(*obs_j, "gamma")) {
        obs.gamma = number(*g_j, "/observer/gamma");
        obs.gamma_defaulted = false;
        if (obs.gamma < 0.0) throw ParseError("/observer/gamma", "must be >= 0");
    }
    if (const json* nc_j = find(*obs_j, "gain_nc")) {
        if (obs.kind != ObserverKind::CubicExplicit) throw ParseError("/observer/gain_nc", "only valid for cubic-explicit");
        obs.gain_nc = matrix_from_json(*nc_j, "/observer/gain_nc");
        check_shape(*obs.gain_nc, n, ny, "/observer/gain_nc");
    } else if (obs.kind == ObserverKind::CubicExplicit) {
        throw ParseError("/observer/gain_nc", "missing");
    }
    if (const json* sd = find(*obs_j, "allow_semidefinite_damping")) {
        if (!sd->is_boolean()) throw ParseError("/observer/allow_semidefinite_damping", "expected a boolean");
        obs.allow_semidefinite_damping = sd->get<bool>();
    }

    // sim
    SimConfig& sim = spec.sim;
    sim.x0 = Vector::Ones(n);
    sim.input = InputSignal::zero(nu);
    if (const json* sim_j = find(j, "sim")) {
        require_object(*sim_j, "/sim");
        reject_unknown(*sim_j, "/sim", {"dt", "horizon", "x0", "xhat0", "input", "eps"});
        sim.dt = number_or(*sim_j, "dt", "/sim", sim.dt);
        sim.horizon = number_or(*sim_j, "horizon", "/sim", sim.horizon);
        if (const json* x0 = find(*sim_j, "x0")) sim.x0 = vector_from_json(*x0, "/sim/x0");
        if (const json* xh = find(*sim_j, "xhat0")) sim.xhat0 = vector_from_json(*xh, "/sim/xhat0");
        if (const json* in = find(*sim_j, "input")) sim.input = input_from_json(*in, "/sim/input", nu);
        if (const json* e = find(*sim_j, "eps")) sim.eps = number(*e, "/sim/eps");
    }
    if (sim.x0.size() != n) throw ParseError("/sim/x0", "must have n entries");
    if (sim.xhat0.size() != 0 && sim.xhat0.size() != n) throw ParseError("/sim/xhat0", "must have n entries");
    if (!(sim.dt > 0.0)) throw ParseError("/sim/dt", "must be positive");

    if (const json* fb = find(j, "feedback")) {
        require_object(*fb, "/feedback");
        reject_unknown(*fb, "/feedback", {"k"});
        const json* k = find(*fb, "k");
        if (!k) throw ParseError("/feedback/k", "missing");
        spec.feedback_k = matrix_from_json(*k, "/feedback/k");
        check_shape(*spec.feedback_k, nu, n, "/feedback/k");
    }
    if (const json* pj = find(j, "perturbation")) {
        require_object(*pj, "/perturbation");
        reject_unknown(*pj, "/perturbation", {"eps_min", "eps_max"});
        PerturbationSpec p{number_or(*pj, "eps_min", "/perturbation", 0.0),
                           number_or(*pj, "eps_max", "/perturbation", 0.0)};
        if (p.eps_min > p.eps_max) throw ParseError("/perturbation", "eps_min must not exceed eps_max");
        spec.perturbation = p;
    }
    if (const json* lj = find(j, "lqr")) {
        require_object(*lj, "/lqr");
        reject_unknown(*lj, "/lqr", {"q", "r"});
        LqrWeights w{Matrix::Identity(n, n), Matrix::Identity(nu, nu)};
        if (const json* q = find(*lj, "q")) w.q = matrix_from_json(*q, "/lqr/q");
        if (const json* r = find(*lj, "r")) w.r = matrix_from_json(*r, "/lqr/r");
        check_shape(w.q, n, n, "/lqr/q");
        check_shape(w.r, nu, nu, "/lqr/r");
        spec.lqr = std::move(w);
    }
    if (const json* cl = find(j, "compare_linear")) {
        if (!cl->is_boolean()) throw ParseError("/compare_linear", "expected a boolean");
        spec.compare_linear = cl->get<bool>();
    }
    if (const json* st = find(j, "csv_stride")) {
        if (!st->is_number_unsigned() || st->get<std::size_t>() == 0)
            throw ParseError("/csv_stride", "expected a positive integer");
        spec.csv_stride = st->get<std::size_t>();
    }
    if (const json* out = find(j, "outputs")) {
        if (!out->is_array()) throw ParseError("/outputs", "expected an array of strings");
        for (std::size_t i = 0; i < out->size(); ++i) {
            const json& o = (*out)[i];
            const std::string f = "/outputs/" + std::to_string(i);
            if (!o.is_string()) throw ParseError(f, "expected a string");
            const std::string s = o.get<std::string>();
            if (s != "trace" && s != "metrics" && s != "certificate" && s != "lyapunov")
                throw ParseError(f, "unknown output '" + s + "'");
            spec.outputs.push_back(s);
        }
    }
    return spec;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("", path + ": " + e.what());
    }
}

RunSpec load_run_spec(const std::string& path) { return parse_run_spec(read_json_file(path)); }

json input_to_json(const InputSignal& sig) {
    struct Visitor {
        json operator()(const InputSignal::Zero&) const { return {{"kind", "zero"}}; }
        json operator()(const InputSignal::Sinusoid& s) const {
            return {{"kind", "sinusoid"}, {"amplitude", s.amplitude}, {"omega", s.angular_frequency}, {"phase", s.phase}};
        }
        json operator()(const InputSignal::Constant& c) const { return {{"kind", "constant"}, {"level", to_json(c.level)}}; }
        json operator()(const InputSignal::Sampled& s) const {
            json values = json::array();
            for (const auto& v : s.values) values.push_back(to_json(v));
            return {{"kind", "sampled"}, {"times", s.times}, {"values", values}};
        }
    };
    return std::visit(Visitor{}, sig.kind());
}

Matrix resolve_observer_gain(const RunSpec& spec) {
    if (spec.observer.gain) return *spec.observer.gain;
    return place_poles_single_output(spec.system, spec.observer.poles).gain_l;
}

CubicObserverDesign build_cubic_design(const RunSpec& spec, const Matrix& gain_lc) {
    const ObserverSpec& o = spec.observer;
    if (o.kind == ObserverKind::CubicExplicit)
        return explicit_cubic_design(spec.system, gain_lc, *o.gain_nc, o.theta, o.q, o.gamma,
                                     o.allow_semidefinite_damping);
    if (o.kind == ObserverKind::Linear || o.gamma == 0.0) return degenerate_linear(spec.system, gain_lc, o.q, o.theta);
    return synthesize_cubic_gain(spec.system, gain_lc, o.q, o.theta, o.gamma);
}

json design_to_json(const CubicObserverDesign& d) {
    return {{"origin", kind_name(d.origin)}, {"gain_lc", to_json(d.gain_lc)}, {"gain_nc", to_json(d.gain_nc)},
            {"theta", to_json(d.theta)},     {"gamma", d.gamma},                  {"p", to_json(d.lyapunov_p)},
            {"q", to_json(d.lyapunov_q)}};
}

json certificate_to_json(const Certificate& c) {
    json margins = json::object();
    for (const auto& [k, v] : c.margins) margins[k] = v;
    json j = {{"hurwitz_ok", c.hurwitz_ok},
              {"damping_ok", c.damping_ok},
              {"damping_strict_test", c.damping_strict_test},
              {"damping_strict_holds", c.damping_strict_holds},
              {"uniqueness_ok", c.uniqueness_ok},
              {"stability_ok", c.stability_ok()},
              {"margins", margins},
              {"notes", c.notes}};
    j["robustness_eps_max"] = optional_number(c.robustness_eps_max);
    j["feedback_ok"] = c.feedback_ok ? json(*c.feedback_ok) : json(nullptr);
    j["feedback_beta"] = optional_number(c.feedback_beta);
    j["corollary_ok"] = c.corollary_ok ? json(*c.corollary_ok) : json(nullptr);
    return j;
}

json metrics_to_json(const Metrics& m) {
    json settle = json::array();
    for (const auto& s : m.settling_time) settle.push_back(optional_number(s));
    const Eigen::Index last = m.cumulative_squared.rows() - 1;
    Vector finals = last >= 0 ? Vector(m.cumulative_squared.row(last).transpose()) : Vector();
    json j = {{"peak_error", to_json(m.peak_error)},
              {"overshoot_peak", to_json(m.overshoot_peak)},
              {"settling_time", settle},
              {"J", to_json(finals)},
              {"J_total", m.total_cost()}};
    j["lqr_cost"] = optional_number(m.lqr_cost);
    return j;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> trace_header(const Trace& tr) {
    std::vector<std::string> h{"t"};
    auto add = [&](const char* stem, Eigen::Index count) {
        for (Eigen::Index i = 1; i <= count; ++i) h.push_back(stem + std::to_string(i));
    };
    add("x", tr.plant_states.cols());
    add("xhat", tr.estimates.cols());
    add("e", tr.errors.cols());
    add("y", tr.outputs.cols());
    add("u", tr.inputs.cols());
    if (tr.has_lyapunov()) {
        h.emplace_back("V");
        h.emplace_back("V_cz");
    }
    if (tr.has_control()) add("uc", tr.control.cols());
    return h;
}

void write_trace_csv(std::ostream& os, const Trace& tr, std::size_t stride) {
    const auto header = trace_header(tr);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    std::string line;
    for (std::size_t k = 0; k < tr.size(); k = next_sample(k, stride, tr.size())) {
        const auto r = static_cast<Eigen::Index>(k);
        line = format_number(tr.times[k]);
        auto add_row = [&](const Matrix& m) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) line += "," + format_number(m(r, c));
        };
        add_row(tr.plant_states);
        add_row(tr.estimates);
        add_row(tr.errors);
        add_row(tr.outputs);
        add_row(tr.inputs);
        if (tr.has_lyapunov()) line += "," + format_number(tr.lyapunov(r)) + "," + format_number(tr.lyapunov_zubov(r));
        if (tr.has_control()) add_row(tr.control);
        os << line << '\n';
    }
}

void write_trace_csv(const std::string& path, const Trace& tr, std::size_t stride) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_trace_csv(out, tr, stride);
}

void write_cumulative_csv(std::ostream& os, const Trace& tr, const Metrics& m, std::size_t stride) {
    os << "t";
    for (Eigen::Index i = 1; i <= m.cumulative_squared.cols(); ++i) os << ",J" << i;
    os << ",J\n";
    for (std::size_t k = 0; k < tr.size(); k = next_sample(k, stride, tr.size())) {
        const auto r = static_cast<Eigen::Index>(k);
        os << format_number(tr.times[k]);
        for (Eigen::Index c = 0; c < m.cumulative_squared.cols(); ++c) os << ',' << format_number(m.cumulative_squared(r, c));
        os << ',' << format_number(m.cumulative_total(r)) << '\n';
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace cubic_obs::io

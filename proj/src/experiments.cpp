#include "nlwqed/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <utility>

#include "nlwqed/adiabatic.hpp"
#include "nlwqed/analysis.hpp"
#include "nlwqed/io.hpp"
#include "nlwqed/parallel.hpp"

namespace nlwqed {

using nlohmann::json;

namespace {

const std::vector<std::pair<Figure, std::string>>& figure_table() {
    static const std::vector<std::pair<Figure, std::string>> table{
        {Figure::Fig2a, "fig2a"}, {Figure::Fig2b, "fig2b"}, {Figure::Fig2c, "fig2c"}, {Figure::Fig2d, "fig2d"},
        {Figure::Fig3b, "fig3b"}, {Figure::Fig3c, "fig3c"}, {Figure::Fig3d, "fig3d"}, {Figure::Fig3e, "fig3e"},
        {Figure::Fig4a, "fig4a"}, {Figure::Fig4b, "fig4b"}, {Figure::Custom, "custom"},
    };
    return table;
}

const std::vector<std::string>& observable_names() {
    static const std::vector<std::string> names{"rabi_frequency", "q_max",         "min_df_pop",    "final_fidelity",
                                                "final_sz",       "first_max_tau", "spectral_peaks"};
    return names;
}

bool is_fig2(Figure f) { return f == Figure::Fig2a || f == Figure::Fig2b || f == Figure::Fig2c || f == Figure::Fig2d; }
bool is_fig3(Figure f) { return f == Figure::Fig3b || f == Figure::Fig3c || f == Figure::Fig3d || f == Figure::Fig3e; }
bool is_fig4(Figure f) { return f == Figure::Fig4a || f == Figure::Fig4b; }

// ---- JSON reading ----------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + " must be a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
    return j.get<int>();
}

std::vector<double> axis_from_json(const json& j, const std::string& where) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    } else if (j.is_object()) {
        reject_unknown(j, {"start", "stop", "points", "spacing"}, where);
        const double lo = number(j.at("start"), where + ".start");
        const double hi = number(j.at("stop"), where + ".stop");
        const int n = integer(j.at("points"), where + ".points");
        const std::string spacing = j.value("spacing", std::string("linear"));
        if (spacing == "log") out = analysis::log_space(lo, hi, n);
        else if (spacing == "linear") out = analysis::lin_space(lo, hi, n);
        else throw ConfigError(where + ".spacing must be 'linear' or 'log'");
    } else {
        throw ConfigError(where + " must be a list or a {start, stop, points, spacing} range");
    }
    if (out.empty()) throw ConfigError(where + " must not be empty");
    return out;
}

SystemConfig config_from_json(const json& j) {
    reject_unknown(j, {"n_atoms", "gamma", "beta", "r_total", "r_bar", "theta_right", "theta_left", "phi", "scheme",
                       "drive_schedule"},
                   "config");
    SystemConfig c;
    if (j.contains("n_atoms")) c.n_atoms = integer(j["n_atoms"], "config.n_atoms");
    if (j.contains("gamma")) c.gamma = number(j["gamma"], "config.gamma");
    if (j.contains("beta")) c.beta = number(j["beta"], "config.beta");
    if (j.contains("r_total")) c.r_total = number(j["r_total"], "config.r_total");
    if (j.contains("r_bar")) c.r_bar = number(j["r_bar"], "config.r_bar");
    if (j.contains("theta_right")) c.theta_right = number(j["theta_right"], "config.theta_right");
    if (j.contains("theta_left")) c.theta_left = number(j["theta_left"], "config.theta_left");
    if (j.contains("phi")) c.phi = number(j["phi"], "config.phi");
    if (j.contains("scheme")) {
        if (!j["scheme"].is_string()) throw ConfigError("config.scheme must be a string");
        c.scheme = scheme_from_string(j["scheme"].get<std::string>());
    }
    if (j.contains("drive_schedule")) {
        const auto& s = j["drive_schedule"];
        if (!s.is_array()) throw ConfigError("config.drive_schedule must be a list");
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::string where = "config.drive_schedule[" + std::to_string(i) + "]";
            reject_unknown(s[i], {"duration", "r"}, where);
            c.drive_schedule.push_back({number(s[i].at("duration"), where + ".duration"),
                                        number(s[i].at("r"), where + ".r")});
        }
    }
    return c;
}

SweepGrid grid_from_json(const json& j) {
    reject_unknown(j, {"r", "beta", "one_minus_beta", "n_atoms", "tau", "t"}, "grid");
    SweepGrid g;
    if (j.contains("r")) g.r = axis_from_json(j["r"], "grid.r");
    if (j.contains("beta") && j.contains("one_minus_beta"))
        throw ConfigError("grid.beta and grid.one_minus_beta are mutually exclusive");
    if (j.contains("beta")) g.beta = axis_from_json(j["beta"], "grid.beta");
    if (j.contains("one_minus_beta"))
        for (double x : axis_from_json(j["one_minus_beta"], "grid.one_minus_beta")) g.beta.push_back(1.0 - x);
    if (j.contains("n_atoms")) {
        const auto& n = j["n_atoms"];
        if (!n.is_array() || n.empty()) throw ConfigError("grid.n_atoms must be a nonempty list of integers");
        for (std::size_t i = 0; i < n.size(); ++i)
            g.n_atoms.push_back(integer(n[i], "grid.n_atoms[" + std::to_string(i) + "]"));
    }
    if (j.contains("tau")) g.tau = axis_from_json(j["tau"], "grid.tau");
    if (j.contains("t")) g.t = axis_from_json(j["t"], "grid.t");
    return g;
}

json config_to_json(const SystemConfig& c) {
    json sched = json::array();
    for (const auto& d : c.drive_schedule) sched.push_back({{"duration", d.duration}, {"r", d.r}});
    return {{"n_atoms", c.n_atoms},         {"gamma", c.gamma}, {"beta", c.beta},
            {"r_total", c.r_total},         {"r_bar", c.r_bar}, {"theta_right", c.theta_right},
            {"theta_left", c.theta_left},   {"phi", c.phi},     {"scheme", to_string(c.scheme)},
            {"drive_schedule", sched}};
}

// ---- shared helpers ---------------------------------------------------------

void check_increasing(const std::vector<double>& v, const std::string& what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0) throw ConfigError(what + " values must be finite and >= 0");
        if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(what + " must be strictly increasing");
    }
}

ExperimentSpec with_defaults(const ExperimentSpec& spec) {
    ExperimentSpec s = spec;
    const ExperimentSpec d = default_spec(spec.name);
    if (s.grid.r.empty()) s.grid.r = d.grid.r;
    if (s.grid.beta.empty()) s.grid.beta = d.grid.beta;
    if (s.grid.n_atoms.empty()) s.grid.n_atoms = d.grid.n_atoms;
    if (s.grid.tau.empty() && s.grid.t.empty()) {
        s.grid.tau = d.grid.tau;
        s.grid.t = d.grid.t;
    }
    return s;
}

std::vector<double> time_grid(const SweepGrid& g, double r, double gamma) {
    if (!g.t.empty()) return g.t;
    if (g.tau.empty()) throw ConfigError("no time grid: give grid.tau or grid.t");
    if (!(r > 0.0)) throw ConfigError("a tau grid needs r > 0; give grid.t for undriven runs");
    std::vector<double> t;
    t.reserve(g.tau.size());
    for (double tau : g.tau) t.push_back(tau / (gamma * r));
    return t;
}

double tau_rate(const SystemConfig& c, double r) { return c.gamma * r; }

std::filesystem::path output_file(const ExperimentSpec& s, const std::string& name) { return s.outputs / name; }

void emit_csv(RunResult& result, const std::filesystem::path& path, const CsvTable& table) {
    write_csv_file(path, table);
    result.files.push_back(path);
}

void emit_json(RunResult& result, const std::filesystem::path& path, const json& j) {
    write_json_file(path, j);
    result.files.push_back(path);
}

// Trajectory rows prefixed by key columns, appended to a long-format table.
void append_trajectory(CsvTable& table, const std::vector<std::pair<std::string, double>>& keys,
                       const CsvTable& traj) {
    std::vector<std::string> header;
    for (const auto& k : keys) header.push_back(k.first);
    header.insert(header.end(), traj.header.begin(), traj.header.end());
    if (table.header.empty()) table.header = header;
    else if (table.header != header) throw DimensionError("long-format table: trajectory columns differ between runs");
    for (const auto& row : traj.rows) {
        std::vector<std::string> out;
        for (const auto& k : keys) out.push_back(format_double(k.second));
        out.insert(out.end(), row.begin(), row.end());
        table.rows.push_back(std::move(out));
    }
}

struct Invariants {
    double trace_err = 0.0;
    double herm_err = 0.0;
    double min_eig = 1.0;
};

Invariants invariants_of(const Trajectory& traj) {
    Invariants inv;
    for (double x : traj.series("trace_err")) inv.trace_err = std::max(inv.trace_err, x);
    if (traj.has("herm_err"))
        for (double x : traj.series("herm_err")) inv.herm_err = std::max(inv.herm_err, x);
    if (traj.has("min_eig"))
        for (double x : traj.series("min_eig")) inv.min_eig = std::min(inv.min_eig, x);
    return inv;
}

json invariants_json(const Trajectory& traj) {
    const auto inv = invariants_of(traj);
    return {{"max_trace_err", inv.trace_err}, {"max_herm_err", inv.herm_err}, {"min_eigenvalue", inv.min_eig}};
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

EvolveOptions base_options(const ExperimentSpec& s, int n_atoms) {
    EvolveOptions o;
    o.method = s.method;
    o.df_projector = df_projector(n_atoms)->projector;
    return o;
}

double series_min(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

bool uniform(std::span<const double> t) {
    if (t.size() < 2) return false;
    const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h))) return false;
    return true;
}

std::optional<double> dominant_fft_frequency(std::span<const double> x, std::span<const double> y) {
    if (!uniform(x) || x.size() < 8) return std::nullopt;
    const auto peaks = analysis::spectral_peaks(y, x[1] - x[0]);
    if (peaks.empty()) return std::nullopt;
    return peaks.front().frequency;
}

// 2 |Omega_p| of the polariton the ground state overlaps with most.
std::optional<double> adiabatic_rabi_frequency(const AdiabaticGenerator& ad, double r) {
    const auto spec = polariton_spectrum(effective_hamiltonian(ad.h_ad, ad.jumps_ad));
    const int n = ad.dark_basis.rows() > 1 ? static_cast<int>(std::log2(static_cast<double>(ad.dark_basis.rows()))) : 0;
    const Eigen::VectorXcd psi = ad.dark_basis.adjoint() * ground_vector(n);
    const auto k = dominant_polariton(spec, psi, 1e-6 * std::max(r, 1e-300));
    if (!k) return std::nullopt;
    return 2.0 * std::abs(spec.eigenvalues(*k).real());
}

json spectrum_json(const PolaritonSpectrum& spec) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i)
        rows.push_back({{"omega", spec.eigenvalues(i).real()}, {"gamma", spec.eigenvalues(i).imag()},
                        {"q", spec.q_factors(i)}});
    return rows;
}

CsvTable spectrum_table(const PolaritonSpectrum& spec) {
    CsvTable t;
    t.header = {"index", "omega_over_gamma", "gamma_over_gamma", "q_factor"};
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i)
        t.rows.push_back({std::to_string(i), format_double(spec.eigenvalues(i).real()),
                          format_double(spec.eigenvalues(i).imag()), format_double(spec.q_factors(i))});
    return t;
}

std::string label_column(const AngularLabel& l) {
    return "p_j" + format_double(l.j()) + "_a" + std::to_string(l.alpha);
}

// ---- figure 2 ---------------------------------------------------------------

struct DrivenRun {
    Trajectory traj;
    json summary;
};

DrivenRun fig2_trajectory(const ExperimentSpec& s, double r) {
    const SystemConfig cfg = s.config.with_r(r);
    const int n = cfg.n_atoms;
    const auto t = time_grid(s.grid, r, cfg.gamma);
    DrivenRun run;
    run.traj = evolve(cfg, ground_state(n), t, base_options(s, n));
    const auto& tau = run.traj.tau;
    const auto& sz = run.traj.series("Sz");
    const auto first = analysis::first_maximum(tau, sz);
    const LindbladGenerator gen = build_generator(cfg);
    run.summary = {
        {"r", r},
        {"first_max_tau", first ? json(first->t) : json(nullptr)},
        {"first_max_sz", first ? json(first->value) : json(nullptr)},
        {"swing_fraction", first ? json((first->value + 0.5 * n) / n) : json(nullptr)},
        {"rabi_period_tau", optional_number(analysis::rabi_period(tau, sz))},
        {"visible_cycles", analysis::visible_cycles(tau, sz)},
        {"final_sz", sz.back()},
        {"generator_residual", apply_generator(gen, run.traj.final_state).norm()},
        {"min_df_pop", series_min(run.traj.series("df_pop"))},
        {"invariants", invariants_json(run.traj)},
    };
    return run;
}

void fig2a(const ExperimentSpec& s, RunResult& result) {
    const auto runs = parallel_map<DrivenRun>(s.grid.r.size(), resolve_threads(s.threads),
                                              [&](std::size_t i) { return fig2_trajectory(s, s.grid.r[i]); });
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        append_trajectory(table, {{"r", s.grid.r[i]}}, trajectory_table(runs[i].traj));
        rows.push_back(runs[i].summary);
    }
    emit_csv(result, output_file(s, "fig2a.csv"), table);
    result.summary["runs"] = rows;
}

// Relaxation allowed after the turn-off before the plateau slope is measured:
// the residual bright population decays at rates of order gamma.
constexpr double kTurnOffSettle = 10.0;

void fig2b(const ExperimentSpec& s, RunResult& result) {
    auto one = [&](std::size_t i) {
        const double r = s.grid.r[i];
        SystemConfig cfg = s.config.with_r(r);
        const int n = cfg.n_atoms;
        const double t_pi = pi_pulse_time(cfg, 20.0, 4001, s.method);
        const auto t = time_grid(s.grid, r, cfg.gamma);
        if (t_pi >= t.back()) throw ConfigError("fig2b: time grid ends before the pi-pulse turn-off");
        cfg.drive_schedule = {{t_pi, r}, {t.back() - t_pi, 0.0}};
        DrivenRun run;
        run.traj = evolve(cfg, ground_state(n), t, base_options(s, n));
        const auto& sz = run.traj.series("Sz");
        const std::size_t after =
            static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t_pi) - t.begin());
        run.summary = {
            {"r", r},
            {"t_off", t_pi},
            {"tau_off", tau_rate(cfg, r) * t_pi},
            {"sz_after_off", after < sz.size() ? json(sz[after]) : json(nullptr)},
            {"post_off_slope_raw", analysis::max_abs_slope(t, sz, t_pi)},
            {"post_off_slope", analysis::max_abs_slope(t, sz, t_pi + kTurnOffSettle / cfg.gamma)},
            {"final_sz", sz.back()},
            {"invariants", invariants_json(run.traj)},
        };
        return run;
    };
    const auto runs = parallel_map<DrivenRun>(s.grid.r.size(), resolve_threads(s.threads), one);
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        append_trajectory(table, {{"r", s.grid.r[i]}}, trajectory_table(runs[i].traj));
        rows.push_back(runs[i].summary);
    }
    emit_csv(result, output_file(s, "fig2b.csv"), table);
    result.summary["runs"] = rows;
}

void fig2c(const ExperimentSpec& s, RunResult& result) {
    if (s.grid.tau.empty()) throw ConfigError("fig2c needs a tau grid");
    auto one = [&](std::size_t i) {
        const double r = s.grid.r[i];
        const SystemConfig cfg = s.config.with_r(r);
        EvolveOptions o;
        o.method = s.method;
        return evolve(cfg, ground_state(cfg.n_atoms), time_grid(s.grid, r, cfg.gamma), o);
    };
    const auto runs = parallel_map<Trajectory>(s.grid.r.size(), resolve_threads(s.threads), one);
    CsvTable table;
    table.header = {"r", "tau", "Sz"};
    double worst_trace = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& sz = runs[i].series("Sz");
        for (std::size_t k = 0; k < sz.size(); ++k)
            table.rows.push_back({format_double(s.grid.r[i]), format_double(s.grid.tau[k]), format_double(sz[k])});
        worst_trace = std::max(worst_trace, invariants_of(runs[i]).trace_err);
    }
    emit_csv(result, output_file(s, "fig2c.csv"), table);
    result.summary["rows"] = s.grid.r.size();
    result.summary["columns"] = s.grid.tau.size();
    result.summary["max_trace_err"] = worst_trace;
}

void fig2d(const ExperimentSpec& s, RunResult& result) {
    struct Point {
        int n;
        double r;
    };
    std::vector<Point> points;
    for (int n : s.grid.n_atoms)
        for (double r : s.grid.r) points.push_back({n, r});
    auto one = [&](std::size_t i) {
        const auto [n, r] = points[i];
        ExperimentSpec local = s;
        local.config.n_atoms = n;
        local.config.validate();
        DrivenRun run = fig2_trajectory(local, r);
        const auto& tau = run.traj.tau;
        const auto& sz = run.traj.series("Sz");
        const auto first = analysis::first_maximum(tau, sz);
        run.summary["n_atoms"] = n;
        run.summary["rabi_frequency_first_peak_per_tau"] = first ? json(kPi / first->t) : json(nullptr);
        run.summary["rabi_frequency_fft_per_tau"] = optional_number(dominant_fft_frequency(tau, sz));
        if (n <= kMaxLiouvilleAtoms) {
            const auto ad = adiabatic_generator(build_generator(local.config.with_r(r)), *df_projector(n),
                                                {0.0, false});
            const auto w = adiabatic_rabi_frequency(ad, r);
            run.summary["rabi_frequency_adiabatic_per_tau"] = w ? json(*w / (local.config.gamma * r)) : json(nullptr);
        } else {
            run.summary["rabi_frequency_adiabatic_per_tau"] = nullptr;
        }
        return run;
    };
    const auto runs = parallel_map<DrivenRun>(points.size(), resolve_threads(s.threads), one);
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        append_trajectory(table, {{"n_atoms", points[i].n}, {"r", points[i].r}}, trajectory_table(runs[i].traj));
        rows.push_back(runs[i].summary);
    }
    emit_csv(result, output_file(s, "fig2d.csv"), table);
    result.summary["runs"] = rows;
}

// ---- figure 3 ---------------------------------------------------------------

void fig3b(const ExperimentSpec& s, RunResult& result) {
    const auto runs = parallel_map<DrivenRun>(s.grid.r.size(), resolve_threads(s.threads),
                                              [&](std::size_t i) { return fig2_trajectory(s, s.grid.r[i]); });
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        append_trajectory(table, {{"r", s.grid.r[i]}}, trajectory_table(runs[i].traj));
        rows.push_back({{"r", s.grid.r[i]},
                        {"min_df_pop", runs[i].summary["min_df_pop"]},
                        {"invariants", runs[i].summary["invariants"]}});
    }
    emit_csv(result, output_file(s, "fig3b.csv"), table);
    result.summary["runs"] = rows;
}

struct Fig3cRun {
    CsvTable table;
    CsvTable spectrum;
    json summary;
};

Fig3cRun fig3c_point(const ExperimentSpec& s, double r) {
    const SystemConfig cfg = s.config.with_r(r);
    const int n = cfg.n_atoms;
    const auto t = time_grid(s.grid, r, cfg.gamma);
    const Trajectory exact = evolve(cfg, ground_state(n), t, base_options(s, n));
    const LindbladGenerator gen = build_generator(cfg);
    const AdiabaticGenerator ad = adiabatic_generator(gen, *df_projector(n));
    const Trajectory approx = evolve_adiabatic(ad, ground_state(n), t, tau_rate(cfg, r));
    const PolaritonSpectrum spec = polariton_spectrum(effective_hamiltonian(ad.h_ad, ad.jumps_ad));

    const auto& tau = exact.tau;
    const auto& sz = exact.series("Sz");
    const auto& sz_ad = approx.series("Sz");
    const auto period = analysis::rabi_period(tau, sz);
    const auto first = analysis::first_maximum(tau, sz);
    const double window = period ? *period : (first ? 2.0 * first->t : tau.back());
    double dev = 0.0, lo = sz.front(), hi = sz.front();
    for (std::size_t i = 0; i < tau.size() && tau[i] <= window; ++i) {
        dev = std::max(dev, std::abs(sz[i] - sz_ad[i]));
        lo = std::min(lo, sz[i]);
        hi = std::max(hi, sz[i]);
    }

    Fig3cRun run;
    run.table.header = {"r", "t", "tau", "Sz_exact", "Sz_adiabatic", "df_pop_exact"};
    const auto& df = exact.series("df_pop");
    for (std::size_t i = 0; i < t.size(); ++i)
        run.table.rows.push_back({format_double(r), format_double(t[i]), format_double(tau[i]), format_double(sz[i]),
                                  format_double(sz_ad[i]), format_double(df[i])});
    run.spectrum = spectrum_table(spec);
    run.summary = {
        {"r", r},
        {"first_period_tau", window},
        {"max_deviation", dev},
        {"amplitude", hi - lo},
        {"deviation_fraction", hi > lo ? json(dev / (hi - lo)) : json(nullptr)},
        {"spectrum", spectrum_json(spec)},
        {"eigenvector_condition", spec.eigenvector_condition},
        {"trace_preservation_error", ad.trace_preservation_error},
        {"kraus_closure_error", ad.kraus_closure_error},
        {"regeneration_error", ad.regeneration_error},
        {"gks_hamiltonian_gap", optional_number(ad.gks_hamiltonian_gap)},
        {"dt_extraction", ad.dt_extraction},
        {"complement_rank", ad.elimination.complement_rank},
        {"complement_size", ad.elimination.complement_size},
        {"invariants_exact", invariants_json(exact)},
        {"invariants_adiabatic", invariants_json(approx)},
    };
    return run;
}

void fig3c(const ExperimentSpec& s, RunResult& result) {
    const auto runs = parallel_map<Fig3cRun>(s.grid.r.size(), resolve_threads(s.threads),
                                             [&](std::size_t i) { return fig3c_point(s, s.grid.r[i]); });
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (table.header.empty()) table.header = runs[i].table.header;
        table.rows.insert(table.rows.end(), runs[i].table.rows.begin(), runs[i].table.rows.end());
        emit_csv(result, output_file(s, "fig3c_spectrum_r" + format_double(s.grid.r[i]) + ".csv"), runs[i].spectrum);
        rows.push_back(runs[i].summary);
    }
    emit_csv(result, output_file(s, "fig3c.csv"), table);
    result.summary["runs"] = rows;
}

struct TransferRun {
    double t_half = 0.0;
    double fidelity = 0.0;
    Trajectory traj; // uniform on [0, t_half], states recorded
    StateVector target;
};

TransferRun half_cycle_transfer(const ExperimentSpec& s, double r, int points) {
    const SystemConfig cfg = s.config.with_r(r);
    const int n = cfg.n_atoms;
    const auto df = df_projector(n);
    TransferRun run;
    run.target = transfer_target(build_generator(cfg), *df);

    EvolveOptions o = base_options(s, n);
    o.target = run.target;
    const auto scan = evolve(cfg, ground_state(n), time_grid(s.grid, r, cfg.gamma), o);
    const auto peak = analysis::first_maximum(scan.times, scan.series("fidelity"));
    if (!peak) throw NumericalError("no fidelity maximum within the time grid at r = " + format_double(r));
    run.t_half = peak->t;

    o.record_states = true;
    run.traj = evolve(cfg, ground_state(n), uniform_grid(run.t_half, points), o);
    run.fidelity = run.traj.series("fidelity").back();
    return run;
}

CsvTable population_table(const Trajectory& traj, double r, int n_atoms) {
    const auto basis = cached_angular_basis(n_atoms);
    std::vector<Eigen::Index> cols;
    CsvTable table;
    table.header = {"r", "t", "tau"};
    for (std::size_t k = 0; k < basis->labels.size(); ++k)
        if (basis->labels[k].dark()) {
            cols.push_back(static_cast<Eigen::Index>(k));
            table.header.push_back(label_column(basis->labels[k]));
        }
    table.header.push_back("p_bright");
    table.header.push_back("fidelity");
    const auto& fid = traj.series("fidelity");
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<std::string> row{format_double(r), format_double(traj.times[i]), format_double(traj.tau[i])};
        double dark = 0.0;
        for (Eigen::Index c : cols) {
            const auto u = basis->unitary.col(c);
            const double p = u.dot(traj.states[i] * u).real();
            dark += p;
            row.push_back(format_double(p));
        }
        row.push_back(format_double(1.0 - dark));
        row.push_back(format_double(fid[i]));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void fig3d(const ExperimentSpec& s, RunResult& result) {
    const auto runs = parallel_map<TransferRun>(s.grid.r.size(), resolve_threads(s.threads),
                                                [&](std::size_t i) { return half_cycle_transfer(s, s.grid.r[i], 201); });
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto part = population_table(runs[i].traj, s.grid.r[i], s.config.n_atoms);
        if (table.header.empty()) table.header = part.header;
        table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
        rows.push_back({{"r", s.grid.r[i]},
                        {"t_half", runs[i].t_half},
                        {"tau_half", s.config.gamma * s.grid.r[i] * runs[i].t_half},
                        {"fidelity", runs[i].fidelity},
                        {"sqrt_fidelity", std::sqrt(runs[i].fidelity)},
                        {"invariants", invariants_json(runs[i].traj)}});
    }
    emit_csv(result, output_file(s, "fig3d.csv"), table);
    result.summary["runs"] = rows;
}

json grid_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

void fig3e(const ExperimentSpec& s, RunResult& result) {
    const double r = s.config.r_total;
    const int n = s.config.n_atoms;
    const auto run = half_cycle_transfer(s, r, 201);
    const OperatorMatrix& rho = run.traj.final_state;
    const auto basis = cached_angular_basis(n);
    const OperatorMatrix rho_j = basis->unitary.adjoint() * rho * basis->unitary;
    json labels = json::array();
    for (const auto& l : basis->labels) labels.push_back({{"j", l.j()}, {"m", l.m()}, {"alpha", l.alpha}});
    const json out = {
        {"n_atoms", n},
        {"r", r},
        {"t", run.t_half},
        {"tau", s.config.gamma * r * run.t_half},
        {"fidelity", run.fidelity},
        {"sqrt_fidelity", std::sqrt(run.fidelity)},
        {"target", matrix_to_json(run.target)},
        {"computational", {{"real", grid_json(rho.real())}, {"imag", grid_json(rho.imag())},
                           {"matrix", matrix_to_json(rho)}}},
        {"angular", {{"labels", labels}, {"real", grid_json(rho_j.real())}, {"imag", grid_json(rho_j.imag())}}},
    };
    emit_json(result, output_file(s, "fig3e.json"), out);
    result.summary["r"] = r;
    result.summary["fidelity"] = run.fidelity;
    result.summary["t"] = run.t_half;
    result.summary["invariants"] = invariants_json(run.traj);
}

// ---- figure 4 ---------------------------------------------------------------

struct CellResult {
    double q_max = 0.0;
    double trace_preservation = 0.0;
    double kraus_closure = 0.0;
    double regeneration = 0.0;
};

CellResult q_max_at(const SystemConfig& base, double r, double beta) {
    SystemConfig cfg = base.with_r(r);
    cfg.beta = beta;
    cfg.validate();
    const auto ad = adiabatic_generator(build_generator(cfg), *df_projector(cfg.n_atoms), {0.0, false});
    return {polariton_spectrum(effective_hamiltonian(ad.h_ad, ad.jumps_ad)).q_max(1e-6 * r * cfg.gamma),
            ad.trace_preservation_error, ad.kraus_closure_error, ad.regeneration_error};
}

void fig4a(const ExperimentSpec& s, RunResult& result) {
    const auto& rs = s.grid.r;
    const auto& bs = s.grid.beta;
    const auto cells = parallel_map<CellResult>(rs.size() * bs.size(), resolve_threads(s.threads), [&](std::size_t i) {
        return q_max_at(s.config, rs[i / bs.size()], bs[i % bs.size()]);
    });
    std::vector<double> q;
    CellResult worst;
    for (const auto& c : cells) {
        q.push_back(c.q_max);
        worst.trace_preservation = std::max(worst.trace_preservation, c.trace_preservation);
        worst.kraus_closure = std::max(worst.kraus_closure, c.kraus_closure);
        worst.regeneration = std::max(worst.regeneration, c.regeneration);
    }
    CsvTable table;
    table.header = {"r", "beta", "q_max"};
    int above = 0, above_osc = 0, below = 0, below_quiet = 0;
    json row_max = json::array();
    for (std::size_t a = 0; a < rs.size(); ++a) {
        for (std::size_t b = 0; b < bs.size(); ++b) {
            const double qq = q[a * bs.size() + b];
            table.rows.push_back({format_double(rs[a]), format_double(bs[b]), format_double(qq)});
            const double loss = 1.0 - bs[b];
            if (rs[a] > 3.0 * loss) {
                ++above;
                above_osc += qq > 1.0;
            }
            if (rs[a] < loss / 3.0) {
                ++below;
                below_quiet += qq <= 1.0;
            }
        }
    }
    // Maximal Q along each fixed-beta row.
    for (std::size_t b = 0; b < bs.size(); ++b) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < rs.size(); ++a)
            if (q[a * bs.size() + b] > q[best * bs.size() + b]) best = a;
        row_max.push_back({{"beta", bs[b]}, {"r_at_max", rs[best]}, {"q_max", q[best * bs.size() + b]}});
    }
    CsvTable onset;
    onset.header = {"r", "beta"};
    for (double r : rs)
        if (r < 1.0) onset.rows.push_back({format_double(r), format_double(1.0 - r)});

    emit_csv(result, output_file(s, "fig4a.csv"), table);
    emit_csv(result, output_file(s, "fig4a_onset.csv"), onset);
    result.summary["cells_oscillatory_side"] = above;
    result.summary["oscillatory_fraction"] = above ? json(static_cast<double>(above_osc) / above) : json(nullptr);
    result.summary["cells_damped_side"] = below;
    result.summary["damped_fraction"] = below ? json(static_cast<double>(below_quiet) / below) : json(nullptr);
    result.summary["row_maxima"] = row_max;
    result.summary["max_trace_preservation_error"] = worst.trace_preservation;
    result.summary["max_kraus_closure_error"] = worst.kraus_closure;
    result.summary["max_regeneration_error"] = worst.regeneration;
}

void fig4b(const ExperimentSpec& s, RunResult& result) {
    if (s.grid.r.size() != s.grid.beta.size())
        throw ConfigError("fig4b pairs grid.beta with grid.r: both lists must have the same length");
    auto one = [&](std::size_t i) {
        ExperimentSpec local = s;
        local.config.beta = s.grid.beta[i];
        local.config.validate();
        return fig2_trajectory(local, s.grid.r[i]);
    };
    const auto runs = parallel_map<DrivenRun>(s.grid.r.size(), resolve_threads(s.threads), one);
    CsvTable table;
    json rows = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        append_trajectory(table, {{"beta", s.grid.beta[i]}, {"r", s.grid.r[i]}}, trajectory_table(runs[i].traj));
        json row = runs[i].summary;
        row["beta"] = s.grid.beta[i];
        rows.push_back(row);
    }
    emit_csv(result, output_file(s, "fig4b.csv"), table);
    result.summary["runs"] = rows;
}

// ---- sweep --------------------------------------------------------------------

std::vector<std::string> sweep_columns(const std::vector<std::string>& observables) {
    std::vector<std::string> cols;
    for (const auto& o : observables) {
        if (o == "rabi_frequency") {
            cols.push_back("rabi_frequency_adiabatic");
            cols.push_back("rabi_frequency_fft");
        } else if (o == "spectral_peaks") {
            cols.push_back("peak_count");
            cols.push_back("dominant_frequency");
        } else {
            cols.push_back(o);
        }
    }
    return cols;
}

bool wants(const std::vector<std::string>& obs, const char* name) {
    return std::find(obs.begin(), obs.end(), name) != obs.end();
}

std::map<std::string, double> sweep_point(const ExperimentSpec& s, SystemConfig cfg) {
    cfg.validate();
    const auto& obs = s.observables;
    const int n = cfg.n_atoms;
    const double r = cfg.r_total;
    std::map<std::string, double> out;

    const bool need_traj = wants(obs, "rabi_frequency") || wants(obs, "min_df_pop") ||
                           wants(obs, "final_fidelity") || wants(obs, "final_sz") || wants(obs, "first_max_tau") ||
                           wants(obs, "spectral_peaks");
    const bool need_ad = wants(obs, "q_max") || (wants(obs, "rabi_frequency") && n <= kMaxLiouvilleAtoms);

    if (need_ad) {
        if (n > kMaxLiouvilleAtoms) throw ConfigError("q_max needs N <= " + std::to_string(kMaxLiouvilleAtoms));
        const auto ad = adiabatic_generator(build_generator(cfg), *df_projector(n), {0.0, false});
        const auto spec = polariton_spectrum(effective_hamiltonian(ad.h_ad, ad.jumps_ad));
        if (wants(obs, "q_max")) out["q_max"] = spec.q_max(1e-6 * r * cfg.gamma);
        if (wants(obs, "rabi_frequency")) {
            const auto w = adiabatic_rabi_frequency(ad, r);
            if (w) out["rabi_frequency_adiabatic"] = *w;
        }
    }
    if (need_traj) {
        EvolveOptions o = base_options(s, n);
        if (wants(obs, "final_fidelity")) o.target = transfer_target(build_generator(cfg), *df_projector(n));
        const auto t = time_grid(s.grid, r, cfg.gamma);
        const auto traj = evolve(cfg, ground_state(n), t, o);
        const auto& sz = traj.series("Sz");
        if (wants(obs, "min_df_pop")) out["min_df_pop"] = series_min(traj.series("df_pop"));
        if (wants(obs, "final_fidelity")) out["final_fidelity"] = traj.series("fidelity").back();
        if (wants(obs, "final_sz")) out["final_sz"] = sz.back();
        if (wants(obs, "first_max_tau") && !traj.tau.empty()) {
            const auto first = analysis::first_maximum(traj.tau, sz);
            if (first) out["first_max_tau"] = first->t;
        }
        if (wants(obs, "rabi_frequency")) {
            const auto w = dominant_fft_frequency(t, sz);
            if (w) out["rabi_frequency_fft"] = *w;
        }
        if (wants(obs, "spectral_peaks")) {
            if (!uniform(t)) throw ConfigError("spectral_peaks needs a uniform time grid");
            const auto peaks = analysis::spectral_peaks(sz, t[1] - t[0]);
            out["peak_count"] = static_cast<double>(peaks.size());
            if (!peaks.empty()) out["dominant_frequency"] = peaks.front().frequency;
        }
    }
    return out;
}

std::string one_line(std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), '\r', ' ');
    return msg;
}

} // namespace

// ---- public API ----------------------------------------------------------------

std::string to_string(Figure f) {
    for (const auto& [fig, name] : figure_table())
        if (fig == f) return name;
    return "custom";
}

Figure figure_from_string(const std::string& name) {
    for (const auto& [fig, n] : figure_table())
        if (n == name) return fig;
    throw ConfigError("unknown experiment name '" + name + "'");
}

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& entry : figure_table()) v.push_back(entry.second);
        return v;
    }();
    return names;
}

void ExperimentSpec::validate() const {
    config.validate();
    for (double r : grid.r)
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("grid.r values must be finite and >= 0");
    for (double b : grid.beta)
        if (!(b > 0.0) || b > 1.0) throw ConfigError("grid.beta values must lie in (0, 1]");
    for (int n : grid.n_atoms)
        if (n < 1 || n > kMaxHilbertAtoms) throw ConfigError("grid.n_atoms values must lie in [1, 12]");
    if (!grid.tau.empty() && !grid.t.empty()) throw ConfigError("grid.tau and grid.t are mutually exclusive");
    check_increasing(grid.tau, "grid.tau");
    check_increasing(grid.t, "grid.t");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    for (const auto& o : observables)
        if (std::find(observable_names().begin(), observable_names().end(), o) == observable_names().end())
            throw ConfigError("unknown observable '" + o + "'");

    auto all_n = grid.n_atoms;
    all_n.push_back(config.n_atoms);
    if (is_fig2(name)) {
        if (config.beta != 1.0) throw ConfigError(to_string(name) + " assumes beta = 1");
        for (double b : grid.beta)
            if (b != 1.0) throw ConfigError(to_string(name) + " assumes beta = 1");
    }
    if (is_fig3(name) || is_fig4(name))
        for (int n : all_n)
            if (n > kMaxLiouvilleAtoms)
                throw ConfigError(to_string(name) + " needs N <= " + std::to_string(kMaxLiouvilleAtoms));
    if ((name == Figure::Fig3d || name == Figure::Fig3e) && config.n_atoms < 4)
        throw ConfigError("state transfer needs N >= 4 (P H P vanishes for N = 2, 3)");
    if (name == Figure::Fig3e && !(config.r_total > 0.0)) throw ConfigError("fig3e needs config.r_total > 0");
}

ExperimentSpec spec_from_json(const json& j) {
    try {
        reject_unknown(j, {"name", "config", "grid", "outputs", "method", "observables", "threads"}, "spec");
        if (!j.contains("name") || !j["name"].is_string()) throw ConfigError("spec.name must be a string");
        ExperimentSpec s;
        s.name = figure_from_string(j["name"].get<std::string>());
        if (j.contains("config")) s.config = config_from_json(j["config"]);
        if (j.contains("grid")) s.grid = grid_from_json(j["grid"]);
        if (j.contains("outputs")) {
            if (!j["outputs"].is_string()) throw ConfigError("spec.outputs must be a path string");
            s.outputs = j["outputs"].get<std::string>();
        }
        if (j.contains("method")) {
            if (!j["method"].is_string()) throw ConfigError("spec.method must be a string");
            s.method = integrator_from_string(j["method"].get<std::string>());
        }
        if (j.contains("observables")) {
            if (!j["observables"].is_array()) throw ConfigError("spec.observables must be a list");
            for (const auto& o : j["observables"]) {
                if (!o.is_string()) throw ConfigError("spec.observables entries must be strings");
                s.observables.push_back(o.get<std::string>());
            }
        }
        if (j.contains("threads")) s.threads = integer(j["threads"], "spec.threads");
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed spec: ") + e.what());
    }
}

json spec_to_json(const ExperimentSpec& s) {
    json grid = json::object();
    if (!s.grid.r.empty()) grid["r"] = s.grid.r;
    if (!s.grid.beta.empty()) grid["beta"] = s.grid.beta;
    if (!s.grid.n_atoms.empty()) grid["n_atoms"] = s.grid.n_atoms;
    if (!s.grid.tau.empty()) grid["tau"] = s.grid.tau;
    if (!s.grid.t.empty()) grid["t"] = s.grid.t;
    return {{"name", to_string(s.name)},    {"config", config_to_json(s.config)},
            {"grid", grid},                 {"outputs", s.outputs.generic_string()},
            {"method", to_string(s.method)}, {"observables", s.observables},
            {"threads", s.threads}};
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open spec file " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return spec_from_json(j);
}

ExperimentSpec default_spec(Figure f) {
    ExperimentSpec s;
    s.name = f;
    s.outputs = std::filesystem::path("out") / to_string(f);
    s.config.n_atoms = 4;
    s.config.beta = 1.0;
    const auto tau30 = analysis::lin_space(0.0, 30.0, 601);
    switch (f) {
    case Figure::Fig2a:
        s.config.r_total = 0.01;
        s.grid.r = {1.0, 0.1, 0.03, 0.01};
        s.grid.tau = tau30;
        break;
    case Figure::Fig2b:
        s.config.r_total = 0.01;
        s.grid.r = {0.1, 0.03, 0.01};
        s.grid.tau = tau30;
        break;
    case Figure::Fig2c:
        s.config.r_total = 0.01;
        s.grid.r = analysis::log_space(1e-3, 1.0, 60);
        s.grid.tau = analysis::lin_space(0.0, 10.0, 60);
        break;
    case Figure::Fig2d:
        s.config.r_total = 0.01;
        s.grid.r = {0.01};
        s.grid.n_atoms = {4, 5, 6, 7};
        s.grid.tau = tau30;
        break;
    case Figure::Fig3b:
        s.config.r_total = 0.025;
        s.grid.r = {0.1, 0.05, 0.025, 0.01};
        s.grid.tau = tau30;
        break;
    case Figure::Fig3c:
        s.config.r_total = 0.025;
        s.grid.r = {0.025};
        s.grid.tau = tau30;
        break;
    case Figure::Fig3d:
        s.config.r_total = 0.025;
        s.grid.r = {0.05, 0.025, 0.01};
        s.grid.tau = analysis::lin_space(0.0, 8.0, 801);
        break;
    case Figure::Fig3e:
        s.config.r_total = 0.025;
        s.grid.tau = analysis::lin_space(0.0, 8.0, 801);
        break;
    case Figure::Fig4a: {
        s.config.r_total = 0.025;
        s.grid.r = analysis::log_space(1e-3, 0.3, 40);
        for (double x : analysis::log_space(1e-5, 1e-1, 40)) s.grid.beta.push_back(1.0 - x);
        break;
    }
    case Figure::Fig4b:
        s.config.r_total = 0.025;
        s.grid.beta = {0.99, 0.999, 0.9999};
        s.grid.r = {0.086, 0.025, 0.01};
        s.grid.tau = tau30;
        break;
    case Figure::Custom:
        s.config.r_total = 0.025;
        s.grid.tau = tau30;
        break;
    }
    return s;
}

int resolve_threads(int requested) {
    if (const char* env = std::getenv("NLWQED_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 0) throw ConfigError("NLWQED_THREADS must be a non-negative integer");
        requested = static_cast<int>(v);
    }
    if (requested == 0) requested = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, requested);
}

StateVector transfer_target(const LindbladGenerator& gen, const DFProjector& df) {
    const int n = static_cast<int>(std::log2(static_cast<double>(gen.dim())));
    StateVector v = project_zeno(gen.hamiltonian, df) * ground_vector(n);
    const double norm = v.norm();
    if (norm < 1e-12) throw ConfigError("P H P annihilates the ground state: no Zeno transfer target");
    return v / norm;
}

double pi_pulse_time(const SystemConfig& config, double tau_horizon, int points, Integrator method) {
    const double r = config.r_total;
    if (!(r > 0.0)) throw ConfigError("pi_pulse_time needs r > 0");
    SystemConfig cfg = config;
    cfg.drive_schedule.clear();
    const auto t = uniform_grid(tau_horizon / (cfg.gamma * r), points);
    EvolveOptions o;
    o.method = method;
    const auto traj = evolve(cfg, ground_state(cfg.n_atoms), t, o);
    const auto first = analysis::first_maximum(traj.times, traj.series("Sz"));
    if (!first) throw NumericalError("no <S_z> maximum within tau <= " + format_double(tau_horizon));
    return first->t;
}

RunResult run_fig2(const ExperimentSpec& spec) {
    if (!is_fig2(spec.name)) throw ConfigError("run_fig2 called with " + to_string(spec.name));
    const ExperimentSpec s = with_defaults(spec);
    s.validate();
    RunResult result;
    result.summary = {{"name", to_string(s.name)}, {"n_atoms", s.config.n_atoms}};
    switch (s.name) {
    case Figure::Fig2a: fig2a(s, result); break;
    case Figure::Fig2b: fig2b(s, result); break;
    case Figure::Fig2c: fig2c(s, result); break;
    default: fig2d(s, result); break;
    }
    emit_json(result, output_file(s, to_string(s.name) + "_summary.json"), result.summary);
    return result;
}

RunResult run_fig3(const ExperimentSpec& spec) {
    if (!is_fig3(spec.name)) throw ConfigError("run_fig3 called with " + to_string(spec.name));
    const ExperimentSpec s = with_defaults(spec);
    s.validate();
    RunResult result;
    result.summary = {{"name", to_string(s.name)}, {"n_atoms", s.config.n_atoms}};
    switch (s.name) {
    case Figure::Fig3b: fig3b(s, result); break;
    case Figure::Fig3c: fig3c(s, result); break;
    case Figure::Fig3d: fig3d(s, result); break;
    default: fig3e(s, result); break;
    }
    emit_json(result, output_file(s, to_string(s.name) + "_summary.json"), result.summary);
    return result;
}

RunResult run_fig4(const ExperimentSpec& spec) {
    if (!is_fig4(spec.name)) throw ConfigError("run_fig4 called with " + to_string(spec.name));
    const ExperimentSpec s = with_defaults(spec);
    s.validate();
    RunResult result;
    result.summary = {{"name", to_string(s.name)}, {"n_atoms", s.config.n_atoms}};
    if (s.name == Figure::Fig4a) fig4a(s, result);
    else fig4b(s, result);
    emit_json(result, output_file(s, to_string(s.name) + "_summary.json"), result.summary);
    return result;
}

RunResult run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentSpec s = spec;
    if (s.grid.tau.empty() && s.grid.t.empty()) s.grid.tau = default_spec(Figure::Custom).grid.tau;
    const std::vector<int> ns = s.grid.n_atoms.empty() ? std::vector<int>{s.config.n_atoms} : s.grid.n_atoms;
    const std::vector<double> rs = s.grid.r.empty() ? std::vector<double>{s.config.r_total} : s.grid.r;
    const std::vector<double> bs = s.grid.beta.empty() ? std::vector<double>{s.config.beta} : s.grid.beta;

    const auto cols = sweep_columns(s.observables);
    CsvTable table;
    table.header = {"n_atoms", "r", "beta"};
    table.header.insert(table.header.end(), cols.begin(), cols.end());
    table.header.push_back("error");

    RunResult result;
    int failures = 0;
    if (!s.observables.empty()) {
        struct Point {
            int n;
            double r, beta;
        };
        std::vector<Point> points;
        for (int n : ns)
            for (double r : rs)
                for (double b : bs) points.push_back({n, r, b});
        struct Outcome {
            std::map<std::string, double> values;
            std::string error;
        };
        const auto outcomes = parallel_map<Outcome>(points.size(), resolve_threads(s.threads), [&](std::size_t i) {
            SystemConfig cfg = s.config.with_r(points[i].r);
            cfg.n_atoms = points[i].n;
            cfg.beta = points[i].beta;
            Outcome out;
            try {
                out.values = sweep_point(s, cfg);
            } catch (const std::exception& e) {
                out.error = one_line(e.what());
            }
            return out;
        });
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::vector<std::string> row{std::to_string(points[i].n), format_double(points[i].r),
                                         format_double(points[i].beta)};
            for (const auto& c : cols) {
                auto it = outcomes[i].values.find(c);
                row.push_back(it == outcomes[i].values.end() ? std::string() : format_double(it->second));
            }
            row.push_back(outcomes[i].error);
            failures += !outcomes[i].error.empty();
            table.rows.push_back(std::move(row));
        }
    }
    emit_csv(result, output_file(s, "sweep.csv"), table);
    result.summary = {{"name", "sweep"}, {"points", table.rows.size()}, {"failures", failures}};
    return result;
}

RunResult run_experiment(const ExperimentSpec& spec) {
    if (is_fig2(spec.name)) return run_fig2(spec);
    if (is_fig3(spec.name)) return run_fig3(spec);
    if (is_fig4(spec.name)) return run_fig4(spec);
    if (!spec.grid.r.empty() || !spec.grid.beta.empty() || !spec.grid.n_atoms.empty() || !spec.observables.empty())
        return run_sweep(spec);

    ExperimentSpec s = with_defaults(spec);
    s.validate();
    const SystemConfig& cfg = s.config;
    const int n = cfg.n_atoms;
    double rate = cfg.r_total;
    for (const auto& d : cfg.drive_schedule)
        if (d.r > 0.0) {
            rate = d.r;
            break;
        }
    const auto t = time_grid(s.grid, rate, cfg.gamma);
    const auto traj = evolve(cfg, ground_state(n), t, base_options(s, n));
    RunResult result;
    emit_csv(result, output_file(s, "trajectory.csv"), trajectory_table(traj));
    result.summary = {{"name", "custom"}, {"n_atoms", n}, {"final_sz", traj.series("Sz").back()},
                      {"invariants", invariants_json(traj)}};
    emit_json(result, output_file(s, "custom_summary.json"), result.summary);
    return result;
}

} // namespace nlwqed

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "nlwqed/lindblad.hpp"
#include "nlwqed/linalg.hpp"

namespace nlwqed {

std::string to_string(Integrator method) {
    switch (method) {
    case Integrator::Auto: return "auto";
    case Integrator::RungeKutta4: return "rk4";
    case Integrator::Propagator: return "propagator";
    case Integrator::Krylov: return "krylov";
    }
    return "auto";
}

Integrator integrator_from_string(const std::string& name) {
    if (name == "auto") return Integrator::Auto;
    if (name == "rk4") return Integrator::RungeKutta4;
    if (name == "propagator") return Integrator::Propagator;
    if (name == "krylov") return Integrator::Krylov;
    throw ConfigError("unknown integrator '" + name + "'");
}

std::vector<double> uniform_grid(double t_end, int n_points) {
    if (n_points < 2 || !(t_end > 0.0)) throw ConfigError("uniform_grid needs t_end > 0 and at least 2 points");
    std::vector<double> g(n_points);
    for (int i = 0; i < n_points; ++i) g[i] = t_end * static_cast<double>(i) / (n_points - 1);
    return g;
}

double default_rk4_step(const SystemConfig& config, double r) {
    return std::min(1e-3 / config.gamma, 1e-2 / (config.gamma * (1.0 + r * config.n_atoms)));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Segment {
    double start = 0.0;
    double end = kInf;
    double r = 0.0;
    double tau_rate = 0.0; // gamma * r, or the preceding rate while the drive is off
};

std::vector<Segment> build_segments(const SystemConfig& config) {
    std::vector<Segment> segs;
    if (config.drive_schedule.empty()) {
        segs.push_back({0.0, kInf, config.r_total, config.gamma * config.r_total});
        return segs;
    }
    double t = 0.0;
    double rate = 0.0;
    for (const auto& d : config.drive_schedule) {
        if (d.r > 0.0) rate = config.gamma * d.r;
        segs.push_back({t, t + d.duration, d.r, rate});
        t += d.duration;
    }
    // The final drive setting persists beyond the end of the schedule.
    segs.back().end = kInf;
    return segs;
}

bool has_tau(const std::vector<Segment>& segs) {
    return std::any_of(segs.begin(), segs.end(), [](const Segment& s) { return s.r > 0.0; });
}

double tau_at(const std::vector<Segment>& segs, double t) {
    double tau = 0.0;
    for (const auto& s : segs) {
        if (t <= s.start) break;
        tau += s.tau_rate * (std::min(t, s.end) - s.start);
    }
    return tau;
}

// Lazily built per-segment numerical state.
struct SegmentEngine {
    LindbladGenerator gen;
    std::optional<LiouvilleEvaluator> evaluator;
    std::optional<SuperOperator> liouvillian;
    std::map<double, SuperOperator> propagators;
    double krylov_hint = 0.0;
};

class Stepper {
public:
    Stepper(const SystemConfig& config, const EvolveOptions& options, Integrator method, double step_scale)
        : config_(config), options_(options), method_(method), step_scale_(step_scale),
          segs_(build_segments(config)), engines_(segs_.size()) {}

    const std::vector<Segment>& segments() const { return segs_; }

    // Advances rho from t_a to t_b, crossing segment boundaries exactly.
    void advance(OperatorMatrix& rho, double t_a, double t_b) {
        double t = t_a;
        while (t < t_b) {
            const std::size_t k = segment_index(t);
            const double stop = std::min(t_b, segs_[k].end);
            step_within(k, rho, stop - t);
            t = stop;
        }
    }

private:
    std::size_t segment_index(double t) const {
        for (std::size_t k = 0; k < segs_.size(); ++k)
            if (t < segs_[k].end) return k;
        return segs_.size() - 1;
    }

    SegmentEngine& engine(std::size_t k) {
        auto& e = engines_[k];
        if (!e) {
            e.emplace();
            const SystemConfig c = config_.with_r(segs_[k].r);
            e->gen = options_.builder ? options_.builder(c) : build_generator(c);
            e->gen.check();
        }
        return *e;
    }

    void step_within(std::size_t k, OperatorMatrix& rho, double dt) {
        if (dt <= 0.0) return;
        auto& e = engine(k);
        const Eigen::Index d = rho.rows();
        switch (method_) {
        case Integrator::RungeKutta4: {
            if (!e.evaluator) e.evaluator.emplace(e.gen);
            const double h0 = (options_.rk4_step > 0.0 ? options_.rk4_step : default_rk4_step(config_, segs_[k].r)) *
                              step_scale_;
            const long n = std::max(1L, static_cast<long>(std::ceil(dt / h0 - 1e-9)));
            const double h = dt / static_cast<double>(n);
            OperatorMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
            for (long s = 0; s < n; ++s) {
                e.evaluator->apply(rho, k1);
                tmp = rho + 0.5 * h * k1;
                e.evaluator->apply(tmp, k2);
                tmp = rho + 0.5 * h * k2;
                e.evaluator->apply(tmp, k3);
                tmp = rho + h * k3;
                e.evaluator->apply(tmp, k4);
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            break;
        }
        case Integrator::Propagator: {
            if (!e.liouvillian) e.liouvillian = liouvillian_matrix(e.gen);
            auto it = e.propagators.find(dt);
            if (it == e.propagators.end()) {
                if (e.propagators.size() > 8) e.propagators.clear();
                it = e.propagators.emplace(dt, linalg::expm(*e.liouvillian * Complex(dt))).first;
            }
            const Eigen::VectorXcd v = it->second * linalg::vec(rho);
            rho = linalg::unvec(v, d);
            break;
        }
        case Integrator::Krylov:
        case Integrator::Auto: {
            if (!e.evaluator) e.evaluator.emplace(e.gen);
            const auto& ev = *e.evaluator;
            linalg::LinearMap map = [&ev, d](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
                OperatorMatrix o(d, d);
                ev.apply(Eigen::Map<const OperatorMatrix>(in.data(), d, d), o);
                out = Eigen::Map<const Eigen::VectorXcd>(o.data(), d * d);
            };
            linalg::KrylovOptions ko;
            ko.tolerance = options_.krylov_tolerance;
            ko.initial_step = e.krylov_hint;
            linalg::KrylovStats stats;
            const Eigen::VectorXcd v = linalg::expmv(map, linalg::vec(rho), dt, ko, &stats);
            e.krylov_hint = stats.next_step;
            rho = linalg::unvec(v, d);
            break;
        }
        }
    }

    const SystemConfig& config_;
    const EvolveOptions& options_;
    Integrator method_;
    double step_scale_;
    std::vector<Segment> segs_;
    std::vector<std::optional<SegmentEngine>> engines_;
};

Integrator resolve(Integrator method, int n_atoms) {
    if (method != Integrator::Auto) return method;
    return n_atoms <= 5 ? Integrator::Propagator : Integrator::Krylov;
}

Trajectory evolve_impl(const SystemConfig& config, const DensityMatrix& rho0, std::span<const double> t_grid,
                       const EvolveOptions& options, double step_scale) {
    config.validate();
    for (const auto& d : config.drive_schedule)
        if (!(d.duration > 0.0)) throw ConfigError("drive segment durations must be positive");
    if (rho0.dim() != hilbert_dim(config.n_atoms)) throw DimensionError("evolve: initial state dimension mismatch");
    if (t_grid.empty()) throw ConfigError("evolve: empty time grid");
    if (t_grid.front() < 0.0) throw ConfigError("evolve: time grid must start at t >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("evolve: time grid must be strictly increasing");

    const Integrator method = resolve(options.method, config.n_atoms);
    if (method == Integrator::Propagator) check_atom_count(config.n_atoms, kMaxLiouvilleAtoms);
    if (options.df_projector) {
        if (options.df_projector->rows() != rho0.dim()) throw DimensionError("evolve: projector dimension mismatch");
    }
    if (options.target && options.target->size() != rho0.dim())
        throw DimensionError("evolve: target dimension mismatch");

    Stepper stepper(config, options, method, step_scale);
    const auto& segs = stepper.segments();
    const bool tau = has_tau(segs);
    const OperatorMatrix sz = collective_ops(config.n_atoms).s_z;

    Trajectory traj;
    auto& obs = traj.observables;
    OperatorMatrix rho = rho0.matrix();
    double t_cur = 0.0;
    for (double t : t_grid) {
        stepper.advance(rho, t_cur, t);
        t_cur = t;
        traj.times.push_back(t);
        if (tau) traj.tau.push_back(tau_at(segs, t));
        const Complex tr = rho.trace();
        obs["Sz"].push_back(expectation(rho, sz).real());
        obs["purity"].push_back(purity(rho));
        obs["trace_err"].push_back(std::abs(tr - 1.0));
        if (options.df_projector) obs["df_pop"].push_back(expectation(rho, *options.df_projector).real());
        if (options.target) obs["fidelity"].push_back(fidelity_pure(rho, *options.target));
        if (options.check_states) {
            const auto diag = diagnose(rho);
            obs["herm_err"].push_back(diag.hermiticity_error);
            obs["min_eig"].push_back(diag.min_eigenvalue);
            if (!diagnostics_ok(diag)) {
                std::ostringstream msg;
                msg << "state invariants violated at t=" << t << " (trace error " << diag.trace_error
                    << ", hermiticity " << diag.hermiticity_error << ", min eigenvalue " << diag.min_eigenvalue
                    << ") using " << to_string(method);
                throw NumericalError(msg.str());
            }
        }
        if (options.record_states) traj.states.push_back(rho);
    }
    traj.final_state = std::move(rho);
    return traj;
}

} // namespace

Trajectory evolve(const SystemConfig& config, const DensityMatrix& rho0, std::span<const double> t_grid,
                  const EvolveOptions& options) {
    Trajectory traj = evolve_impl(config, rho0, t_grid, options, 1.0);
    if (options.convergence_audit && resolve(options.method, config.n_atoms) == Integrator::RungeKutta4) {
        EvolveOptions half = options;
        half.record_states = false;
        const Trajectory fine = evolve_impl(config, rho0, t_grid, half, 0.5);
        double worst = 0.0;
        const auto& a = traj.series("Sz");
        const auto& b = fine.series("Sz");
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        if (worst >= 1e-6) {
            std::ostringstream msg;
            msg << "RK4 convergence audit failed: halving the step changed <Sz> by " << worst;
            throw NumericalError(msg.str());
        }
    }
    return traj;
}

} // namespace nlwqed

#include "nlwqed/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nlwqed/linalg.hpp"

namespace nlwqed {

namespace {

Eigen::Index side_of(const SuperOperator& l) {
    const auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(l.rows()))));
    if (k * k != l.rows() || l.rows() != l.cols()) throw DimensionError("superoperator is not square over a square space");
    return k;
}

SuperOperator gather(const SuperOperator& m, const std::vector<Eigen::Index>& rows,
                     const std::vector<Eigen::Index>& cols) {
    SuperOperator out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < rows.size(); ++r) out(r, c) = m(rows[r], cols[c]);
    return out;
}

double one_norm(const SuperOperator& l) { return l.cwiseAbs().colwise().sum().maxCoeff(); }

OperatorMatrix traceless(OperatorMatrix h) {
    const Complex shift = h.trace() / static_cast<double>(h.rows());
    h.diagonal().array() -= shift;
    return h;
}

// Factorizes a Hermitian PSD matrix over vectorized operators into jump operators.
std::vector<OperatorMatrix> jumps_from_dissipator(const Eigen::MatrixXcd& d, Eigen::Index k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (d + d.adjoint()));
    const auto& mu = es.eigenvalues();
    const double top = mu.size() ? std::max(mu.maxCoeff(), 0.0) : 0.0;
    const double cutoff = std::max(1e-14, 1e-10 * top);
    std::vector<OperatorMatrix> out;
    for (Eigen::Index i = mu.size(); i-- > 0;) {
        if (mu(i) <= cutoff) break;
        out.push_back(std::sqrt(mu(i)) * linalg::unvec(es.eigenvectors().col(i), k));
    }
    return out;
}

Eigen::MatrixXcd dissipator_matrix(std::span<const OperatorMatrix> jumps, Eigen::Index k) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(k * k, k * k);
    for (const auto& l : jumps) {
        const Eigen::VectorXcd v = linalg::vec(l);
        d.noalias() += v * v.adjoint();
    }
    return d;
}

} // namespace

ProjectedBlocks project_superops(const SuperOperator& l, const OperatorMatrix& projector) {
    if (l.rows() != projector.rows() * projector.rows()) throw DimensionError("project_superops: dimension mismatch");
    const SuperOperator p = linalg::sandwich(projector, projector);
    SuperOperator q = -p;
    q.diagonal().array() += 1.0;
    const SuperOperator lp = l * p;
    const SuperOperator lq = l * q;
    return ProjectedBlocks{p * lp, p * lq, q * lp, q * lq};
}

SuperOperator eliminate(const LindbladGenerator& gen, const OperatorMatrix& dark, EliminationReport* report) {
    const Eigen::Index d = gen.dim();
    const Eigen::Index k = dark.cols();
    if (dark.rows() != d) throw DimensionError("eliminate: dark basis dimension mismatch");
    int n = 0;
    while ((Eigen::Index{1} << n) < d) ++n;
    check_atom_count(n, kMaxLiouvilleAtoms);

    // Rotate into [dark | bright] so the DF block is the leading k x k corner;
    // the Liouvillian of the rotated generator is unitarily similar to L.
    OperatorMatrix full(d, d);
    full.leftCols(k) = dark;
    full.rightCols(d - k) = linalg::orthogonal_complement(dark);
    const OperatorMatrix h = full.adjoint() * gen.hamiltonian * full;
    std::vector<OperatorMatrix> jumps;
    for (const auto& l : gen.jumps) jumps.push_back(full.adjoint() * l * full);
    const SuperOperator l = liouvillian_from(h, jumps);

    std::vector<Eigen::Index> p_idx, q_idx;
    for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index a = 0; a < d; ++a)
            (a < k && b < k ? p_idx : q_idx).push_back(a + d * b);

    const SuperOperator lpp = gather(l, p_idx, p_idx);
    const SuperOperator lpq = gather(l, p_idx, q_idx);
    const SuperOperator lqp = gather(l, q_idx, p_idx);
    const SuperOperator lqq = gather(l, q_idx, q_idx);
    const auto solve = linalg::pinv_solve(lqq, lqp, 1e-10);
    if (report) *report = {solve.size, solve.rank, solve.max_singular, solve.min_kept_singular};
    if (solve.rank < solve.size) {
        std::ostringstream msg;
        msg << "bright-sector Liouvillian is rank deficient: rank " << solve.rank << " of " << solve.size
            << " (sigma_max " << solve.max_singular << ", smallest kept " << solve.min_kept_singular << ")";
        throw NumericalError(msg.str());
    }
    return lpp - lpq * solve.x;
}

KrausSet kraus_extract(const SuperOperator& l, double dt) {
    const Eigen::Index k = side_of(l);
    if (dt <= 0.0) dt = 1e-3 / std::max(1.0, one_norm(l));
    KrausSet out;
    for (int attempt = 0; attempt <= 10; ++attempt, dt *= 0.5) {
        const SuperOperator e = linalg::expm(l * Complex(dt));
        // Choi matrix C_{(a,i),(b,j)} = E(|a><b|)_{ij}.
        Eigen::MatrixXcd choi(k * k, k * k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b)
                for (Eigen::Index i = 0; i < k; ++i)
                    for (Eigen::Index j = 0; j < k; ++j) choi(a * k + i, b * k + j) = e(i + k * j, a + k * b);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (choi + choi.adjoint()));
        const auto& lam = es.eigenvalues();
        if (lam.minCoeff() < -1e-8) continue;

        out.dt = dt;
        out.halvings = attempt;
        out.min_choi_eigenvalue = lam.minCoeff();
        out.ops.clear();
        for (Eigen::Index i = lam.size(); i-- > 0;) {
            if (lam(i) <= 1e-15 * static_cast<double>(k)) break;
            out.ops.push_back(std::sqrt(lam(i)) * linalg::unvec(es.eigenvectors().col(i), k));
        }
        std::stable_sort(out.ops.begin(), out.ops.end(), [](const OperatorMatrix& x, const OperatorMatrix& y) {
            return std::abs(x.trace()) > std::abs(y.trace());
        });
        if (out.ops.size() > 1 && std::abs(out.ops[1].trace()) > 0.5 * std::abs(out.ops[0].trace()))
            throw NumericalError("kraus_extract: no Kraus operator dominates the identity overlap");
        const Complex tr = out.ops[0].trace();
        out.ops[0] *= std::conj(tr) / std::abs(tr);
        return out;
    }
    throw NumericalError("kraus_extract: exp(L dt) is not completely positive after 10 halvings of dt");
}

RecoveredGenerator recover_hl(const KrausSet& kraus) {
    if (kraus.ops.empty() || kraus.dt <= 0.0) throw NumericalError("recover_hl: empty Kraus set");
    const Eigen::Index k = kraus.ops[0].rows();
    const OperatorMatrix a = (OperatorMatrix::Identity(k, k) - kraus.ops[0]) / kraus.dt;
    RecoveredGenerator out;
    out.hamiltonian = traceless((a - a.adjoint()) / (2.0 * kI));
    const double s = 1.0 / std::sqrt(kraus.dt);
    for (std::size_t i = 1; i < kraus.ops.size(); ++i) out.jumps.push_back(s * kraus.ops[i]);
    return out;
}

RecoveredGenerator recover_extrapolated(const SuperOperator& l, double dt, KrausSet* first) {
    const Eigen::Index k = side_of(l);
    const KrausSet k1 = kraus_extract(l, dt);
    const KrausSet k2 = kraus_extract(l, 0.5 * k1.dt);
    if (first) *first = k1;
    const auto r1 = recover_hl(k1);
    const auto r2 = recover_hl(k2);
    // X(dt) = X* + c dt  =>  X* = (dt1 X2 - dt2 X1) / (dt1 - dt2).
    const double w = 1.0 / (k1.dt - k2.dt);
    RecoveredGenerator out;
    out.hamiltonian = traceless(w * (k1.dt * r2.hamiltonian - k2.dt * r1.hamiltonian));
    out.hamiltonian = 0.5 * (out.hamiltonian + out.hamiltonian.adjoint()).eval();
    const Eigen::MatrixXcd d = w * (k1.dt * dissipator_matrix(r2.jumps, k) - k2.dt * dissipator_matrix(r1.jumps, k));
    out.jumps = jumps_from_dissipator(d, k);
    return out;
}

RecoveredGenerator gks_decompose(const SuperOperator& l, Eigen::Index dim) {
    const Eigen::Index k = dim;
    if (l.rows() != k * k) throw DimensionError("gks_decompose: dimension mismatch");
    const Eigen::Index n = k * k;

    // Orthonormal operator basis F_0 = I / sqrt(k), F_1.. traceless.
    Eigen::MatrixXcd f(n, n);
    f.col(0) = linalg::vec(OperatorMatrix::Identity(k, k)) / std::sqrt(static_cast<double>(k));
    f.rightCols(n - 1) = linalg::orthogonal_complement(f.leftCols(1));

    // Realign L = sum chi_{mu nu} conj(F_nu) kron F_mu into R = F chi F^dag.
    Eigen::MatrixXcd r(n, n);
    for (Eigen::Index p = 0; p < k; ++p)
        for (Eigen::Index q = 0; q < k; ++q)
            for (Eigen::Index i = 0; i < k; ++i)
                for (Eigen::Index j = 0; j < k; ++j) r(i + j * k, p + q * k) = l(p * k + i, q * k + j);
    Eigen::MatrixXcd chi = f.adjoint() * r * f;
    chi = 0.5 * (chi + chi.adjoint()).eval();

    const double sk = std::sqrt(static_cast<double>(k));
    OperatorMatrix x = linalg::unvec(f.rightCols(n - 1) * chi.col(0).tail(n - 1), k) / sk;
    x.diagonal().array() += chi(0, 0) / (2.0 * static_cast<double>(k));

    RecoveredGenerator out;
    out.hamiltonian = traceless(kI * (x - x.adjoint()) / 2.0);
    out.hamiltonian = 0.5 * (out.hamiltonian + out.hamiltonian.adjoint()).eval();
    const Eigen::MatrixXcd c = chi.bottomRightCorner(n - 1, n - 1);
    // Jumps in the F basis, then mapped to operators.
    Eigen::MatrixXcd d = f.rightCols(n - 1) * c * f.rightCols(n - 1).adjoint();
    out.jumps = jumps_from_dissipator(d, k);
    return out;
}

double regeneration_error(const SuperOperator& l, const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
    const SuperOperator regen = liouvillian_from(h, jumps);
    const double scale = l.norm();
    return (regen - l).norm() / (scale > 0.0 ? scale : 1.0);
}

AdiabaticGenerator adiabatic_generator(const LindbladGenerator& gen, const DFProjector& df,
                                       const AdiabaticOptions& options) {
    AdiabaticGenerator ad;
    ad.dark_basis = df.basis;
    ad.generator_matrix = eliminate(gen, df.basis, &ad.elimination);
    const Eigen::Index k = ad.dim();

    const Eigen::VectorXcd id = linalg::vec(OperatorMatrix::Identity(k, k));
    ad.trace_preservation_error = (id.adjoint() * ad.generator_matrix).cwiseAbs().maxCoeff();

    KrausSet first;
    const auto rec = recover_extrapolated(ad.generator_matrix, options.dt, &first);
    ad.h_ad = rec.hamiltonian;
    ad.jumps_ad = rec.jumps;
    ad.dt_extraction = first.dt;

    OperatorMatrix closure = -OperatorMatrix::Identity(k, k);
    for (const auto& m : first.ops) closure.noalias() += m.adjoint() * m;
    ad.kraus_closure_error = closure.cwiseAbs().maxCoeff();
    ad.regeneration_error = regeneration_error(ad.generator_matrix, ad.h_ad, ad.jumps_ad);

    if (options.gks_cross_check) {
        const auto gks = gks_decompose(ad.generator_matrix, k);
        ad.gks_hamiltonian_gap = (gks.hamiltonian - ad.h_ad).cwiseAbs().maxCoeff();
    }
    return ad;
}

OperatorMatrix effective_hamiltonian(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
    OperatorMatrix heff = h;
    for (const auto& l : jumps) {
        if (l.rows() != h.rows()) throw DimensionError("effective_hamiltonian: dimension mismatch");
        heff.noalias() -= 0.5 * kI * (l.adjoint() * l);
    }
    return heff;
}

double PolaritonSpectrum::q_max(double omega_floor) const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (std::abs(eigenvalues(i).real()) > omega_floor) best = std::max(best, q_factors(i));
    return best;
}

PolaritonSpectrum polariton_spectrum(const OperatorMatrix& h_eff) {
    Eigen::ComplexEigenSolver<OperatorMatrix> es(h_eff);
    if (es.info() != Eigen::Success) throw NumericalError("polariton_spectrum: eigensolver failed");
    const auto n = h_eff.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double ra = std::abs(ev(a).real()), rb = std::abs(ev(b).real());
        if (ra != rb) return ra > rb;
        if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
        return ev(a).imag() > ev(b).imag();
    });
    PolaritonSpectrum spec;
    spec.eigenvalues.resize(n);
    spec.q_factors.resize(n);
    spec.eigenvectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex z = ev(order[i]);
        spec.eigenvalues(i) = z;
        spec.q_factors(i) = z.imag() == 0.0 ? std::numeric_limits<double>::infinity()
                                              : std::abs(z.real() / (2.0 * z.imag()));
        spec.eigenvectors.col(i) = es.eigenvectors().col(order[i]);
    }
    if (n > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(spec.eigenvectors);
        const auto& s = svd.singularValues();
        spec.eigenvector_condition = s(n - 1) > 0.0 ? s(0) / s(n - 1) : std::numeric_limits<double>::infinity();
        spec.defective = spec.eigenvector_condition > 1e8;
    }
    return spec;
}

std::optional<Eigen::Index> dominant_polariton(const PolaritonSpectrum& spec, const Eigen::VectorXcd& psi,
                                               double omega_floor) {
    if (psi.size() != spec.eigenvectors.rows()) throw DimensionError("dominant_polariton: dimension mismatch");
    const Eigen::VectorXcd c = spec.eigenvectors.colPivHouseholderQr().solve(psi);
    std::optional<Eigen::Index> best;
    double best_weight = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (std::abs(spec.eigenvalues(k).real()) <= omega_floor) continue;
        const double w = std::norm(c(k)) * spec.eigenvectors.col(k).squaredNorm();
        if (w > best_weight * (1.0 + 1e-9)) {
            best_weight = w;
            best = k;
        }
    }
    return best;
}

Trajectory evolve_adiabatic(const AdiabaticGenerator& ad, const DensityMatrix& rho0, std::span<const double> t_grid,
                            double tau_rate, const std::optional<StateVector>& target) {
    const OperatorMatrix& v = ad.dark_basis;
    const Eigen::Index k = ad.dim();
    if (rho0.dim() != v.rows()) throw DimensionError("evolve_adiabatic: state dimension mismatch");
    const OperatorMatrix reduced = v.adjoint() * rho0.matrix() * v;
    const double outside = 1.0 - reduced.trace().real();
    if (std::abs(outside) > 1e-8) throw ConfigError("evolve_adiabatic: initial state is not supported on the DF subspace");
    if (t_grid.empty()) throw ConfigError("evolve_adiabatic: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("evolve_adiabatic: time grid must be strictly increasing");

    int n = 0;
    while ((Eigen::Index{1} << n) < v.rows()) ++n;
    const OperatorMatrix sz = collective_ops(n).s_z;

    Trajectory traj;
    auto& obs = traj.observables;
    Eigen::VectorXcd x = linalg::vec(reduced);
    std::map<double, SuperOperator> props;
    double t_cur = 0.0;
    for (double t : t_grid) {
        const double dt = t - t_cur;
        if (dt > 0.0) {
            auto it = props.find(dt);
            if (it == props.end()) {
                if (props.size() > 8) props.clear();
                it = props.emplace(dt, linalg::expm(ad.generator_matrix * Complex(dt))).first;
            }
            x = it->second * x;
        }
        t_cur = t;
        const OperatorMatrix rk = linalg::unvec(x, k);
        const OperatorMatrix rho = v * rk * v.adjoint();
        traj.times.push_back(t);
        if (tau_rate > 0.0) traj.tau.push_back(tau_rate * t);
        obs["Sz"].push_back(expectation(rho, sz).real());
        obs["df_pop"].push_back(rk.trace().real());
        obs["purity"].push_back(purity(rho));
        obs["trace_err"].push_back(std::abs(rho.trace() - 1.0));
        if (target) obs["fidelity"].push_back(fidelity_pure(rho, *target));
        const auto diag = diagnose(rho);
        obs["herm_err"].push_back(diag.hermiticity_error);
        obs["min_eig"].push_back(diag.min_eigenvalue);
        traj.states.push_back(rho);
    }
    traj.final_state = traj.states.back();
    return traj;
}

} // namespace nlwqed

#include "nlwqed/core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace nlwqed {

std::string to_string(Scheme scheme) {
    switch (scheme) {
    case Scheme::SqueezingAccumulation: return "SA";
    case Scheme::ReservoirEngineering: return "RE";
    case Scheme::General: return "General";
    }
    return "General";
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "SA") return Scheme::SqueezingAccumulation;
    if (name == "RE") return Scheme::ReservoirEngineering;
    if (name == "General" || name == "general") return Scheme::General;
    throw ConfigError("unknown scheme '" + name + "' (expected SA, RE or General)");
}

double wrap_angle(double theta) {
    double w = std::fmod(theta, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    if (w >= 2.0 * kPi) w = 0.0;
    return w;
}

bool is_bragg_phase(double phi, double tol) {
    const double turns = phi / (2.0 * kPi);
    return std::abs(turns - std::round(turns)) * 2.0 * kPi <= tol;
}

double SystemConfig::delta_r() const {
    if (n_atoms < 2) throw ConfigError("delta_r is undefined for a single atom");
    return r_total / static_cast<double>(n_atoms - 1);
}

double SystemConfig::gamma_loss() const {
    if (!(beta > 0.0) || beta > 1.0) throw ConfigError("beta must lie in (0, 1]");
    return gamma * (1.0 - beta) / beta;
}

double SystemConfig::r_right(int j) const {
    if (n_atoms == 1) return r_bar;
    return r_bar + (j - 1) * delta_r();
}

double SystemConfig::r_left(int j) const {
    if (n_atoms == 1) return r_bar;
    return r_bar + (n_atoms - j) * delta_r();
}

SystemConfig SystemConfig::with_r(double r) const {
    SystemConfig c = *this;
    c.r_total = r;
    return c;
}

void SystemConfig::validate() const {
    if (n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
    if (n_atoms > kMaxHilbertAtoms)
        throw ConfigError("n_atoms exceeds the dense cap of " + std::to_string(kMaxHilbertAtoms));
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be > 0");
    if (!(beta > 0.0) || beta > 1.0) throw ConfigError("beta must lie in (0, 1]");
    if (!(r_total >= 0.0) || !std::isfinite(r_total)) throw ConfigError("r_total must be >= 0");
    if (!(r_bar >= 0.0) || !std::isfinite(r_bar)) throw ConfigError("r_bar must be >= 0");
    if (!std::isfinite(phi) || !std::isfinite(theta_left) || !std::isfinite(theta_right))
        throw ConfigError("phases must be finite");
    if (n_atoms == 1 && r_total != 0.0)
        throw ConfigError("a single atom has no inter-atom squeezing (r_total must be 0)");
    if (scheme == Scheme::SqueezingAccumulation && r_bar != 0.0)
        throw ConfigError("scheme SA requires r_bar = 0");
    if (scheme == Scheme::ReservoirEngineering && r_total != 0.0)
        throw ConfigError("scheme RE requires r_total = 0");
    for (const auto& seg : drive_schedule) {
        if (!(seg.duration > 0.0) || !std::isfinite(seg.duration))
            throw ConfigError("drive segment durations must be > 0");
        if (!(seg.r >= 0.0) || !std::isfinite(seg.r))
            throw ConfigError("drive segment r must be >= 0");
        if (scheme == Scheme::ReservoirEngineering && seg.r != 0.0)
            throw ConfigError("scheme RE requires every drive segment to have r = 0");
    }
}

int hilbert_dim(int n_atoms) { return 1 << n_atoms; }

void check_atom_count(int n_atoms, int cap) {
    if (n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
    if (n_atoms > cap)
        throw ConfigError("n_atoms = " + std::to_string(n_atoms) + " exceeds the cap of " +
                          std::to_string(cap));
}

namespace {

// Bit of atom j (1-based) in the computational index; 0 = |e>, 1 = |g>.
inline std::size_t site_mask(int n_atoms, int j) { return std::size_t{1} << (n_atoms - j); }

} // namespace

OperatorMatrix local_operator(int n_atoms, int j, SiteOp kind) {
    check_atom_count(n_atoms);
    if (j < 1 || j > n_atoms)
        throw ConfigError("atom index " + std::to_string(j) + " out of range 1.." +
                          std::to_string(n_atoms));
    const int dim = hilbert_dim(n_atoms);
    const std::size_t mask = site_mask(n_atoms, j);
    OperatorMatrix op = OperatorMatrix::Zero(dim, dim);
    for (int col = 0; col < dim; ++col) {
        const bool ground = (static_cast<std::size_t>(col) & mask) != 0;
        switch (kind) {
        case SiteOp::Lower:
            if (!ground) op(static_cast<Eigen::Index>(col | mask), col) = 1.0;
            break;
        case SiteOp::Raise:
            if (ground) op(static_cast<Eigen::Index>(col & ~mask), col) = 1.0;
            break;
        case SiteOp::Z:
            op(col, col) = ground ? -0.5 : 0.5;
            break;
        }
    }
    return op;
}

CollectiveOps collective_ops(int n_atoms) {
    check_atom_count(n_atoms);
    const int dim = hilbert_dim(n_atoms);
    CollectiveOps ops;
    ops.s_plus = OperatorMatrix::Zero(dim, dim);
    ops.s_minus = OperatorMatrix::Zero(dim, dim);
    ops.s_z = OperatorMatrix::Zero(dim, dim);
    for (int j = 1; j <= n_atoms; ++j) {
        ops.s_plus += local_operator(n_atoms, j, SiteOp::Raise);
        ops.s_minus += local_operator(n_atoms, j, SiteOp::Lower);
        ops.s_z += local_operator(n_atoms, j, SiteOp::Z);
    }
    ops.s_squared = ops.s_z * ops.s_z + 0.5 * (ops.s_plus * ops.s_minus + ops.s_minus * ops.s_plus);
    return ops;
}

OperatorMatrix weighted_collective(int n_atoms, Direction direction, SiteOp kind) {
    check_atom_count(n_atoms);
    if (n_atoms < 2) throw ConfigError("weighted collective operators need N >= 2");
    if (kind == SiteOp::Z) throw ConfigError("weighted collective operators are raise/lower only");
    const int dim = hilbert_dim(n_atoms);
    OperatorMatrix op = OperatorMatrix::Zero(dim, dim);
    const double denom = n_atoms - 1;
    for (int j = 1; j <= n_atoms; ++j) {
        const double w = direction == Direction::Right ? (j - 1) / denom : (n_atoms - j) / denom;
        if (w != 0.0) op += w * local_operator(n_atoms, j, kind);
    }
    return op;
}

OperatorMatrix permutation_operator(int n_atoms, std::span<const int> perm) {
    check_atom_count(n_atoms);
    if (static_cast<int>(perm.size()) != n_atoms)
        throw ConfigError("permutation length must equal n_atoms");
    std::vector<int> seen(n_atoms, 0);
    for (int p : perm) {
        if (p < 1 || p > n_atoms || seen[p - 1]++)
            throw ConfigError("invalid permutation");
    }
    const int dim = hilbert_dim(n_atoms);
    OperatorMatrix op = OperatorMatrix::Zero(dim, dim);
    for (int col = 0; col < dim; ++col) {
        std::size_t row = 0;
        for (int j = 1; j <= n_atoms; ++j) {
            if (static_cast<std::size_t>(col) & site_mask(n_atoms, j))
                row |= site_mask(n_atoms, perm[j - 1]);
        }
        op(static_cast<Eigen::Index>(row), col) = 1.0;
    }
    return op;
}

StateVector basis_vector(int n_atoms, std::size_t index) {
    check_atom_count(n_atoms);
    const int dim = hilbert_dim(n_atoms);
    if (index >= static_cast<std::size_t>(dim)) throw DimensionError("basis index out of range");
    StateVector v = StateVector::Zero(dim);
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return v;
}

StateVector ground_vector(int n_atoms) {
    return basis_vector(n_atoms, static_cast<std::size_t>(hilbert_dim(n_atoms) - 1));
}

double hermiticity_error(const OperatorMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("hermiticity check needs a square matrix");
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

StateDiagnostics diagnose(const OperatorMatrix& rho) {
    StateDiagnostics d;
    d.trace_error = std::abs(rho.trace() - 1.0);
    d.hermiticity_error = hermiticity_error(rho);
    const OperatorMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

bool diagnostics_ok(const StateDiagnostics& d) {
    return d.trace_error <= DensityMatrix::kTraceTol &&
           d.hermiticity_error <= DensityMatrix::kHermiticityTol &&
           d.min_eigenvalue >= DensityMatrix::kPositivityTol;
}

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

DensityMatrix::DensityMatrix(OperatorMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || !is_power_of_two(rho_.rows()) || rho_.rows() < 2)
        throw DimensionError("density matrix must be square with a power-of-two dimension");
    const auto d = diagnose(rho_);
    if (!diagnostics_ok(d))
        throw NumericalError("invalid density matrix: trace error " + std::to_string(d.trace_error) +
                             ", hermiticity error " + std::to_string(d.hermiticity_error) +
                             ", min eigenvalue " + std::to_string(d.min_eigenvalue));
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
    const double norm = psi.norm();
    if (!(norm > 0.0)) throw NumericalError("cannot build a pure state from a zero vector");
    const StateVector v = psi / norm;
    return DensityMatrix(v * v.adjoint());
}

int DensityMatrix::n_atoms() const {
    int n = 0;
    for (Eigen::Index d = rho_.rows(); d > 1; d >>= 1) ++n;
    return n;
}

DensityMatrix ground_state(int n_atoms) { return DensityMatrix::pure(ground_vector(n_atoms)); }

} // namespace nlwqed

#include "nlwqed/lindblad.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nlwqed/io.hpp"
#include "nlwqed/linalg.hpp"

namespace nlwqed {

namespace {

OperatorMatrix effective_nonhermitian(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
    OperatorMatrix heff = h;
    for (const auto& l : jumps) heff.noalias() -= 0.5 * kI * (l.adjoint() * l);
    return heff;
}

void require_square(const OperatorMatrix& m, Eigen::Index dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) throw DimensionError(std::string(what) + ": dimension mismatch");
}

} // namespace

OperatorMatrix apply_generator(const LindbladGenerator& gen, const OperatorMatrix& rho) {
    const Eigen::Index d = gen.dim();
    require_square(rho, d, "apply_generator");
    for (const auto& l : gen.jumps) require_square(l, d, "apply_generator");

    const OperatorMatrix heff = effective_nonhermitian(gen.hamiltonian, gen.jumps);
    OperatorMatrix out = -kI * (heff * rho) + kI * (rho * heff.adjoint());
    for (const auto& l : gen.jumps) out.noalias() += l * rho * l.adjoint();
    return out;
}

SuperOperator liouvillian_from(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
    const Eigen::Index d = h.rows();
    for (const auto& l : jumps) require_square(l, d, "liouvillian");
    const OperatorMatrix heff = effective_nonhermitian(h, jumps);
    const OperatorMatrix heff_conj = heff.conjugate();

    // vec(Heff rho) = (I kron Heff) vec rho, vec(rho Heff^dag) = (conj(Heff) kron I) vec rho,
    // vec(L rho L^dag) = (conj(L) kron L) vec rho.
    SuperOperator out = SuperOperator::Zero(d * d, d * d);
    for (Eigen::Index b = 0; b < d; ++b) out.block(b * d, b * d, d, d) = -kI * heff;
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) {
            const Complex c = heff_conj(a, b);
            if (c == Complex{}) continue;
            for (Eigen::Index k = 0; k < d; ++k) out(a * d + k, b * d + k) += kI * c;
        }
    for (const auto& l : jumps) {
        const OperatorMatrix lc = l.conjugate();
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                const Complex c = lc(a, b);
                if (c == Complex{}) continue;
                out.block(a * d, b * d, d, d) += c * l;
            }
    }
    return out;
}

SuperOperator liouvillian_matrix(const LindbladGenerator& gen) {
    const Eigen::Index d = gen.dim();
    int n = 0;
    while ((Eigen::Index{1} << n) < d) ++n;
    check_atom_count(n, kMaxLiouvilleAtoms);
    return liouvillian_from(gen.hamiltonian, gen.jumps);
}

LiouvilleEvaluator::LiouvilleEvaluator(const LindbladGenerator& gen) : dim_(gen.dim()) {
    const OperatorMatrix heff = effective_nonhermitian(gen.hamiltonian, gen.jumps);
    heff_adj_ = OperatorMatrix(heff.adjoint()).sparseView(1.0, 1e-300);
    for (const auto& l : gen.jumps) {
        require_square(l, dim_, "LiouvilleEvaluator");
        jumps_adj_.push_back(OperatorMatrix(l.adjoint()).sparseView(1.0, 1e-300));
    }
}

namespace {

// out += x * b for sparse b.
void add_right_product(const OperatorMatrix& x, const Eigen::SparseMatrix<Complex>& b, OperatorMatrix& out) {
    for (Eigen::Index j = 0; j < b.outerSize(); ++j)
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(b, j); it; ++it)
            out.col(j).noalias() += it.value() * x.col(it.row());
}

} // namespace

// Not thread-safe: scratch buffers are reused between calls.
void LiouvilleEvaluator::apply(const OperatorMatrix& rho, OperatorMatrix& out) const {
    const Eigen::Index d = dim_;
    if (rho.rows() != d || rho.cols() != d) throw DimensionError("LiouvilleEvaluator: dimension mismatch");
    auto& a = work_a_;
    auto& b = work_b_;
    auto& c = work_c_;
    out.setZero(d, d);
    add_right_product(rho, heff_adj_, out);
    out *= kI;
    a = rho.adjoint();
    b.setZero(d, d);
    add_right_product(a, heff_adj_, b);
    out.noalias() -= kI * b.adjoint();
    for (const auto& ladj : jumps_adj_) {
        b.setZero(d, d);
        add_right_product(rho, ladj, b);
        a = b.adjoint();
        c.setZero(d, d);
        add_right_product(a, ladj, c);
        out.noalias() += c.adjoint();
    }
}

Complex expectation(const OperatorMatrix& rho, const OperatorMatrix& op) {
    if (rho.rows() != op.cols() || rho.cols() != op.rows()) throw DimensionError("expectation: dimension mismatch");
    // Tr(O rho) without forming the product.
    return (op.transpose().cwiseProduct(rho)).sum();
}

double purity(const OperatorMatrix& rho) { return rho.cwiseAbs2().sum(); }

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) throw DimensionError("fidelity: dimension mismatch");
    // Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the nuclear norm of sqrt(rho) sqrt(sigma).
    const OperatorMatrix m = linalg::sqrtm_psd(rho.matrix()) * linalg::sqrtm_psd(sigma.matrix());
    const double tr = Eigen::JacobiSVD<OperatorMatrix>(m).singularValues().sum();
    return std::clamp(tr * tr, 0.0, 1.0);
}

double fidelity_pure(const OperatorMatrix& rho, const StateVector& psi) {
    if (rho.rows() != psi.size()) throw DimensionError("fidelity: dimension mismatch");
    return std::clamp(psi.dot(rho * psi).real(), 0.0, 1.0);
}

SteadyState steady_state(const LindbladGenerator& gen, const std::optional<OperatorMatrix>& reference) {
    const Eigen::Index d = gen.dim();
    const SuperOperator l = liouvillian_matrix(gen);
    Eigen::BDCSVD<SuperOperator> svd(l, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = 1e-10 * std::max(s(0), 1.0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff) ++rank;
    const Eigen::Index kdim = l.cols() - rank;
    if (kdim == 0) throw NumericalError("steady_state: Liouvillian has an empty kernel");
    const Eigen::MatrixXcd kernel = svd.matrixV().rightCols(kdim);

    const OperatorMatrix ref = reference ? *reference : ground_state(static_cast<int>(std::log2(d))).matrix();
    require_square(ref, d, "steady_state");
    Eigen::VectorXcd x = kernel * (kernel.adjoint() * linalg::vec(ref));
    OperatorMatrix rho = linalg::unvec(x, d);
    // A traceless projection carries no population; fall back to the first
    // kernel element with nonzero trace.
    for (Eigen::Index k = 0; std::abs(rho.trace()) < 1e-12 && k < kdim; ++k)
        rho = linalg::unvec(kernel.col(k), d);
    if (std::abs(rho.trace()) < 1e-12) throw NumericalError("steady_state: kernel contains no trace-carrying state");
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    return SteadyState{DensityMatrix(rho), static_cast<int>(kdim)};
}

const std::vector<double>& Trajectory::series(const std::string& name) const {
    auto it = observables.find(name);
    if (it == observables.end()) throw ConfigError("trajectory has no observable '" + name + "'");
    return it->second;
}

const std::vector<std::string>& trajectory_columns() {
    static const std::vector<std::string> cols{"t", "tau", "Sz", "df_pop", "fidelity", "purity", "trace_err"};
    return cols;
}

CsvTable trajectory_table(const Trajectory& traj) {
    std::vector<const std::vector<double>*> columns;
    CsvTable table;
    for (const auto& name : trajectory_columns()) {
        const std::vector<double>* col = nullptr;
        if (name == "t") col = &traj.times;
        else if (name == "tau") col = traj.tau.empty() ? nullptr : &traj.tau;
        else if (traj.has(name)) col = &traj.observables.at(name);
        if (!col) continue;
        table.header.push_back(name);
        columns.push_back(col);
    }
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<std::string> row;
        for (const auto* col : columns) row.push_back(format_double((*col)[i]));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) { write_csv(os, trajectory_table(traj)); }

} // namespace nlwqed

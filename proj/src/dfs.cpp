#include "nlwqed/dfs.hpp"

#include <cmath>
#include <bit>
#include <map>
#include <mutex>

#include "nlwqed/io.hpp"
#include "nlwqed/linalg.hpp"

namespace nlwqed {

namespace {

long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

int excitations(std::size_t index, int n) {
    // Bit value 0 marks an excited site.
    return n - std::popcount(index);
}

std::vector<std::size_t> sector_indices(int n, int n_exc) {
    std::vector<std::size_t> idx;
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t k = 0; k < dim; ++k)
        if (excitations(k, n) == n_exc) idx.push_back(k);
    return idx;
}

// Kernel of S- restricted to the n_exc sector, orthonormalized by Gram-Schmidt
// over the sector's basis vectors in index order.
OperatorMatrix sector_kernel(int n, int n_exc, const OperatorMatrix& s_minus) {
    const auto cols = sector_indices(n, n_exc);
    const auto rows = sector_indices(n, n_exc - 1);
    const auto nc = static_cast<Eigen::Index>(cols.size());
    OperatorMatrix block(static_cast<Eigen::Index>(rows.size()), nc);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) block(r, c) = s_minus(rows[r], cols[c]);
    const OperatorMatrix kernel = rows.empty() ? OperatorMatrix::Identity(nc, nc) : linalg::null_space(block);
    const OperatorMatrix proj = kernel * kernel.adjoint();

    OperatorMatrix out(nc, kernel.cols());
    Eigen::Index found = 0;
    for (Eigen::Index k = 0; k < nc && found < kernel.cols(); ++k) {
        Eigen::VectorXcd v = proj.col(k);
        for (Eigen::Index q = 0; q < found; ++q) v -= out.col(q).dot(v) * out.col(q);
        for (Eigen::Index q = 0; q < found; ++q) v -= out.col(q).dot(v) * out.col(q);
        const double nv = v.norm();
        if (nv < 1e-8) continue;
        out.col(found++) = v / nv;
    }
    if (found != kernel.cols()) throw NumericalError("dark-state Gram-Schmidt lost rank");

    OperatorMatrix full = OperatorMatrix::Zero(std::size_t{1} << n, found);
    for (std::size_t c = 0; c < cols.size(); ++c) full.row(cols[c]) = out.row(c);
    return full;
}

} // namespace

int multiplicity(int n_atoms, int two_j) {
    if ((n_atoms - two_j) % 2 != 0 || two_j < 0 || two_j > n_atoms) return 0;
    const int k = (n_atoms - two_j) / 2;
    return static_cast<int>(binomial(n_atoms, k) - binomial(n_atoms, k - 1));
}

int dark_dimension(int n_atoms) {
    int total = 0;
    for (int tj = n_atoms; tj >= 0; tj -= 2) total += multiplicity(n_atoms, tj);
    return total;
}

OperatorMatrix dark_basis(int n_atoms) {
    check_atom_count(n_atoms);
    const OperatorMatrix s_minus = collective_ops(n_atoms).s_minus;
    std::vector<OperatorMatrix> blocks;
    Eigen::Index total = 0;
    for (int ne = 0; 2 * ne <= n_atoms; ++ne) {
        blocks.push_back(sector_kernel(n_atoms, ne, s_minus));
        total += blocks.back().cols();
    }
    OperatorMatrix out(hilbert_dim(n_atoms), total);
    Eigen::Index c = 0;
    for (const auto& b : blocks) {
        out.middleCols(c, b.cols()) = b;
        c += b.cols();
    }
    return out;
}

AngularBasis angular_momentum_basis(int n_atoms) {
    check_atom_count(n_atoms);
    const OperatorMatrix dark = dark_basis(n_atoms);
    const OperatorMatrix s_plus = collective_ops(n_atoms).s_plus;
    AngularBasis basis;
    basis.n_atoms = n_atoms;
    basis.unitary.resize(hilbert_dim(n_atoms), hilbert_dim(n_atoms));

    Eigen::Index col = 0;
    Eigen::Index dark_col = 0;
    for (int ne = 0; 2 * ne <= n_atoms; ++ne) {
        const int two_j = n_atoms - 2 * ne;
        const int mult = multiplicity(n_atoms, two_j);
        for (int alpha = 0; alpha < mult; ++alpha, ++dark_col) {
            Eigen::VectorXcd v = dark.col(dark_col);
            for (int two_m = -two_j; two_m <= two_j; two_m += 2) {
                basis.unitary.col(col++) = v;
                basis.labels.push_back({two_j, two_m, alpha});
                if (two_m == two_j) break;
                const double j = 0.5 * two_j;
                const double m = 0.5 * two_m;
                v = s_plus * v / std::sqrt(j * (j + 1.0) - m * (m + 1.0));
            }
        }
    }
    if (col != basis.unitary.cols()) throw NumericalError("angular-momentum basis is incomplete");
    return basis;
}

namespace {

std::mutex g_cache_mutex;
std::map<int, std::shared_ptr<const DFProjector>> g_projectors;
std::map<int, std::shared_ptr<const AngularBasis>> g_bases;

} // namespace

std::shared_ptr<const DFProjector> df_projector(int n_atoms) {
    {
        std::lock_guard lock(g_cache_mutex);
        auto it = g_projectors.find(n_atoms);
        if (it != g_projectors.end()) return it->second;
    }
    auto p = std::make_shared<DFProjector>();
    p->basis = dark_basis(n_atoms);
    p->projector = p->basis * p->basis.adjoint();
    for (int ne = 0; 2 * ne <= n_atoms; ++ne) {
        const int two_j = n_atoms - 2 * ne;
        for (int a = 0; a < multiplicity(n_atoms, two_j); ++a) p->labels.push_back({two_j, -two_j, a});
    }
    std::lock_guard lock(g_cache_mutex);
    return g_projectors.emplace(n_atoms, std::move(p)).first->second;
}

std::shared_ptr<const AngularBasis> cached_angular_basis(int n_atoms) {
    {
        std::lock_guard lock(g_cache_mutex);
        auto it = g_bases.find(n_atoms);
        if (it != g_bases.end()) return it->second;
    }
    auto b = std::make_shared<const AngularBasis>(angular_momentum_basis(n_atoms));
    std::lock_guard lock(g_cache_mutex);
    return g_bases.emplace(n_atoms, std::move(b)).first->second;
}

Eigen::MatrixXcd df_superprojector(int n_atoms) {
    check_atom_count(n_atoms, kMaxLiouvilleAtoms);
    const auto& p = df_projector(n_atoms)->projector;
    return linalg::sandwich(p, p);
}

Eigen::MatrixXcd df_complement_superprojector(int n_atoms) {
    Eigen::MatrixXcd q = -df_superprojector(n_atoms);
    q.diagonal().array() += 1.0;
    return q;
}

double df_population(const OperatorMatrix& rho, const DFProjector& p) {
    if (rho.rows() != p.projector.rows()) throw DimensionError("df_population: dimension mismatch");
    return (p.projector.transpose().cwiseProduct(rho)).sum().real();
}

OperatorMatrix project_zeno(const OperatorMatrix& h, const DFProjector& p) {
    if (h.rows() != p.projector.rows()) throw DimensionError("project_zeno: dimension mismatch");
    return p.projector * h * p.projector;
}

double BlockCouplingMap::max_cross_j() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < labels.size(); ++a)
        for (std::size_t b = 0; b < labels.size(); ++b)
            if (labels[a].two_j != labels[b].two_j)
                worst = std::max({worst, coherent(a, b), dissipative(a, b)});
    return worst;
}

bool BlockCouplingMap::couples(int two_j_a, int two_j_b, double tol) const {
    for (std::size_t a = 0; a < labels.size(); ++a)
        for (std::size_t b = 0; b < labels.size(); ++b)
            if (labels[a].two_j == two_j_a && labels[b].two_j == two_j_b &&
                (coherent(a, b) > tol || dissipative(a, b) > tol))
                return true;
    return false;
}

BlockCouplingMap block_coupling_map(const LindbladGenerator& gen, const AngularBasis& basis) {
    if (gen.dim() != basis.unitary.rows()) throw DimensionError("block_coupling_map: dimension mismatch");
    std::vector<Eigen::Index> cols;
    BlockCouplingMap map;
    for (std::size_t k = 0; k < basis.labels.size(); ++k)
        if (basis.labels[k].dark()) {
            cols.push_back(static_cast<Eigen::Index>(k));
            map.labels.push_back(basis.labels[k]);
        }
    const auto nd = static_cast<Eigen::Index>(cols.size());
    OperatorMatrix v(basis.unitary.rows(), nd);
    for (Eigen::Index c = 0; c < nd; ++c) v.col(c) = basis.unitary.col(cols[c]);

    map.coherent = (v.adjoint() * gen.hamiltonian * v).cwiseAbs();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nd, nd);
    for (const auto& l : gen.jumps) acc += (v.adjoint() * l * v).cwiseAbs2();
    map.dissipative = acc.cwiseSqrt();
    return map;
}

nlohmann::json basis_to_json(const AngularBasis& basis) {
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t k = 0; k < basis.labels.size(); ++k) {
        const auto& l = basis.labels[k];
        cols.push_back({{"index", k}, {"j", l.j()}, {"m", l.m()}, {"alpha", l.alpha}});
    }
    return {{"n_atoms", basis.n_atoms}, {"columns", cols}, {"unitary", matrix_to_json(basis.unitary)}};
}

} // namespace nlwqed

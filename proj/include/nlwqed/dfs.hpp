#pragma once

// Decoherence-free subspace ker(S-), the total-angular-momentum basis that
// block-diagonalizes the collective operators, projectors and Zeno Hamiltonian.

#include <memory>
#include <vector>

#include "json.hpp"

#include "nlwqed/core.hpp"
#include "nlwqed/generators.hpp"

namespace nlwqed {

// Half-integers are stored doubled: two_j = 2j, two_m = 2m.
struct AngularLabel {
    int two_j = 0;
    int two_m = 0;
    int alpha = 0;

    double j() const { return 0.5 * two_j; }
    double m() const { return 0.5 * two_m; }
    bool dark() const { return two_m == -two_j; }
};

struct AngularBasis {
    OperatorMatrix unitary; // columns |j, m, alpha>
    std::vector<AngularLabel> labels;
    int n_atoms = 0;
};

// Number of independent spin-j irreps among N spin-1/2 sites.
int multiplicity(int n_atoms, int two_j);
// Sum of multiplicities: dim ker S-.
int dark_dimension(int n_atoms);

// Orthonormal basis of ker S-, ordered by excitation number (j descending),
// deterministic within each sector.
OperatorMatrix dark_basis(int n_atoms);

// Columns ordered by j descending, then alpha, then m ascending. Raising
// operators are normalized so alpha labels the same irrep for every m.
AngularBasis angular_momentum_basis(int n_atoms);

struct DFProjector {
    OperatorMatrix projector;        // P
    OperatorMatrix basis;            // orthonormal columns spanning ker S-
    std::vector<AngularLabel> labels; // (j, -j, alpha) for each basis column
};

// Cached per N; safe to share between threads.
std::shared_ptr<const DFProjector> df_projector(int n_atoms);
std::shared_ptr<const AngularBasis> cached_angular_basis(int n_atoms);

// Superoperators rho -> P rho P and rho -> rho - P rho P (N <= 6).
Eigen::MatrixXcd df_superprojector(int n_atoms);
Eigen::MatrixXcd df_complement_superprojector(int n_atoms);

double df_population(const OperatorMatrix& rho, const DFProjector& p);
OperatorMatrix project_zeno(const OperatorMatrix& h, const DFProjector& p);

// Couplings between DF states |j, -j, alpha>. coherent(a, b) = |<a|H|b>|;
// dissipative(a, b) = sqrt(sum_k |<a|L_k|b>|^2).
struct BlockCouplingMap {
    std::vector<AngularLabel> labels;
    Eigen::MatrixXd coherent;
    Eigen::MatrixXd dissipative;

    // Largest coherent plus dissipative entry between different j.
    double max_cross_j() const;
    // True when any DF state with 2j = two_j_a couples to one with 2j = two_j_b.
    bool couples(int two_j_a, int two_j_b, double tol = 1e-12) const;
};

BlockCouplingMap block_coupling_map(const LindbladGenerator& gen, const AngularBasis& basis);

nlohmann::json basis_to_json(const AngularBasis& basis);

} // namespace nlwqed

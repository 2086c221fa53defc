#pragma once

// Adiabatic elimination of the bright (non-decoherence-free) sector in
// Liouville space, recovery of an effective Hamiltonian and jump operators on
// the DF subspace, and the resulting polariton spectrum.

#include <optional>
#include <span>
#include <vector>

#include "nlwqed/core.hpp"
#include "nlwqed/dfs.hpp"
#include "nlwqed/generators.hpp"
#include "nlwqed/lindblad.hpp"

namespace nlwqed {

struct ProjectedBlocks {
    SuperOperator pp, pq, qp, qq;
};

// P L P, P L Q, Q L P, Q L Q with P rho = P rho P and Q = 1 - P.
ProjectedBlocks project_superops(const SuperOperator& l, const OperatorMatrix& projector);

struct EliminationReport {
    Eigen::Index complement_size = 0;
    Eigen::Index complement_rank = 0;
    double max_singular = 0.0;
    double min_kept_singular = 0.0;
};

struct AdiabaticGenerator {
    SuperOperator generator_matrix; // acts on vec of k x k DF-basis matrices
    OperatorMatrix dark_basis;      // 2^N x k embedding V
    OperatorMatrix h_ad;
    std::vector<OperatorMatrix> jumps_ad;
    double dt_extraction = 0.0;
    EliminationReport elimination;

    // Checks of the recovered representation.
    double trace_preservation_error = 0.0; // max |vec(I)^dag L_ad|
    double kraus_closure_error = 0.0;      // max |sum M^dag M - I|
    double regeneration_error = 0.0;       // relative Frobenius mismatch
    std::optional<double> gks_hamiltonian_gap; // |H_kraus - H_gks|_max

    Eigen::Index dim() const { return dark_basis.cols(); }
};

// L_ad = W^dag L W - (W^dag L B)(B^dag L B)^+ (B^dag L W) where W spans the
// vectorized DF block and B its complement, expressed in the dark basis V.
SuperOperator eliminate(const LindbladGenerator& gen, const OperatorMatrix& dark, EliminationReport* report = nullptr);

struct KrausSet {
    std::vector<OperatorMatrix> ops; // ops[0] is the no-jump operator M_0
    double dt = 0.0;
    double min_choi_eigenvalue = 0.0;
    int halvings = 0;
};

// Kraus operators of exp(L dt) from the Choi-matrix eigendecomposition. dt <= 0
// selects 1e-3 / max(1, |L|_1). Halves dt (up to 10 times) while the Choi
// matrix has an eigenvalue below -1e-8.
KrausSet kraus_extract(const SuperOperator& l, double dt = 0.0);

struct RecoveredGenerator {
    OperatorMatrix hamiltonian;
    std::vector<OperatorMatrix> jumps;
};

// M_0 = I - (i H + sum L^dag L / 2) dt, M_i = L_i sqrt(dt); H made traceless.
RecoveredGenerator recover_hl(const KrausSet& kraus);

// Kraus recovery at dt and dt/2 combined to cancel the O(dt) bias of the
// finite-step reading (Hamiltonian and sum_i |L_i>><<L_i| are extrapolated).
RecoveredGenerator recover_extrapolated(const SuperOperator& l, double dt = 0.0, KrausSet* first = nullptr);

// Exact canonical (GKS) decomposition of a Lindblad generator matrix.
RecoveredGenerator gks_decompose(const SuperOperator& l, Eigen::Index dim);

struct AdiabaticOptions {
    double dt = 0.0;
    bool gks_cross_check = true;
};

AdiabaticGenerator adiabatic_generator(const LindbladGenerator& gen, const DFProjector& df,
                                       const AdiabaticOptions& options = {});

OperatorMatrix effective_hamiltonian(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps);

struct PolaritonSpectrum {
    Eigen::VectorXcd eigenvalues; // Omega_p + i Gamma_p, sorted by |Omega_p| descending
    Eigen::VectorXd q_factors;    // |Omega_p / (2 Gamma_p)|
    Eigen::MatrixXcd eigenvectors;
    double eigenvector_condition = 1.0;
    bool defective = false; // condition number above 1e8

    // Largest Q among eigenvalues with |Omega_p| above omega_floor.
    double q_max(double omega_floor) const;
};

PolaritonSpectrum polariton_spectrum(const OperatorMatrix& h_eff);

// Index of the polariton with |Omega_p| > omega_floor carrying the largest
// weight |c_k|^2 |v_k|^2 in the eigen-expansion of psi (a DF-basis vector).
// The population of psi then oscillates at 2 |Omega_p|.
std::optional<Eigen::Index> dominant_polariton(const PolaritonSpectrum& spec, const Eigen::VectorXcd& psi,
                                               double omega_floor);

// Integrates the eliminated generator from the DF part of rho0 and maps the
// states back to the full space for observables. tau = tau_rate * t is
// recorded when tau_rate > 0.
Trajectory evolve_adiabatic(const AdiabaticGenerator& ad, const DensityMatrix& rho0, std::span<const double> t_grid,
                            double tau_rate = 0.0, const std::optional<StateVector>& target = std::nullopt);

// Relative Frobenius distance between the Liouvillian of (h, jumps) and l.
double regeneration_error(const SuperOperator& l, const OperatorMatrix& h, std::span<const OperatorMatrix> jumps);

} // namespace nlwqed

#pragma once

// Fundamental types and operator algebra for a chain of two-level atoms.
//
// Basis convention: atom 1 is the most-significant tensor factor, and each
// site is ordered (|e>, |g>). The computational index of a basis state is the
// binary number whose bit for atom j (weight 2^(N-j)) is 0 for |e> and 1 for
// |g>, so |g...g> is the last basis vector. sigma_z has eigenvalues +-1/2.

#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlwqed/errors.hpp"

namespace nlwqed {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

// Dense Hilbert-space operators are capped at 4096 x 4096, explicit
// superoperators at 4096 x 4096 (N = 6).
inline constexpr int kMaxHilbertAtoms = 12;
inline constexpr int kMaxLiouvilleAtoms = 6;

enum class SiteOp { Raise, Lower, Z };
enum class Direction { Right, Left };

enum class Scheme {
    SqueezingAccumulation, // r_bar = 0, squeezing builds up between atoms
    ReservoirEngineering,  // delta_r = 0, squeezed vacuum input only
    General,
};

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct DriveSegment {
    double duration = 0.0; // units of 1/gamma
    double r = 0.0;        // total accumulated squeeze parameter in this segment
};

struct SystemConfig {
    int n_atoms = 4;
    double gamma = 1.0;
    double beta = 1.0;
    double r_total = 0.0;
    double r_bar = 0.0;
    double theta_right = 1.5 * kPi; // -pi/2 wrapped into [0, 2pi)
    double theta_left = 1.5 * kPi;
    double phi = 2.0 * kPi;
    Scheme scheme = Scheme::SqueezingAccumulation;
    std::vector<DriveSegment> drive_schedule;

    // r / (N - 1). Throws for N = 1, where no inter-atom segment exists.
    double delta_r() const;
    // External (non-waveguide) decay rate gamma (1 - beta) / beta.
    double gamma_loss() const;
    // Accumulated squeezing up to atom j (1-based) for each propagation direction.
    double r_right(int j) const;
    double r_left(int j) const;

    // Same system with a different total squeeze parameter.
    SystemConfig with_r(double r) const;

    // Throws ConfigError on any violated invariant.
    void validate() const;
};

// Wraps an angle into [0, 2pi).
double wrap_angle(double theta);
// True when phi is a multiple of 2pi to within tol.
bool is_bragg_phase(double phi, double tol = 1e-12);

int hilbert_dim(int n_atoms);
void check_atom_count(int n_atoms, int cap = kMaxHilbertAtoms);

// I x ... x sigma x ... x I with the single-site operator at slot j (1-based).
OperatorMatrix local_operator(int n_atoms, int j, SiteOp kind);

struct CollectiveOps {
    OperatorMatrix s_plus;
    OperatorMatrix s_minus;
    OperatorMatrix s_z;
    OperatorMatrix s_squared;
};

CollectiveOps collective_ops(int n_atoms);

// J^right = sum_j (j-1)/(N-1) sigma_j, J^left = sum_j (N-j)/(N-1) sigma_j.
OperatorMatrix weighted_collective(int n_atoms, Direction direction, SiteOp kind);

// Unitary that relabels atoms: atom j is moved to slot perm[j-1] (1-based).
OperatorMatrix permutation_operator(int n_atoms, std::span<const int> perm);

StateVector ground_vector(int n_atoms);
StateVector basis_vector(int n_atoms, std::size_t index);

struct StateDiagnostics {
    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
};

// Validated density matrix: Hermitian to 1e-10, unit trace to 1e-9 and
// min eigenvalue >= -1e-8.
class DensityMatrix {
public:
    static constexpr double kHermiticityTol = 1e-10;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kPositivityTol = -1e-8;

    explicit DensityMatrix(OperatorMatrix rho);

    static DensityMatrix pure(const StateVector& psi);

    const OperatorMatrix& matrix() const { return rho_; }
    Eigen::Index dim() const { return rho_.rows(); }
    int n_atoms() const;

private:
    OperatorMatrix rho_;
};

StateDiagnostics diagnose(const OperatorMatrix& rho);
bool diagnostics_ok(const StateDiagnostics& d);

DensityMatrix ground_state(int n_atoms);

double hermiticity_error(const OperatorMatrix& m);

} // namespace nlwqed

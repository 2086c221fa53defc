#pragma once

// Dense linear-algebra helpers shared by the Liouville-space modules.
// Vectorization is column-stacking throughout: vec(A X B) = (B^T kron A) vec(X).

#include <functional>

#include <Eigen/Dense>

#include "nlwqed/core.hpp"

namespace nlwqed::linalg {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows);

Matrix kron(const Matrix& a, const Matrix& b);

// Superoperator matrices for X -> A X and X -> X B.
Matrix left_multiplication(const Matrix& a);
Matrix right_multiplication(const Matrix& b);
// X -> A X B.
Matrix sandwich(const Matrix& a, const Matrix& b);

// Orthonormal basis of ker(A) from the SVD; singular values below
// rel_tol * sigma_max count as zero.
Matrix null_space(const Matrix& a, double rel_tol = 1e-10);

// Orthonormal basis for the orthogonal complement of span(columns of q),
// assuming q already has orthonormal columns.
Matrix orthogonal_complement(const Matrix& q);

Matrix expm(const Matrix& a);

// Principal square root of a Hermitian positive-semidefinite matrix. Eigenvalues
// at or below the rounding floor n eps |a| are treated as zero.
Matrix sqrtm_psd(const Matrix& a);

double spectral_norm(const Matrix& a);
double frobenius_norm(const Matrix& a);

// Largest eigenvalue modulus without forming eigenvectors.
double spectral_radius(const Matrix& a);

// Phase e^{i chi} maximizing Re Tr(a^dagger e^{i chi} b); returns e^{i chi} b.
Matrix align_global_phase(const Matrix& reference, const Matrix& b);

// Result of a pseudo-inverse solve: x plus the numerical rank found. The
// singular-value fields are the first and last kept diagonal magnitudes of the
// pivoted triangular factor, which bracket the true values to within a factor
// of order sqrt(size).
struct PinvSolve {
    Matrix x;
    Eigen::Index rank = 0;
    Eigen::Index size = 0;
    double max_singular = 0.0;
    double min_kept_singular = 0.0;
};

// x = A^+ b with cutoff rel_tol * sigma_max (complete orthogonal decomposition).
PinvSolve pinv_solve(const Matrix& a, const Matrix& b, double rel_tol = 1e-10);

// Krylov (Arnoldi) approximation of exp(t A) v for a matrix-free operator A.
struct KrylovOptions {
    int subspace = 30;
    double tolerance = 1e-11;
    // Step size to try first; <= 0 estimates one from the projected operator.
    double initial_step = 0.0;
};

struct KrylovStats {
    long applications = 0;
    long substeps = 0;
    // Step the error controller would take next (reusable as initial_step).
    double next_step = 0.0;
};

using LinearMap = std::function<void(const Vector& in, Vector& out)>;

Vector expmv(const LinearMap& apply, const Vector& v, double t, const KrylovOptions& opts = {},
             KrylovStats* stats = nullptr);

} // namespace nlwqed::linalg

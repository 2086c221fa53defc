#include "nlwqed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace nlwqed::linalg {

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows) {
    if (rows <= 0 || v.size() % rows != 0) throw DimensionError("unvec: incompatible size");
    return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

Matrix left_multiplication(const Matrix& a) {
    return kron(Matrix::Identity(a.rows(), a.cols()), a);
}

Matrix right_multiplication(const Matrix& b) {
    return kron(b.transpose(), Matrix::Identity(b.rows(), b.cols()));
}

Matrix sandwich(const Matrix& a, const Matrix& b) { return kron(b.transpose(), a); }

Matrix null_space(const Matrix& a, double rel_tol) {
    const Eigen::Index n = a.cols();
    if (n == 0) return Matrix(0, 0);
    if (a.rows() == 0) return Matrix::Identity(n, n);
    // Pad with zero rows so the full V factor is available for wide inputs.
    Matrix padded = Matrix::Zero(std::max(a.rows(), n), n);
    padded.topRows(a.rows()) = a;
    Eigen::JacobiSVD<Matrix> svd(padded, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double cutoff = rel_tol * smax;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && smax > 0.0) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

Matrix orthogonal_complement(const Matrix& q) {
    const Eigen::Index n = q.rows();
    // Full QR of q: the trailing columns of Q span the complement.
    Eigen::HouseholderQR<Matrix> qr(q);
    Matrix full = qr.householderQ() * Matrix::Identity(n, n);
    return full.rightCols(n - q.cols());
}

Matrix expm(const Matrix& a) { return a.exp(); }

Matrix sqrtm_psd(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
    const double top = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    const double floor = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * top;
    Eigen::VectorXd ev = es.eigenvalues().unaryExpr([floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double frobenius_norm(const Matrix& a) { return a.norm(); }

double spectral_radius(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::ComplexEigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix align_global_phase(const Matrix& reference, const Matrix& b) {
    const Complex overlap = (reference.adjoint() * b).trace();
    if (std::abs(overlap) == 0.0) return b;
    return b * (std::conj(overlap) / std::abs(overlap));
}

PinvSolve pinv_solve(const Matrix& a, const Matrix& b, double rel_tol) {
    if (a.rows() != b.rows()) throw DimensionError("pinv_solve: row mismatch");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    // Column-pivoted QR magnitudes track the singular values closely enough to
    // serve as the cutoff reference.
    cod.setThreshold(rel_tol);
    cod.compute(a);
    PinvSolve out;
    out.size = a.cols();
    out.rank = cod.rank();
    const auto& r = cod.matrixQTZ();
    out.max_singular = a.size() ? std::abs(r(0, 0)) : 0.0;
    out.min_kept_singular = out.rank > 0 ? std::abs(r(out.rank - 1, out.rank - 1)) : 0.0;
    out.x = cod.solve(b);
    return out;
}

Vector expmv(const LinearMap& apply, const Vector& v, double t, const KrylovOptions& opts,
             KrylovStats* stats) {
    if (t < 0.0) throw NumericalError("expmv: negative time step");
    const Eigen::Index n = v.size();
    Vector w = v;
    if (t == 0.0 || n == 0) return w;

    const int m_max = std::max(2, std::min<int>(opts.subspace, static_cast<int>(n)));
    const double tol = opts.tolerance;
    const double safety = 1.2;
    const double gamma_fac = 0.9;
    const double delta = 1.2;

    double t_now = 0.0;
    double t_step = opts.initial_step > 0.0 ? opts.initial_step : -1.0;
    Vector av(n);
    Matrix basis(n, m_max + 1);

    while (t_now < t) {
        const double beta = w.norm();
        if (beta == 0.0) break;
        basis.col(0) = w / beta;
        Matrix h = Matrix::Zero(m_max + 2, m_max + 2);
        int m = m_max;
        bool breakdown = false;
        double avnorm = 0.0;
        for (int j = 0; j < m_max; ++j) {
            apply(basis.col(j), av);
            if (stats) ++stats->applications;
            // Classical Gram-Schmidt applied twice keeps the basis orthonormal
            // for the strongly non-normal Liouvillians used here.
            for (int pass = 0; pass < 2; ++pass) {
                const Vector c = basis.leftCols(j + 1).adjoint() * av;
                h.col(j).head(j + 1) += c;
                av.noalias() -= basis.leftCols(j + 1) * c;
            }
            const double s = av.norm();
            if (s <= 1e-14 * beta || s == 0.0) {
                breakdown = true;
                m = j + 1;
                break;
            }
            h(j + 1, j) = s;
            basis.col(j + 1) = av / s;
        }
        if (!breakdown) {
            apply(basis.col(m), av);
            if (stats) ++stats->applications;
            avnorm = av.norm();
        }

        if (t_step < 0.0) {
            // Initial step from the norm of the projected operator.
            const double anorm = std::max(h.topLeftCorner(m, m).cwiseAbs().colwise().sum().maxCoeff(), 1e-300);
            const double xm = 1.0 / m;
            const double fact = std::pow((m + 1) / std::exp(1.0), m + 1) * std::sqrt(2.0 * kPi * (m + 1));
            t_step = (1.0 / anorm) * std::pow((fact * tol) / (4.0 * beta * anorm), xm);
            t_step = std::max(t_step, 1e-12 * t);
        }

        Vector result;
        for (int attempt = 0;; ++attempt) {
            t_step = std::min(t - t_now, t_step);
            const int mx = breakdown ? m : m + 2;
            Matrix hs = h.topLeftCorner(mx, mx);
            if (!breakdown) hs(m + 1, m) = 1.0;
            const Matrix f = expm(t_step * hs);
            double err_loc;
            double xm;
            if (breakdown) {
                err_loc = 0.0;
                xm = 1.0 / m;
            } else {
                const double p1 = std::abs(f(m, 0)) * beta;
                const double p2 = std::abs(f(m + 1, 0)) * beta * avnorm;
                if (p1 > 10.0 * p2) {
                    err_loc = p2;
                    xm = 1.0 / m;
                } else if (p1 > p2) {
                    err_loc = p1 * p2 / (p1 - p2);
                    xm = 1.0 / m;
                } else {
                    err_loc = p1;
                    xm = 1.0 / std::max(1, m - 1);
                }
            }
            if (err_loc <= delta * t_step * tol || attempt >= 50) {
                if (err_loc > delta * t_step * tol)
                    throw NumericalError("expmv: Krylov step failed to converge");
                const int ncols = breakdown ? m : m + 1;
                result = basis.leftCols(ncols) * (beta * f.col(0).head(ncols));
                const double grow = err_loc > 0.0
                                        ? gamma_fac * std::pow(t_step * tol / err_loc, xm)
                                        : 10.0;
                t_now += t_step;
                const double proposed = t_step * std::min(grow, 10.0);
                if (stats) stats->next_step = proposed;
                t_step = std::min(proposed, std::max(t - t_now, 0.0));
                if (t_step <= 0.0) t_step = proposed;
                if (stats) ++stats->substeps;
                break;
            }
            t_step = gamma_fac * t_step * std::pow(t_step * tol / err_loc, xm);
            t_step /= safety;
        }
        w = std::move(result);
    }
    return w;
}

} // namespace nlwqed::linalg

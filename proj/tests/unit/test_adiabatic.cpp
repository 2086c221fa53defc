#include "doctest.h"

#include <algorithm>
#include <random>

#include "nlwqed/adiabatic.hpp"
#include "nlwqed/analysis.hpp"
#include "nlwqed/linalg.hpp"
#include "oracles.hpp"

using namespace nlwqed;

namespace {

SystemConfig sa(int n, double r, double beta = 1.0) {
    SystemConfig c;
    c.n_atoms = n;
    c.r_total = r;
    c.beta = beta;
    return c;
}

AdiabaticGenerator eliminate_sa(int n, double r, double beta = 1.0) {
    return adiabatic_generator(build_generator(sa(n, r, beta)), *df_projector(n));
}

PolaritonSpectrum spectrum_of(const AdiabaticGenerator& ad) {
    return polariton_spectrum(effective_hamiltonian(ad.h_ad, ad.jumps_ad));
}

double dominant_omega(const PolaritonSpectrum& s) { return std::abs(s.eigenvalues(0).real()); }

double dominant_gamma(const PolaritonSpectrum& s) { return std::abs(s.eigenvalues(0).imag()); }

} // namespace

TEST_CASE("projected superoperator blocks") {
    const auto gen = build_generator(sa(3, 0.2));
    const auto l = liouvillian_matrix(gen);
    const auto& p = df_projector(3)->projector;
    const auto b = project_superops(l, p);
    CHECK(oracle::max_abs(b.pp + b.pq + b.qp + b.qq - l) < 1e-12);

    const auto dicke = project_superops(liouvillian_matrix(build_generator(sa(3, 0.0))), p);
    CHECK(oracle::max_abs(dicke.qp) < 1e-12);
}

TEST_CASE("reservoir engineering keeps DF blocks within one j") {
    SystemConfig c;
    c.n_atoms = 4;
    c.r_bar = 0.2;
    c.scheme = Scheme::ReservoirEngineering;
    const auto l = liouvillian_matrix(build_generator(c));
    const auto& df = *df_projector(4);
    const auto b = project_superops(l, df.projector);
    // Blocks |a><b| with both states in the j = 1 sector stay there.
    std::vector<Eigen::Index> j1;
    for (std::size_t k = 0; k < df.labels.size(); ++k)
        if (df.labels[k].two_j == 2) j1.push_back(static_cast<Eigen::Index>(k));
    REQUIRE(j1.size() == 3);
    oracle::M sector = oracle::M::Zero(16, 16);
    for (auto k : j1) sector += df.basis.col(k) * df.basis.col(k).adjoint();
    const oracle::M rho = df.basis.col(j1[0]) * df.basis.col(j1[1]).adjoint();
    const oracle::M out = linalg::unvec(b.pp * linalg::vec(rho), 16);
    CHECK(oracle::max_abs(out - sector * out * sector) < 1e-12);
}

TEST_CASE("two and three atoms: purely dissipative eliminated dynamics") {
    for (int n : {2, 3}) {
        const auto ad = eliminate_sa(n, 0.05);
        CHECK(oracle::max_abs(ad.h_ad) < 1e-10);
        const auto s = spectrum_of(ad);
        for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) CHECK(std::abs(s.eigenvalues(i).real()) <= 1e-10);
    }
}

TEST_CASE("eliminated generator: trace preservation, Kraus closure, GKS agreement") {
    const auto ad = eliminate_sa(4, 0.025);
    CHECK(ad.dim() == 6);
    CHECK(ad.elimination.complement_rank == ad.elimination.complement_size);
    CHECK(ad.trace_preservation_error <= 1e-8);
    CHECK(ad.kraus_closure_error <= 1e-8);
    REQUIRE(ad.gks_hamiltonian_gap.has_value());
    CHECK(*ad.gks_hamiltonian_gap < 1e-9);
    const Eigen::RowVectorXcd left =
        linalg::vec(OperatorMatrix::Identity(6, 6)).adjoint() * ad.generator_matrix;
    CHECK(left.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("the Zeno Hamiltonian dominates as r decreases") {
    auto mismatch = [](double r) {
        const auto ad = eliminate_sa(4, r);
        const oracle::M hz = ad.dark_basis.adjoint() * build_generator(sa(4, r)).hamiltonian * ad.dark_basis;
        const SuperOperator zeno = -oracle::I * (linalg::left_multiplication(hz) - linalg::right_multiplication(hz));
        return (ad.generator_matrix - zeno).norm() / ad.generator_matrix.norm();
    };
    const double a = mismatch(0.04), b = mismatch(0.02), c = mismatch(0.01);
    CHECK(b < a);
    CHECK(c < b);
    CHECK(a / b == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("Kraus extraction") {
    const auto zero = kraus_extract(SuperOperator::Zero(4, 4), 1e-3);
    REQUIRE(zero.ops.size() == 1);
    CHECK(oracle::max_abs(zero.ops[0] - OperatorMatrix::Identity(2, 2)) < 1e-12);

    // Two-level decay at rate 0.7 with a phase on the jump.
    const OperatorMatrix jump = std::exp(oracle::I * 0.4) * std::sqrt(0.7) * oracle::lower(1, 1);
    const std::vector<OperatorMatrix> jumps{jump};
    const auto l = liouvillian_from(OperatorMatrix::Zero(2, 2), jumps);
    const auto k = kraus_extract(l, 1e-4);
    CHECK(k.ops.size() >= 2);
    const auto rec = recover_extrapolated(l, 1e-4);
    REQUIRE(rec.jumps.size() >= 1);
    const auto biggest = *std::max_element(rec.jumps.begin(), rec.jumps.end(),
                                           [](const auto& a, const auto& b) { return a.norm() < b.norm(); });
    CHECK(oracle::max_abs(oracle::phase_aligned(jump, biggest) - jump) < 1e-6);

    std::mt19937 rng(51);
    const auto rho = oracle::random_density(2, rng);
    oracle::M sum = oracle::M::Zero(2, 2);
    for (const auto& m : k.ops) sum += m * rho * m.adjoint();
    const oracle::M exact = linalg::unvec(linalg::expm(l * Complex(k.dt)) * linalg::vec(rho), 2);
    CHECK(oracle::max_abs(sum - exact) < 1e-8);
    oracle::M closure = -oracle::M::Identity(2, 2);
    for (const auto& m : k.ops) closure += m.adjoint() * m;
    CHECK(oracle::max_abs(closure) < 1e-8);
}

TEST_CASE("Hamiltonian-only generator recovers H up to its trace") {
    std::mt19937 rng(52);
    const auto h = oracle::random_hermitian(3, rng);
    const auto l = liouvillian_from(h, {});
    const double dt = 1e-4;
    const auto k = kraus_extract(l, dt);
    const auto rec = recover_hl(k);
    for (const auto& j : rec.jumps) CHECK(j.norm() * std::sqrt(k.dt) <= 1e-6);
    const oracle::M traceless = h - (h.trace() / 3.0) * oracle::M::Identity(3, 3);
    CHECK(oracle::max_abs(rec.hamiltonian - traceless) < 1e-8);
    const auto gks = gks_decompose(l, 3);
    CHECK(oracle::max_abs(gks.hamiltonian - traceless) < 1e-10);
    CHECK(regeneration_error(l, rec.hamiltonian, rec.jumps) < 1e-8);
}

TEST_CASE("recovered pair regenerates a Lindblad-form generator") {
    std::mt19937 rng(53);
    const auto h = oracle::random_hermitian(3, rng);
    const std::vector<OperatorMatrix> jumps{0.3 * oracle::random_matrix(3, rng), 0.2 * oracle::random_matrix(3, rng)};
    const auto l = liouvillian_from(h, jumps);
    KrausSet first;
    const auto rec = recover_extrapolated(l, 0.0, &first);
    const double coarse = regeneration_error(l, rec.hamiltonian, rec.jumps);
    CHECK(coarse < 1e-7);
    // The extrapolated reading converges as dt^2.
    const auto fine = recover_extrapolated(l, 0.1 * first.dt);
    const double err = regeneration_error(l, fine.hamiltonian, fine.jumps);
    CHECK(err < 1e-9);
    CHECK(coarse / err > 30.0);
    const auto gks = gks_decompose(l, 3);
    CHECK(regeneration_error(l, gks.hamiltonian, gks.jumps) < 1e-10);
}

TEST_CASE("coherent and dissipative parts scale as r and r^2") {
    std::vector<double> rs{0.0125, 0.025, 0.05}, hn, dn;
    for (double r : rs) {
        const auto ad = eliminate_sa(4, r);
        hn.push_back(linalg::spectral_norm(ad.h_ad));
        double d = 0.0;
        for (const auto& l : ad.jumps_ad) d += linalg::spectral_norm(l.adjoint() * l);
        dn.push_back(d);
    }
    CHECK(analysis::fit_power_law(rs, hn).exponent == doctest::Approx(1.0).epsilon(0.3));
    CHECK(analysis::fit_power_law(rs, dn).exponent == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("effective Hamiltonian") {
    std::mt19937 rng(54);
    const auto h = oracle::random_hermitian(4, rng);
    const auto heff = effective_hamiltonian(h, {});
    CHECK(oracle::max_abs(heff - h) == 0.0);
    const auto s = polariton_spectrum(heff);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(s.eigenvalues(i).imag()) < 1e-12);

    const auto ad = eliminate_sa(4, 0.02);
    const auto he = effective_hamiltonian(ad.h_ad, ad.jumps_ad);
    const oracle::M anti = (he - he.adjoint()) / (2.0 * oracle::I);
    Eigen::SelfAdjointEigenSolver<oracle::M> es(anti);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-10);
}

TEST_CASE("polariton spectrum structure and scaling") {
    std::vector<double> rs{0.005, 0.01, 0.02, 0.05};
    std::vector<double> omega_over_r, q2r;
    for (double r : rs) {
        const auto s = spectrum_of(eliminate_sa(4, r));
        for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) CHECK(s.eigenvalues(i).imag() <= 1e-10);
        // The oscillating doublet is symmetric about zero.
        CHECK(std::abs(s.eigenvalues(0).real() + s.eigenvalues(1).real()) <= 1e-6 * r);
        CHECK(std::abs(s.eigenvalues(0).imag() - s.eigenvalues(1).imag()) <= 1e-6 * r);
        for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i)
            CHECK(std::abs(s.eigenvalues(i - 1).real()) >= std::abs(s.eigenvalues(i).real()));
        omega_over_r.push_back(dominant_omega(s) / r);
        q2r.push_back(s.q_max(1e-6 * r) * 2.0 * r);
        CHECK(s.q_factors(0) == doctest::Approx(dominant_omega(s) / (2.0 * dominant_gamma(s))));
        CHECK_FALSE(s.defective);
    }
    const auto [omin, omax] = std::minmax_element(omega_over_r.begin(), omega_over_r.end());
    CHECK(*omax / *omin <= 1.05);
    const auto [qmin, qmax] = std::minmax_element(q2r.begin(), q2r.end());
    CHECK(*qmax / *qmin <= 2.0);
}

TEST_CASE("external loss degrades Q monotonically") {
    double last = std::numeric_limits<double>::infinity();
    for (double beta : {1.0, 0.99999, 0.9999, 0.999, 0.99}) {
        const double q = spectrum_of(eliminate_sa(4, 0.02, beta)).q_max(1e-6 * 0.02);
        CHECK(q < last);
        last = q;
    }
}

TEST_CASE("dominant polariton of the ground state") {
    for (int n : {4, 5}) {
        const double r = 0.01;
        const auto ad = eliminate_sa(n, r);
        const auto s = spectrum_of(ad);
        const Eigen::VectorXcd psi = ad.dark_basis.adjoint() * ground_vector(n);
        const auto k = dominant_polariton(s, psi, 1e-6 * r);
        REQUIRE(k.has_value());
        CHECK(std::abs(s.eigenvalues(*k).real()) > 1e-6 * r);
    }
    const auto ad = eliminate_sa(4, 0.0);
    const Eigen::VectorXcd psi = ad.dark_basis.adjoint() * ground_vector(4);
    CHECK_FALSE(dominant_polariton(spectrum_of(ad), psi, 1e-9).has_value());
}

TEST_CASE("adiabatic evolution") {
    const auto still = eliminate_sa(4, 0.0);
    const auto grid = uniform_grid(50.0, 11);
    const auto flat = evolve_adiabatic(still, ground_state(4), grid);
    for (double s : flat.series("Sz")) CHECK(s == doctest::Approx(-2.0));

    const auto ad = eliminate_sa(4, 0.05);
    const auto t = uniform_grid(160.0, 81);
    const auto traj = evolve_adiabatic(ad, ground_state(4), t, 0.05);
    for (double e : traj.series("trace_err")) CHECK(e <= 1e-8);
    CHECK(traj.tau.back() == doctest::Approx(8.0));
    CHECK_THROWS_AS(evolve_adiabatic(ad, DensityMatrix::pure(basis_vector(4, 0)), t), ConfigError);
}

TEST_CASE("adiabatic dynamics converges to the exact one as r decreases") {
    auto deviation = [](double r) {
        const auto ad = eliminate_sa(4, r);
        std::vector<double> t;
        for (int i = 0; i <= 160; ++i) t.push_back(i * 0.05 / r);
        const auto exact = evolve(sa(4, r), ground_state(4), t).series("Sz");
        const auto approx = evolve_adiabatic(ad, ground_state(4), t).series("Sz");
        double dev = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) dev = std::max(dev, std::abs(exact[i] - approx[i]));
        return dev;
    };
    const double coarse = deviation(0.05), fine = deviation(0.025);
    CHECK(fine < coarse);
    CHECK(fine < 0.05 * 1.9);
}

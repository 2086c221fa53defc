#include "doctest.h"

#include <random>
#include <vector>

#include "nlwqed/slh.hpp"
#include "oracles.hpp"

using namespace nlwqed;

namespace {

slh::Triple random_triple(Eigen::Index d, std::mt19937& rng) {
    return {oracle::random_matrix(d, rng), oracle::random_hermitian(d, rng)};
}

} // namespace

TEST_CASE("vacuum node is the identity of the series product") {
    std::mt19937 rng(1);
    const auto g = random_triple(4, rng);
    const auto v = slh::Triple::vacuum(4);
    for (const auto& s : {slh::series(g, v), slh::series(v, g)}) {
        CHECK(oracle::max_abs(s.coupling - g.coupling) == 0.0);
        CHECK(oracle::max_abs(s.hamiltonian - g.hamiltonian) < 1e-15);
    }
}

TEST_CASE("series product is associative") {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g1 = random_triple(4, rng), g2 = random_triple(4, rng), g3 = random_triple(4, rng);
        const auto a = slh::series(slh::series(g3, g2), g1);
        const auto b = slh::series(g3, slh::series(g2, g1));
        CHECK(oracle::max_abs(a.coupling - b.coupling) < 1e-12);
        CHECK(oracle::max_abs(a.hamiltonian - b.hamiltonian) < 1e-12);
    }
}

TEST_CASE("series of bare couplings yields the Hermitian cross term") {
    std::mt19937 rng(3);
    const auto up = oracle::random_matrix(4, rng);
    const auto down = oracle::random_matrix(4, rng);
    const auto z = oracle::M::Zero(4, 4);
    const auto s = slh::series({down, z}, {up, z});
    const oracle::M expected = (down.adjoint() * up - up.adjoint() * down) / (2.0 * oracle::I);
    CHECK(oracle::max_abs(s.hamiltonian - expected) < 1e-14);
    CHECK(hermiticity_error(s.hamiltonian) < 1e-14);
}

TEST_CASE("concatenation stacks channels and adds Hamiltonians") {
    std::mt19937 rng(4);
    const auto l = oracle::random_matrix(2, rng);
    const auto m = slh::concatenate({l, oracle::M::Zero(2, 2)}, slh::Triple::vacuum(2));
    REQUIRE(m.couplings.size() == 2);
    CHECK(oracle::max_abs(m.couplings[0] - l) == 0.0);
    CHECK(oracle::max_abs(m.couplings[1]) == 0.0);
    CHECK(oracle::max_abs(m.hamiltonian) == 0.0);
}

TEST_CASE("cascade of one element returns it unchanged") {
    std::mt19937 rng(5);
    const std::vector<slh::Triple> one{random_triple(2, rng)};
    for (auto d : {Direction::Right, Direction::Left}) {
        const auto c = slh::cascade_chain(one, d);
        CHECK(oracle::max_abs(c.coupling - one[0].coupling) == 0.0);
        CHECK(oracle::max_abs(c.hamiltonian - one[0].hamiltonian) == 0.0);
    }
}

TEST_CASE("two atoms without squeezing: exchange Hamiltonian") {
    SystemConfig c;
    c.n_atoms = 2;
    c.phi = 0.7;
    c.scheme = Scheme::General;
    const auto gen = slh::cascaded_generator(c);
    const oracle::M expected =
        std::sin(0.7) * (oracle::raise(2, 1) * oracle::lower(2, 2) + oracle::raise(2, 2) * oracle::lower(2, 1));
    CHECK(oracle::max_abs(gen.hamiltonian - expected) < 1e-14);
    CHECK(gen.jumps.size() == 2);
}

TEST_CASE("two atoms at Bragg spacing: no coherent part, Dicke jumps") {
    SystemConfig c;
    c.n_atoms = 2;
    const auto gen = slh::cascaded_generator(c);
    CHECK(oracle::max_abs(gen.hamiltonian) < 1e-14);
    for (const auto& l : gen.jumps)
        CHECK(oracle::max_abs(oracle::phase_aligned(l, oracle::s_minus(2)) - l) < 1e-14);
}

TEST_CASE("three-atom right chain carries the (1,3) term of the ordered sum") {
    SystemConfig c;
    c.n_atoms = 3;
    c.r_total = 0.4;
    c.phi = 1.1;
    c.theta_right = 0.3;
    c.scheme = Scheme::General;
    const auto atoms = slh::atom_triples(c, Direction::Right);
    const auto chain = slh::cascade_chain(atoms, Direction::Right);
    oracle::M expected = oracle::M::Zero(8, 8);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            expected += (atoms[j].coupling.adjoint() * atoms[i].coupling - atoms[i].coupling.adjoint() * atoms[j].coupling) /
                        (2.0 * oracle::I);
    CHECK(oracle::max_abs(chain.hamiltonian - expected) < 1e-14);
    const oracle::M only_13 =
        (atoms[2].coupling.adjoint() * atoms[0].coupling - atoms[0].coupling.adjoint() * atoms[2].coupling) /
        (2.0 * oracle::I);
    CHECK(oracle::max_abs(only_13) > 0.1);
}

TEST_CASE("mirroring the chain exchanges the directions") {
    SystemConfig c;
    c.n_atoms = 4;
    c.r_total = 0.3;
    c.r_bar = 0.1;
    c.phi = 0.9;
    c.theta_right = c.theta_left = 0.4;
    c.scheme = Scheme::General;
    const std::vector<int> mirror{4, 3, 2, 1};
    const auto p = permutation_operator(4, mirror);
    auto right = slh::atom_triples(c, Direction::Right);
    std::vector<slh::Triple> mirrored;
    for (auto it = right.rbegin(); it != right.rend(); ++it)
        mirrored.push_back({p * it->coupling * p.adjoint(), p * it->hamiltonian * p.adjoint()});
    const auto a = slh::cascade_chain(right, Direction::Right);
    const auto b = slh::cascade_chain(mirrored, Direction::Left);
    CHECK(oracle::max_abs(p * a.coupling * p.adjoint() - b.coupling) < 1e-13);
    CHECK(oracle::max_abs(p * a.hamiltonian * p.adjoint() - b.hamiltonian) < 1e-13);
}

TEST_CASE("cascaded generator equals the closed form on random configurations") {
    std::mt19937 rng(20240611);
    std::uniform_real_distribution<double> u01(0.0, 0.5), uphi(0.0, 2.0 * kPi);
    for (int n = 2; n <= 5; ++n)
        for (int trial = 0; trial < 20; ++trial) {
            SystemConfig c;
            c.n_atoms = n;
            c.scheme = Scheme::General;
            c.r_bar = u01(rng);
            c.r_total = u01(rng) * (n - 1);
            c.phi = uphi(rng);
            c.theta_right = uphi(rng);
            c.theta_left = uphi(rng);
            const auto a = slh::cascaded_generator(c);
            const auto b = build_general(c);
            CHECK(oracle::max_abs(a.hamiltonian - b.hamiltonian) < 1e-10);
            for (int k = 0; k < 2; ++k)
                CHECK(oracle::max_abs(oracle::phase_aligned(b.jumps[k], a.jumps[k]) - b.jumps[k]) < 1e-10);
        }
}

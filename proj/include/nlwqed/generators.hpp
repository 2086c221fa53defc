#pragma once

// Closed-form Hamiltonians and jump operators of the atom chain coupled to a
// waveguide with distributed parametric gain, plus external loss channels.

#include <string>
#include <vector>

#include "nlwqed/core.hpp"

namespace nlwqed {

// Master-equation right-hand side: H plus jump operators. Channel order is
// frozen as [right, left, loss_1 ... loss_N] for stable serialization.
struct LindbladGenerator {
    OperatorMatrix hamiltonian;
    std::vector<OperatorMatrix> jumps;
    std::vector<std::string> labels;

    Eigen::Index dim() const { return hamiltonian.rows(); }
    // Throws DimensionError on mismatched shapes, NumericalError when H is
    // not Hermitian to 1e-12 (relative to its scale).
    void check() const;
};

// Bogoliubov-dressed per-atom coupling operators c_j for both directions.
struct AtomCouplings {
    std::vector<OperatorMatrix> right;
    std::vector<OperatorMatrix> left;
};

AtomCouplings atom_coupling_ops(const SystemConfig& config);

// Arbitrary phi, theta_right, theta_left, r_bar and delta_r.
LindbladGenerator build_general(const SystemConfig& config);
// Wavelength (Bragg) spacing with equal squeezing phases.
LindbladGenerator build_bragg(const SystemConfig& config);
// Reservoir engineering and squeezing accumulation at theta = -pi/2.
LindbladGenerator build_re(const SystemConfig& config);
LindbladGenerator build_sa(const SystemConfig& config);
// First order in r (theta = -pi/2).
LindbladGenerator build_linearized(const SystemConfig& config);
// H - i r (gamma/2) (S+S+ + S-S-) with H from build_linearized.
OperatorMatrix build_nonhermitian_tilde(const SystemConfig& config);

// sqrt(gamma_0) sigma_-,j for every atom; empty when beta = 1.
std::vector<OperatorMatrix> loss_jumps(const SystemConfig& config);

// Waveguide generator for the config (Bragg form when phi is a multiple of 2pi
// and the phases agree, general form otherwise) followed by loss channels.
LindbladGenerator build_generator(const SystemConfig& config);

} // namespace nlwqed

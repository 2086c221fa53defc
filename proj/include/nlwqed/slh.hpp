#pragma once

// SLH composition restricted to scalar scattering S = 1. Used to assemble the
// chain's Hamiltonian and directional jump operators from per-atom triples,
// independently of the closed-form builders in generators.hpp.

#include <span>
#include <vector>

#include "nlwqed/core.hpp"
#include "nlwqed/generators.hpp"

namespace nlwqed::slh {

struct Triple {
    OperatorMatrix coupling;    // L
    OperatorMatrix hamiltonian; // H

    static Triple vacuum(Eigen::Index dim);
};

// Several output channels sharing one Hamiltonian.
struct MultiChannelTriple {
    OperatorMatrix hamiltonian;
    std::vector<OperatorMatrix> couplings;
};

// downstream <| upstream:
//   L = L_up + L_down,  H = H_up + H_down + (L_down^dag L_up - L_up^dag L_down) / 2i.
Triple series(const Triple& downstream, const Triple& upstream);

MultiChannelTriple concatenate(const Triple& a, const Triple& b);

// Right: G_N <| ... <| G_1 (atom 1 upstream). Left: G_1 <| ... <| G_N.
// Folds left in cascade order starting from the most upstream element.
Triple cascade_chain(std::span<const Triple> per_atom, Direction direction);

// Per-atom triples (1, sqrt(gamma) c_j^s, 0) for one direction.
std::vector<Triple> atom_triples(const SystemConfig& config, Direction direction);

// Cascade both directions and concatenate; channels ordered [right, left].
LindbladGenerator cascaded_generator(const SystemConfig& config);

} // namespace nlwqed::slh

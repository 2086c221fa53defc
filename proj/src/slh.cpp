#include "nlwqed/slh.hpp"

#include <cmath>

namespace nlwqed::slh {

namespace {

void require_same_dim(const Triple& a, const Triple& b) {
    if (a.coupling.rows() != b.coupling.rows() || a.hamiltonian.rows() != b.hamiltonian.rows() ||
        a.coupling.rows() != a.hamiltonian.rows())
        throw DimensionError("SLH triples must share one Hilbert-space dimension");
}

} // namespace

Triple Triple::vacuum(Eigen::Index dim) {
    return Triple{OperatorMatrix::Zero(dim, dim), OperatorMatrix::Zero(dim, dim)};
}

Triple series(const Triple& downstream, const Triple& upstream) {
    require_same_dim(downstream, upstream);
    const auto& ld = downstream.coupling;
    const auto& lu = upstream.coupling;
    Triple out;
    out.coupling = lu + ld;
    out.hamiltonian = upstream.hamiltonian + downstream.hamiltonian +
                      (ld.adjoint() * lu - lu.adjoint() * ld) / (2.0 * kI);
    return out;
}

MultiChannelTriple concatenate(const Triple& a, const Triple& b) {
    require_same_dim(a, b);
    return MultiChannelTriple{a.hamiltonian + b.hamiltonian, {a.coupling, b.coupling}};
}

Triple cascade_chain(std::span<const Triple> per_atom, Direction direction) {
    if (per_atom.empty()) throw ConfigError("cascade_chain needs at least one triple");
    const std::size_t n = per_atom.size();
    if (direction == Direction::Right) {
        Triple acc = per_atom.front();
        for (std::size_t k = 1; k < n; ++k) acc = series(per_atom[k], acc);
        return acc;
    }
    Triple acc = per_atom.back();
    for (std::size_t k = n - 1; k-- > 0;) acc = series(per_atom[k], acc);
    return acc;
}

std::vector<Triple> atom_triples(const SystemConfig& config, Direction direction) {
    const auto c = atom_coupling_ops(config);
    const auto& ops = direction == Direction::Right ? c.right : c.left;
    const double sg = std::sqrt(config.gamma);
    std::vector<Triple> out;
    out.reserve(ops.size());
    for (const auto& op : ops)
        out.push_back(Triple{sg * op, OperatorMatrix::Zero(op.rows(), op.cols())});
    return out;
}

LindbladGenerator cascaded_generator(const SystemConfig& config) {
    const auto right = atom_triples(config, Direction::Right);
    const auto left = atom_triples(config, Direction::Left);
    const auto total = concatenate(cascade_chain(right, Direction::Right),
                                   cascade_chain(left, Direction::Left));
    LindbladGenerator gen;
    gen.hamiltonian = total.hamiltonian;
    gen.jumps = total.couplings;
    gen.labels = {"right", "left"};
    return gen;
}

} // namespace nlwqed::slh

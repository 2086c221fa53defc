#include "nlwqed/generators.hpp"

#include <cmath>

namespace nlwqed {

namespace {

// Applies a raise/lower operator at atom j to basis index idx; false when the
// result vanishes.
bool apply_site(int n, int j, SiteOp op, std::size_t& idx) {
    const std::size_t mask = std::size_t{1} << (n - j);
    const bool ground = (idx & mask) != 0;
    if (op == SiteOp::Lower) {
        if (ground) return false;
        idx |= mask;
    } else {
        if (!ground) return false;
        idx &= ~mask;
    }
    return true;
}

// Product op_a(i) op_b(j) (raise/lower only, i != j) built directly on the
// computational basis.
OperatorMatrix site_pair(int n, int i, SiteOp a, int j, SiteOp b) {
    const int dim = hilbert_dim(n);
    OperatorMatrix m = OperatorMatrix::Zero(dim, dim);
    for (int col = 0; col < dim; ++col) {
        std::size_t idx = static_cast<std::size_t>(col);
        if (apply_site(n, j, b, idx) && apply_site(n, i, a, idx))
            m(static_cast<Eigen::Index>(idx), col) = 1.0;
    }
    return m;
}

double hermitian_scale(const OperatorMatrix& h) {
    return std::max(1.0, h.cwiseAbs().maxCoeff());
}

void require_pairs(const SystemConfig& config, const char* what) {
    if (config.n_atoms < 2) throw ConfigError(std::string(what) + " requires N >= 2");
}

LindbladGenerator waveguide_generator(OperatorMatrix h, OperatorMatrix right, OperatorMatrix left) {
    LindbladGenerator gen;
    gen.hamiltonian = std::move(h);
    gen.jumps = {std::move(right), std::move(left)};
    gen.labels = {"right", "left"};
    return gen;
}

// sqrt(gamma) sum_j [cosh(r_j) a_j sigma_-,j - i e^{-i theta} sinh(r_j) b_j sigma_+,j]
// with per-atom phase factors a_j, b_j.
template <class RFun, class PhaseFun>
OperatorMatrix dressed_sum(const SystemConfig& c, double theta, RFun r_of, PhaseFun phase_of) {
    const int n = c.n_atoms;
    const int dim = hilbert_dim(n);
    OperatorMatrix l = OperatorMatrix::Zero(dim, dim);
    const double sg = std::sqrt(c.gamma);
    for (int j = 1; j <= n; ++j) {
        const double r = r_of(j);
        const Complex p = phase_of(j);
        l += (sg * std::cosh(r) * p) * local_operator(n, j, SiteOp::Lower);
        l += (sg * (-kI) * std::exp(-kI * theta) * std::conj(p) * std::sinh(r)) *
             local_operator(n, j, SiteOp::Raise);
    }
    return l;
}

} // namespace

void LindbladGenerator::check() const {
    if (hamiltonian.rows() != hamiltonian.cols())
        throw DimensionError("generator Hamiltonian must be square");
    for (const auto& l : jumps)
        if (l.rows() != hamiltonian.rows() || l.cols() != hamiltonian.cols())
            throw DimensionError("jump operator dimension differs from the Hamiltonian");
    if (!labels.empty() && labels.size() != jumps.size())
        throw DimensionError("generator labels do not match jump count");
    if (hermiticity_error(hamiltonian) > 1e-12 * hermitian_scale(hamiltonian))
        throw NumericalError("generator Hamiltonian is not Hermitian");
}

AtomCouplings atom_coupling_ops(const SystemConfig& config) {
    config.validate();
    const int n = config.n_atoms;
    AtomCouplings out;
    out.right.reserve(n);
    out.left.reserve(n);
    for (int j = 1; j <= n; ++j) {
        const auto lower = local_operator(n, j, SiteOp::Lower);
        const auto raise = local_operator(n, j, SiteOp::Raise);
        for (int d : {+1, -1}) {
            const double r = d > 0 ? config.r_right(j) : config.r_left(j);
            const double theta = d > 0 ? config.theta_right : config.theta_left;
            const double ph = d * config.phi * j;
            OperatorMatrix c = std::exp(-kI * ph) * std::cosh(r) * lower -
                               kI * std::exp(-kI * theta) * std::exp(kI * ph) * std::sinh(r) * raise;
            (d > 0 ? out.right : out.left).push_back(std::move(c));
        }
    }
    return out;
}

LindbladGenerator build_general(const SystemConfig& config) {
    config.validate();
    const int n = config.n_atoms;
    const int dim = hilbert_dim(n);
    const double g2 = 0.5 * config.gamma;
    const double phi = config.phi;
    const double dr = n > 1 ? config.delta_r() : 0.0;
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (i == j) continue;
            const int d = std::abs(j - i);
            const double exch = g2 * std::sin(phi * d) * std::cosh(dr * d);
            h += exch * (site_pair(n, j, SiteOp::Raise, i, SiteOp::Lower) +
                         site_pair(n, i, SiteOp::Raise, j, SiteOp::Lower));
            const double sh = g2 * std::sinh(dr * d);
            if (sh == 0.0) continue;
            const OperatorMatrix pp = site_pair(n, j, SiteOp::Raise, i, SiteOp::Raise);
            const OperatorMatrix mm = site_pair(n, i, SiteOp::Lower, j, SiteOp::Lower);
            if (j > i) {
                const Complex e = std::exp(-kI * config.theta_right) * std::exp(kI * phi * double(i + j));
                h += sh * (e * pp + std::conj(e) * mm);
            } else {
                const Complex e = std::exp(-kI * config.theta_left) * std::exp(-kI * phi * double(i + j));
                h += sh * (e * pp + std::conj(e) * mm);
            }
        }
    }
    auto right = dressed_sum(
        config, config.theta_right, [&](int j) { return config.r_right(j); },
        [&](int j) { return std::exp(-kI * phi * double(j)); });
    auto left = dressed_sum(
        config, config.theta_left, [&](int j) { return config.r_left(j); },
        [&](int j) { return std::exp(kI * phi * double(j)); });
    return waveguide_generator(std::move(h), std::move(right), std::move(left));
}

LindbladGenerator build_bragg(const SystemConfig& config) {
    config.validate();
    if (!is_bragg_phase(config.phi, 1e-9))
        throw ConfigError("build_bragg requires phi to be a multiple of 2pi");
    if (std::abs(std::exp(kI * config.theta_right) - std::exp(kI * config.theta_left)) > 1e-12)
        throw ConfigError("build_bragg requires equal squeezing phases");
    const int n = config.n_atoms;
    const int dim = hilbert_dim(n);
    const double theta = config.theta_right;
    const double dr = n > 1 ? config.delta_r() : 0.0;
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    const Complex e = std::exp(-kI * theta);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (i == j) continue;
            const double sh = 0.5 * config.gamma * std::sinh(dr * std::abs(j - i));
            if (sh == 0.0) continue;
            h += sh * (e * site_pair(n, j, SiteOp::Raise, i, SiteOp::Raise) +
                       std::conj(e) * site_pair(n, i, SiteOp::Lower, j, SiteOp::Lower));
        }
    }
    auto unit = [](int) { return Complex{1.0, 0.0}; };
    auto right = dressed_sum(config, theta, [&](int j) { return config.r_right(j); }, unit);
    auto left = dressed_sum(config, theta, [&](int j) { return config.r_left(j); }, unit);
    return waveguide_generator(std::move(h), std::move(right), std::move(left));
}

LindbladGenerator build_re(const SystemConfig& config) {
    config.validate();
    if (config.r_total != 0.0)
        throw ConfigError("reservoir engineering requires delta_r = 0 (r_total = 0)");
    const auto ops = collective_ops(config.n_atoms);
    const double sg = std::sqrt(config.gamma);
    OperatorMatrix l = sg * (std::cosh(config.r_bar) * ops.s_minus + std::sinh(config.r_bar) * ops.s_plus);
    OperatorMatrix h = OperatorMatrix::Zero(l.rows(), l.cols());
    return waveguide_generator(std::move(h), l, l);
}

LindbladGenerator build_sa(const SystemConfig& config) {
    config.validate();
    if (config.r_bar != 0.0) throw ConfigError("squeezing accumulation requires r_bar = 0");
    const int n = config.n_atoms;
    const int dim = hilbert_dim(n);
    const double dr = n > 1 ? config.delta_r() : 0.0;
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (i == j) continue;
            const double sh = 0.5 * config.gamma * std::sinh(dr * std::abs(j - i));
            h += (kI * sh) * (site_pair(n, j, SiteOp::Raise, i, SiteOp::Raise) -
                              site_pair(n, i, SiteOp::Lower, j, SiteOp::Lower));
        }
    }
    const double sg = std::sqrt(config.gamma);
    OperatorMatrix right = OperatorMatrix::Zero(dim, dim);
    OperatorMatrix left = OperatorMatrix::Zero(dim, dim);
    for (int j = 1; j <= n; ++j) {
        const auto lower = local_operator(n, j, SiteOp::Lower);
        const auto raise = local_operator(n, j, SiteOp::Raise);
        const double rr = dr * (j - 1);
        const double rl = dr * (n - j);
        right += sg * (std::cosh(rr) * lower + std::sinh(rr) * raise);
        left += sg * (std::cosh(rl) * lower + std::sinh(rl) * raise);
    }
    return waveguide_generator(std::move(h), std::move(right), std::move(left));
}

LindbladGenerator build_linearized(const SystemConfig& config) {
    config.validate();
    require_pairs(config, "build_linearized");
    const int n = config.n_atoms;
    const int dim = hilbert_dim(n);
    const double r = config.r_total;
    OperatorMatrix h = OperatorMatrix::Zero(dim, dim);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (i == j) continue;
            const double w = static_cast<double>(std::abs(j - i)) / (n - 1);
            h += (kI * r * 0.5 * config.gamma * w) *
                 (site_pair(n, j, SiteOp::Raise, i, SiteOp::Raise) -
                  site_pair(n, i, SiteOp::Lower, j, SiteOp::Lower));
        }
    }
    const auto ops = collective_ops(n);
    const double sg = std::sqrt(config.gamma);
    OperatorMatrix right = sg * (ops.s_minus + r * weighted_collective(n, Direction::Right, SiteOp::Raise));
    OperatorMatrix left = sg * (ops.s_minus + r * weighted_collective(n, Direction::Left, SiteOp::Raise));
    return waveguide_generator(std::move(h), std::move(right), std::move(left));
}

OperatorMatrix build_nonhermitian_tilde(const SystemConfig& config) {
    const auto gen = build_linearized(config);
    const auto ops = collective_ops(config.n_atoms);
    return gen.hamiltonian - (kI * config.r_total * 0.5 * config.gamma) *
                                 (ops.s_plus * ops.s_plus + ops.s_minus * ops.s_minus);
}

std::vector<OperatorMatrix> loss_jumps(const SystemConfig& config) {
    const double g0 = config.gamma_loss();
    check_atom_count(config.n_atoms);
    std::vector<OperatorMatrix> out;
    if (g0 == 0.0) return out;
    out.reserve(config.n_atoms);
    for (int j = 1; j <= config.n_atoms; ++j)
        out.push_back(std::sqrt(g0) * local_operator(config.n_atoms, j, SiteOp::Lower));
    return out;
}

LindbladGenerator build_generator(const SystemConfig& config) {
    config.validate();
    const bool bragg = is_bragg_phase(config.phi, 1e-9) &&
                       std::abs(std::exp(kI * config.theta_right) - std::exp(kI * config.theta_left)) <= 1e-12;
    LindbladGenerator gen = bragg ? build_bragg(config) : build_general(config);
    auto loss = loss_jumps(config);
    for (std::size_t k = 0; k < loss.size(); ++k) {
        gen.jumps.push_back(std::move(loss[k]));
        gen.labels.push_back("loss_" + std::to_string(k + 1));
    }
    return gen;
}

} // namespace nlwqed

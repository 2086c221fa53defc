#pragma once

// Lindblad right-hand side, dense superoperators, time evolution with
// piecewise-constant squeezing drives, observables and steady states.

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "nlwqed/core.hpp"
#include "nlwqed/generators.hpp"
#include "nlwqed/io.hpp"

namespace nlwqed {

// Dense 4^N x 4^N matrix acting on column-stacked density matrices:
// vec(A rho B) = (B^T kron A) vec(rho).
using SuperOperator = Eigen::MatrixXcd;

// -i[H, rho] + sum_k D_{L_k}[rho], with D_X[rho] = X rho X^dag - {X^dag X, rho}/2.
OperatorMatrix apply_generator(const LindbladGenerator& gen, const OperatorMatrix& rho);

SuperOperator liouvillian_matrix(const LindbladGenerator& gen);

// Liouvillian of a Hamiltonian plus jump list, without the size cap checks on N
// (used on the reduced decoherence-free space as well).
SuperOperator liouvillian_from(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps);

// Cached sparse form of a generator for repeated matrix-free application.
class LiouvilleEvaluator {
public:
    explicit LiouvilleEvaluator(const LindbladGenerator& gen);

    void apply(const OperatorMatrix& rho, OperatorMatrix& out) const;
    Eigen::Index dim() const { return dim_; }

private:
    using Sparse = Eigen::SparseMatrix<Complex>;
    Eigen::Index dim_;
    // Only adjoints are stored: every product is evaluated as dense * sparse
    // (column axpys), with A X = (X^dag A^dag)^dag.
    Sparse heff_adj_; // (H - (i/2) sum L^dag L)^dag
    std::vector<Sparse> jumps_adj_;
    mutable OperatorMatrix work_a_, work_b_, work_c_;
};

Complex expectation(const OperatorMatrix& rho, const OperatorMatrix& op);
double purity(const OperatorMatrix& rho);

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
// <psi|rho|psi> for a normalized pure target.
double fidelity_pure(const OperatorMatrix& rho, const StateVector& psi);

struct SteadyState {
    DensityMatrix rho;
    int kernel_dimension = 0;
};

// Trace-normalized element of ker(L) closest to the reference state
// (ground state by default). N <= 6.
SteadyState steady_state(const LindbladGenerator& gen,
                         const std::optional<OperatorMatrix>& reference = std::nullopt);

// Recorded time series. tau = gamma r t is present when any segment has r > 0.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> tau;
    std::vector<OperatorMatrix> states;
    OperatorMatrix final_state;
    // Sz, purity and trace_err always; df_pop and fidelity on request;
    // herm_err and min_eig when states are checked (not part of the CSV).
    std::map<std::string, std::vector<double>> observables;

    const std::vector<double>& series(const std::string& name) const;
    bool has(const std::string& name) const { return observables.count(name) > 0; }
};

// Column order of the trajectory CSV contract.
const std::vector<std::string>& trajectory_columns();
CsvTable trajectory_table(const Trajectory& traj);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

enum class Integrator {
    Auto,       // Propagator for N <= 5, Krylov above
    RungeKutta4,
    Propagator, // exact dense exp(L dt) per grid interval, N <= 6
    Krylov,     // matrix-free Arnoldi exponential
};

std::string to_string(Integrator method);
Integrator integrator_from_string(const std::string& name);

struct EvolveOptions {
    Integrator method = Integrator::Auto;
    bool record_states = false;
    // Observables beyond Sz, trace_err and purity (always recorded).
    std::optional<OperatorMatrix> df_projector;
    std::optional<StateVector> target;
    // Rebuilds the generator for a segment; defaults to build_generator.
    std::function<LindbladGenerator(const SystemConfig&)> builder;
    // RK4 step override; <= 0 uses min(1e-3/gamma, 1e-2/(gamma (1 + r N))).
    double rk4_step = 0.0;
    // Re-run RK4 at half step and require |delta Sz| < 1e-6.
    bool convergence_audit = false;
    // Check trace, Hermiticity and positivity at every grid point and record
    // the Hermiticity error and minimum eigenvalue.
    bool check_states = true;
    double krylov_tolerance = 1e-11;
};

// Integrates d rho/dt = L rho over t_grid (strictly increasing, starting at 0
// or later). Segment boundaries of the drive schedule are hit exactly. An
// empty schedule means a single segment at config.r_total.
Trajectory evolve(const SystemConfig& config, const DensityMatrix& rho0, std::span<const double> t_grid,
                  const EvolveOptions& options = {});

// Uniform grid with n_points samples on [0, t_end].
std::vector<double> uniform_grid(double t_end, int n_points);

// Default RK4 step for a segment.
double default_rk4_step(const SystemConfig& config, double r);

} // namespace nlwqed

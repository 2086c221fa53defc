#pragma once

// Figure pipelines, the generic parameter sweep and the JSON experiment
// specification that drives them.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nlwqed/core.hpp"
#include "nlwqed/dfs.hpp"
#include "nlwqed/generators.hpp"
#include "nlwqed/lindblad.hpp"

namespace nlwqed {

enum class Figure { Fig2a, Fig2b, Fig2c, Fig2d, Fig3b, Fig3c, Fig3d, Fig3e, Fig4a, Fig4b, Custom };

std::string to_string(Figure f);
Figure figure_from_string(const std::string& name);
const std::vector<std::string>& figure_names();

struct SweepGrid {
    std::vector<double> r;
    std::vector<double> beta;
    std::vector<int> n_atoms;
    // Sample times in tau = gamma r t; mutually exclusive with t.
    std::vector<double> tau;
    std::vector<double> t;
};

struct ExperimentSpec {
    Figure name = Figure::Custom;
    SystemConfig config;
    SweepGrid grid;
    std::filesystem::path outputs = "out";
    Integrator method = Integrator::Auto;
    // Scalar outputs for run_sweep: rabi_frequency, q_max, min_df_pop,
    // final_fidelity, final_sz, first_max_tau, spectral_peaks.
    std::vector<std::string> observables;
    int threads = 1;

    // Throws ConfigError on any violated invariant.
    void validate() const;
};

ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::filesystem::path& path);

// Preset matching the figure axes. Empty grids in a spec fall back to these.
ExperimentSpec default_spec(Figure f);

// NLWQED_THREADS overrides the requested count; the result is at least 1.
int resolve_threads(int requested);

struct RunResult {
    std::vector<std::filesystem::path> files;
    nlohmann::json summary;
};

RunResult run_fig2(const ExperimentSpec& spec);
RunResult run_fig3(const ExperimentSpec& spec);
RunResult run_fig4(const ExperimentSpec& spec);
RunResult run_sweep(const ExperimentSpec& spec);
// Dispatches on spec.name; custom runs a single trajectory when the spec has
// no r, beta or N axes and no observables, and a sweep otherwise.
RunResult run_experiment(const ExperimentSpec& spec);

// Normalized P H P |g...g>: the DF state the Zeno Hamiltonian drives the
// ground state into (the j = 0 state for N = 4).
StateVector transfer_target(const LindbladGenerator& gen, const DFProjector& df);

// Time of the first <S_z> maximum on the driven trajectory (parabolic
// refinement on the sampled grid).
double pi_pulse_time(const SystemConfig& config, double tau_horizon = 20.0, int points = 4001,
                     Integrator method = Integrator::Auto);

} // namespace nlwqed

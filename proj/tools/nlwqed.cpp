#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "nlwqed/errors.hpp"
#include "nlwqed/experiments.hpp"

namespace {

constexpr int kExitSpecError = 2;
constexpr int kExitNumerical = 3;

void report(const nlwqed::RunResult& result) {
    for (const auto& f : result.files) std::cout << f.generic_string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    using namespace nlwqed;

    CLI::App app{"Waveguide QED squeezing dynamics: figure pipelines and parameter sweeps"};
    app.require_subcommand(1);

    std::string spec_path;
    std::optional<std::string> out_dir;
    int threads = -1;

    auto* run = app.add_subcommand("run", "Run an experiment spec (JSON)");
    run->add_option("spec", spec_path, "Spec file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the spec)");
    run->add_option("--threads", threads, "Worker threads (0 = all cores; NLWQED_THREADS overrides)");

    auto* validate = app.add_subcommand("validate", "Parse and check a spec without running it");
    validate->add_option("spec", spec_path, "Spec file")->required();

    struct PresetArgs {
        std::optional<double> r, beta;
        std::optional<int> natoms;
        std::optional<std::string> out;
        std::optional<std::string> method;
        int threads = 1;
    };
    PresetArgs preset;
    std::vector<std::pair<CLI::App*, Figure>> presets;
    for (const auto& name : figure_names()) {
        if (name == "custom") continue;
        auto* sub = app.add_subcommand(name, "Run the " + name + " preset");
        sub->add_option("--r", preset.r, "Squeeze parameter (replaces the r axis)");
        sub->add_option("--beta", preset.beta, "Coupling efficiency (replaces the beta axis)");
        sub->add_option("--natoms", preset.natoms, "Number of atoms (replaces the N axis)");
        sub->add_option("--out", preset.out, "Output directory");
        sub->add_option("--method", preset.method, "Integrator: auto, rk4, propagator, krylov");
        sub->add_option("--threads", preset.threads, "Worker threads (0 = all cores; NLWQED_THREADS overrides)");
        presets.emplace_back(sub, figure_from_string(name));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitSpecError;
    }

    try {
        if (*validate) {
            const auto spec = load_spec(spec_path);
            std::cout << spec_to_json(spec).dump(1) << '\n';
            return 0;
        }
        if (*run) {
            auto spec = load_spec(spec_path);
            if (out_dir) spec.outputs = *out_dir;
            if (threads >= 0) spec.threads = threads;
            report(run_experiment(spec));
            return 0;
        }
        for (const auto& [sub, fig] : presets) {
            if (!*sub) continue;
            ExperimentSpec spec = default_spec(fig);
            if (preset.r) {
                spec.config.r_total = *preset.r;
                spec.grid.r = {*preset.r};
            }
            if (preset.beta) {
                spec.config.beta = *preset.beta;
                spec.grid.beta = {*preset.beta};
            }
            if (preset.natoms) {
                spec.config.n_atoms = *preset.natoms;
                if (!spec.grid.n_atoms.empty()) spec.grid.n_atoms = {*preset.natoms};
            }
            if (preset.out) spec.outputs = *preset.out;
            if (preset.method) spec.method = integrator_from_string(*preset.method);
            spec.threads = preset.threads;
            spec.validate();
            report(run_experiment(spec));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "spec error: " << e.what() << '\n';
        return kExitSpecError;
    } catch (const DimensionError& e) {
        std::cerr << "spec error: " << e.what() << '\n';
        return kExitSpecError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}

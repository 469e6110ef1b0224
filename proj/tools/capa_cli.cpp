#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"
#include "capa/runner.hpp"
#include "capa/scenario.hpp"
#include "capa/version.hpp"

namespace {

struct SubcommandSpec {
    const char* name;
    capa::TaskKind kind;
    const char* description;
};

constexpr SubcommandSpec subcommands[] = {
    {"dof", capa::TaskKind::dof_sweep,
     "Sweep aperture separation: effective-mode counts vs. the area estimate"},
    {"capacity", capa::TaskKind::capacity,
     "Water-filling capacity of the discretized channel operator"},
    {"beamform", capa::TaskKind::beamform,
     "Multi-user transmit beamforming on the aperture (mrt/zf/mmse/power_min)"},
    {"estimate", capa::TaskKind::estimate,
     "Sparse channel recovery from projected pilot measurements"},
    {"channel-sample", capa::TaskKind::channel_sample,
     "Evaluate the channel kernel on point lattices over both apertures"},
    {"coupling", capa::TaskKind::coupling,
     "Mutual impedance between the apertures vs. separation"},
    {"power", capa::TaskKind::power,
     "Radiated/dissipated power accounting for a pixel port basis"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capa: continuous-aperture array toolbox"};
    app.set_version_flag("--version", std::string("capa ") + capa::version_string +
                                          " (simd: " + capa::simd::backend_name() + ")");
    app.require_subcommand(1);

    std::string scenario_path;
    capa::RunOptions options;
    std::optional<std::uint64_t> seed;
    std::optional<int> quadrature_order;

    for (const SubcommandSpec& spec : subcommands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.description);
        sub->add_option("scenario", scenario_path, "scenario document (INI-style text)")
            ->required();
        sub->add_option("--out-dir", options.out_dir,
                        "output directory (created when missing)")
            ->capture_default_str();
        sub->add_option("--seed", seed, "override the scenario's random seed");
        sub->add_option("--quadrature-order", quadrature_order,
                        "override the scenario's Gauss-Legendre order per axis (0 = auto)");
    }

    CLI11_PARSE(app, argc, argv);

    options.seed = seed;
    options.quadrature_order = quadrature_order;

    const CLI::App* chosen = app.get_subcommands().front();
    capa::TaskKind expected = capa::TaskKind::dof_sweep;
    for (const SubcommandSpec& spec : subcommands) {
        if (chosen->get_name() == spec.name) {
            expected = spec.kind;
        }
    }

    try {
        const capa::Scenario scenario = capa::parse_scenario(scenario_path);
        if (scenario.task != expected) {
            std::cerr << "error: scenario declares [task." << capa::task_name(scenario.task)
                      << "] but the '" << chosen->get_name() << "' subcommand expects [task."
                      << capa::task_name(expected) << "]\n";
            return 1;
        }
        const capa::RunReport report = capa::run(scenario, options);
        std::cout << "task " << report.task << " finished\n";
        for (const std::string& name : report.outputs) {
            std::cout << "  wrote " << options.out_dir << "/" << name << "\n";
        }
        std::cout << "  wrote " << report.report_path << "\n";
        for (const std::string& warning : report.warnings) {
            std::cout << "warning: " << warning << "\n";
        }
        return 0;
    } catch (const capa::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
    } catch (const capa::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
    } catch (const capa::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
}

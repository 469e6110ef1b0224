#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/channel.hpp"
#include "capa/geometry.hpp"

namespace capa {

// One batch task per scenario document. Section names are task.<name> with the
// same spelling as the enumerators (channel_sample maps to the channel-sample
// subcommand).
enum class TaskKind { dof_sweep, capacity, beamform, estimate, channel_sample, coupling, power };

const char* task_name(TaskKind kind);

struct DofSweepTask {
    std::vector<double> distances_m;
    double threshold = 0.5;
    double total_power_w = 1.0;
    double noise_level_w = 1e-6;
};

struct CapacityTask {
    double total_power_w = 1.0;
    double noise_level_w = 1e-6;
    double epsilon = 0.0;  // > 0 adds an epsilon-capacity figure to the report
};

struct BeamformTask {
    std::string method = "zf";  // mrt | zf | mmse | power_min
    std::vector<Eigen::Vector3d> users;
    double power_w = 1.0;
    double noise_power = 1e-3;
    double target_db = 5.0;  // power_min only
};

struct EstimateTask {
    int pilots = 12;
    int planted_atoms = 0;  // 0: estimate the scenario channel instead of a planted one
    double noise_level = 0.0;
};

struct ChannelSampleTask {
    int rx_points_per_axis = 4;
    int tx_points_per_axis = 4;
};

struct CouplingTask {
    std::vector<double> distances_m;
};

struct PowerTask {
    int ports_x = 2;
    int ports_z = 2;
    double surface_resistance_ohm = 0.0;
    double extra_resistance_ohm = 0.0;  // series source resistance for the passivity report
    int trials = 20;
};

using TaskDetail = std::variant<DofSweepTask, CapacityTask, BeamformTask, EstimateTask,
                                ChannelSampleTask, CouplingTask, PowerTask>;

enum class ChannelKind { los, multipath, correlation, rician };

struct ChannelSpec {
    ChannelKind kind = ChannelKind::los;
    PolarizationMode polarization = PolarizationMode::simplified;
    Eigen::Vector3d p_t = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d p_r = Eigen::Vector3d::UnitZ();
    std::vector<Scatterer> scatterers;    // multipath
    int cells_per_axis = 24;              // correlation | rician
    std::vector<VmfCluster> tx_clusters;  // empty = isotropic
    std::vector<VmfCluster> rx_clusters;
    double k_factor = 1.0;  // rician, linear scale
};

struct NumericsSpec {
    int quadrature_order = 0;  // 0 = quarter-wavelength default per aperture
    std::uint64_t seed = 1;
};

struct Scenario {
    Carrier carrier;
    PlanarAperture tx;
    PlanarAperture rx;
    std::optional<ChannelSpec> channel;
    TaskKind task = TaskKind::dof_sweep;
    TaskDetail detail = DofSweepTask{};
    NumericsSpec numerics;
    std::string source_text;  // verbatim document, echoed into the run report
};

// Parses and validates a scenario document (UTF-8, '#' comments, [section]
// headers, key = value lines; list values are whitespace-separated numbers and
// some keys repeat to build lists). All validation problems are collected and
// reported together in one config_error, one line each.
Scenario parse_scenario_text(const std::string& text);

// Reads the file and delegates to parse_scenario_text.
Scenario parse_scenario(const std::string& path);

} // namespace capa

#include "capa/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "capa/beamforming.hpp"
#include "capa/channel.hpp"
#include "capa/detail/csv.hpp"
#include "capa/detail/rng.hpp"
#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"
#include "capa/estimation.hpp"
#include "capa/geometry.hpp"
#include "capa/green.hpp"
#include "capa/hwmodel.hpp"
#include "capa/limits.hpp"
#include "capa/quadrature.hpp"
#include "capa/version.hpp"
#include "capa/wavenumber.hpp"

namespace capa {
namespace {

using nlohmann::json;

const char* region_name(FieldRegion region) {
    switch (region) {
        case FieldRegion::reactive_near: return "reactive_near";
        case FieldRegion::radiative_near: return "radiative_near";
        case FieldRegion::far: return "far";
    }
    return "unknown";
}

// Scenario channel bound to concrete apertures; for the sweep tasks the receive
// aperture is repositioned per distance, so binding happens late.
struct BoundChannel {
    ChannelKind kind = ChannelKind::los;
    UniPolLosChannel los;
    std::vector<Scatterer> scatterers;
    std::optional<CorrelationRealization> realization;
    std::optional<RicianChannel> rician;

    bool plain_los() const { return kind == ChannelKind::los; }

    KernelFn kernel() const {
        switch (kind) {
            case ChannelKind::los: {
                UniPolLosChannel ch = los;
                return [ch](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
                    return los_kernel(ch, r, s);
                };
            }
            case ChannelKind::multipath: {
                UniPolLosChannel ch = los;
                std::vector<Scatterer> sc = scatterers;
                return [ch, sc](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
                    return multipath_kernel(ch, sc, r, s);
                };
            }
            case ChannelKind::correlation: {
                CorrelationRealization re = *realization;
                return [re](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
                    return evaluate_realization(re, r, s);
                };
            }
            case ChannelKind::rician: {
                RicianChannel ch = *rician;
                return [ch](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
                    return rician_kernel(ch, r, s);
                };
            }
        }
        throw domain_error("unhandled channel kind");
    }
};

class Runner {
  public:
    Runner(const Scenario& scenario, const RunOptions& options)
        : scenario_(scenario), options_(options) {}

    RunReport execute();

  private:
    const Scenario& scenario_;
    const RunOptions& options_;
    std::filesystem::path out_dir_;
    std::uint64_t seed_ = 0;
    int tx_order_ = 0;
    int rx_order_ = 0;
    RunReport report_;

    void dispatch();
    void run_dof_sweep(const DofSweepTask& task);
    void run_capacity(const CapacityTask& task);
    void run_beamform(const BeamformTask& task);
    void run_estimate(const EstimateTask& task);
    void run_channel_sample(const ChannelSampleTask& task);
    void run_coupling(const CouplingTask& task);
    void run_power(const PowerTask& task);

    template <typename Fn>
    auto timed(const std::string& name, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record_stage(name, start);
        } else {
            auto value = fn();
            record_stage(name, start);
            return value;
        }
    }

    void record_stage(const std::string& name, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        report_.stage_seconds.emplace_back(name, elapsed.count());
    }

    std::ofstream open_csv(const std::string& name) const {
        std::ofstream out(out_dir_ / name, std::ios::binary);
        if (!out) {
            throw config_error("cannot open output file: " + (out_dir_ / name).string());
        }
        return out;
    }

    void finish_csv(std::ofstream& out, const std::string& name) {
        out.flush();
        if (!out) {
            throw config_error("failed while writing output file: " + name);
        }
        report_.outputs.push_back(name);
    }

    PlanarAperture rx_at_distance(double distance_m) const {
        const PlanarAperture& tx = scenario_.tx;
        const PlanarAperture& rx = scenario_.rx;
        return make_aperture(tx.center_m + distance_m * tx.normal(), rx.orientation, rx.len_x_m,
                             rx.len_z_m);
    }

    UniPolLosChannel bind_los(const PlanarAperture& rx) const {
        const auto& spec = scenario_.channel;
        if (spec && spec->polarization == PolarizationMode::matched) {
            return make_los_channel(scenario_.tx, rx, scenario_.carrier,
                                    make_polarization(spec->p_t), make_polarization(spec->p_r));
        }
        return make_los_channel(scenario_.tx, rx, scenario_.carrier);
    }

    // Requires a channel block (the parser enforces that for the tasks that
    // reach this point). Stochastic kinds consume the effective seed.
    BoundChannel bind_channel(const PlanarAperture& rx) const {
        BoundChannel bound;
        bound.los = bind_los(rx);
        if (!scenario_.channel) {
            return bound;
        }
        const ChannelSpec& spec = *scenario_.channel;
        bound.kind = spec.kind;
        switch (spec.kind) {
            case ChannelKind::los: break;
            case ChannelKind::multipath: bound.scatterers = spec.scatterers; break;
            case ChannelKind::correlation:
            case ChannelKind::rician: {
                AngularSpectrum spectrum;
                spectrum.tx_side =
                    spec.tx_clusters.empty() ? isotropic_side() : vmf_side(spec.tx_clusters);
                spectrum.rx_side =
                    spec.rx_clusters.empty() ? isotropic_side() : vmf_side(spec.rx_clusters);
                bound.realization = sample_correlation_channel(
                    spectrum, scenario_.tx, rx, scenario_.carrier, spec.cells_per_axis, seed_);
                if (spec.kind == ChannelKind::rician) {
                    bound.rician = make_rician(bound.los, *bound.realization, spec.k_factor);
                }
                break;
            }
        }
        return bound;
    }

    Orientation relative_rx_orientation() const {
        Orientation rel;
        rel.matrix = scenario_.tx.orientation.matrix.transpose() * scenario_.rx.orientation.matrix;
        return rel;
    }

    FieldRegion classify(double distance_m) const {
        const double diameter = std::max(scenario_.tx.diameter(), scenario_.rx.diameter());
        return classify_region(distance_m, diameter, scenario_.carrier);
    }
};

RunReport Runner::execute() {
    report_.task = task_name(scenario_.task);
    seed_ = options_.seed.value_or(scenario_.numerics.seed);

    int order = scenario_.numerics.quadrature_order;
    if (options_.quadrature_order) {
        order = *options_.quadrature_order;
        if (order < 0 || order > gl_max_order) {
            throw config_error("quadrature order override " + std::to_string(order) +
                               " out of range [0, " + std::to_string(gl_max_order) + "]");
        }
    }
    tx_order_ = order > 0 ? order : default_order(scenario_.tx, scenario_.carrier);
    rx_order_ = order > 0 ? order : default_order(scenario_.rx, scenario_.carrier);

    out_dir_ = options_.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) {
        throw config_error("cannot create output directory " + out_dir_.string() + ": " +
                           ec.message());
    }

    try {
        dispatch();
    } catch (const domain_error& e) {
        throw domain_error(std::string(e.what()) + " [task." + report_.task + "]");
    } catch (const config_error& e) {
        throw config_error(std::string(e.what()) + " [task." + report_.task + "]");
    } catch (const rank_error& e) {
        throw rank_error(std::string(e.what()) + " [task." + report_.task + "]");
    } catch (const resonance_error& e) {
        throw resonance_error(std::string(e.what()) + " [task." + report_.task + "]");
    } catch (const numerical_error& e) {
        throw numerical_error(std::string(e.what()) + " [task." + report_.task + "]");
    }

    json doc;
    doc["task"] = report_.task;
    doc["library_version"] = version_string;
    doc["seed"] = seed_;
    doc["quadrature_order"] = {{"tx", tx_order_}, {"rx", rx_order_}};
    doc["scenario_text"] = scenario_.source_text;
    doc["outputs"] = report_.outputs;
    doc["warnings"] = report_.warnings;
    json stages = json::array();
    for (const auto& [name, seconds] : report_.stage_seconds) {
        stages.push_back({{"name", name}, {"seconds", seconds}});
    }
    doc["stages"] = stages;
    doc["summary"] = report_.summary;

    const std::filesystem::path path = out_dir_ / "report.json";
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) {
        throw config_error("failed while writing " + path.string());
    }
    report_.report_path = path.string();
    return report_;
}

void Runner::dispatch() {
    std::visit(
        [this](const auto& task) {
            using T = std::decay_t<decltype(task)>;
            if constexpr (std::is_same_v<T, DofSweepTask>) {
                run_dof_sweep(task);
            } else if constexpr (std::is_same_v<T, CapacityTask>) {
                run_capacity(task);
            } else if constexpr (std::is_same_v<T, BeamformTask>) {
                run_beamform(task);
            } else if constexpr (std::is_same_v<T, EstimateTask>) {
                run_estimate(task);
            } else if constexpr (std::is_same_v<T, ChannelSampleTask>) {
                run_channel_sample(task);
            } else if constexpr (std::is_same_v<T, CouplingTask>) {
                run_coupling(task);
            } else {
                run_power(task);
            }
        },
        scenario_.detail);
}

void Runner::run_dof_sweep(const DofSweepTask& task) {
    const ApertureGrid tx_grid =
        timed("tx_grid", [&] { return aperture_grid(scenario_.tx, tx_order_); });

    auto csv_out = open_csv("dof_sweep.csv");
    csv_out << "distance_m,landau,numeric_dof\n";
    json rows = json::array();

    for (std::size_t i = 0; i < task.distances_m.size(); ++i) {
        const double distance = task.distances_m[i];
        timed("distance " + std::to_string(i), [&] {
            const PlanarAperture rx = rx_at_distance(distance);
            const ApertureGrid rx_grid = aperture_grid(rx, rx_order_);
            const UniPolLosChannel channel = bind_los(rx);
            const DiscretizedOperator op = discretize_los_operator(channel, tx_grid, rx_grid);
            const ModalDecomposition modes = modal_decomposition(op);
            const int numeric = dof_count(modes, task.threshold);
            const double landau =
                landau_dof(scenario_.tx, rx, distance, scenario_.carrier, relative_rx_orientation());
            const double sigma_1 =
                modes.singular_values.size() > 0 ? modes.singular_values[0] : 0.0;
            const WaterfillResult wf =
                waterfill(modes, task.total_power_w, task.noise_level_w);

            csv::field(csv_out, distance) << ',';
            csv::field(csv_out, landau) << ',' << numeric << '\n';

            rows.push_back({{"distance_m", distance},
                            {"landau", landau},
                            {"numeric_dof", numeric},
                            {"sigma_1", sigma_1},
                            {"capacity_bits", wf.capacity_bits},
                            {"field_region", region_name(classify(distance))}});
        });
    }
    finish_csv(csv_out, "dof_sweep.csv");

    report_.summary = {{"threshold", task.threshold},
                       {"total_power_w", task.total_power_w},
                       {"noise_level_w", task.noise_level_w},
                       {"rows", rows}};
}

void Runner::run_capacity(const CapacityTask& task) {
    const ApertureGrid tx_grid = aperture_grid(scenario_.tx, tx_order_);
    const ApertureGrid rx_grid = aperture_grid(scenario_.rx, rx_order_);
    const BoundChannel bound = timed("bind_channel", [&] { return bind_channel(scenario_.rx); });

    const DiscretizedOperator op = timed("discretize", [&] {
        return bound.plain_los() ? discretize_los_operator(bound.los, tx_grid, rx_grid)
                                 : discretize_operator(bound.kernel(), tx_grid, rx_grid);
    });
    const ModalDecomposition modes = timed("svd", [&] { return modal_decomposition(op); });
    const WaterfillResult wf = waterfill(modes, task.total_power_w, task.noise_level_w);

    const double distance = (scenario_.rx.center_m - scenario_.tx.center_m).norm();
    const double landau =
        landau_dof(scenario_.tx, scenario_.rx, distance, scenario_.carrier,
                   relative_rx_orientation());
    const int numeric = dof_count(modes, 0.5);
    const double sigma_1 = modes.singular_values.size() > 0 ? modes.singular_values[0] : 0.0;

    auto csv_out = open_csv("capacity.csv");
    csv_out << "distance_m,landau,numeric_dof,sigma_1,capacity_bits\n";
    csv::field(csv_out, distance) << ',';
    csv::field(csv_out, landau) << ',' << numeric << ',';
    csv::field(csv_out, sigma_1) << ',';
    csv::field(csv_out, wf.capacity_bits) << '\n';
    finish_csv(csv_out, "capacity.csv");

    const Eigen::Index active =
        (wf.powers.array() > 0.0).count();
    report_.summary = {{"capacity_bits", wf.capacity_bits},
                       {"water_level", wf.water_level},
                       {"active_modes", active},
                       {"numeric_dof", numeric},
                       {"landau", landau},
                       {"sigma_1", sigma_1},
                       {"distance_m", distance},
                       {"field_region", region_name(classify(distance))},
                       {"channel_kind", static_cast<int>(bound.kind)}};
    if (task.epsilon > 0.0) {
        report_.summary["kolmogorov_bits"] =
            kolmogorov_capacity(modes, task.total_power_w, task.epsilon);
    }
}

void Runner::run_beamform(const BeamformTask& task) {
    const ApertureGrid grid = aperture_grid(scenario_.tx, tx_order_);
    const std::size_t n = grid.size();
    const Eigen::Index user_count = static_cast<Eigen::Index>(task.users.size());

    std::vector<double> sx(n), sy(n), sz(n);
    for (std::size_t j = 0; j < n; ++j) {
        sx[j] = grid.nodes_global[j].x();
        sy[j] = grid.nodes_global[j].y();
        sz[j] = grid.nodes_global[j].z();
    }

    const Carrier& carrier = scenario_.carrier;
    const cplx scale = cplx(0.0, -1.0) * carrier.impedance_ohm * carrier.wavenumber_rad_per_m;
    Eigen::MatrixXcd samples(static_cast<Eigen::Index>(n), user_count);
    timed("user_channels", [&] {
        std::vector<double> re(n), im(n);
        for (Eigen::Index k = 0; k < user_count; ++k) {
            const Eigen::Vector3d& user = task.users[static_cast<std::size_t>(k)];
            if (point_on_aperture(scenario_.tx, user)) {
                throw config_error("user " + std::to_string(k) +
                                   " lies on the transmit aperture");
            }
            const double obs[3] = {user.x(), user.y(), user.z()};
            simd::los_batch(obs, sx.data(), sy.data(), sz.data(), n, carrier.wavenumber_rad_per_m,
                            scale, re.data(), im.data());
            for (std::size_t j = 0; j < n; ++j) {
                samples(static_cast<Eigen::Index>(j), k) = cplx(re[j], im[j]);
            }
        }
    });

    const UserChannelSet users = make_user_set(grid, samples, task.noise_power);
    const Eigen::VectorXd split =
        Eigen::VectorXd::Constant(user_count, task.power_w / static_cast<double>(user_count));
    const Eigen::MatrixXcd gram = gram_matrix(users).matrix;

    BeamformerSet beams;
    json solver;
    timed("solve", [&] {
        if (task.method == "mrt") {
            beams = mrt(users, split);
        } else if (task.method == "zf") {
            beams = zf(users, split);
        } else if (task.method == "mmse") {
            beams = mmse(users, split / task.noise_power,
                         Eigen::VectorXd::Ones(user_count));
            for (Eigen::Index k = 0; k < user_count; ++k) {
                const Eigen::VectorXcd b = beams.coefficients.row(k).transpose();
                const double power = b.dot(gram * b).real();
                if (power > 1e-300) {
                    beams.coefficients.row(k) *= std::sqrt(split[k] / power);
                } else {
                    report_.warnings.push_back("beam " + std::to_string(k) +
                                               " has vanishing power; left unscaled");
                }
            }
        } else {
            SinrTargets targets;
            targets.targets =
                Eigen::VectorXd::Constant(user_count, std::pow(10.0, task.target_db / 10.0));
            const PowerMinResult result = power_min_solve(users, targets);
            beams = result.beamformers;
            if (!result.converged) {
                report_.warnings.push_back(
                    "power minimization did not converge after " +
                    std::to_string(result.iterations) + " iterations");
            }
            solver = {{"converged", result.converged},
                      {"iterations", result.iterations},
                      {"total_power_w", result.total_power}};
        }
    });

    const Eigen::VectorXd sinrs = sinr(users, beams);
    Eigen::VectorXd beam_power(user_count);
    for (Eigen::Index k = 0; k < user_count; ++k) {
        const Eigen::VectorXcd b = beams.coefficients.row(k).transpose();
        beam_power[k] = b.dot(gram * b).real();
    }

    auto summary_out = open_csv("beam_summary.csv");
    summary_out << "user,sinr_db,power_w\n";
    json sinr_db = json::array();
    for (Eigen::Index k = 0; k < user_count; ++k) {
        const double db = 10.0 * std::log10(std::max(sinrs[k], 1e-30));
        summary_out << k << ',';
        csv::field(summary_out, db) << ',';
        csv::field(summary_out, beam_power[k]) << '\n';
        sinr_db.push_back(db);
    }
    finish_csv(summary_out, "beam_summary.csv");

    auto coeff_out = open_csv("beam_coefficients.csv");
    coeff_out << "beam,channel,re,im\n";
    for (Eigen::Index k = 0; k < user_count; ++k) {
        for (Eigen::Index j = 0; j < user_count; ++j) {
            coeff_out << k << ',' << j << ',';
            csv::field(coeff_out, beams.coefficients(k, j)) << '\n';
        }
    }
    finish_csv(coeff_out, "beam_coefficients.csv");

    const Eigen::MatrixXcd field = beam_field(users, beams);
    auto field_out = open_csv("beam_field.csv");
    field_out << "x_m,z_m";
    for (Eigen::Index k = 0; k < user_count; ++k) {
        field_out << ",abs_w_" << k;
    }
    field_out << '\n';
    for (std::size_t j = 0; j < n; ++j) {
        csv::field(field_out, grid.nodes_local[j].x()) << ',';
        csv::field(field_out, grid.nodes_local[j].y());
        for (Eigen::Index k = 0; k < user_count; ++k) {
            field_out << ',';
            csv::field(field_out, std::abs(field(static_cast<Eigen::Index>(j), k)));
        }
        field_out << '\n';
    }
    finish_csv(field_out, "beam_field.csv");

    report_.summary = {{"method", task.method},
                       {"users", user_count},
                       {"sum_rate_bits", sum_rate(sinrs)},
                       {"sinr_db", sinr_db},
                       {"noise_power", task.noise_power},
                       {"total_beam_power_w", beam_power.sum()}};
    if (!solver.is_null()) {
        report_.summary["power_min"] = solver;
    }
}

void Runner::run_estimate(const EstimateTask& task) {
    const ApertureGrid tx_grid = aperture_grid(scenario_.tx, tx_order_);
    const ApertureGrid rx_grid = aperture_grid(scenario_.rx, rx_order_);

    const std::vector<DictionaryAtom> atoms = timed("dictionary", [&] {
        const WavenumberGrid tx_waves = build_grid(scenario_.tx, scenario_.carrier);
        const WavenumberGrid rx_waves = build_grid(scenario_.rx, scenario_.carrier);
        return farfield_dictionary(tx_waves, rx_waves);
    });

    const PilotSchedule schedule = timed("schedule", [&] {
        return random_pilot_schedule(tx_grid, rx_grid, task.pilots, task.noise_level, seed_);
    });
    const SensingMatrix sensing =
        timed("sensing_matrix", [&] { return sensing_matrix(schedule, atoms); });

    KernelFn truth;
    std::vector<Eigen::Index> planted;
    if (task.planted_atoms > 0) {
        if (static_cast<std::size_t>(task.planted_atoms) > atoms.size()) {
            throw config_error("planted_atoms = " + std::to_string(task.planted_atoms) +
                               " exceeds the dictionary size " + std::to_string(atoms.size()));
        }
        detail::Rng rng(seed_ + 2);
        std::set<Eigen::Index> chosen;
        while (chosen.size() < static_cast<std::size_t>(task.planted_atoms)) {
            chosen.insert(static_cast<Eigen::Index>(rng.raw() % atoms.size()));
        }
        SparseEstimate ground;
        ground.coefficients = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(atoms.size()));
        for (Eigen::Index index : chosen) {
            ground.coefficients[index] = rng.cnormal();
            ground.support.push_back(index);
            planted.push_back(index);
        }
        truth = reconstruct_channel(ground, atoms);
    } else {
        truth = bind_channel(scenario_.rx).kernel();
    }

    const Eigen::VectorXcd v =
        timed("measure", [&] { return measure(truth, schedule, seed_ + 1); });

    OmpStop stop;
    if (task.planted_atoms > 0) {
        stop.sparsity = task.planted_atoms;
    } else if (task.noise_level > 0.0) {
        stop.residual = std::sqrt(task.noise_level * schedule.combiner_energy.sum());
    }
    const SparseEstimate estimate =
        timed("omp", [&] { return omp_recover(sensing, v, stop); });

    const KernelFn reconstructed = reconstruct_channel(estimate, atoms);
    const double truth_norm_sq =
        timed("nmse", [&] { return kernel_l2_norm_sq(truth, tx_grid, rx_grid); });
    const double error_sq = kernel_l2_distance_sq(truth, reconstructed, tx_grid, rx_grid);
    const double nmse = truth_norm_sq > 0.0
                            ? error_sq / truth_norm_sq
                            : std::numeric_limits<double>::quiet_NaN();

    auto csv_out = open_csv("estimate.csv");
    export_estimate(estimate, csv_out);
    finish_csv(csv_out, "estimate.csv");

    json support = json::array();
    for (Eigen::Index index : estimate.support) {
        support.push_back(index);
    }
    report_.summary = {{"nmse", nmse},
                       {"residual_norm", estimate.residual_norm},
                       {"support", support},
                       {"atoms", atoms.size()},
                       {"measurements", schedule.length()},
                       {"noise_level", task.noise_level}};
    if (!planted.empty()) {
        std::vector<Eigen::Index> expected = planted;
        std::vector<Eigen::Index> found = estimate.support;
        std::sort(expected.begin(), expected.end());
        std::sort(found.begin(), found.end());
        json planted_json = json::array();
        for (Eigen::Index index : expected) {
            planted_json.push_back(index);
        }
        report_.summary["planted_support"] = planted_json;
        report_.summary["support_recovered"] = (expected == found);
    }
}

void Runner::run_channel_sample(const ChannelSampleTask& task) {
    const BoundChannel bound = timed("bind_channel", [&] { return bind_channel(scenario_.rx); });
    const KernelFn kernel = bound.kernel();

    const auto lattice = [](const PlanarAperture& ap, int per_axis) {
        std::vector<Eigen::Vector3d> points;
        points.reserve(static_cast<std::size_t>(per_axis) * per_axis);
        for (int ix = 0; ix < per_axis; ++ix) {
            for (int iz = 0; iz < per_axis; ++iz) {
                const double lx = ((ix + 0.5) / per_axis - 0.5) * ap.len_x_m;
                const double lz = ((iz + 0.5) / per_axis - 0.5) * ap.len_z_m;
                points.push_back(local_to_global(ap, {lx, lz}));
            }
        }
        return points;
    };
    const std::vector<Eigen::Vector3d> rx_points = lattice(scenario_.rx, task.rx_points_per_axis);
    const std::vector<Eigen::Vector3d> tx_points = lattice(scenario_.tx, task.tx_points_per_axis);

    auto csv_out = open_csv("channel_samples.csv");
    csv_out << "rx_x_m,rx_y_m,rx_z_m,tx_x_m,tx_y_m,tx_z_m,re,im\n";
    double power_sum = 0.0;
    timed("sample", [&] {
        for (const Eigen::Vector3d& r : rx_points) {
            for (const Eigen::Vector3d& s : tx_points) {
                const cplx h = kernel(r, s);
                power_sum += std::norm(h);
                csv::field(csv_out, r.x()) << ',';
                csv::field(csv_out, r.y()) << ',';
                csv::field(csv_out, r.z()) << ',';
                csv::field(csv_out, s.x()) << ',';
                csv::field(csv_out, s.y()) << ',';
                csv::field(csv_out, s.z()) << ',';
                csv::field(csv_out, h) << '\n';
            }
        }
    });
    finish_csv(csv_out, "channel_samples.csv");

    const std::size_t count = rx_points.size() * tx_points.size();
    report_.summary = {{"samples", count},
                       {"mean_power", count > 0 ? power_sum / static_cast<double>(count) : 0.0}};
    if (bound.realization) {
        report_.summary["tx_cells"] = bound.realization->tx_cells.size();
        report_.summary["rx_cells"] = bound.realization->rx_cells.size();
    }
}

void Runner::run_coupling(const CouplingTask& task) {
    const ApertureGrid tx_grid = aperture_grid(scenario_.tx, tx_order_);
    const Eigen::Vector3cd tx_dir = scenario_.tx.orientation.matrix.col(2).cast<cplx>();
    SampledCurrent tx_current{tx_grid,
                              std::vector<Eigen::Vector3cd>(tx_grid.size(), tx_dir),
                              cplx(1.0, 0.0)};

    auto csv_out = open_csv("coupling.csv");
    csv_out << "distance_m,re_ohm,im_ohm,region\n";
    json rows = json::array();
    for (std::size_t i = 0; i < task.distances_m.size(); ++i) {
        const double distance = task.distances_m[i];
        timed("distance " + std::to_string(i), [&] {
            const PlanarAperture rx = rx_at_distance(distance);
            const ApertureGrid rx_grid = aperture_grid(rx, rx_order_);
            const Eigen::Vector3cd rx_dir = rx.orientation.matrix.col(2).cast<cplx>();
            const SampledCurrent rx_current{
                rx_grid, std::vector<Eigen::Vector3cd>(rx_grid.size(), rx_dir), cplx(1.0, 0.0)};
            const cplx z12 = mutual_impedance(rx_current, tx_current, scenario_.carrier);
            const char* region = region_name(classify(distance));

            csv::field(csv_out, distance) << ',';
            csv::field(csv_out, z12) << ',' << region << '\n';
            rows.push_back({{"distance_m", distance},
                            {"re_ohm", z12.real()},
                            {"im_ohm", z12.imag()},
                            {"region", region}});
        });
    }
    finish_csv(csv_out, "coupling.csv");

    const Carrier& carrier = scenario_.carrier;
    report_.summary = {{"rows", rows},
                       {"wavelength_m", carrier.wavelength_m},
                       {"reactive_rule", "classical"},
                       {"aperture_diameter_m",
                        std::max(scenario_.tx.diameter(), scenario_.rx.diameter())}};
}

void Runner::run_power(const PowerTask& task) {
    const PortBasis basis = timed("basis", [&] {
        return pixel_basis(scenario_.tx, task.ports_x, task.ports_z, tx_order_);
    });
    const double surface = task.surface_resistance_ohm;
    const PowerMatrices matrices = timed("power_matrices", [&] {
        return circuit_power_matrices(basis, scenario_.carrier,
                                      [surface](const Eigen::Vector3d&) { return surface; });
    });

    const Eigen::Index ports = basis.ports();
    const Eigen::MatrixXcd z = matrices.radiation_resistance + matrices.loss +
                               task.extra_resistance_ohm *
                                   Eigen::MatrixXcd::Identity(ports, ports);

    const auto write_matrix = [&](const std::string& name, const Eigen::MatrixXcd& m) {
        auto out = open_csv(name);
        out << "row,col,re_ohm,im_ohm\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                out << r << ',' << c << ',';
                csv::field(out, m(r, c)) << '\n';
            }
        }
        finish_csv(out, name);
    };
    write_matrix("radiation_resistance.csv", matrices.radiation_resistance);
    write_matrix("loss_resistance.csv", matrices.loss);

    detail::Rng rng(seed_);
    double max_equivalence_error = 0.0;
    double min_bound_margin = std::numeric_limits<double>::infinity();
    bool bound_ok = true;
    bool source_ok = true;
    SourcePowerReport last_report;
    timed("trials", [&] {
        for (int t = 0; t < task.trials; ++t) {
            Eigen::VectorXcd currents(ports);
            for (Eigen::Index p = 0; p < ports; ++p) {
                currents[p] = rng.cnormal();
            }
            ScalarCurrent x{basis.grid, basis.functions * currents};
            const double quadrature_power = radiated_power(x, scenario_.carrier);
            const double circuit_power =
                0.5 * currents.dot(matrices.radiation_resistance * currents).real();
            const double scale_ref = std::max(std::abs(quadrature_power), 1e-300);
            max_equivalence_error = std::max(
                max_equivalence_error, std::abs(quadrature_power - circuit_power) / scale_ref);

            const double bound = radiated_power_upper_bound(x, scenario_.carrier);
            const double margin = (bound - quadrature_power) / std::max(bound, 1e-300);
            min_bound_margin = std::min(min_bound_margin, margin);
            if (quadrature_power > bound * (1.0 + 1e-12)) {
                bound_ok = false;
            }

            last_report = source_power(currents, z, matrices);
            if (!last_report.source_covers_aperture) {
                source_ok = false;
            }
        }
    });

    if (!bound_ok) {
        report_.warnings.push_back("a trial exceeded the radiated-power bound");
    }
    if (!source_ok) {
        report_.warnings.push_back("a trial drew less source power than the aperture emitted");
    }
    if (!last_report.network_passive) {
        report_.warnings.push_back("impedance model is not passive for the aperture powers");
    }

    report_.summary = {{"ports", ports},
                       {"trials", task.trials},
                       {"surface_resistance_ohm", task.surface_resistance_ohm},
                       {"extra_resistance_ohm", task.extra_resistance_ohm},
                       {"max_equivalence_error", max_equivalence_error},
                       {"min_bound_margin", min_bound_margin},
                       {"bound_satisfied", bound_ok},
                       {"source_covers_aperture", source_ok},
                       {"network_passive", last_report.network_passive},
                       {"passivity_margin_w", last_report.passivity_margin_w}};
}

}  // namespace

RunReport run(const Scenario& scenario, const RunOptions& options) {
    Runner runner(scenario, options);
    return runner.execute();
}

}  // namespace capa

#include "capa/channel.hpp"

#include "capa/detail/rng.hpp"
#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"
#include "capa/quadrature.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

namespace capa {

namespace {

cplx los_prefactor(const Carrier& carrier) {
    return cplx(0.0, -1.0) * carrier.impedance_ohm * carrier.wavenumber_rad_per_m;
}

void validate_scatterers(const UniPolLosChannel& channel,
                         const std::vector<Scatterer>& scatterers) {
    for (const Scatterer& sc : scatterers) {
        if (point_on_aperture(channel.tx, sc.position_m) ||
            point_on_aperture(channel.rx, sc.position_m))
            throw domain_error("scatterer lies on an aperture");
    }
}

double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

struct DiskGrid {
    std::vector<WavenumberCell> cells;
    std::vector<double> density;  // angular power density at each cell midpoint
    double cell_area = 0.0;
};

DiskGrid disk_grid(const AngularSide& side, const Carrier& carrier, int cells_per_axis) {
    const double k0 = carrier.wavenumber_rad_per_m;
    const double step = 2.0 * k0 / cells_per_axis;
    DiskGrid grid;
    grid.cell_area = step * step;
    for (int ix = 0; ix < cells_per_axis; ++ix) {
        const double cx = -k0 + (ix + 0.5) * step;
        for (int iz = 0; iz < cells_per_axis; ++iz) {
            const double cz = -k0 + (iz + 0.5) * step;
            const double corner =
                std::hypot(std::abs(cx) + 0.5 * step, std::abs(cz) + 0.5 * step);
            if (corner >= k0)
                continue;  // rim exclusion: gamma -> 0 there
            const double gamma = std::sqrt(k0 * k0 - cx * cx - cz * cz);
            WavenumberCell cell;
            cell.center_rad_per_m = Eigen::Vector2d(cx, cz);
            cell.gamma_rad_per_m = gamma;
            const double theta = std::acos(clamp_unit(cz / k0));
            const double phi = std::atan2(gamma, cx);
            grid.cells.push_back(cell);
            grid.density.push_back(side_density(theta, phi, side, carrier));
        }
    }
    return grid;
}

// Plane-wave phase factors e^{j sign (kappa . local)} for every cell.
Eigen::VectorXcd cell_phases(const std::vector<WavenumberCell>& cells,
                             const Eigen::Vector2d& local, double sign) {
    const std::size_t n = cells.size();
    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i)
        phase[i] = sign * cells[i].center_rad_per_m.dot(local);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(n));
    std::vector<double> re(n), im(n);
    simd::cis_batch(phase.data(), n, re.data(), im.data());
    for (std::size_t i = 0; i < n; ++i)
        out[static_cast<Eigen::Index>(i)] = cplx(re[i], im[i]);
    return out;
}

} // namespace

UniPolLosChannel make_los_channel(const PlanarAperture& tx, const PlanarAperture& rx,
                                  const Carrier& carrier) {
    if (apertures_intersect(tx, rx))
        throw domain_error("los channel: apertures intersect");
    UniPolLosChannel channel;
    channel.tx = tx;
    channel.rx = rx;
    channel.carrier = carrier;
    channel.polarization_mode = PolarizationMode::simplified;
    return channel;
}

UniPolLosChannel make_los_channel(const PlanarAperture& tx, const PlanarAperture& rx,
                                  const Carrier& carrier, const Polarization& p_t,
                                  const Polarization& p_r) {
    UniPolLosChannel channel = make_los_channel(tx, rx, carrier);
    channel.polarization_mode = PolarizationMode::matched;
    channel.p_t = p_t;
    channel.p_r = p_r;
    return channel;
}

cplx los_kernel(const UniPolLosChannel& channel, const Eigen::Vector3d& r,
                const Eigen::Vector3d& s) {
    const double distance = (r - s).norm();
    cplx h = los_prefactor(channel.carrier) * scalar_green(distance, channel.carrier);
    if (channel.polarization_mode == PolarizationMode::matched)
        h *= polarization_factor(r, s, channel.p_r, channel.p_t);
    return h;
}

Eigen::Matrix3cd los_kernel_tripol(const PlanarAperture& tx, const PlanarAperture& rx,
                                   const Carrier& carrier, const Eigen::Vector3d& r,
                                   const Eigen::Vector3d& s) {
    if (apertures_intersect(tx, rx))
        throw domain_error("los channel: apertures intersect");
    return dyadic_green(r, s, carrier, GreenMode::radiative);
}

cplx multipath_kernel(const UniPolLosChannel& channel, const std::vector<Scatterer>& scatterers,
                      const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
    validate_scatterers(channel, scatterers);
    cplx h = los_kernel(channel, r, s);
    for (const Scatterer& sc : scatterers)
        h += sc.gain * los_kernel(channel, r, sc.position_m) *
             los_kernel(channel, sc.position_m, s);
    return h;
}

Eigen::Matrix3cd multipath_kernel_tripol(const PlanarAperture& tx, const PlanarAperture& rx,
                                         const Carrier& carrier,
                                         const std::vector<Scatterer>& scatterers,
                                         const std::vector<Eigen::Matrix3cd>& scatter_matrices,
                                         const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
    if (scatterers.size() != scatter_matrices.size())
        throw domain_error("multipath: one scatter matrix required per scatterer");
    Eigen::Matrix3cd h = los_kernel_tripol(tx, rx, carrier, r, s);
    for (std::size_t i = 0; i < scatterers.size(); ++i) {
        const Eigen::Vector3d& q = scatterers[i].position_m;
        h += dyadic_green(r, q, carrier, GreenMode::radiative) * scatter_matrices[i] *
             dyadic_green(q, s, carrier, GreenMode::radiative);
    }
    return h;
}

cplx doubly_dispersive_kernel(const UniPolLosChannel& channel,
                              const std::vector<Scatterer>& scatterers,
                              const Eigen::Vector3d& r, const Eigen::Vector3d& s,
                              double t_s, double tau_s, double delta_fn_width_s) {
    if (!(delta_fn_width_s > 0.0))
        throw config_error("doubly dispersive kernel: tap width must be positive");
    validate_scatterers(channel, scatterers);
    const double inv_width = 1.0 / delta_fn_width_s;
    const auto in_tap = [&](double tap_delay) {
        return std::abs(tau_s - tap_delay) < 0.5 * delta_fn_width_s;
    };
    cplx h(0.0, 0.0);
    const double tau_los = (r - s).norm() / light_speed_m_per_s;
    if (in_tap(tau_los))
        h += los_kernel(channel, r, s) * inv_width;
    if (scatterers.empty())
        return h;
    const double inv_sqrt_ns = 1.0 / std::sqrt(static_cast<double>(scatterers.size()));
    for (const Scatterer& sc : scatterers) {
        if (!in_tap(sc.delay_s))
            continue;
        const double phase = 2.0 * pi * sc.doppler_hz * t_s;
        h += inv_sqrt_ns * sc.gain * cplx(std::cos(phase), std::sin(phase)) *
             los_kernel(channel, r, sc.position_m) * los_kernel(channel, sc.position_m, s) *
             inv_width;
    }
    return h;
}

AngularSide isotropic_side() { return AngularSide{}; }

AngularSide vmf_side(std::vector<VmfCluster> clusters) {
    if (clusters.empty())
        throw config_error("vmf side: at least one cluster required");
    double total = 0.0;
    for (const VmfCluster& c : clusters) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            throw config_error("vmf side: cluster weights must lie in (0, 1]");
        if (c.concentration < 0.0)
            throw config_error("vmf side: concentration must be nonnegative");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw config_error("vmf side: cluster weights must sum to 1");
    AngularSide side;
    side.isotropic = false;
    side.clusters = std::move(clusters);
    return side;
}

double vmf_density(double theta_rad, double phi_rad, const VmfCluster& cluster,
                   const Carrier& carrier) {
    const double base = 2.0 * pi / carrier.wavenumber_rad_per_m;
    const double scale = base * base;
    const double alpha = cluster.concentration;
    if (alpha < 1e-12)
        return scale;
    const double dot = std::sin(theta_rad) * std::sin(cluster.modal_theta_rad) *
                           std::cos(phi_rad - cluster.modal_phi_rad) +
                       std::cos(theta_rad) * std::cos(cluster.modal_theta_rad);
    // (alpha / sinh alpha) e^{alpha dot} = 2 alpha e^{alpha (dot - 1)} / (1 - e^{-2 alpha}),
    // stable for arbitrarily large alpha since dot <= 1.
    return scale * 2.0 * alpha * std::exp(alpha * (dot - 1.0)) / (1.0 - std::exp(-2.0 * alpha));
}

double side_density(double theta_rad, double phi_rad, const AngularSide& side,
                    const Carrier& carrier) {
    if (side.isotropic) {
        const double base = 2.0 * pi / carrier.wavenumber_rad_per_m;
        return base * base;
    }
    double density = 0.0;
    for (const VmfCluster& c : side.clusters)
        density += c.weight * vmf_density(theta_rad, phi_rad, c, carrier);
    return density;
}

double angular_power(double theta_r_rad, double phi_r_rad, double theta_t_rad,
                     double phi_t_rad, const AngularSpectrum& spectrum,
                     const Carrier& carrier) {
    return side_density(theta_r_rad, phi_r_rad, spectrum.rx_side, carrier) *
           side_density(theta_t_rad, phi_t_rad, spectrum.tx_side, carrier);
}

CorrelationRealization sample_correlation_channel(const AngularSpectrum& spectrum,
                                                  const PlanarAperture& tx,
                                                  const PlanarAperture& rx,
                                                  const Carrier& carrier, int cells_per_axis,
                                                  std::uint64_t seed) {
    if (cells_per_axis < 8)
        throw config_error("correlation channel: cells_per_axis must be at least 8");
    DiskGrid rx_grid = disk_grid(spectrum.rx_side, carrier, cells_per_axis);
    DiskGrid tx_grid = disk_grid(spectrum.tx_side, carrier, cells_per_axis);
    if (rx_grid.cells.empty() || tx_grid.cells.empty())
        throw config_error("correlation channel: no wavenumber cells inside the disk");

    CorrelationRealization out;
    out.tx = tx;
    out.rx = rx;
    out.carrier = carrier;
    out.tx_cells = std::move(tx_grid.cells);
    out.rx_cells = std::move(rx_grid.cells);
    out.tx_cell_area = tx_grid.cell_area;
    out.rx_cell_area = rx_grid.cell_area;
    out.seed = seed;

    const auto n_rx = static_cast<Eigen::Index>(out.rx_cells.size());
    const auto n_tx = static_cast<Eigen::Index>(out.tx_cells.size());

    // Per-pair variance proportional to S(k, kappa) = p_r p_t / (gamma gamma),
    // normalized over the retained cells so E|h|^2 = 1 exactly.
    Eigen::VectorXd rx_factor(n_rx), tx_factor(n_tx);
    for (Eigen::Index i = 0; i < n_rx; ++i)
        rx_factor[i] = rx_grid.density[static_cast<std::size_t>(i)] /
                       out.rx_cells[static_cast<std::size_t>(i)].gamma_rad_per_m;
    for (Eigen::Index j = 0; j < n_tx; ++j)
        tx_factor[j] = tx_grid.density[static_cast<std::size_t>(j)] /
                       out.tx_cells[static_cast<std::size_t>(j)].gamma_rad_per_m;
    const double norm = rx_factor.sum() * tx_factor.sum();
    if (!(norm > 0.0))
        throw numerical_error("correlation channel: spectrum mass vanished on the grid");

    detail::Rng rng(seed);
    out.gains.resize(n_rx, n_tx);
    for (Eigen::Index i = 0; i < n_rx; ++i) {
        for (Eigen::Index j = 0; j < n_tx; ++j) {
            const double stddev = std::sqrt(rx_factor[i] * tx_factor[j] / norm);
            out.gains(i, j) = stddev * rng.cnormal();
        }
    }
    return out;
}

cplx evaluate_realization(const CorrelationRealization& realization, const Eigen::Vector3d& r,
                          const Eigen::Vector3d& s) {
    if (realization.gains.size() == 0)
        return cplx(0.0, 0.0);
    const Eigen::Vector2d lr = global_to_local(realization.rx, r);
    const Eigen::Vector2d ls = global_to_local(realization.tx, s);
    const Eigen::VectorXcd a = cell_phases(realization.rx_cells, lr, -1.0);
    const Eigen::VectorXcd b = cell_phases(realization.tx_cells, ls, 1.0);
    return (a.transpose() * (realization.gains * b)).value();
}

double los_mean_power(const UniPolLosChannel& channel) {
    const int order_tx =
        std::min(default_order(channel.tx, channel.carrier), 16);
    const int order_rx =
        std::min(default_order(channel.rx, channel.carrier), 16);
    const ApertureGrid gt = aperture_grid(channel.tx, order_tx);
    const ApertureGrid gr = aperture_grid(channel.rx, order_rx);
    double acc = 0.0;
    for (std::size_t i = 0; i < gr.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const cplx h = los_kernel(channel, gr.nodes_global[i], gt.nodes_global[j]);
            acc += gr.weights[i] * gt.weights[j] * std::norm(h);
        }
    }
    return acc / (channel.tx.area() * channel.rx.area());
}

RicianChannel make_rician(const UniPolLosChannel& los, CorrelationRealization realization,
                          double k_factor) {
    if (!(k_factor >= 0.0))
        throw domain_error("rician: K-factor must be nonnegative");
    RicianChannel channel;
    channel.los = los;
    channel.nlos = std::move(realization);
    channel.k_factor = k_factor;
    channel.los_scale = 1.0 / std::sqrt(los_mean_power(los));
    return channel;
}

cplx rician_kernel(const RicianChannel& channel, const Eigen::Vector3d& r,
                   const Eigen::Vector3d& s) {
    double los_weight;
    double nlos_weight;
    if (std::isinf(channel.k_factor)) {
        los_weight = 1.0;
        nlos_weight = 0.0;
    } else {
        los_weight = std::sqrt(channel.k_factor / (channel.k_factor + 1.0));
        nlos_weight = std::sqrt(1.0 / (channel.k_factor + 1.0));
    }
    cplx h = los_weight * channel.los_scale * los_kernel(channel.los, r, s);
    if (nlos_weight != 0.0)
        h += nlos_weight * evaluate_realization(channel.nlos, r, s);
    return h;
}

cplx rician_kernel(const UniPolLosChannel& los, const CorrelationRealization& realization,
                   double k_factor, const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
    return rician_kernel(make_rician(los, realization, k_factor), r, s);
}

} // namespace capa

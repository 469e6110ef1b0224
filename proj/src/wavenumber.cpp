#include "capa/wavenumber.hpp"

#include "capa/detail/blas.hpp"
#include "capa/detail/csv.hpp"
#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace capa {

namespace {

bool same_aperture(const PlanarAperture& a, const PlanarAperture& b) {
    const double scale = std::max({a.diameter(), b.diameter(), 1.0});
    return (a.center_m - b.center_m).norm() <= 1e-12 * scale &&
           std::abs(a.len_x_m - b.len_x_m) <= 1e-12 * scale &&
           std::abs(a.len_z_m - b.len_z_m) <= 1e-12 * scale &&
           (a.orientation.matrix - b.orientation.matrix).norm() <= 1e-12;
}

// Phase factors e^{j sign k_i . local_j} for one spectral index over all nodes.
Eigen::VectorXcd node_phases(const Eigen::Vector2d& wavevector,
                             const std::vector<Eigen::Vector2d>& locals, double sign) {
    const std::size_t n = locals.size();
    std::vector<double> phase(n), re(n), im(n);
    for (std::size_t i = 0; i < n; ++i)
        phase[i] = sign * wavevector.dot(locals[i]);
    simd::cis_batch(phase.data(), n, re.data(), im.data());
    Eigen::VectorXcd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        out[static_cast<Eigen::Index>(i)] = cplx(re[i], im[i]);
    return out;
}

int rule_order(const WavenumberGrid& tx_grid, const WavenumberGrid& rx_grid) {
    return std::max(default_order(tx_grid.aperture, tx_grid.carrier),
                    default_order(rx_grid.aperture, rx_grid.carrier));
}

} // namespace

WavenumberGrid build_grid(const PlanarAperture& aperture, const Carrier& carrier) {
    const double half_lambda = 0.5 * carrier.wavelength_m;
    if (aperture.len_x_m < half_lambda * (1.0 - 1e-12) ||
        aperture.len_z_m < half_lambda * (1.0 - 1e-12))
        throw config_error(
            "wavenumber grid: aperture edges must be at least half a wavelength");
    WavenumberGrid grid;
    grid.aperture = aperture;
    grid.carrier = carrier;
    grid.dkx_rad_per_m = 2.0 * pi / aperture.len_x_m;
    grid.dkz_rad_per_m = 2.0 * pi / aperture.len_z_m;
    const double k0 = carrier.wavenumber_rad_per_m;
    const double limit = k0 * k0 * (1.0 + 1e-12);
    const int m_max = static_cast<int>(std::floor(k0 / grid.dkx_rad_per_m * (1.0 + 1e-12)));
    const int n_max = static_cast<int>(std::floor(k0 / grid.dkz_rad_per_m * (1.0 + 1e-12)));
    for (int m = -m_max; m <= m_max; ++m) {
        const double kx = m * grid.dkx_rad_per_m;
        for (int n = -n_max; n <= n_max; ++n) {
            const double kz = n * grid.dkz_rad_per_m;
            if (kx * kx + kz * kz <= limit)
                grid.indices.emplace_back(m, n);
        }
    }
    return grid;
}

cplx transmit_spectrum(const ScalarCurrent& x, const WavenumberGrid& grid,
                       std::size_t kappa_index) {
    if (!same_aperture(x.grid.aperture, grid.aperture))
        throw domain_error("transmit spectrum: current and grid apertures differ");
    if (static_cast<std::size_t>(x.values.size()) != x.grid.size())
        throw domain_error("transmit spectrum: current sample count does not match grid");
    if (kappa_index >= grid.size())
        throw domain_error("transmit spectrum: wavenumber index out of range");
    const Eigen::VectorXcd phases =
        node_phases(grid.wavevector(kappa_index), x.grid.nodes_local, -1.0);
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < x.grid.size(); ++i)
        acc += x.grid.weights[i] * x.values[static_cast<Eigen::Index>(i)] *
               phases[static_cast<Eigen::Index>(i)];
    return acc;
}

cplx spectral_entry(const KernelFn& h, std::size_t k_index, std::size_t kappa_index,
                    const WavenumberGrid& tx_grid, const WavenumberGrid& rx_grid,
                    int quadrature_order, bool* below_rule) {
    if (k_index >= rx_grid.size() || kappa_index >= tx_grid.size())
        throw domain_error("spectral entry: wavenumber index out of range");
    if (below_rule != nullptr)
        *below_rule = quadrature_order < rule_order(tx_grid, rx_grid);
    const ApertureGrid gt = aperture_grid(tx_grid.aperture, quadrature_order);
    const ApertureGrid gr = aperture_grid(rx_grid.aperture, quadrature_order);
    const Eigen::VectorXcd rx_phase = node_phases(rx_grid.wavevector(k_index), gr.nodes_local, -1.0);
    const Eigen::VectorXcd tx_phase = node_phases(tx_grid.wavevector(kappa_index), gt.nodes_local, 1.0);
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < gr.size(); ++i) {
        cplx row(0.0, 0.0);
        for (std::size_t j = 0; j < gt.size(); ++j)
            row += gt.weights[j] * h(gr.nodes_global[i], gt.nodes_global[j]) *
                   tx_phase[static_cast<Eigen::Index>(j)];
        acc += gr.weights[i] * rx_phase[static_cast<Eigen::Index>(i)] * row;
    }
    return acc;
}

SpectralChannel assemble_spectral_channel(const KernelFn& h, const WavenumberGrid& tx_grid,
                                          const WavenumberGrid& rx_grid, int quadrature_order,
                                          std::size_t budget) {
    if (tx_grid.size() > budget || rx_grid.size() > budget)
        throw config_error("spectral channel: grid cardinality (tx=" +
                           std::to_string(tx_grid.size()) +
                           ", rx=" + std::to_string(rx_grid.size()) +
                           ") exceeds the per-side budget of " + std::to_string(budget));
    SpectralChannel out;
    out.tx_grid = tx_grid;
    out.rx_grid = rx_grid;
    out.quadrature_order = quadrature_order;
    out.order_below_rule = quadrature_order < rule_order(tx_grid, rx_grid);

    const ApertureGrid gt = aperture_grid(tx_grid.aperture, quadrature_order);
    const ApertureGrid gr = aperture_grid(rx_grid.aperture, quadrature_order);
    const auto m_r = static_cast<Eigen::Index>(gr.size());
    const auto m_t = static_cast<Eigen::Index>(gt.size());
    const auto n_r = static_cast<Eigen::Index>(rx_grid.size());
    const auto n_t = static_cast<Eigen::Index>(tx_grid.size());

    // Shared read-only tables: kernel samples and per-index phase rows. Each
    // output entry is an independent bilinear form over these tables.
    Eigen::MatrixXcd kernel(m_r, m_t);
    for (Eigen::Index i = 0; i < m_r; ++i)
        for (Eigen::Index j = 0; j < m_t; ++j)
            kernel(i, j) = h(gr.nodes_global[static_cast<std::size_t>(i)],
                             gt.nodes_global[static_cast<std::size_t>(j)]);

    Eigen::MatrixXcd rx_proj(n_r, m_r);  // rows: w_r e^{-j k_p . r'}
    for (Eigen::Index p = 0; p < n_r; ++p) {
        const Eigen::VectorXcd phases =
            node_phases(rx_grid.wavevector(static_cast<std::size_t>(p)), gr.nodes_local, -1.0);
        for (Eigen::Index i = 0; i < m_r; ++i)
            rx_proj(p, i) = gr.weights[static_cast<std::size_t>(i)] * phases[i];
    }
    Eigen::MatrixXcd tx_proj(m_t, n_t);  // cols: w_t e^{+j kappa_m . s'}
    for (Eigen::Index m = 0; m < n_t; ++m) {
        const Eigen::VectorXcd phases =
            node_phases(tx_grid.wavevector(static_cast<std::size_t>(m)), gt.nodes_local, 1.0);
        for (Eigen::Index j = 0; j < m_t; ++j)
            tx_proj(j, m) = gt.weights[static_cast<std::size_t>(j)] * phases[j];
    }

    const double scale =
        tx_grid.dkx_rad_per_m * tx_grid.dkz_rad_per_m / (4.0 * pi * pi);
    out.matrix = blasx::gemm(blasx::gemm(rx_proj, kernel), tx_proj) * scale;
    for (Eigen::Index p = 0; p < n_r; ++p)
        for (Eigen::Index m = 0; m < n_t; ++m)
            if (std::abs(out.matrix(p, m)) < 1e-14)
                out.matrix(p, m) = cplx(0.0, 0.0);
    return out;
}

cplx reconstruct_current(const Eigen::VectorXcd& coefficients, const WavenumberGrid& grid,
                         const Eigen::Vector2d& s_local) {
    if (static_cast<std::size_t>(coefficients.size()) != grid.size())
        throw domain_error("reconstruct current: coefficient count does not match grid");
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double phase = grid.wavevector(i).dot(s_local);
        acc += coefficients[static_cast<Eigen::Index>(i)] * cplx(std::cos(phase), std::sin(phase));
    }
    return acc * (grid.dkx_rad_per_m * grid.dkz_rad_per_m / (4.0 * pi * pi));
}

namespace {

void write_grid_header(std::ostream& os, const char* tag, const WavenumberGrid& grid) {
    os << "# " << tag << "_aperture_center," << csv::format(grid.aperture.center_m.x()) << ','
       << csv::format(grid.aperture.center_m.y()) << ','
       << csv::format(grid.aperture.center_m.z()) << '\n';
    os << "# " << tag << "_aperture_edges," << csv::format(grid.aperture.len_x_m) << ','
       << csv::format(grid.aperture.len_z_m) << '\n';
    os << "# " << tag << "_orientation";
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            os << ',' << csv::format(grid.aperture.orientation.matrix(r, c));
    os << '\n';
    os << "# " << tag << "_spacing," << csv::format(grid.dkx_rad_per_m) << ','
       << csv::format(grid.dkz_rad_per_m) << '\n';
    os << "# " << tag << "_indices";
    for (const Eigen::Vector2i& idx : grid.indices)
        os << ',' << idx.x() << ':' << idx.y();
    os << '\n';
}

} // namespace

void export_spectral_channel(const SpectralChannel& channel, std::ostream& os) {
    os << "# spectral_channel_v1\n";
    os << "# frequency_hz," << csv::format(channel.tx_grid.carrier.frequency_hz) << '\n';
    write_grid_header(os, "tx", channel.tx_grid);
    write_grid_header(os, "rx", channel.rx_grid);
    os << "# quadrature_order," << channel.quadrature_order << ",below_rule,"
       << (channel.order_below_rule ? 1 : 0) << '\n';
    os << "# rows_rx," << channel.matrix.rows() << ",cols_tx," << channel.matrix.cols()
       << ",format,re:im\n";
    for (Eigen::Index p = 0; p < channel.matrix.rows(); ++p) {
        for (Eigen::Index m = 0; m < channel.matrix.cols(); ++m) {
            if (m != 0)
                os << ',';
            csv::field(os, channel.matrix(p, m));
        }
        os << '\n';
    }
}

} // namespace capa

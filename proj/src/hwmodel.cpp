#include "capa/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "capa/detail/blas.hpp"
#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"

namespace capa {

namespace {

Eigen::VectorXd weight_vector(const ApertureGrid& grid) {
    return Eigen::Map<const Eigen::VectorXd>(grid.weights.data(),
                                             static_cast<Eigen::Index>(grid.weights.size()));
}

// C(i, j) = w_i w_j c_z(s_i - s_j), the quadrature image of the coupling kernel.
Eigen::MatrixXd coupling_quadratic_form(const ApertureGrid& grid, const Carrier& carrier) {
    const std::size_t n = grid.size();
    std::vector<double> qx(n), qy(n), qz(n), row(n);
    for (std::size_t j = 0; j < n; ++j) {
        qx[j] = grid.nodes_global[j].x();
        qy[j] = grid.nodes_global[j].y();
        qz[j] = grid.nodes_global[j].z();
    }
    Eigen::MatrixXd c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p[3] = {qx[i], qy[i], qz[i]};
        simd::coupling_z_batch(p, qx.data(), qy.data(), qz.data(), n,
                               carrier.wavenumber_rad_per_m, carrier.impedance_ohm, row.data());
        for (std::size_t j = 0; j < n; ++j)
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                grid.weights[i] * grid.weights[j] * row[j];
    }
    return c;
}

Eigen::VectorXd resistance_samples(const ApertureGrid& grid,
                                   const SurfaceResistanceFn& resistance_ohm) {
    if (!resistance_ohm)
        throw domain_error("surface resistance: callable is empty");
    Eigen::VectorXd samples(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double value = resistance_ohm(grid.nodes_global[j]);
        if (!(value >= 0.0))
            throw domain_error("surface resistance: negative value at a quadrature node");
        samples[static_cast<Eigen::Index>(j)] = value;
    }
    return samples;
}

void check_ports(const PortBasis& basis, const Eigen::MatrixXcd& admittance) {
    if (admittance.rows() != admittance.cols() || admittance.rows() != basis.ports())
        throw domain_error("circuit network: admittance must be square over the basis ports");
}

} // namespace

PortBasis make_port_basis(ApertureGrid grid, Eigen::MatrixXcd functions) {
    if (functions.rows() != static_cast<Eigen::Index>(grid.size()))
        throw domain_error("port basis: functions must be sampled on the grid nodes");
    if (functions.cols() < 1)
        throw domain_error("port basis: at least one port is required");
    if (!functions.allFinite())
        throw domain_error("port basis: functions contain non-finite samples");
    PortBasis basis;
    basis.grid = std::move(grid);
    basis.functions = std::move(functions);
    return basis;
}

PortBasis pixel_basis(const PlanarAperture& aperture, int ports_x, int ports_z,
                      int quadrature_order) {
    if (ports_x < 1 || ports_z < 1)
        throw config_error("pixel basis: port counts must be positive");
    ApertureGrid grid = aperture_grid(aperture, quadrature_order);
    const auto nodes = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd functions =
        Eigen::MatrixXcd::Zero(nodes, static_cast<Eigen::Index>(ports_x) * ports_z);
    const double pitch_x = aperture.len_x_m / ports_x;
    const double pitch_z = aperture.len_z_m / ports_z;
    for (Eigen::Index j = 0; j < nodes; ++j) {
        const Eigen::Vector2d& local = grid.nodes_local[static_cast<std::size_t>(j)];
        const int px = std::min(
            ports_x - 1,
            std::max(0, static_cast<int>((local.x() + 0.5 * aperture.len_x_m) / pitch_x)));
        const int pz = std::min(
            ports_z - 1,
            std::max(0, static_cast<int>((local.y() + 0.5 * aperture.len_z_m) / pitch_z)));
        functions(j, static_cast<Eigen::Index>(px) * ports_z + pz) = 1.0;
    }
    return make_port_basis(std::move(grid), std::move(functions));
}

CircuitNetwork make_network(Eigen::MatrixXcd admittance, Eigen::MatrixXcd rx_transfer) {
    if (admittance.rows() != admittance.cols())
        throw domain_error("circuit network: admittance must be square");
    if (rx_transfer.size() != 0 && rx_transfer.rows() != rx_transfer.cols())
        throw domain_error("circuit network: rx transfer must be square");
    CircuitNetwork network;
    network.admittance = std::move(admittance);
    network.rx_transfer = std::move(rx_transfer);
    return network;
}

Eigen::MatrixXcd impedance(const CircuitNetwork& network) {
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(network.admittance);
    if (!lu.isInvertible())
        throw rank_error("circuit network: admittance is singular, impedance undefined");
    return lu.inverse();
}

ScalarCurrent synthesize_current(const PortBasis& basis, const CircuitNetwork& network,
                                 const Eigen::MatrixXcd& precoder,
                                 const Eigen::VectorXcd& symbols) {
    check_ports(basis, network.admittance);
    if (precoder.rows() != basis.ports())
        throw domain_error("synthesize: precoder rows must match the port count");
    if (symbols.size() != precoder.cols())
        throw domain_error("synthesize: symbol count must match the precoder columns");
    ScalarCurrent x;
    x.grid = basis.grid;
    x.values = basis.functions * (network.admittance * (precoder * symbols));
    return x;
}

ScalarCurrent effective_beamformer(const PortBasis& basis, const CircuitNetwork& network,
                                   const Eigen::VectorXcd& w_col) {
    check_ports(basis, network.admittance);
    if (w_col.size() != basis.ports())
        throw domain_error("effective beamformer: column length must match the port count");
    ScalarCurrent w;
    w.grid = basis.grid;
    w.values = basis.functions * (network.admittance * w_col);
    return w;
}

double radiated_power(const ScalarCurrent& x, const Carrier& carrier) {
    if (x.values.size() != static_cast<Eigen::Index>(x.grid.size()))
        throw domain_error("radiated power: current must be sampled on its grid");
    const Eigen::MatrixXd c = coupling_quadratic_form(x.grid, carrier);
    const cplx quad = x.values.dot(c * x.values);  // dot conjugates the left factor
    return 0.5 * quad.real();
}

double radiated_power_upper_bound(const ScalarCurrent& x, const Carrier& carrier) {
    if (x.values.size() != static_cast<Eigen::Index>(x.grid.size()))
        throw domain_error("radiated power bound: current must be sampled on its grid");
    const double energy = x.values.cwiseAbs2().dot(weight_vector(x.grid));
    const double k0 = carrier.wavenumber_rad_per_m;
    return k0 * k0 * carrier.impedance_ohm / (12.0 * pi) * x.grid.aperture.area() * energy;
}

double loss_power(const ScalarCurrent& x, const SurfaceResistanceFn& resistance_ohm) {
    if (x.values.size() != static_cast<Eigen::Index>(x.grid.size()))
        throw domain_error("loss power: current must be sampled on its grid");
    const Eigen::VectorXd r = resistance_samples(x.grid, resistance_ohm);
    return 0.5 * x.values.cwiseAbs2().dot(r.cwiseProduct(weight_vector(x.grid)));
}

double loss_power(const ScalarCurrent& x, double uniform_resistance_ohm) {
    return loss_power(x, [uniform_resistance_ohm](const Eigen::Vector3d&) {
        return uniform_resistance_ohm;
    });
}

PowerMatrices circuit_power_matrices(const PortBasis& basis, const Carrier& carrier,
                                     const SurfaceResistanceFn& resistance_ohm) {
    const Eigen::MatrixXd c = coupling_quadratic_form(basis.grid, carrier);
    PowerMatrices matrices;
    Eigen::MatrixXcd rad =
        blasx::gemm(blasx::gemm(basis.functions, c.cast<cplx>(), 'C'), basis.functions);
    matrices.radiation_resistance = 0.5 * (rad + rad.adjoint());

    const Eigen::VectorXd r = resistance_samples(basis.grid, resistance_ohm);
    const Eigen::VectorXd rw = r.cwiseProduct(weight_vector(basis.grid));
    Eigen::MatrixXcd loss = basis.functions.adjoint() * rw.asDiagonal() * basis.functions;
    matrices.loss = 0.5 * (loss + loss.adjoint());
    return matrices;
}

SourcePowerReport source_power(const Eigen::VectorXcd& port_currents, const Eigen::MatrixXcd& z,
                               const PowerMatrices& matrices) {
    const Eigen::Index n = port_currents.size();
    if (z.rows() != n || z.cols() != n)
        throw domain_error("source power: impedance must be square over the port currents");
    if (matrices.radiation_resistance.rows() != n || matrices.loss.rows() != n)
        throw domain_error("source power: power matrices must match the port count");

    SourcePowerReport report;
    report.source_power_w = 0.5 * port_currents.dot(z * port_currents).real();
    const Eigen::MatrixXcd aperture = matrices.radiation_resistance + matrices.loss;
    report.aperture_power_w = 0.5 * port_currents.dot(aperture * port_currents).real();

    const Eigen::MatrixXcd excess = 0.5 * (z + z.adjoint()) - aperture;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(excess);
    report.passivity_margin_w = eig.eigenvalues().minCoeff();
    const double scale = std::max(aperture.norm(), z.norm());
    report.network_passive = report.passivity_margin_w >= -1e-10 * std::max(scale, 1.0);
    report.source_covers_aperture =
        report.source_power_w >=
        report.aperture_power_w - 1e-10 * std::max(std::abs(report.aperture_power_w), 1.0);
    return report;
}

Eigen::VectorXcd open_circuit_voltages(const PortBasis& basis, const ScalarCurrent& field) {
    if (field.values.size() != static_cast<Eigen::Index>(basis.grid.size()))
        throw domain_error("receive chain: field must be sampled on the basis grid");
    const Eigen::VectorXcd weighted =
        field.values.cwiseProduct(weight_vector(basis.grid).cast<cplx>());
    return basis.functions.adjoint() * weighted;
}

Eigen::VectorXcd receive_streams(const PortBasis& basis, const CircuitNetwork& network,
                                 const Eigen::MatrixXcd& combiner, const ScalarCurrent& field) {
    if (network.rx_transfer.rows() != basis.ports())
        throw domain_error("receive chain: rx transfer must be square over the basis ports");
    if (combiner.rows() != basis.ports())
        throw domain_error("receive chain: combiner rows must match the port count");
    return combiner.adjoint() * (network.rx_transfer * open_circuit_voltages(basis, field));
}

ScalarCurrent effective_receive_beamformer(const PortBasis& basis, const CircuitNetwork& network,
                                           const Eigen::VectorXcd& u_col) {
    if (network.rx_transfer.rows() != basis.ports())
        throw domain_error("receive chain: rx transfer must be square over the basis ports");
    if (u_col.size() != basis.ports())
        throw domain_error("receive chain: combiner column must match the port count");
    ScalarCurrent b;
    b.grid = basis.grid;
    b.values = basis.functions * (network.rx_transfer.adjoint() * u_col);
    return b;
}

} // namespace capa

#pragma once

#include <functional>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

namespace capa {

// Port-to-aperture current basis: functions(j, n) samples the pattern of port n
// at quadrature node j of the shared grid.
struct PortBasis {
    ApertureGrid grid;
    Eigen::MatrixXcd functions;  // node count x port count

    Eigen::Index ports() const { return functions.cols(); }
};

// Validates dimensions and finiteness of user-supplied pattern bases.
PortBasis make_port_basis(ApertureGrid grid, Eigen::MatrixXcd functions);

// Disjoint unit-amplitude rectangular patches, ports_x x ports_z of them tiling
// the aperture, sampled on an order x order quadrature grid. Port index
// n = px * ports_z + pz.
PortBasis pixel_basis(const PlanarAperture& aperture, int ports_x, int ports_z,
                      int quadrature_order);

// Loaded admittance of the transmit ports plus the receive-side transfer matrix
// (either may be identity; rx_transfer may be empty when unused).
struct CircuitNetwork {
    Eigen::MatrixXcd admittance;   // N x N
    Eigen::MatrixXcd rx_transfer;  // M x M, or 0 x 0
};

CircuitNetwork make_network(Eigen::MatrixXcd admittance,
                            Eigen::MatrixXcd rx_transfer = Eigen::MatrixXcd());

// Z = Y^{-1}; a singular admittance throws rank_error.
Eigen::MatrixXcd impedance(const CircuitNetwork& network);

// x(s) = psi^T(s) Y W c sampled on the basis grid.
ScalarCurrent synthesize_current(const PortBasis& basis, const CircuitNetwork& network,
                                 const Eigen::MatrixXcd& precoder, const Eigen::VectorXcd& symbols);

// w_k(s) = psi^T(s) Y w_k for one precoder column.
ScalarCurrent effective_beamformer(const PortBasis& basis, const CircuitNetwork& network,
                                   const Eigen::VectorXcd& w_col);

// Net radiated power: (1/2) iint x^*(s) c_z(s - s') x(s') ds' ds by tensor
// quadrature; diagonal terms use the analytic zero-separation value of the
// coupling coefficient.
double radiated_power(const ScalarCurrent& x, const Carrier& carrier);

// Aperture-area bound (k0^2 eta0 / 12 pi) |S_t| integral |x|^2.
double radiated_power_upper_bound(const ScalarCurrent& x, const Carrier& carrier);

// Ohmic dissipation (1/2) integral Re{Z_s}(s) |x(s)|^2; a negative resistance
// sample throws domain_error.
using SurfaceResistanceFn = std::function<double(const Eigen::Vector3d&)>;
double loss_power(const ScalarCurrent& x, const SurfaceResistanceFn& resistance_ohm);
double loss_power(const ScalarCurrent& x, double uniform_resistance_ohm);

// Circuit-domain projections: radiation_resistance(m, n) = iint psi_m^* c_z psi_n
// and loss(m, n) = integral Re{Z_s} psi_m^* psi_n. P = (1/2) i^H R i for both.
struct PowerMatrices {
    Eigen::MatrixXcd radiation_resistance;
    Eigen::MatrixXcd loss;
};

PowerMatrices circuit_power_matrices(const PortBasis& basis, const Carrier& carrier,
                                     const SurfaceResistanceFn& resistance_ohm);

// Source power (1/2) Re{i^H Z i} compared against the aperture radiation and
// dissipation (1/2) i^H (R_rad + R_loss) i; a non-passive network is reported,
// not rejected.
struct SourcePowerReport {
    double source_power_w = 0.0;
    double aperture_power_w = 0.0;  // radiated + dissipated for the same currents
    bool source_covers_aperture = false;
    bool network_passive = false;        // Re{Z} - R_rad - R_loss is PSD within tolerance
    double passivity_margin_w = 0.0;     // smallest eigenvalue of that difference
};

SourcePowerReport source_power(const Eigen::VectorXcd& port_currents, const Eigen::MatrixXcd& z,
                               const PowerMatrices& matrices);

// Receive chain: open-circuit voltages v_oc = integral phi^*(r) y(r) dr, then RF
// voltages T v_oc, then streams U^H T v_oc.
Eigen::VectorXcd open_circuit_voltages(const PortBasis& basis, const ScalarCurrent& field);
Eigen::VectorXcd receive_streams(const PortBasis& basis, const CircuitNetwork& network,
                                 const Eigen::MatrixXcd& combiner, const ScalarCurrent& field);

// b_k(r) = phi^T(r) T^H u_k for one combiner column.
ScalarCurrent effective_receive_beamformer(const PortBasis& basis, const CircuitNetwork& network,
                                           const Eigen::VectorXcd& u_col);

} // namespace capa

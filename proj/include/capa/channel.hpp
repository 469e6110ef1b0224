#pragma once

#include <cstdint>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"
#include "capa/green.hpp"

namespace capa {

enum class PolarizationMode { simplified, matched };

// Scalar line-of-sight channel between two non-intersecting planar apertures.
struct UniPolLosChannel {
    PlanarAperture tx;
    PlanarAperture rx;
    Carrier carrier;
    PolarizationMode polarization_mode = PolarizationMode::simplified;
    Polarization p_t;  // used in matched mode
    Polarization p_r;
};

UniPolLosChannel make_los_channel(const PlanarAperture& tx, const PlanarAperture& rx,
                                  const Carrier& carrier);
UniPolLosChannel make_los_channel(const PlanarAperture& tx, const PlanarAperture& rx,
                                  const Carrier& carrier, const Polarization& p_t,
                                  const Polarization& p_r);

// h(r, s) = -j eta0 k0 e^{-j k0 R} / (4 pi R); matched mode multiplies by the
// transverse polarization matching factor.
cplx los_kernel(const UniPolLosChannel& channel, const Eigen::Vector3d& r,
                const Eigen::Vector3d& s);

// Tri-polarized LoS kernel: the radiative dyadic Green's function.
Eigen::Matrix3cd los_kernel_tripol(const PlanarAperture& tx, const PlanarAperture& rx,
                                   const Carrier& carrier, const Eigen::Vector3d& r,
                                   const Eigen::Vector3d& s);

// Point scatterer with complex reflectivity, optional delay and Doppler shift.
struct Scatterer {
    Eigen::Vector3d position_m = Eigen::Vector3d::Zero();
    cplx gain = cplx(0.0, 0.0);
    int cluster_id = 0;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

// h(r,s) = h_LoS(r,s) + sum_j gain_j h_LoS(r, q_j) h_LoS(q_j, s).
cplx multipath_kernel(const UniPolLosChannel& channel, const std::vector<Scatterer>& scatterers,
                      const Eigen::Vector3d& r, const Eigen::Vector3d& s);

// H(r,s) = H_LoS(r,s) + sum_j H_LoS(r, q_j) Gamma_j H_LoS(q_j, s).
Eigen::Matrix3cd multipath_kernel_tripol(const PlanarAperture& tx, const PlanarAperture& rx,
                                         const Carrier& carrier,
                                         const std::vector<Scatterer>& scatterers,
                                         const std::vector<Eigen::Matrix3cd>& scatter_matrices,
                                         const Eigen::Vector3d& r, const Eigen::Vector3d& s);

// Time-varying impulse response h(t, tau) with delta taps realized as unit-mass
// boxcars of width delta_fn_width_s. The LoS tap sits at the propagation delay;
// each scatterer tap carries gain_j e^{j 2 pi nu_j t} / sqrt(N_s) times the
// cascaded LoS factors at the scatterer's recorded delay.
cplx doubly_dispersive_kernel(const UniPolLosChannel& channel,
                              const std::vector<Scatterer>& scatterers,
                              const Eigen::Vector3d& r, const Eigen::Vector3d& s,
                              double t_s, double tau_s, double delta_fn_width_s);

// One von Mises-Fisher angular cluster.
struct VmfCluster {
    double modal_theta_rad = 0.0;
    double modal_phi_rad = 0.0;
    double concentration = 0.0;  // alpha >= 0; 0 degenerates to isotropic
    double weight = 1.0;         // in (0, 1]; weights sum to 1 within a side
};

// One side (Tx or Rx) of a Kronecker-separable angular power spectrum.
struct AngularSide {
    bool isotropic = true;
    std::vector<VmfCluster> clusters;  // used when !isotropic
};

AngularSide isotropic_side();
// Validates weights: each in (0,1], summing to 1 within 1e-9.
AngularSide vmf_side(std::vector<VmfCluster> clusters);

struct AngularSpectrum {
    AngularSide tx_side;
    AngularSide rx_side;
};

// c(alpha) e^{alpha (sin t sin mt cos(p - mp) + cos t cos mt)} with
// c(alpha) = (2 pi / k0)^2 alpha / sinh(alpha); alpha -> 0 gives the constant
// (2 pi / k0)^2. Full-sphere integral is 4 pi (2 pi / k0)^2 for every alpha.
double vmf_density(double theta_rad, double phi_rad, const VmfCluster& cluster,
                   const Carrier& carrier);

// Density of one side: (2 pi / k0)^2 if isotropic, else the weighted vMF mixture.
double side_density(double theta_rad, double phi_rad, const AngularSide& side,
                    const Carrier& carrier);

// Joint density p_r(theta_r, phi_r) * p_t(theta_t, phi_t).
double angular_power(double theta_r_rad, double phi_r_rad, double theta_t_rad,
                     double phi_t_rad, const AngularSpectrum& spectrum,
                     const Carrier& carrier);

// Midpoint sample of one wavenumber cell strictly inside the radiating disk.
struct WavenumberCell {
    Eigen::Vector2d center_rad_per_m = Eigen::Vector2d::Zero();  // (kappa_x, kappa_z)
    double gamma_rad_per_m = 0.0;  // sqrt(k0^2 - |center|^2) > 0
};

// One stochastic channel realization: i.i.d. CN(0,1) weights per retained cell
// pair, pre-scaled so the expected channel power over the retained cells is 1.
struct CorrelationRealization {
    PlanarAperture tx;
    PlanarAperture rx;
    Carrier carrier;
    std::vector<WavenumberCell> tx_cells;
    std::vector<WavenumberCell> rx_cells;
    double tx_cell_area = 0.0;  // wavenumber-plane area per cell
    double rx_cell_area = 0.0;
    Eigen::MatrixXcd gains;  // rx_cells.size() x tx_cells.size(), fully scaled
    std::uint64_t seed = 0;
};

// Draws one realization of the correlation-based stochastic channel. Cells whose
// closed square touches the disk rim (where the spectrum diverges) are excluded.
CorrelationRealization sample_correlation_channel(const AngularSpectrum& spectrum,
                                                  const PlanarAperture& tx,
                                                  const PlanarAperture& rx,
                                                  const Carrier& carrier, int cells_per_axis,
                                                  std::uint64_t seed);

// h_NLoS(r, s): double sum of plane-wave phases weighted by the stored gains.
// Points are interpreted through each aperture's local frame.
cplx evaluate_realization(const CorrelationRealization& realization, const Eigen::Vector3d& r,
                          const Eigen::Vector3d& s);

// Mean |h_LoS|^2 over the aperture pair (tensor quadrature).
double los_mean_power(const UniPolLosChannel& channel);

// Rician combination sqrt(K/(K+1)) h_LoS/sqrt(mean power) + sqrt(1/(K+1)) h_NLoS.
// The NLoS part is already unit-average-power by construction.
struct RicianChannel {
    UniPolLosChannel los;
    CorrelationRealization nlos;
    double k_factor = 0.0;
    double los_scale = 1.0;  // 1 / sqrt(mean LoS power)
};

RicianChannel make_rician(const UniPolLosChannel& los, CorrelationRealization realization,
                          double k_factor);

cplx rician_kernel(const RicianChannel& channel, const Eigen::Vector3d& r,
                   const Eigen::Vector3d& s);

// Convenience form; recomputes the LoS normalization on every call.
cplx rician_kernel(const UniPolLosChannel& los, const CorrelationRealization& realization,
                   double k_factor, const Eigen::Vector3d& r, const Eigen::Vector3d& s);

} // namespace capa

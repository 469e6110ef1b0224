#pragma once

#include <complex>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

namespace capa {

// Free-space scalar kernel g(R) = exp(-j k0 R) / (4 pi R). R <= 0 throws domain_error.
cplx scalar_green(double distance_m, const Carrier& carrier);

enum class GreenMode {
    full,       // all 1/R, 1/R^2, 1/R^3 groups
    radiative   // 1/R transverse group only
};

// Dyadic kernel
//   G(r,s) = -j k0 eta0 [ (I - u u^T) - j/(k0 R) (I - 3 u u^T) - 1/(k0 R)^2 (I - 3 u u^T) ] g(R)
// with u = (r-s)/R. Coincident points throw domain_error.
Eigen::Matrix3cd dyadic_green(const Eigen::Vector3d& obs, const Eigen::Vector3d& src,
                              const Carrier& carrier, GreenMode mode);

enum class FieldRegion { reactive_near, radiative_near, far };

enum class ReactiveRule {
    classical,  // reactive boundary at 0.62 sqrt(D^3 / lambda)
    lambda      // reactive boundary at one wavelength
};

// Far field iff R >= 2 D^2 / lambda (boundary inclusive on the far side);
// reactive iff R < reactive boundary. Requires R > 0 and D > 0.
FieldRegion classify_region(double distance_m, double aperture_diameter_m,
                            const Carrier& carrier, ReactiveRule rule = ReactiveRule::classical);

// Radiative-region polarization matching factor p_r^T (I - u u^T) p_t.
double polarization_factor(const Eigen::Vector3d& obs, const Eigen::Vector3d& src,
                           const Polarization& p_r, const Polarization& p_t);

// Pointwise mutual-coupling coefficient for z-polarized currents:
//   c_z(d) = -z^T Re{G(s, s-d)} z = k0 eta0 (phi(d) + k0^-2 d2/dz2 phi(d)),
// phi(d) = sin(k0 |d|) / (4 pi |d|). Zero separation returns the analytic limit
// k0^2 eta0 / (6 pi).
double coupling_z(const Eigen::Vector3d& separation_m, const Carrier& carrier);

// Vector current sampled on an aperture quadrature grid.
struct SampledCurrent {
    ApertureGrid grid;
    std::vector<Eigen::Vector3cd> values;  // one per grid node
    cplx port_current = cplx(1.0, 0.0);    // excitation current for impedance normalization
};

// Aggregate coupling C12 = -integral integral J1*(r) . G(r,s) J2(s) ds dr.
// Overlapping apertures throw domain_error.
cplx aperture_coupling(const SampledCurrent& a, const SampledCurrent& b, const Carrier& carrier);

// Z12 = C12 / (I1 I2).
cplx mutual_impedance(const SampledCurrent& a, const SampledCurrent& b, const Carrier& carrier);

} // namespace capa

#include "capa/green.hpp"

#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"

#include <cmath>

namespace capa {

cplx scalar_green(double distance_m, const Carrier& carrier) {
    if (!(distance_m > 0.0))
        throw domain_error("scalar_green: distance must be positive");
    const double theta = carrier.wavenumber_rad_per_m * distance_m;
    const double amp = 1.0 / (4.0 * pi * distance_m);
    return cplx(std::cos(theta) * amp, -std::sin(theta) * amp);
}

Eigen::Matrix3cd dyadic_green(const Eigen::Vector3d& obs, const Eigen::Vector3d& src,
                              const Carrier& carrier, GreenMode mode) {
    const Eigen::Vector3d d = obs - src;
    const double r = d.norm();
    if (!(r > 0.0))
        throw domain_error("dyadic_green: observation and source points coincide");
    const double k0 = carrier.wavenumber_rad_per_m;
    const Eigen::Vector3d u = d / r;
    const Eigen::Matrix3d uut = u * u.transpose();
    const Eigen::Matrix3d transverse = Eigen::Matrix3d::Identity() - uut;
    const cplx g = scalar_green(r, carrier);
    const cplx prefactor = cplx(0.0, -1.0) * k0 * carrier.impedance_ohm * g;
    if (mode == GreenMode::radiative)
        return prefactor * transverse;
    const Eigen::Matrix3d longitudinal = Eigen::Matrix3d::Identity() - 3.0 * uut;
    const double kr = k0 * r;
    const cplx mid = cplx(0.0, -1.0) / kr;
    const double inner = -1.0 / (kr * kr);
    Eigen::Matrix3cd out = prefactor * transverse;
    out += prefactor * (mid + inner) * longitudinal;
    return out;
}

FieldRegion classify_region(double distance_m, double aperture_diameter_m,
                            const Carrier& carrier, ReactiveRule rule) {
    if (!(distance_m > 0.0))
        throw domain_error("classify_region: distance must be positive");
    if (!(aperture_diameter_m > 0.0))
        throw domain_error("classify_region: aperture diameter must be positive");
    const double lambda = carrier.wavelength_m;
    const double far_boundary =
        2.0 * aperture_diameter_m * aperture_diameter_m / lambda;
    if (distance_m >= far_boundary)
        return FieldRegion::far;
    const double reactive_boundary =
        rule == ReactiveRule::classical
            ? 0.62 * std::sqrt(aperture_diameter_m * aperture_diameter_m *
                               aperture_diameter_m / lambda)
            : lambda;
    if (distance_m < reactive_boundary)
        return FieldRegion::reactive_near;
    return FieldRegion::radiative_near;
}

double polarization_factor(const Eigen::Vector3d& obs, const Eigen::Vector3d& src,
                           const Polarization& p_r, const Polarization& p_t) {
    const Eigen::Vector3d d = obs - src;
    const double r = d.norm();
    if (!(r > 0.0))
        throw domain_error("polarization_factor: observation and source points coincide");
    const Eigen::Vector3d u = d / r;
    return p_r.direction.dot(p_t.direction - u * u.dot(p_t.direction));
}

double coupling_z(const Eigen::Vector3d& separation_m, const Carrier& carrier) {
    double out = 0.0;
    const double q[3] = {0.0, 0.0, 0.0};
    const double p[3] = {separation_m.x(), separation_m.y(), separation_m.z()};
    simd::coupling_z_batch(p, q, q + 1, q + 2, 1, carrier.wavenumber_rad_per_m,
                           carrier.impedance_ohm, &out);
    return out;
}

cplx aperture_coupling(const SampledCurrent& a, const SampledCurrent& b,
                       const Carrier& carrier) {
    if (a.values.size() != a.grid.size() || b.values.size() != b.grid.size())
        throw domain_error("aperture_coupling: current sample count does not match grid");
    if (apertures_intersect(a.grid.aperture, b.grid.aperture))
        throw domain_error("aperture_coupling: apertures overlap");
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
        const Eigen::Vector3d& r = a.grid.nodes_global[i];
        cplx row(0.0, 0.0);
        for (std::size_t j = 0; j < b.grid.size(); ++j) {
            const Eigen::Matrix3cd g =
                dyadic_green(r, b.grid.nodes_global[j], carrier, GreenMode::full);
            // Eigen's dot conjugates its left operand, giving J1^H (G J2).
            row += b.grid.weights[j] * a.values[i].dot(g * b.values[j]);
        }
        acc += a.grid.weights[i] * row;
    }
    return -acc;
}

cplx mutual_impedance(const SampledCurrent& a, const SampledCurrent& b,
                      const Carrier& carrier) {
    const cplx denom = a.port_current * b.port_current;
    if (std::abs(denom) == 0.0)
        throw domain_error("mutual_impedance: port currents must be nonzero");
    return aperture_coupling(a, b, carrier) / denom;
}

} // namespace capa

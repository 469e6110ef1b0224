#pragma once

#include <Eigen/Dense>
#include <optional>

namespace capa {

// Proper rotation taking local aperture coordinates to global coordinates.
// Local frame: aperture spans x-z, surface normal along +y.
struct Orientation {
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
    std::optional<Eigen::Vector3d> euler_rad;  // (alpha, beta, gamma) when constructed from angles
};

// C = Rz(alpha) * Ry(beta) * Rx(gamma).
Orientation orientation_from_euler(double alpha, double beta, double gamma);

// Validates orthonormality (C^T C = I) and det = +1 within tol. Throws domain_error.
void validate_orientation(const Orientation& c, double tol = 1e-12);

// Rectangular planar aperture. Points on the surface: r = center + C * (lx, 0, lz).
struct PlanarAperture {
    Eigen::Vector3d center_m = Eigen::Vector3d::Zero();
    Orientation orientation;
    double len_x_m = 0.0;
    double len_z_m = 0.0;

    double area() const { return len_x_m * len_z_m; }
    double diameter() const;  // diagonal extent
    Eigen::Vector3d normal() const { return orientation.matrix.col(1); }
};

PlanarAperture make_aperture(const Eigen::Vector3d& center_m, const Orientation& orientation,
                             double len_x_m, double len_z_m);

// Maps in-plane local coordinates (lx, lz) to a global point. Out-of-bounds local
// coordinates are allowed; *in_bounds reports containment when non-null.
Eigen::Vector3d local_to_global(const PlanarAperture& ap, const Eigen::Vector2d& local,
                                bool* in_bounds = nullptr);

// Inverse map onto the aperture plane (drops the normal component).
Eigen::Vector2d global_to_local(const PlanarAperture& ap, const Eigen::Vector3d& point);

// True if the two (possibly non-coplanar) rectangles intersect. Separating-axis test.
bool apertures_intersect(const PlanarAperture& a, const PlanarAperture& b);

// True if the point lies on the aperture surface (within a small relative tolerance).
bool point_on_aperture(const PlanarAperture& ap, const Eigen::Vector3d& point);

// Unit-norm polarization vector. Constructor normalizes; zero vector throws domain_error.
struct Polarization {
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

Polarization make_polarization(const Eigen::Vector3d& direction);

} // namespace capa

#include "capa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/errors.hpp"

namespace capa {

Orientation orientation_from_euler(double alpha, double beta, double gamma) {
    Eigen::Matrix3d rz, ry, rx;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    rz << ca, -sa, 0.0,
          sa,  ca, 0.0,
          0.0, 0.0, 1.0;
    ry << cb, 0.0, sb,
          0.0, 1.0, 0.0,
          -sb, 0.0, cb;
    rx << 1.0, 0.0, 0.0,
          0.0, cg, -sg,
          0.0, sg,  cg;
    Orientation o;
    o.matrix = rz * ry * rx;
    o.euler_rad = Eigen::Vector3d(alpha, beta, gamma);
    return o;
}

void validate_orientation(const Orientation& c, double tol) {
    const Eigen::Matrix3d gram = c.matrix.transpose() * c.matrix;
    const double ortho_err = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > tol)
        throw domain_error("orientation matrix is not orthonormal (max |C^T C - I| = " +
                           std::to_string(ortho_err) + ")");
    const double det = c.matrix.determinant();
    if (std::abs(det - 1.0) > tol)
        throw domain_error("orientation matrix must be a proper rotation (det = " +
                           std::to_string(det) + ")");
}

double PlanarAperture::diameter() const {
    return std::hypot(len_x_m, len_z_m);
}

PlanarAperture make_aperture(const Eigen::Vector3d& center_m, const Orientation& orientation,
                             double len_x_m, double len_z_m) {
    if (!(len_x_m > 0.0) || !(len_z_m > 0.0))
        throw domain_error("aperture edge lengths must be positive");
    validate_orientation(orientation);
    PlanarAperture ap;
    ap.center_m = center_m;
    ap.orientation = orientation;
    ap.len_x_m = len_x_m;
    ap.len_z_m = len_z_m;
    return ap;
}

Eigen::Vector3d local_to_global(const PlanarAperture& ap, const Eigen::Vector2d& local,
                                bool* in_bounds) {
    if (in_bounds)
        *in_bounds = std::abs(local.x()) <= 0.5 * ap.len_x_m &&
                     std::abs(local.y()) <= 0.5 * ap.len_z_m;
    const Eigen::Vector3d l(local.x(), 0.0, local.y());
    return ap.center_m + ap.orientation.matrix * l;
}

Eigen::Vector2d global_to_local(const PlanarAperture& ap, const Eigen::Vector3d& point) {
    const Eigen::Vector3d l = ap.orientation.matrix.transpose() * (point - ap.center_m);
    return {l.x(), l.z()};
}

namespace {

// Projection interval of rectangle corners onto an axis.
void project(const Eigen::Vector3d corners[4], const Eigen::Vector3d& axis,
             double& lo, double& hi) {
    lo = hi = corners[0].dot(axis);
    for (int i = 1; i < 4; ++i) {
        const double v = corners[i].dot(axis);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

void corners_of(const PlanarAperture& ap, Eigen::Vector3d out[4]) {
    const double hx = 0.5 * ap.len_x_m, hz = 0.5 * ap.len_z_m;
    out[0] = local_to_global(ap, {-hx, -hz});
    out[1] = local_to_global(ap, {hx, -hz});
    out[2] = local_to_global(ap, {hx, hz});
    out[3] = local_to_global(ap, {-hx, hz});
}

} // namespace

bool apertures_intersect(const PlanarAperture& a, const PlanarAperture& b) {
    Eigen::Vector3d ca[4], cb[4];
    corners_of(a, ca);
    corners_of(b, cb);

    const Eigen::Vector3d ea[2] = {a.orientation.matrix.col(0), a.orientation.matrix.col(2)};
    const Eigen::Vector3d eb[2] = {b.orientation.matrix.col(0), b.orientation.matrix.col(2)};

    std::vector<Eigen::Vector3d> axes;
    axes.push_back(a.normal());
    axes.push_back(b.normal());
    for (const auto& u : ea)
        axes.push_back(u);
    for (const auto& v : eb)
        axes.push_back(v);
    for (const auto& u : ea)
        for (const auto& v : eb) {
            Eigen::Vector3d w = u.cross(v);
            if (w.norm() > 1e-12) axes.push_back(w.normalized());
        }

    const double scale = a.diameter() + b.diameter() + (a.center_m - b.center_m).norm();
    for (const auto& axis : axes) {
        double alo, ahi, blo, bhi;
        project(ca, axis, alo, ahi);
        project(cb, axis, blo, bhi);
        if (ahi < blo - 1e-12 * scale || bhi < alo - 1e-12 * scale)
            return false;  // separating axis found
    }
    return true;
}

bool point_on_aperture(const PlanarAperture& ap, const Eigen::Vector3d& point) {
    const Eigen::Vector3d local = ap.orientation.matrix.transpose() * (point - ap.center_m);
    const double tol = 1e-9 * std::max(ap.diameter(), 1.0);
    return std::abs(local.y()) <= tol && std::abs(local.x()) <= 0.5 * ap.len_x_m + tol &&
           std::abs(local.z()) <= 0.5 * ap.len_z_m + tol;
}

Polarization make_polarization(const Eigen::Vector3d& direction) {
    const double n = direction.norm();
    if (!(n > 0.0))
        throw domain_error("polarization vector must be nonzero");
    Polarization p;
    p.direction = direction / n;
    return p;
}

} // namespace capa

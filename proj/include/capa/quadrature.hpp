#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"

namespace capa {

// Gauss-Legendre rule on [-1, 1]. Nodes strictly increasing, weights positive.
struct GaussLegendreRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rule for 1 <= order <= 512; out of range throws config_error.
const GaussLegendreRule& gl_rule(int order);

inline constexpr int gl_max_order = 512;

[[noreturn]] void throw_invalid_interval(double a, double b);

// Integrates f over [a, b]; a >= b throws domain_error.
template <typename F>
auto integrate_1d(F&& f, double a, double b, const GaussLegendreRule& rule)
    -> decltype(f(0.0)) {
    if (!(a < b)) throw_invalid_interval(a, b);
    using R = decltype(f(0.0));
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    R acc{};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(half * rule.nodes[i] + mid);
    return R(half * acc);
}

// Tensor-product quadrature grid over a rectangular aperture (order x order nodes).
// Node index = ix * order + iz; weights include the Jacobian (sum = area).
struct ApertureGrid {
    PlanarAperture aperture;
    int order = 0;
    std::vector<Eigen::Vector3d> nodes_global;
    std::vector<Eigen::Vector2d> nodes_local;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

ApertureGrid aperture_grid(const PlanarAperture& aperture, int order);

// Scalar current (or field) sampled on an aperture quadrature grid.
struct ScalarCurrent {
    ApertureGrid grid;
    Eigen::VectorXcd values;  // one per grid node
};

// Smallest order with mean node spacing <= lambda/4 along each edge (at least 1).
int default_order(const PlanarAperture& aperture, const Carrier& carrier);

template <typename F>
std::complex<double> integrate_aperture(F&& f, const ApertureGrid& grid) {
    std::complex<double> acc{};
    for (std::size_t i = 0; i < grid.size(); ++i)
        acc += grid.weights[i] * f(grid.nodes_global[i]);
    return acc;
}

} // namespace capa

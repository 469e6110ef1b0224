#include "capa/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "capa/errors.hpp"

namespace capa {

namespace {

// Legendre P_M and derivative at x by upward recurrence.
void legendre(int order, double x, double& p, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int n = 2; n <= order; ++n) {
        const double pn = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = pn;
    }
    p = (order == 0) ? 1.0 : (order == 1 ? x : p1);
    dp = (order == 0) ? 0.0 : order * (x * p - p0) / (x * x - 1.0);
    if (order == 1) dp = 1.0;
}

GaussLegendreRule compute_rule(int order) {
    GaussLegendreRule rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    if (order == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
        return rule;
    }
    const int half = order / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess for the i-th root in descending order.
        double x = std::cos(pi * (4.0 * (i + 1) - 1.0) / (4.0 * order + 2.0));
        double p, dp;
        for (int it = 0; it < 100; ++it) {
            legendre(order, x, p, dp);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-15) break;
        }
        legendre(order, x, p, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Mirror for exact symmetry.
        rule.nodes[order - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[order - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (order % 2 == 1) {
        double p, dp;
        legendre(order, 0.0, p, dp);
        rule.nodes[half] = 0.0;
        rule.weights[half] = 2.0 / (dp * dp);
    }
    return rule;
}

} // namespace

const GaussLegendreRule& gl_rule(int order) {
    if (order < 1 || order > gl_max_order)
        throw config_error("Gauss-Legendre order must be in [1, " +
                           std::to_string(gl_max_order) + "], got " + std::to_string(order));
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

void throw_invalid_interval(double a, double b) {
    throw domain_error("integration interval requires a < b, got [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
}

ApertureGrid aperture_grid(const PlanarAperture& aperture, int order) {
    const GaussLegendreRule& rule = gl_rule(order);
    ApertureGrid grid;
    grid.aperture = aperture;
    grid.order = order;
    const std::size_t n = static_cast<std::size_t>(order) * order;
    grid.nodes_global.reserve(n);
    grid.nodes_local.reserve(n);
    grid.weights.reserve(n);
    const double hx = 0.5 * aperture.len_x_m;
    const double hz = 0.5 * aperture.len_z_m;
    for (int ix = 0; ix < order; ++ix) {
        const double lx = hx * rule.nodes[ix];
        const double wx = hx * rule.weights[ix];
        for (int iz = 0; iz < order; ++iz) {
            const double lz = hz * rule.nodes[iz];
            const Eigen::Vector2d local(lx, lz);
            grid.nodes_local.push_back(local);
            grid.nodes_global.push_back(local_to_global(aperture, local));
            grid.weights.push_back(wx * hz * rule.weights[iz]);
        }
    }
    return grid;
}

int default_order(const PlanarAperture& aperture, const Carrier& carrier) {
    const double target = carrier.wavelength_m / 4.0;
    const double longest = std::max(aperture.len_x_m, aperture.len_z_m);
    const int order = static_cast<int>(std::ceil(longest / target));
    return std::max(1, std::min(order, gl_max_order));
}

} // namespace capa

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"
#include "capa/green.hpp"
#include "capa/quadrature.hpp"

namespace capa {

// Regular wavenumber sampling of one aperture: spacing 2 pi / edge length per
// axis, indices (m, n) kept iff (m dkx)^2 + (n dkz)^2 <= k0^2. Enumeration is
// m outer, n inner (n varies fastest), so matrices are comparable across runs.
struct WavenumberGrid {
    PlanarAperture aperture;
    Carrier carrier;
    double dkx_rad_per_m = 0.0;
    double dkz_rad_per_m = 0.0;
    std::vector<Eigen::Vector2i> indices;

    std::size_t size() const { return indices.size(); }
    Eigen::Vector2d wavevector(std::size_t i) const {
        return {indices[i].x() * dkx_rad_per_m, indices[i].y() * dkz_rad_per_m};
    }
};

// Requires each aperture edge >= lambda/2 (otherwise no interior samples are
// guaranteed and construction fails with config_error).
WavenumberGrid build_grid(const PlanarAperture& aperture, const Carrier& carrier);

// X(kappa) = integral of x(s) e^{-j kappa . s'} over the aperture (s' local).
cplx transmit_spectrum(const ScalarCurrent& x, const WavenumberGrid& grid,
                       std::size_t kappa_index);

// Spatial channel kernel evaluated at global points (receive point, source point).
using KernelFn = std::function<cplx(const Eigen::Vector3d&, const Eigen::Vector3d&)>;

// H_a(k, kappa) = iiint e^{-j k . r'} h(r, s) e^{+j kappa . s'} ds dr by tensor
// quadrature of the given order on both apertures. If below_rule is non-null it
// reports whether the order violates the quarter-wavelength spacing rule.
cplx spectral_entry(const KernelFn& h, std::size_t k_index, std::size_t kappa_index,
                    const WavenumberGrid& tx_grid, const WavenumberGrid& rx_grid,
                    int quadrature_order, bool* below_rule = nullptr);

struct SpectralChannel {
    WavenumberGrid tx_grid;
    WavenumberGrid rx_grid;
    Eigen::MatrixXcd matrix;  // rx_grid.size() x tx_grid.size(), scale folded in
    int quadrature_order = 0;
    bool order_below_rule = false;  // order violated the lambda/4 spacing rule
};

inline constexpr std::size_t default_spectral_budget = 5000;

// Full matrix with entries (dkappa_x dkappa_z / (2 pi)^2) H_a(k, kappa); entries
// below 1e-14 in magnitude are snapped to zero. Throws config_error when a grid
// exceeds the per-side budget.
SpectralChannel assemble_spectral_channel(const KernelFn& h, const WavenumberGrid& tx_grid,
                                          const WavenumberGrid& rx_grid, int quadrature_order,
                                          std::size_t budget = default_spectral_budget);

// x(s') = (dkx dkz / (2 pi)^2) sum_i X_i e^{+j kappa_i . s'} at local coordinates.
cplx reconstruct_current(const Eigen::VectorXcd& coefficients, const WavenumberGrid& grid,
                         const Eigen::Vector2d& s_local);

// Portable text export: metadata header lines prefixed with '#', then one CSV row
// per matrix row with re,im pairs.
void export_spectral_channel(const SpectralChannel& channel, std::ostream& os);

} // namespace capa

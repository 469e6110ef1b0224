#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "capa/carrier.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"
#include "capa/wavenumber.hpp"

namespace capa {

// Separable dictionary entry phi(r, s) = rx_factor(r) * tx_factor(s): either a
// plane-wave pair (one receive and one transmit wavevector) or a spherical-wave
// pair through a focal point. l2_norm is the norm of phi over the aperture pair;
// phi / l2_norm is the unit-norm atom used for sensing and recovery, and the same
// factor is reapplied when a recovered channel is reconstructed.
struct DictionaryAtom {
    enum class Kind { farfield, nearfield };

    Kind kind = Kind::farfield;
    Eigen::Vector2d rx_wavenumber_rad_per_m = Eigen::Vector2d::Zero();  // farfield only
    Eigen::Vector2d tx_wavenumber_rad_per_m = Eigen::Vector2d::Zero();  // farfield only
    Eigen::Vector3d focal_point_m = Eigen::Vector3d::Zero();            // nearfield only
    std::function<cplx(const Eigen::Vector3d&)> rx_factor;
    std::function<cplx(const Eigen::Vector3d&)> tx_factor;
    double l2_norm = 0.0;

    cplx evaluate(const Eigen::Vector3d& r, const Eigen::Vector3d& s) const {
        return rx_factor(r) * tx_factor(s);
    }
    cplx normalized(const Eigen::Vector3d& r, const Eigen::Vector3d& s) const {
        return evaluate(r, s) / l2_norm;
    }
};

inline constexpr std::size_t default_dictionary_budget = 50000;

// Plane-wave atoms e^{+j k . r'} e^{-j kappa . s'} over in-plane local coordinates,
// one per (receive wavevector, transmit wavevector) pair. Atom index
// i = rx_index * tx.size() + tx_index. Every plane-wave pair has unit modulus, so
// l2_norm = sqrt(A_r A_t) exactly. Throws config_error when the product of grid
// sizes exceeds the budget.
std::vector<DictionaryAtom> farfield_dictionary(const WavenumberGrid& tx_wavenumbers,
                                                const WavenumberGrid& rx_wavenumbers,
                                                std::size_t budget = default_dictionary_budget);

// Spherical-wave atoms e^{-j k0 |r-q|}/|r-q| * e^{-j k0 |q-s|}/|q-s| for candidate
// focal points q. Candidates lying on either aperture throw domain_error. Norms
// are computed on internal quarter-wavelength quadrature grids.
std::vector<DictionaryAtom> nearfield_dictionary(const std::vector<Eigen::Vector3d>& candidates,
                                                 const PlanarAperture& tx,
                                                 const PlanarAperture& rx, const Carrier& carrier,
                                                 std::size_t budget = default_dictionary_budget);

// Training schedule: pilot current w_l on the tx grid and receive combiner b_l on
// the rx grid per slot (row l of each matrix), plus the noise level of the field.
struct PilotSchedule {
    ApertureGrid tx_grid;
    ApertureGrid rx_grid;
    Eigen::MatrixXcd pilots;     // length x tx node count
    Eigen::MatrixXcd combiners;  // length x rx node count
    double noise_level = 0.0;
    Eigen::VectorXd pilot_energy;     // per-slot integral of |w_l|^2
    Eigen::VectorXd combiner_energy;  // per-slot integral of |b_l|^2

    Eigen::Index length() const { return pilots.rows(); }
};

// Validates dimensions, requires at least one slot and distinct (pilot, combiner)
// row pairs, and records per-slot energies.
PilotSchedule make_pilot_schedule(ApertureGrid tx_grid, ApertureGrid rx_grid,
                                  Eigen::MatrixXcd pilots, Eigen::MatrixXcd combiners,
                                  double noise_level);

// Random-phase unit-energy pilots and combiners, deterministic in the seed.
PilotSchedule random_pilot_schedule(const ApertureGrid& tx_grid, const ApertureGrid& rx_grid,
                                    Eigen::Index length, double noise_level, std::uint64_t seed);

// Projection of every unit-norm atom onto every (combiner, pilot) slot pair:
// matrix(l, i) = iint b_l^*(r) atom_i(r, s) w_l(s) ds dr by tensor quadrature on
// the schedule grids.
struct SensingMatrix {
    Eigen::MatrixXcd matrix;  // schedule length x atom count
    Eigen::VectorXd column_norms;
    double noise_level = 0.0;
    std::size_t farfield_atoms = 0;
    std::size_t nearfield_atoms = 0;
};

SensingMatrix sensing_matrix(const PilotSchedule& schedule,
                             const std::vector<DictionaryAtom>& atoms);

// One projected measurement per slot: v_l = iint b_l^* h w_l + z_l with
// z_l ~ CN(0, noise_level * integral |b_l|^2). Noise-free when noise_level = 0.
Eigen::VectorXcd measure(const KernelFn& h, const PilotSchedule& schedule, std::uint64_t seed);

// Stopping rule for the greedy recovery: iterate until the support reaches
// `sparsity` atoms or the residual norm drops to `residual`, whichever is given
// (both given: first hit wins). Neither given: residual = 1e-6 * |v|.
struct OmpStop {
    std::optional<Eigen::Index> sparsity;
    std::optional<double> residual;
};

struct SparseEstimate {
    Eigen::VectorXcd coefficients;     // full length, zero off the support
    std::vector<Eigen::Index> support;  // in selection order
    double residual_norm = 0.0;
};

// Orthogonal matching pursuit: select the column with the largest normalized
// correlation against the residual (ties to the lowest index), refit by least
// squares on the accumulated support, repeat. Rank-deficient support matrices
// throw rank_error naming the support.
SparseEstimate omp_recover(const SensingMatrix& sensing, const Eigen::VectorXcd& v,
                           const OmpStop& stop = {});

// Kernel h_hat(r, s) = sum over the support of coefficients[i] * atom_i / l2_norm_i.
KernelFn reconstruct_channel(const SparseEstimate& estimate,
                             const std::vector<DictionaryAtom>& atoms);

// Squared L2 norm / distance of kernels over the aperture pair by tensor quadrature.
double kernel_l2_norm_sq(const KernelFn& h, const ApertureGrid& tx_grid,
                         const ApertureGrid& rx_grid);
double kernel_l2_distance_sq(const KernelFn& a, const KernelFn& b, const ApertureGrid& tx_grid,
                             const ApertureGrid& rx_grid);

// CSV rows "index,re,im", one per coefficient.
void export_estimate(const SparseEstimate& estimate, std::ostream& os);

} // namespace capa

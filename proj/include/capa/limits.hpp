#pragma once

#include "capa/carrier.hpp"
#include "capa/channel.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"
#include "capa/wavenumber.hpp"

#include <Eigen/Dense>

namespace capa {

// Nystrom realization of a channel operator with symmetric square-root
// weighting: matrix(i, j) = sqrt(w_r_i) h(r_i, s_j) sqrt(w_t_j), so matrix
// singular values approximate the L2 operator singular values.
struct DiscretizedOperator {
    Eigen::MatrixXcd matrix;
    ApertureGrid tx_grid;
    ApertureGrid rx_grid;
};

DiscretizedOperator discretize_operator(const KernelFn& h, const ApertureGrid& tx_grid,
                                        const ApertureGrid& rx_grid);

// Fast path for the scalar LoS kernel (batch kernels); numerically equivalent
// to discretize_operator over los_kernel.
DiscretizedOperator discretize_los_operator(const UniPolLosChannel& channel,
                                            const ApertureGrid& tx_grid,
                                            const ApertureGrid& rx_grid);

struct ModalDecomposition {
    Eigen::VectorXd singular_values;  // non-increasing
    Eigen::MatrixXcd rx_functions;    // node x mode, unweighted singular functions
    Eigen::MatrixXcd tx_functions;
    std::vector<double> rx_weights;   // quadrature weights the functions refer to
    std::vector<double> tx_weights;
};

// SVD of the discretized operator; exact LAPACK up to 1024 on the shorter side,
// randomized range-finder (rank 256 + oversampling, two power iterations) above.
ModalDecomposition modal_decomposition(const DiscretizedOperator& op);

// Number of modes with sigma_n^2 / sigma_1^2 >= threshold, threshold in (0, 1).
int dof_count(const ModalDecomposition& modes, double threshold);

// Landau estimate A_t A_r |det C_par| / (lambda^2 D^2); C_par is the in-plane
// (x, z) block of the receive orientation.
double landau_dof(const PlanarAperture& tx, const PlanarAperture& rx, double distance_m,
                  const Carrier& carrier, const Orientation& rx_orientation);

// min(|A_t||D_t|, |A_r||D_r|) / (2 pi)^2 with angular areas within the radiating
// disk (at most pi k0^2).
double multipath_dof_bound(double tx_area_m2, double rx_area_m2,
                           double tx_angular_area, double rx_angular_area,
                           const Carrier& carrier);

struct WaterfillResult {
    Eigen::VectorXd powers;   // one per mode, zeros on inactive modes
    double capacity_bits = 0.0;
    double water_level = 0.0;
};

// Water-filling P_n = (mu - N0 / sigma_n^2)^+ with mu bisected so the powers sum
// to total_power (relative 1e-9); capacity = sum log2(1 + sigma_n^2 P_n / N0).
WaterfillResult waterfill(const ModalDecomposition& modes, double total_power,
                          double noise_level);

// Sum over modes with sqrt(P) sigma_n > epsilon of log2(sqrt(P) sigma_n / epsilon).
double kolmogorov_capacity(const ModalDecomposition& modes, double total_power,
                           double epsilon);

// log2 det(I + A Q_w A^H / N0) where A is the weighted operator matrix and Q_w the
// weighted input covariance. The weighted trace of the covariance must not exceed
// declared_power + 1e-9; the covariance must be Hermitian PSD.
double mutual_information(const DiscretizedOperator& op,
                          const Eigen::MatrixXcd& input_covariance, double noise_level,
                          double declared_power);

// Transmit power-coupling kernel samples R_t(s_i, s_j) on the tx grid.
struct PowerCouplingKernel {
    Eigen::MatrixXcd samples;
    bool psd_projected = false;
};

// Hermitizes and clips negative eigenvalues (in the weighted space) to zero.
PowerCouplingKernel make_power_coupling(Eigen::MatrixXcd samples, const ApertureGrid& grid);

// Noise covariance kernel K_n(r_i, r_j) on the rx grid; white case bypasses samples.
struct NoiseKernel {
    Eigen::MatrixXcd samples;
    bool white = true;
    double n0 = 1.0;
};

NoiseKernel white_noise(double n0);
NoiseKernel make_noise_kernel(Eigen::MatrixXcd samples, const ApertureGrid& grid);

// Nystrom stand-in for the delta kernel: diag(1 / w_i) (weight-consistent identity).
Eigen::MatrixXcd delta_kernel_samples(const ApertureGrid& grid);

// Whitened, power-normalized operator K_n^{-1/2} H R_t^{-1/2}; inverse square
// roots act on the positive eigensubspaces (clip below 1e-12 of the maximum).
DiscretizedOperator whiten(const KernelFn& h, const PowerCouplingKernel& r_t,
                           const NoiseKernel& k_n, const ApertureGrid& tx_grid,
                           const ApertureGrid& rx_grid);

} // namespace capa

#pragma once

#include <vector>

#include "capa/quadrature.hpp"

#include <Eigen/Dense>

#include <complex>

namespace capa {

using cplx = std::complex<double>;

// K user channels sampled on one shared transmit-aperture quadrature grid.
struct UserChannelSet {
    ApertureGrid grid;
    Eigen::MatrixXcd samples;  // grid.size() x K, column k = h_k at the nodes
    double noise_power = 1.0;  // sigma^2 > 0

    Eigen::Index user_count() const { return samples.cols(); }
};

UserChannelSet make_user_set(ApertureGrid grid, Eigen::MatrixXcd samples, double noise_power);

// R(j, l) = integral h_j(s) h_l*(s) ds, Hermitized; positive semidefinite.
struct GramMatrix {
    Eigen::MatrixXcd matrix;
    std::size_t grid_size = 0;  // provenance: node count of the sampling grid
};

GramMatrix gram_matrix(const UserChannelSet& users);

// Beamformers in the span of conjugate channels: w_k(s) = sum_j B(k, j) h_j*(s).
struct BeamformerSet {
    Eigen::MatrixXcd coefficients;  // K x K
    std::size_t grid_size = 0;
};

// Matched beams: B diagonal, B(k,k) = sqrt(P_k / R_kk).
BeamformerSet mrt(const UserChannelSet& users, const Eigen::VectorXd& power_alloc);

// Interference-free beams: B^T = R^{-1} diag, rows rescaled to per-user powers.
// Throws rank_error when cond(R) exceeds cond_cap.
BeamformerSet zf(const UserChannelSet& users, const Eigen::VectorXd& power_alloc,
                 double cond_cap = 1e10);

// Regularized beams w_k(s) = [h*(s)^T (I + diag(mu) R / sigma^2)^{-1} diag(scale)]_k.
BeamformerSet mmse(const UserChannelSet& users, const Eigen::VectorXd& multipliers,
                   const Eigen::VectorXd& scale);

// Per-user SINR gamma_k = |g_kk|^2 / (sum_{j != k} |g_kj|^2 + sigma^2) where
// g_kj = integral h_k w_j; every inner product reduces to a Gram contraction.
Eigen::VectorXd sinr(const UserChannelSet& users, const BeamformerSet& beams);

// Sum of log2(1 + gamma_k); negative entries are rejected.
double sum_rate(const Eigen::VectorXd& sinrs);

struct SinrTargets {
    Eigen::VectorXd targets;  // gamma-bar, strictly positive
};

struct PowerMinResult {
    BeamformerSet beamformers;
    Eigen::VectorXd multipliers;
    double total_power = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> power_trace;  // equality-power total per iteration
};

// Minimum-power beamforming under SINR targets via a damped multiplicative
// multiplier iteration; downlink powers from the SINR-equality linear system.
PowerMinResult power_min_solve(const UserChannelSet& users, const SinrTargets& targets,
                               double tol = 1e-4, int max_iter = 500, double damping = 0.5);

// Solves x(s) = g(s) + integral K(s, s') x(s') ds' for a separable kernel
// K(s, s') = sum_j u_j(s) v_j(s') on the grid. Columns of u_list / v_list hold
// the sampled factors. Singular (I - C) raises resonance_error.
Eigen::VectorXcd fredholm_solve_second_kind(const Eigen::VectorXcd& g,
                                            const Eigen::MatrixXcd& u_list,
                                            const Eigen::MatrixXcd& v_list,
                                            const ApertureGrid& grid);

// First-kind inversion is ill-posed; this is deliberately only a ridge-regularized
// least-squares helper on the Nystrom discretization:
//   min over x of  sum_i w_i |sum_j w_j K(s_i, s_j) x_j - g_i|^2 + rho sum_j w_j |x_j|^2.
// kernel_values(i, j) = K(s_i, s_j). rho = 0 on a singular kernel raises rank_error.
Eigen::VectorXcd fredholm_ridge_solve(const Eigen::MatrixXcd& kernel_values,
                                      const Eigen::VectorXcd& g, const ApertureGrid& grid,
                                      double rho);

// w_k evaluated at every grid node (column k), for exports and diagnostics.
Eigen::MatrixXcd beam_field(const UserChannelSet& users, const BeamformerSet& beams);

} // namespace capa

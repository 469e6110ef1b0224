#include "capa/limits.hpp"

#include "capa/detail/blas.hpp"
#include "capa/detail/rng.hpp"
#include "capa/detail/simd.hpp"
#include "capa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace capa {

namespace {

Eigen::VectorXd weight_vector(const ApertureGrid& grid) {
    return Eigen::Map<const Eigen::VectorXd>(grid.weights.data(),
                                             static_cast<Eigen::Index>(grid.weights.size()));
}

constexpr Eigen::Index exact_svd_limit = 1024;
constexpr Eigen::Index randomized_rank = 256;
constexpr Eigen::Index randomized_oversampling = 32;
constexpr int randomized_power_iterations = 2;

blasx::Svd randomized_svd(const Eigen::MatrixXcd& a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    const Eigen::Index rank = std::min({randomized_rank, m, n});
    const Eigen::Index sketch = std::min({rank + randomized_oversampling, m, n});

    detail::Rng rng(0x9e3779b97f4a7c15ull);  // fixed seed: deterministic decompositions
    Eigen::MatrixXcd probe(n, sketch);
    for (Eigen::Index j = 0; j < sketch; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            probe(i, j) = rng.cnormal();

    Eigen::MatrixXcd range = blasx::orthonormal_basis(blasx::gemm(a, probe));
    for (int it = 0; it < randomized_power_iterations; ++it) {
        const Eigen::MatrixXcd co_range = blasx::orthonormal_basis(blasx::gemm(a, range, 'C'));
        range = blasx::orthonormal_basis(blasx::gemm(a, co_range));
    }
    const Eigen::MatrixXcd small = blasx::gemm(range, a, 'C');  // sketch x n
    blasx::Svd svd = blasx::svd_econ(small);
    svd.u = blasx::gemm(range, svd.u);
    // Oversampled trailing values are untrusted; keep the requested rank.
    svd.u = svd.u.leftCols(rank).eval();
    svd.s = svd.s.head(rank).eval();
    svd.vh = svd.vh.topRows(rank).eval();
    return svd;
}

blasx::Svd adaptive_svd(const Eigen::MatrixXcd& a) {
    if (std::min(a.rows(), a.cols()) <= exact_svd_limit)
        return blasx::svd_econ(a);
    return randomized_svd(a);
}

// Inverse square root on the positive eigensubspace of a Hermitian matrix;
// eigenvalues below clip_rel * max are excluded (pseudo-inverse).
Eigen::MatrixXcd inv_sqrt_positive(const Eigen::MatrixXcd& hermitian, const char* what) {
    const blasx::HermitianEig eig = blasx::hermitian_eig(hermitian);
    const Eigen::Index n = eig.values.size();
    const double max_ev = n > 0 ? eig.values[n - 1] : 0.0;
    if (!(max_ev > 0.0))
        throw domain_error(std::string(what) + ": positive eigensubspace is empty");
    const double clip = 1e-12 * max_ev;
    Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(n);
    Eigen::Index positive = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eig.values[i] > clip) {
            inv_sqrt[i] = 1.0 / std::sqrt(eig.values[i]);
            ++positive;
        }
    }
    if (positive == 0)
        throw domain_error(std::string(what) + ": positive eigensubspace is empty");
    return eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.adjoint();
}

} // namespace

DiscretizedOperator discretize_operator(const KernelFn& h, const ApertureGrid& tx_grid,
                                        const ApertureGrid& rx_grid) {
    DiscretizedOperator op;
    op.tx_grid = tx_grid;
    op.rx_grid = rx_grid;
    const auto m = static_cast<Eigen::Index>(rx_grid.size());
    const auto n = static_cast<Eigen::Index>(tx_grid.size());
    Eigen::VectorXd sqrt_wr = weight_vector(rx_grid).cwiseSqrt();
    Eigen::VectorXd sqrt_wt = weight_vector(tx_grid).cwiseSqrt();
    op.matrix.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const cplx value = h(rx_grid.nodes_global[static_cast<std::size_t>(i)],
                                 tx_grid.nodes_global[static_cast<std::size_t>(j)]);
            if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
                throw numerical_error("discretize: non-finite kernel value at node pair (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
            op.matrix(i, j) = sqrt_wr[i] * value * sqrt_wt[j];
        }
    }
    return op;
}

DiscretizedOperator discretize_los_operator(const UniPolLosChannel& channel,
                                            const ApertureGrid& tx_grid,
                                            const ApertureGrid& rx_grid) {
    if (channel.polarization_mode != PolarizationMode::simplified)
        return discretize_operator(
            [&channel](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
                return los_kernel(channel, r, s);
            },
            tx_grid, rx_grid);
    DiscretizedOperator op;
    op.tx_grid = tx_grid;
    op.rx_grid = rx_grid;
    const auto m = static_cast<Eigen::Index>(rx_grid.size());
    const auto n = static_cast<Eigen::Index>(tx_grid.size());
    const Eigen::VectorXd sqrt_wr = weight_vector(rx_grid).cwiseSqrt();
    const Eigen::VectorXd sqrt_wt = weight_vector(tx_grid).cwiseSqrt();
    const std::size_t nn = tx_grid.size();
    std::vector<double> sx(nn), sy(nn), sz(nn), re(nn), im(nn);
    for (std::size_t j = 0; j < nn; ++j) {
        sx[j] = tx_grid.nodes_global[j].x();
        sy[j] = tx_grid.nodes_global[j].y();
        sz[j] = tx_grid.nodes_global[j].z();
    }
    const cplx scale = cplx(0.0, -1.0) * channel.carrier.impedance_ohm *
                       channel.carrier.wavenumber_rad_per_m;
    op.matrix.resize(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Vector3d& r = rx_grid.nodes_global[static_cast<std::size_t>(i)];
        const double obs[3] = {r.x(), r.y(), r.z()};
        simd::los_batch(obs, sx.data(), sy.data(), sz.data(), nn,
                        channel.carrier.wavenumber_rad_per_m, scale, re.data(), im.data());
        for (Eigen::Index j = 0; j < n; ++j)
            op.matrix(i, j) = sqrt_wr[i] * cplx(re[static_cast<std::size_t>(j)],
                                                im[static_cast<std::size_t>(j)]) *
                              sqrt_wt[j];
    }
    if (!op.matrix.allFinite())
        throw numerical_error("discretize: non-finite kernel value in LoS batch assembly");
    return op;
}

ModalDecomposition modal_decomposition(const DiscretizedOperator& op) {
    if (!op.matrix.allFinite())
        throw numerical_error("modal decomposition: operator matrix has non-finite entries");
    blasx::Svd svd = adaptive_svd(op.matrix);
    ModalDecomposition modes;
    modes.singular_values = std::move(svd.s);
    modes.rx_weights = op.rx_grid.weights;
    modes.tx_weights = op.tx_grid.weights;
    const Eigen::VectorXd inv_sqrt_wr = weight_vector(op.rx_grid).cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd inv_sqrt_wt = weight_vector(op.tx_grid).cwiseSqrt().cwiseInverse();
    modes.rx_functions = inv_sqrt_wr.asDiagonal() * svd.u;
    modes.tx_functions = inv_sqrt_wt.asDiagonal() * svd.vh.adjoint();
    return modes;
}

int dof_count(const ModalDecomposition& modes, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw domain_error("dof count: threshold must lie in (0, 1)");
    if (modes.singular_values.size() == 0 || !(modes.singular_values[0] > 0.0))
        throw domain_error("dof count: spectrum has no positive singular value");
    const double head = modes.singular_values[0] * modes.singular_values[0];
    int count = 0;
    for (Eigen::Index i = 0; i < modes.singular_values.size(); ++i) {
        const double mu = modes.singular_values[i] * modes.singular_values[i] / head;
        if (mu >= threshold)
            ++count;
    }
    return count;
}

double landau_dof(const PlanarAperture& tx, const PlanarAperture& rx, double distance_m,
                  const Carrier& carrier, const Orientation& rx_orientation) {
    if (!(distance_m > 0.0))
        throw domain_error("landau dof: distance must be positive");
    const Eigen::Matrix3d& c = rx_orientation.matrix;
    const double det_par = c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0);
    const double lambda = carrier.wavelength_m;
    return tx.area() * rx.area() * std::abs(det_par) /
           (lambda * lambda * distance_m * distance_m);
}

double multipath_dof_bound(double tx_area_m2, double rx_area_m2, double tx_angular_area,
                           double rx_angular_area, const Carrier& carrier) {
    if (tx_area_m2 < 0.0 || rx_area_m2 < 0.0 || tx_angular_area < 0.0 ||
        rx_angular_area < 0.0)
        throw domain_error("multipath dof: areas must be nonnegative");
    const double k0 = carrier.wavenumber_rad_per_m;
    const double disk = pi * k0 * k0;
    if (tx_angular_area > disk * (1.0 + 1e-12) || rx_angular_area > disk * (1.0 + 1e-12))
        throw domain_error("multipath dof: angular area exceeds the radiating disk");
    const double four_pi_sq = 4.0 * pi * pi;
    return std::min(tx_area_m2 * tx_angular_area, rx_area_m2 * rx_angular_area) / four_pi_sq;
}

WaterfillResult waterfill(const ModalDecomposition& modes, double total_power,
                          double noise_level) {
    if (!(total_power > 0.0) || !(noise_level > 0.0))
        throw domain_error("waterfill: power and noise level must be positive");
    const Eigen::VectorXd& s = modes.singular_values;
    if (s.size() == 0 || !(s[0] > 0.0))
        throw domain_error("waterfill: spectrum has no positive singular value");

    const auto allocated = [&](double level, Eigen::VectorXd* out) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double gain = s[i] * s[i];
            const double p = gain > 0.0 ? std::max(0.0, level - noise_level / gain) : 0.0;
            if (out != nullptr)
                (*out)[i] = p;
            sum += p;
        }
        return sum;
    };

    double lo = noise_level / (s[0] * s[0]);
    double hi = lo + total_power;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (allocated(mid, nullptr) < total_power)
            lo = mid;
        else
            hi = mid;
    }
    WaterfillResult result;
    result.water_level = 0.5 * (lo + hi);
    result.powers.resize(s.size());
    allocated(result.water_level, &result.powers);
    const double sum = result.powers.sum();
    if (sum > 0.0)
        result.powers *= total_power / sum;  // remove the last bisection residual
    result.capacity_bits = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        result.capacity_bits +=
            std::log2(1.0 + s[i] * s[i] * result.powers[i] / noise_level);
    return result;
}

double kolmogorov_capacity(const ModalDecomposition& modes, double total_power,
                           double epsilon) {
    if (!(epsilon > 0.0))
        throw domain_error("kolmogorov capacity: epsilon must be positive");
    if (!(total_power >= 0.0))
        throw domain_error("kolmogorov capacity: power must be nonnegative");
    const double amp = std::sqrt(total_power);
    double bits = 0.0;
    for (Eigen::Index i = 0; i < modes.singular_values.size(); ++i) {
        const double level = amp * modes.singular_values[i];
        if (level > epsilon)
            bits += std::log2(level / epsilon);
    }
    return bits;
}

double mutual_information(const DiscretizedOperator& op,
                          const Eigen::MatrixXcd& input_covariance, double noise_level,
                          double declared_power) {
    if (!(noise_level > 0.0))
        throw domain_error("mutual information: noise level must be positive");
    const auto n = static_cast<Eigen::Index>(op.tx_grid.size());
    if (input_covariance.rows() != n || input_covariance.cols() != n)
        throw domain_error("mutual information: covariance must be sampled on the tx grid");
    const Eigen::VectorXd sqrt_wt = weight_vector(op.tx_grid).cwiseSqrt();
    Eigen::MatrixXcd weighted =
        sqrt_wt.asDiagonal() * input_covariance * sqrt_wt.asDiagonal();
    weighted = 0.5 * (weighted + weighted.adjoint()).eval();
    const blasx::HermitianEig eig = blasx::hermitian_eig(weighted);
    const double trace = eig.values.sum();
    const double floor = -1e-10 * std::max(std::abs(trace), 1e-300);
    if (eig.values.minCoeff() < floor)
        throw domain_error("mutual information: input covariance is not PSD");
    if (trace > declared_power + 1e-9)
        throw domain_error("mutual information: covariance power exceeds the declared power");

    Eigen::MatrixXcd received =
        blasx::gemm(blasx::gemm(op.matrix, weighted), op.matrix, 'N', 'C');
    received = 0.5 * (received + received.adjoint()).eval();
    const blasx::HermitianEig rec = blasx::hermitian_eig(received);
    double bits = 0.0;
    for (Eigen::Index i = 0; i < rec.values.size(); ++i)
        bits += std::log2(1.0 + std::max(0.0, rec.values[i]) / noise_level);
    return bits;
}

PowerCouplingKernel make_power_coupling(Eigen::MatrixXcd samples, const ApertureGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (samples.rows() != n || samples.cols() != n)
        throw domain_error("power coupling: samples must be square on the grid");
    const Eigen::VectorXd sqrt_w = weight_vector(grid).cwiseSqrt();
    Eigen::MatrixXcd weighted = sqrt_w.asDiagonal() * samples * sqrt_w.asDiagonal();
    weighted = 0.5 * (weighted + weighted.adjoint()).eval();
    blasx::HermitianEig eig = blasx::hermitian_eig(weighted);
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        eig.values[i] = std::max(0.0, eig.values[i]);
    weighted = eig.vectors * eig.values.asDiagonal() * eig.vectors.adjoint();
    const Eigen::VectorXd inv_sqrt_w = sqrt_w.cwiseInverse();
    PowerCouplingKernel kernel;
    kernel.samples = inv_sqrt_w.asDiagonal() * weighted * inv_sqrt_w.asDiagonal();
    kernel.psd_projected = true;
    return kernel;
}

NoiseKernel white_noise(double n0) {
    if (!(n0 > 0.0))
        throw domain_error("noise kernel: level must be positive");
    NoiseKernel kernel;
    kernel.white = true;
    kernel.n0 = n0;
    return kernel;
}

NoiseKernel make_noise_kernel(Eigen::MatrixXcd samples, const ApertureGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (samples.rows() != n || samples.cols() != n)
        throw domain_error("noise kernel: samples must be square on the grid");
    NoiseKernel kernel;
    kernel.white = false;
    kernel.n0 = 0.0;
    kernel.samples = 0.5 * (samples + samples.adjoint()).eval();
    return kernel;
}

Eigen::MatrixXcd delta_kernel_samples(const ApertureGrid& grid) {
    const Eigen::VectorXd w = weight_vector(grid);
    return w.cwiseInverse().cast<cplx>().asDiagonal();
}

DiscretizedOperator whiten(const KernelFn& h, const PowerCouplingKernel& r_t,
                           const NoiseKernel& k_n, const ApertureGrid& tx_grid,
                           const ApertureGrid& rx_grid) {
    DiscretizedOperator op = discretize_operator(h, tx_grid, rx_grid);
    const Eigen::VectorXd sqrt_wt = weight_vector(tx_grid).cwiseSqrt();
    Eigen::MatrixXcd power_weighted =
        sqrt_wt.asDiagonal() * r_t.samples * sqrt_wt.asDiagonal();
    power_weighted = 0.5 * (power_weighted + power_weighted.adjoint()).eval();
    const Eigen::MatrixXcd right = inv_sqrt_positive(power_weighted, "whiten: power kernel");

    Eigen::MatrixXcd result;
    if (k_n.white) {
        result = blasx::gemm(op.matrix, right) / std::sqrt(k_n.n0);
    } else {
        const Eigen::VectorXd sqrt_wr = weight_vector(rx_grid).cwiseSqrt();
        Eigen::MatrixXcd noise_weighted =
            sqrt_wr.asDiagonal() * k_n.samples * sqrt_wr.asDiagonal();
        noise_weighted = 0.5 * (noise_weighted + noise_weighted.adjoint()).eval();
        const Eigen::MatrixXcd left = inv_sqrt_positive(noise_weighted, "whiten: noise kernel");
        result = blasx::gemm(left, blasx::gemm(op.matrix, right));
    }
    op.matrix = std::move(result);
    return op;
}

} // namespace capa

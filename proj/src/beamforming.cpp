#include "capa/beamforming.hpp"

#include "capa/detail/blas.hpp"
#include "capa/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace capa {

namespace {

Eigen::VectorXd grid_weights(const ApertureGrid& grid) {
    return Eigen::Map<const Eigen::VectorXd>(grid.weights.data(),
                                             static_cast<Eigen::Index>(grid.weights.size()));
}

// g(k, j) = integral h_k(s) w_j(s) ds = (R B^T)(k, j).
Eigen::MatrixXcd gain_matrix(const Eigen::MatrixXcd& gram, const BeamformerSet& beams) {
    return gram * beams.coefficients.transpose();
}

Eigen::VectorXd beam_powers(const Eigen::MatrixXcd& gram, const Eigen::MatrixXcd& b) {
    return (b.conjugate() * gram * b.transpose()).diagonal().real();
}

Eigen::VectorXd sinr_from_gains(const Eigen::MatrixXcd& gains, double noise_power) {
    const Eigen::Index k = gains.rows();
    Eigen::VectorXd out(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        double interference = 0.0;
        for (Eigen::Index j = 0; j < k; ++j)
            if (j != i)
                interference += std::norm(gains(i, j));
        out[i] = std::norm(gains(i, i)) / (interference + noise_power);
    }
    return out;
}

void check_alloc(const Eigen::VectorXd& alloc, Eigen::Index k, const char* what) {
    if (alloc.size() != k)
        throw domain_error(std::string(what) + ": expected one entry per user");
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(alloc[i] >= 0.0))
            throw domain_error(std::string(what) + ": entries must be nonnegative");
}

// Unit-power beam directions d_k = M e_k / sqrt(d^H R d) for M = (I + diag(mu) R / s2)^{-1},
// plus the SINR-equality powers; shared by the power-minimization iteration.
struct EqualityPowers {
    Eigen::MatrixXcd directions;  // column k = normalized d_k
    Eigen::VectorXd powers;
    bool valid = false;
};

EqualityPowers equality_powers(const Eigen::MatrixXcd& inverse_map,
                               const Eigen::MatrixXcd& gram, const Eigen::VectorXd& targets,
                               double noise_power) {
    const Eigen::Index k = gram.rows();
    EqualityPowers out;
    out.directions = inverse_map;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double power = (out.directions.col(j).adjoint() * gram * out.directions.col(j))
                                 .value()
                                 .real();
        if (!(power > 0.0))
            return out;
        out.directions.col(j) /= std::sqrt(power);
    }
    const Eigen::MatrixXcd gains = gram * out.directions;
    Eigen::MatrixXd system(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            system(i, j) = i == j ? std::norm(gains(i, i)) / targets[i] : -std::norm(gains(i, j));
    out.powers = system.partialPivLu().solve(Eigen::VectorXd::Constant(k, noise_power));
    out.valid = out.powers.allFinite();
    return out;
}

} // namespace

UserChannelSet make_user_set(ApertureGrid grid, Eigen::MatrixXcd samples, double noise_power) {
    if (samples.cols() < 1)
        throw domain_error("user set: at least one user required");
    if (static_cast<std::size_t>(samples.rows()) != grid.size())
        throw domain_error("user set: sample rows must match the grid node count");
    if (!(noise_power > 0.0))
        throw domain_error("user set: noise power must be positive");
    UserChannelSet users;
    users.grid = std::move(grid);
    users.samples = std::move(samples);
    users.noise_power = noise_power;
    return users;
}

GramMatrix gram_matrix(const UserChannelSet& users) {
    const Eigen::VectorXd w = grid_weights(users.grid);
    // A(l, j) = sum_i conj(h_l) w_i h_j = R(j, l), so R = A^T.
    const Eigen::MatrixXcd a =
        users.samples.adjoint() * (w.asDiagonal() * users.samples);
    GramMatrix gram;
    gram.matrix = 0.5 * (a.transpose() + a.conjugate());
    gram.grid_size = users.grid.size();
    return gram;
}

BeamformerSet mrt(const UserChannelSet& users, const Eigen::VectorXd& power_alloc) {
    const Eigen::Index k = users.user_count();
    check_alloc(power_alloc, k, "mrt power allocation");
    const GramMatrix gram = gram_matrix(users);
    BeamformerSet beams;
    beams.coefficients = Eigen::MatrixXcd::Zero(k, k);
    beams.grid_size = users.grid.size();
    const double floor = 1e-14 * std::max(gram.matrix.diagonal().real().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double norm_sq = gram.matrix(i, i).real();
        if (norm_sq <= floor)
            throw domain_error("mrt: user channel has zero norm");
        beams.coefficients(i, i) = std::sqrt(power_alloc[i] / norm_sq);
    }
    return beams;
}

BeamformerSet zf(const UserChannelSet& users, const Eigen::VectorXd& power_alloc,
                 double cond_cap) {
    const Eigen::Index k = users.user_count();
    check_alloc(power_alloc, k, "zf power allocation");
    const GramMatrix gram = gram_matrix(users);
    const blasx::HermitianEig eig = blasx::hermitian_eig(gram.matrix);
    const double lo = eig.values[0];
    const double hi = eig.values[k - 1];
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond < cond_cap))
        throw rank_error("zf: Gram matrix condition number " + std::to_string(cond) +
                         " exceeds the cap " + std::to_string(cond_cap));
    const Eigen::MatrixXcd inverse =
        eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.adjoint();
    BeamformerSet beams;
    beams.coefficients.resize(k, k);
    beams.grid_size = users.grid.size();
    for (Eigen::Index i = 0; i < k; ++i) {
        const double self = inverse(i, i).real();  // beam power before scaling
        beams.coefficients.row(i) =
            std::sqrt(power_alloc[i] / self) * inverse.col(i).transpose();
    }
    return beams;
}

BeamformerSet mmse(const UserChannelSet& users, const Eigen::VectorXd& multipliers,
                   const Eigen::VectorXd& scale) {
    const Eigen::Index k = users.user_count();
    check_alloc(multipliers, k, "mmse multipliers");
    if (scale.size() != k)
        throw domain_error("mmse scale: expected one entry per user");
    const GramMatrix gram = gram_matrix(users);
    const Eigen::MatrixXcd regularized =
        Eigen::MatrixXcd::Identity(k, k) +
        multipliers.asDiagonal() * gram.matrix / users.noise_power;
    const Eigen::MatrixXcd inverse =
        regularized.partialPivLu().solve(Eigen::MatrixXcd::Identity(k, k));
    BeamformerSet beams;
    beams.coefficients = (inverse * scale.asDiagonal()).transpose();
    beams.grid_size = users.grid.size();
    return beams;
}

Eigen::VectorXd sinr(const UserChannelSet& users, const BeamformerSet& beams) {
    if (beams.grid_size != users.grid.size())
        throw domain_error("sinr: beamformers were built on a different grid");
    const GramMatrix gram = gram_matrix(users);
    return sinr_from_gains(gain_matrix(gram.matrix, beams), users.noise_power);
}

double sum_rate(const Eigen::VectorXd& sinrs) {
    double rate = 0.0;
    for (Eigen::Index i = 0; i < sinrs.size(); ++i) {
        if (!(sinrs[i] >= 0.0))
            throw domain_error("sum rate: SINR values must be nonnegative");
        rate += std::log2(1.0 + sinrs[i]);
    }
    return rate;
}

PowerMinResult power_min_solve(const UserChannelSet& users, const SinrTargets& targets,
                               double tol, int max_iter, double damping) {
    const Eigen::Index k = users.user_count();
    if (targets.targets.size() != k)
        throw domain_error("power minimization: expected one SINR target per user");
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(targets.targets[i] > 0.0))
            throw domain_error("power minimization: SINR targets must be positive");
    if (!(damping > 0.0) || damping > 1.0)
        throw config_error("power minimization: damping must lie in (0, 1]");
    if (!(tol > 0.0) || max_iter < 1)
        throw config_error("power minimization: tol must be positive and max_iter >= 1");

    const GramMatrix gram = gram_matrix(users);
    const double s2 = users.noise_power;
    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(k, k);

    PowerMinResult result;
    result.multipliers = Eigen::VectorXd::Ones(k);
    EqualityPowers last;
    int it = 0;
    for (; it < max_iter; ++it) {
        const Eigen::MatrixXcd regularized =
            identity + result.multipliers.asDiagonal() * gram.matrix / s2;
        const Eigen::MatrixXcd inverse_map = regularized.partialPivLu().solve(identity);
        // Duality-implied SINR of user k at the current multipliers:
        // gamma_k = mu_k Re([R M]_kk) / sigma^2, exact at the fixed point.
        const Eigen::VectorXd coupling = (gram.matrix * inverse_map).diagonal().real() / s2;
        const Eigen::VectorXd gamma =
            result.multipliers.cwiseProduct(coupling);
        if (!gamma.allFinite() || !result.multipliers.allFinite())
            throw numerical_error(
                "power minimization: non-finite iterate at iteration " + std::to_string(it) +
                " (multiplier trace max " + std::to_string(result.multipliers.maxCoeff()) + ")");

        last = equality_powers(inverse_map, gram.matrix, targets.targets, s2);
        result.power_trace.push_back(
            last.valid ? last.powers.sum() : std::numeric_limits<double>::quiet_NaN());

        const double err = (gamma.cwiseQuotient(targets.targets).array() - 1.0).abs().maxCoeff();
        if (err < tol) {
            result.converged = true;
            ++it;
            break;
        }
        for (Eigen::Index i = 0; i < k; ++i)
            result.multipliers[i] *= std::pow(targets.targets[i] / gamma[i], damping);
    }
    result.iterations = it;

    if (last.valid && last.powers.minCoeff() >= 0.0) {
        result.beamformers.coefficients.resize(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            result.beamformers.coefficients.row(i) =
                std::sqrt(last.powers[i]) * last.directions.col(i).transpose();
        result.total_power = last.powers.sum();
    } else {
        result.converged = false;
        result.beamformers.coefficients = Eigen::MatrixXcd::Zero(k, k);
        result.total_power = std::numeric_limits<double>::quiet_NaN();
    }
    result.beamformers.grid_size = users.grid.size();
    return result;
}

Eigen::VectorXcd fredholm_solve_second_kind(const Eigen::VectorXcd& g,
                                            const Eigen::MatrixXcd& u_list,
                                            const Eigen::MatrixXcd& v_list,
                                            const ApertureGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (g.size() != n)
        throw domain_error("fredholm: g must be sampled on the grid");
    if (u_list.rows() != n || v_list.rows() != n || u_list.cols() != v_list.cols())
        throw domain_error("fredholm: kernel factor shapes must match the grid");
    const Eigen::Index terms = u_list.cols();
    if (terms == 0)
        return g;
    const Eigen::VectorXd w = grid_weights(grid);
    const Eigen::VectorXcd rhs = v_list.transpose() * (w.asDiagonal() * g);
    const Eigen::MatrixXcd coupling = v_list.transpose() * (w.asDiagonal() * u_list);
    const Eigen::MatrixXcd system =
        Eigen::MatrixXcd::Identity(terms, terms) - coupling;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(system);
    if (!lu.isInvertible())
        throw resonance_error("fredholm: (I - C) is singular (resonant kernel)");
    const Eigen::VectorXcd a = lu.solve(rhs);
    return g + u_list * a;
}

Eigen::VectorXcd fredholm_ridge_solve(const Eigen::MatrixXcd& kernel_values,
                                      const Eigen::VectorXcd& g, const ApertureGrid& grid,
                                      double rho) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (kernel_values.rows() != n || kernel_values.cols() != n || g.size() != n)
        throw domain_error("ridge solve: kernel and data must be sampled on the grid");
    if (!(rho >= 0.0))
        throw domain_error("ridge solve: ridge parameter must be nonnegative");
    const Eigen::VectorXd w = grid_weights(grid);
    const Eigen::MatrixXcd op = kernel_values * w.asDiagonal();  // Nystrom operator
    const Eigen::MatrixXcd normal =
        op.adjoint() * w.asDiagonal() * op + rho * w.asDiagonal().toDenseMatrix().cast<cplx>();
    const Eigen::VectorXcd rhs = op.adjoint() * (w.asDiagonal() * g);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(normal);
    if (!lu.isInvertible())
        throw rank_error(
            "ridge solve: singular normal equations; a positive ridge parameter is required");
    return lu.solve(rhs);
}

Eigen::MatrixXcd beam_field(const UserChannelSet& users, const BeamformerSet& beams) {
    if (beams.grid_size != users.grid.size())
        throw domain_error("beam field: beamformers were built on a different grid");
    return users.samples.conjugate() * beams.coefficients.transpose();
}

} // namespace capa

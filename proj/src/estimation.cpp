#include "capa/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <utility>

#include "capa/detail/blas.hpp"
#include "capa/detail/csv.hpp"
#include "capa/detail/rng.hpp"
#include "capa/errors.hpp"

namespace capa {

namespace {

Eigen::VectorXd weight_vector(const ApertureGrid& grid) {
    return Eigen::Map<const Eigen::VectorXd>(grid.weights.data(),
                                             static_cast<Eigen::Index>(grid.weights.size()));
}

// rx_factors(j, i) = atom_i.rx_factor(r_j), tx_factors(j, i) = atom_i.tx_factor(s_j).
Eigen::MatrixXcd factor_table(const std::vector<DictionaryAtom>& atoms,
                              const ApertureGrid& grid, bool rx_side) {
    const auto rows = static_cast<Eigen::Index>(grid.size());
    const auto cols = static_cast<Eigen::Index>(atoms.size());
    Eigen::MatrixXcd table(rows, cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        const auto& factor =
            rx_side ? atoms[static_cast<std::size_t>(i)].rx_factor
                    : atoms[static_cast<std::size_t>(i)].tx_factor;
        for (Eigen::Index j = 0; j < rows; ++j)
            table(j, i) = factor(grid.nodes_global[static_cast<std::size_t>(j)]);
    }
    return table;
}

std::string support_string(const std::vector<Eigen::Index>& support) {
    std::string text = "[";
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (i > 0)
            text += ", ";
        text += std::to_string(support[i]);
    }
    return text + "]";
}

} // namespace

std::vector<DictionaryAtom> farfield_dictionary(const WavenumberGrid& tx_wavenumbers,
                                                const WavenumberGrid& rx_wavenumbers,
                                                std::size_t budget) {
    if (tx_wavenumbers.size() == 0 || rx_wavenumbers.size() == 0)
        throw domain_error("farfield dictionary: wavenumber grids must be nonempty");
    if (std::abs(tx_wavenumbers.carrier.frequency_hz - rx_wavenumbers.carrier.frequency_hz) >
        1e-6 * tx_wavenumbers.carrier.frequency_hz)
        throw domain_error("farfield dictionary: grids disagree on the carrier frequency");
    const std::size_t count = tx_wavenumbers.size() * rx_wavenumbers.size();
    if (count > budget)
        throw config_error("farfield dictionary: " + std::to_string(count) +
                           " atoms exceed the budget of " + std::to_string(budget));

    const double norm =
        std::sqrt(rx_wavenumbers.aperture.area() * tx_wavenumbers.aperture.area());
    std::vector<DictionaryAtom> atoms;
    atoms.reserve(count);
    for (std::size_t p = 0; p < rx_wavenumbers.size(); ++p) {
        const Eigen::Vector2d k = rx_wavenumbers.wavevector(p);
        for (std::size_t t = 0; t < tx_wavenumbers.size(); ++t) {
            const Eigen::Vector2d kappa = tx_wavenumbers.wavevector(t);
            DictionaryAtom atom;
            atom.kind = DictionaryAtom::Kind::farfield;
            atom.rx_wavenumber_rad_per_m = k;
            atom.tx_wavenumber_rad_per_m = kappa;
            atom.rx_factor = [ap = rx_wavenumbers.aperture, k](const Eigen::Vector3d& r) {
                const Eigen::Vector2d local = global_to_local(ap, r);
                return std::polar(1.0, k.dot(local));
            };
            atom.tx_factor = [ap = tx_wavenumbers.aperture, kappa](const Eigen::Vector3d& s) {
                const Eigen::Vector2d local = global_to_local(ap, s);
                return std::polar(1.0, -kappa.dot(local));
            };
            atom.l2_norm = norm;
            atoms.push_back(std::move(atom));
        }
    }
    return atoms;
}

std::vector<DictionaryAtom> nearfield_dictionary(const std::vector<Eigen::Vector3d>& candidates,
                                                 const PlanarAperture& tx,
                                                 const PlanarAperture& rx, const Carrier& carrier,
                                                 std::size_t budget) {
    if (candidates.empty())
        throw domain_error("nearfield dictionary: candidate list must be nonempty");
    if (candidates.size() > budget)
        throw config_error("nearfield dictionary: " + std::to_string(candidates.size()) +
                           " atoms exceed the budget of " + std::to_string(budget));
    const ApertureGrid tx_grid = aperture_grid(tx, default_order(tx, carrier));
    const ApertureGrid rx_grid = aperture_grid(rx, default_order(rx, carrier));
    const double k0 = carrier.wavenumber_rad_per_m;

    std::vector<DictionaryAtom> atoms;
    atoms.reserve(candidates.size());
    for (const Eigen::Vector3d& q : candidates) {
        if (point_on_aperture(tx, q) || point_on_aperture(rx, q))
            throw domain_error("nearfield dictionary: candidate point lies on an aperture");
        DictionaryAtom atom;
        atom.kind = DictionaryAtom::Kind::nearfield;
        atom.focal_point_m = q;
        atom.rx_factor = [q, k0](const Eigen::Vector3d& r) {
            const double d = (r - q).norm();
            return std::polar(1.0 / d, -k0 * d);
        };
        atom.tx_factor = [q, k0](const Eigen::Vector3d& s) {
            const double d = (q - s).norm();
            return std::polar(1.0 / d, -k0 * d);
        };
        // |phi|^2 separates into (integral dr / |r-q|^2)(integral ds / |q-s|^2).
        double rx_energy = 0.0;
        for (std::size_t j = 0; j < rx_grid.size(); ++j)
            rx_energy += rx_grid.weights[j] / (rx_grid.nodes_global[j] - q).squaredNorm();
        double tx_energy = 0.0;
        for (std::size_t j = 0; j < tx_grid.size(); ++j)
            tx_energy += tx_grid.weights[j] / (tx_grid.nodes_global[j] - q).squaredNorm();
        atom.l2_norm = std::sqrt(rx_energy * tx_energy);
        if (!(atom.l2_norm > 0.0) || !std::isfinite(atom.l2_norm))
            throw numerical_error("nearfield dictionary: atom norm is not positive finite");
        atoms.push_back(std::move(atom));
    }
    return atoms;
}

PilotSchedule make_pilot_schedule(ApertureGrid tx_grid, ApertureGrid rx_grid,
                                  Eigen::MatrixXcd pilots, Eigen::MatrixXcd combiners,
                                  double noise_level) {
    if (pilots.rows() < 1)
        throw config_error("pilot schedule: at least one slot is required");
    if (pilots.rows() != combiners.rows())
        throw config_error("pilot schedule: pilot and combiner slot counts differ");
    if (pilots.cols() != static_cast<Eigen::Index>(tx_grid.size()) ||
        combiners.cols() != static_cast<Eigen::Index>(rx_grid.size()))
        throw config_error("pilot schedule: rows must be sampled on the quadrature grids");
    if (!(noise_level >= 0.0))
        throw config_error("pilot schedule: noise level must be nonnegative");
    for (Eigen::Index a = 0; a < pilots.rows(); ++a)
        for (Eigen::Index b = a + 1; b < pilots.rows(); ++b)
            if (pilots.row(a) == pilots.row(b) && combiners.row(a) == combiners.row(b))
                throw config_error("pilot schedule: slots " + std::to_string(a) + " and " +
                                   std::to_string(b) + " repeat the same pilot/combiner pair");

    PilotSchedule schedule;
    schedule.tx_grid = std::move(tx_grid);
    schedule.rx_grid = std::move(rx_grid);
    schedule.pilots = std::move(pilots);
    schedule.combiners = std::move(combiners);
    schedule.noise_level = noise_level;
    const Eigen::VectorXd wt = weight_vector(schedule.tx_grid);
    const Eigen::VectorXd wr = weight_vector(schedule.rx_grid);
    schedule.pilot_energy = schedule.pilots.cwiseAbs2() * wt;
    schedule.combiner_energy = schedule.combiners.cwiseAbs2() * wr;
    return schedule;
}

PilotSchedule random_pilot_schedule(const ApertureGrid& tx_grid, const ApertureGrid& rx_grid,
                                    Eigen::Index length, double noise_level,
                                    std::uint64_t seed) {
    if (length < 1)
        throw config_error("pilot schedule: at least one slot is required");
    detail::Rng rng(seed);
    const auto fill = [&rng](Eigen::Index slots, const ApertureGrid& grid) {
        const Eigen::VectorXd w = weight_vector(grid);
        Eigen::MatrixXcd rows(slots, w.size());
        for (Eigen::Index l = 0; l < slots; ++l) {
            for (Eigen::Index j = 0; j < w.size(); ++j)
                rows(l, j) = std::polar(1.0, rng.uniform(0.0, 2.0 * pi));
            rows.row(l) /= std::sqrt((rows.row(l).cwiseAbs2() * w).value());
        }
        return rows;
    };
    Eigen::MatrixXcd pilots = fill(length, tx_grid);
    Eigen::MatrixXcd combiners = fill(length, rx_grid);
    return make_pilot_schedule(tx_grid, rx_grid, std::move(pilots), std::move(combiners),
                               noise_level);
}

SensingMatrix sensing_matrix(const PilotSchedule& schedule,
                             const std::vector<DictionaryAtom>& atoms) {
    if (atoms.empty())
        throw domain_error("sensing matrix: dictionary must be nonempty");
    const Eigen::VectorXd wr = weight_vector(schedule.rx_grid);
    const Eigen::VectorXd wt = weight_vector(schedule.tx_grid);
    const Eigen::MatrixXcd rx_factors = factor_table(atoms, schedule.rx_grid, true);
    const Eigen::MatrixXcd tx_factors = factor_table(atoms, schedule.tx_grid, false);

    // Entries separate into (integral b_l^* f_i)(integral g_i w_l); assemble both
    // projection tables with one product each and combine elementwise.
    const Eigen::MatrixXcd rx_proj =
        blasx::gemm(schedule.combiners.conjugate() * wr.asDiagonal(), rx_factors);
    const Eigen::MatrixXcd tx_proj =
        blasx::gemm(schedule.pilots * wt.asDiagonal(), tx_factors);

    SensingMatrix sensing;
    sensing.matrix = rx_proj.cwiseProduct(tx_proj);
    for (std::size_t i = 0; i < atoms.size(); ++i)
        sensing.matrix.col(static_cast<Eigen::Index>(i)) /= atoms[i].l2_norm;
    if (!sensing.matrix.allFinite())
        throw numerical_error("sensing matrix: assembly produced non-finite entries");
    sensing.column_norms = sensing.matrix.colwise().norm();
    sensing.noise_level = schedule.noise_level;
    for (const DictionaryAtom& atom : atoms) {
        if (atom.kind == DictionaryAtom::Kind::farfield)
            ++sensing.farfield_atoms;
        else
            ++sensing.nearfield_atoms;
    }
    return sensing;
}

Eigen::VectorXcd measure(const KernelFn& h, const PilotSchedule& schedule, std::uint64_t seed) {
    const auto m = static_cast<Eigen::Index>(schedule.rx_grid.size());
    const auto n = static_cast<Eigen::Index>(schedule.tx_grid.size());
    Eigen::MatrixXcd kernel(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            kernel(i, j) = h(schedule.rx_grid.nodes_global[static_cast<std::size_t>(i)],
                             schedule.tx_grid.nodes_global[static_cast<std::size_t>(j)]);
    if (!kernel.allFinite())
        throw numerical_error("measure: kernel evaluated to non-finite values");

    const Eigen::VectorXd wr = weight_vector(schedule.rx_grid);
    const Eigen::VectorXd wt = weight_vector(schedule.tx_grid);
    const Eigen::MatrixXcd combined =
        blasx::gemm(schedule.combiners.conjugate() * wr.asDiagonal(), kernel);
    const Eigen::MatrixXcd pilots_w = schedule.pilots * wt.asDiagonal();
    Eigen::VectorXcd v = combined.cwiseProduct(pilots_w).rowwise().sum();

    if (schedule.noise_level > 0.0) {
        detail::Rng rng(seed);
        for (Eigen::Index l = 0; l < v.size(); ++l)
            v[l] += std::sqrt(schedule.noise_level * schedule.combiner_energy[l]) *
                    rng.cnormal();
    }
    return v;
}

SparseEstimate omp_recover(const SensingMatrix& sensing, const Eigen::VectorXcd& v,
                           const OmpStop& stop) {
    const Eigen::MatrixXcd& a = sensing.matrix;
    if (v.size() != a.rows())
        throw domain_error("omp: measurement length does not match the sensing matrix");
    if (a.rows() < 1)
        throw domain_error("omp: at least one measurement is required");
    if (stop.sparsity && *stop.sparsity < 0)
        throw config_error("omp: sparsity budget must be nonnegative");
    if (stop.residual && !(*stop.residual >= 0.0))
        throw config_error("omp: residual threshold must be nonnegative");

    const double residual_goal =
        stop.residual ? *stop.residual : (stop.sparsity ? 0.0 : 1e-6 * v.norm());
    const Eigen::Index max_support =
        std::min(a.cols(), stop.sparsity ? *stop.sparsity : a.rows());

    SparseEstimate estimate;
    estimate.coefficients = Eigen::VectorXcd::Zero(a.cols());
    Eigen::VectorXcd residual = v;
    estimate.residual_norm = residual.norm();
    Eigen::VectorXcd solution;

    while (static_cast<Eigen::Index>(estimate.support.size()) < max_support &&
           estimate.residual_norm > residual_goal) {
        Eigen::Index best = -1;
        double best_score = 0.0;
        const Eigen::VectorXcd correlations = a.adjoint() * residual;
        for (Eigen::Index i = 0; i < a.cols(); ++i) {
            if (std::find(estimate.support.begin(), estimate.support.end(), i) !=
                estimate.support.end())
                continue;
            if (!(sensing.column_norms[i] > 0.0))
                continue;
            const double score = std::abs(correlations[i]) / sensing.column_norms[i];
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        if (best < 0)
            break;  // residual orthogonal to every remaining column
        estimate.support.push_back(best);

        const auto k = static_cast<Eigen::Index>(estimate.support.size());
        Eigen::MatrixXcd submatrix(a.rows(), k);
        for (Eigen::Index c = 0; c < k; ++c)
            submatrix.col(c) = a.col(estimate.support[static_cast<std::size_t>(c)]);
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(submatrix);
        if (qr.rank() < k)
            throw rank_error("omp: support matrix is rank-deficient at support " +
                             support_string(estimate.support));
        solution = qr.solve(v);
        residual = v - submatrix * solution;
        estimate.residual_norm = residual.norm();
    }

    for (std::size_t c = 0; c < estimate.support.size(); ++c)
        estimate.coefficients[estimate.support[c]] = solution[static_cast<Eigen::Index>(c)];
    return estimate;
}

KernelFn reconstruct_channel(const SparseEstimate& estimate,
                             const std::vector<DictionaryAtom>& atoms) {
    if (estimate.coefficients.size() != static_cast<Eigen::Index>(atoms.size()))
        throw domain_error("reconstruct: coefficient count does not match the dictionary");
    struct Term {
        cplx weight;
        std::function<cplx(const Eigen::Vector3d&)> rx_factor;
        std::function<cplx(const Eigen::Vector3d&)> tx_factor;
    };
    auto terms = std::make_shared<std::vector<Term>>();
    for (const Eigen::Index i : estimate.support) {
        const DictionaryAtom& atom = atoms[static_cast<std::size_t>(i)];
        terms->push_back(
            {estimate.coefficients[i] / atom.l2_norm, atom.rx_factor, atom.tx_factor});
    }
    return [terms](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
        cplx acc(0.0, 0.0);
        for (const Term& term : *terms)
            acc += term.weight * term.rx_factor(r) * term.tx_factor(s);
        return acc;
    };
}

double kernel_l2_norm_sq(const KernelFn& h, const ApertureGrid& tx_grid,
                         const ApertureGrid& rx_grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rx_grid.size(); ++i)
        for (std::size_t j = 0; j < tx_grid.size(); ++j)
            acc += rx_grid.weights[i] * tx_grid.weights[j] *
                   std::norm(h(rx_grid.nodes_global[i], tx_grid.nodes_global[j]));
    return acc;
}

double kernel_l2_distance_sq(const KernelFn& a, const KernelFn& b, const ApertureGrid& tx_grid,
                             const ApertureGrid& rx_grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rx_grid.size(); ++i)
        for (std::size_t j = 0; j < tx_grid.size(); ++j) {
            const cplx diff = a(rx_grid.nodes_global[i], tx_grid.nodes_global[j]) -
                              b(rx_grid.nodes_global[i], tx_grid.nodes_global[j]);
            acc += rx_grid.weights[i] * tx_grid.weights[j] * std::norm(diff);
        }
    return acc;
}

void export_estimate(const SparseEstimate& estimate, std::ostream& os) {
    os << "index,re,im\n";
    for (Eigen::Index i = 0; i < estimate.coefficients.size(); ++i) {
        os << i << ',';
        csv::field(os, estimate.coefficients[i]);
        os << '\n';
    }
}

} // namespace capa

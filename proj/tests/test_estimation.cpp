#include <cmath>
#include <complex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"

#include "capa/carrier.hpp"
#include "capa/detail/rng.hpp"
#include "capa/errors.hpp"
#include "capa/estimation.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"
#include "capa/wavenumber.hpp"

using namespace capa;

namespace {

struct Playground {
    Carrier carrier = make_carrier(15e9);
    PlanarAperture tx;
    PlanarAperture rx;
    WavenumberGrid tx_waves;
    WavenumberGrid rx_waves;

    explicit Playground(double edge_in_wavelengths) {
        const double edge = edge_in_wavelengths * carrier.wavelength_m;
        tx = make_aperture({0, 0, 0}, Orientation{}, edge, edge);
        rx = make_aperture({0, 2, 0}, Orientation{}, edge, edge);
        tx_waves = build_grid(tx, carrier);
        rx_waves = build_grid(rx, carrier);
    }
};

// <phi_a, phi_b> over the aperture pair; separable into per-side sums.
cplx atom_inner(const DictionaryAtom& a, const DictionaryAtom& b, const ApertureGrid& tx_grid,
                const ApertureGrid& rx_grid) {
    cplx rx_sum(0.0, 0.0);
    for (std::size_t i = 0; i < rx_grid.size(); ++i)
        rx_sum += rx_grid.weights[i] * a.rx_factor(rx_grid.nodes_global[i]) *
                  std::conj(b.rx_factor(rx_grid.nodes_global[i]));
    cplx tx_sum(0.0, 0.0);
    for (std::size_t j = 0; j < tx_grid.size(); ++j)
        tx_sum += tx_grid.weights[j] * a.tx_factor(tx_grid.nodes_global[j]) *
                  std::conj(b.tx_factor(tx_grid.nodes_global[j]));
    return rx_sum * tx_sum;
}

double atom_correlation(const DictionaryAtom& a, const DictionaryAtom& b,
                        const ApertureGrid& tx_grid, const ApertureGrid& rx_grid) {
    return std::abs(atom_inner(a, b, tx_grid, rx_grid)) / (a.l2_norm * b.l2_norm);
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("plane-wave dictionaries: layout, norms, and near-orthogonality") {
    // Edges below one wavelength leave a single propagating sample per side.
    const Playground small(0.6);
    const std::vector<DictionaryAtom> lone =
        farfield_dictionary(small.tx_waves, small.rx_waves);
    REQUIRE(lone.size() == 1);
    CHECK(lone[0].l2_norm ==
          doctest::Approx(std::sqrt(small.tx.area() * small.rx.area())).epsilon(1e-12));
    CHECK(std::abs(lone[0].normalized({0.001, 2.0, 0.002}, {0.0, 0.0, 0.003})) ==
          doctest::Approx(1.0 / lone[0].l2_norm).epsilon(1e-12));

    // Wavelength edges keep five wavevectors per side: 25 separable atoms.
    const Playground five(1.0);
    const std::vector<DictionaryAtom> atoms =
        farfield_dictionary(five.tx_waves, five.rx_waves);
    REQUIRE(atoms.size() == 25);

    // Atom i pairs receive index i / T with transmit index i % T.
    const DictionaryAtom& probe = atoms[7];
    CHECK((probe.rx_wavenumber_rad_per_m - five.rx_waves.wavevector(1)).norm() < 1e-15);
    CHECK((probe.tx_wavenumber_rad_per_m - five.tx_waves.wavevector(2)).norm() < 1e-15);

    // Distinct atoms are orthogonal over the aperture pair (Fourier modes).
    const ApertureGrid tx_grid = aperture_grid(five.tx, 16);
    const ApertureGrid rx_grid = aperture_grid(five.rx, 16);
    for (std::size_t i = 0; i < atoms.size(); i += 6) {
        for (std::size_t j = 0; j < atoms.size(); j += 7) {
            const double corr = atom_correlation(atoms[i], atoms[j], tx_grid, rx_grid);
            if (i == j)
                CHECK(corr == doctest::Approx(1.0).epsilon(1e-9));
            else
                CHECK(corr < 1e-6);
        }
    }

    CHECK_THROWS_AS(farfield_dictionary(five.tx_waves, five.rx_waves, 10), config_error);

    const Carrier other = make_carrier(15.2e9);
    const WavenumberGrid mismatched =
        build_grid(make_aperture({0, 2, 0}, Orientation{}, 0.1, 0.1), other);
    CHECK_THROWS_AS(farfield_dictionary(five.tx_waves, mismatched), domain_error);
}

TEST_CASE("focal-point dictionaries behave like steered plane waves far away") {
    const Carrier c = make_carrier(15e9);
    const double edge = 2.0 * c.wavelength_m;
    const PlanarAperture tx = make_aperture({0, 0, 0}, Orientation{}, edge, edge);
    const PlanarAperture rx = make_aperture({0, 2, 0}, Orientation{}, edge, edge);
    const ApertureGrid tx_grid = aperture_grid(tx, 16);
    const ApertureGrid rx_grid = aperture_grid(rx, 16);

    // A very distant focal point degenerates to the broadside plane-wave pair.
    const std::vector<DictionaryAtom> distant =
        nearfield_dictionary({{0.0, 50.0, 0.0}}, tx, rx, c);
    REQUIRE(distant.size() == 1);
    const std::vector<DictionaryAtom> planar =
        farfield_dictionary(build_grid(tx, c), build_grid(rx, c));
    double best = 0.0;
    for (const DictionaryAtom& atom : planar)
        best = std::max(best, atom_correlation(distant[0], atom, tx_grid, rx_grid));
    CHECK(best > 0.95);

    // The atom is unit-norm under the quadrature inner product.
    const KernelFn unit = [&](const Eigen::Vector3d& r, const Eigen::Vector3d& s) {
        return distant[0].normalized(r, s);
    };
    CHECK(kernel_l2_norm_sq(unit, tx_grid, rx_grid) == doctest::Approx(1.0).epsilon(1e-6));

    // Two foci a couple of beamwidths apart decorrelate.
    const std::vector<DictionaryAtom> pair =
        nearfield_dictionary({{0.0, 1.0, 0.0}, {0.5, 1.0, 0.0}}, tx, rx, c);
    CHECK(atom_correlation(pair[0], pair[1], tx_grid, rx_grid) < 0.5);

    CHECK_THROWS_AS(nearfield_dictionary({tx.center_m}, tx, rx, c), domain_error);
    CHECK_THROWS_AS(nearfield_dictionary({}, tx, rx, c), domain_error);
    CHECK_THROWS_AS(
        nearfield_dictionary({{0.0, 1.0, 0.0}, {0.5, 1.0, 0.0}}, tx, rx, c, 1), config_error);
}

TEST_CASE("pilot schedules: validation, energies, and determinism") {
    const Playground pg(2.0);
    const ApertureGrid tx_grid = aperture_grid(pg.tx, 6);
    const ApertureGrid rx_grid = aperture_grid(pg.rx, 6);
    const auto nt = static_cast<Eigen::Index>(tx_grid.size());
    const auto nr = static_cast<Eigen::Index>(rx_grid.size());

    const PilotSchedule random = random_pilot_schedule(tx_grid, rx_grid, 8, 1e-4, 42);
    CHECK(random.length() == 8);
    for (Eigen::Index l = 0; l < 8; ++l) {
        CHECK(random.pilot_energy[l] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(random.combiner_energy[l] == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Unit-energy rows of constant modulus 1 / sqrt(area).
    const double expected_mod = 1.0 / std::sqrt(pg.tx.area());
    CHECK(random.pilots.cwiseAbs().maxCoeff() == doctest::Approx(expected_mod).epsilon(1e-9));
    CHECK(random.pilots.cwiseAbs().minCoeff() == doctest::Approx(expected_mod).epsilon(1e-9));

    const PilotSchedule replay = random_pilot_schedule(tx_grid, rx_grid, 8, 1e-4, 42);
    CHECK((replay.pilots - random.pilots).norm() == 0.0);
    CHECK((replay.combiners - random.combiners).norm() == 0.0);
    const PilotSchedule other = random_pilot_schedule(tx_grid, rx_grid, 8, 1e-4, 43);
    CHECK((other.pilots - random.pilots).norm() > 0.0);

    // Repeated (pilot, combiner) slot pairs add no information.
    Eigen::MatrixXcd pilots = random.pilots.topRows(2);
    Eigen::MatrixXcd combiners = random.combiners.topRows(2);
    pilots.row(1) = pilots.row(0);
    combiners.row(1) = combiners.row(0);
    CHECK_THROWS_AS(make_pilot_schedule(tx_grid, rx_grid, pilots, combiners, 0.0),
                    config_error);

    CHECK_THROWS_AS(make_pilot_schedule(tx_grid, rx_grid, Eigen::MatrixXcd::Ones(1, nt + 1),
                                        Eigen::MatrixXcd::Ones(1, nr), 0.0),
                    config_error);
    CHECK_THROWS_AS(make_pilot_schedule(tx_grid, rx_grid, Eigen::MatrixXcd::Ones(0, nt),
                                        Eigen::MatrixXcd::Ones(0, nr), 0.0),
                    config_error);
    CHECK_THROWS_AS(make_pilot_schedule(tx_grid, rx_grid, Eigen::MatrixXcd::Ones(1, nt),
                                        Eigen::MatrixXcd::Ones(1, nr), -1.0),
                    config_error);
}

TEST_CASE("sensing entries reduce to tensor-quadrature projections") {
    const Playground pg(1.0);
    const ApertureGrid tx_grid = aperture_grid(pg.tx, 8);
    const ApertureGrid rx_grid = aperture_grid(pg.rx, 8);
    const std::vector<DictionaryAtom> atoms = farfield_dictionary(pg.tx_waves, pg.rx_waves);
    const PilotSchedule schedule = random_pilot_schedule(tx_grid, rx_grid, 3, 0.0, 7);
    const SensingMatrix sensing = sensing_matrix(schedule, atoms);

    REQUIRE(sensing.matrix.rows() == 3);
    REQUIRE(sensing.matrix.cols() == 25);
    CHECK(sensing.farfield_atoms == 25);
    CHECK(sensing.nearfield_atoms == 0);

    // Direct double loop over node pairs for a few entries.
    for (const Eigen::Index l : {0, 2}) {
        for (const Eigen::Index i : {0, 7, 24}) {
            cplx direct(0.0, 0.0);
            for (std::size_t a = 0; a < rx_grid.size(); ++a) {
                cplx inner(0.0, 0.0);
                for (std::size_t b = 0; b < tx_grid.size(); ++b)
                    inner += tx_grid.weights[b] * schedule.pilots(l, static_cast<Eigen::Index>(b)) *
                             atoms[static_cast<std::size_t>(i)].tx_factor(
                                 tx_grid.nodes_global[b]);
                direct += rx_grid.weights[a] *
                          std::conj(schedule.combiners(l, static_cast<Eigen::Index>(a))) *
                          atoms[static_cast<std::size_t>(i)].rx_factor(rx_grid.nodes_global[a]) *
                          inner;
            }
            direct /= atoms[static_cast<std::size_t>(i)].l2_norm;
            CHECK(std::abs(sensing.matrix(l, i) - direct) < 1e-10 * std::abs(direct) + 1e-16);
        }
    }

    // A silent pilot slot contributes a zero sensing row and zero measurement.
    Eigen::MatrixXcd pilots = schedule.pilots;
    pilots.row(1).setZero();
    const PilotSchedule gapped =
        make_pilot_schedule(tx_grid, rx_grid, pilots, schedule.combiners, 0.0);
    const SensingMatrix gapped_sensing = sensing_matrix(gapped, atoms);
    CHECK(gapped_sensing.matrix.row(1).norm() == 0.0);

    // Scaling one pilot row scales the matching sensing row.
    pilots = schedule.pilots;
    pilots.row(0) *= 2.0;
    const PilotSchedule scaled =
        make_pilot_schedule(tx_grid, rx_grid, pilots, schedule.combiners, 0.0);
    const SensingMatrix scaled_sensing = sensing_matrix(scaled, atoms);
    CHECK((scaled_sensing.matrix.row(0) - 2.0 * sensing.matrix.row(0)).norm() <
          1e-12 * sensing.matrix.row(0).norm());

    CHECK_THROWS_AS(sensing_matrix(schedule, {}), domain_error);
}

TEST_CASE("projected measurements are linear in the channel") {
    const Playground pg(1.0);
    const ApertureGrid tx_grid = aperture_grid(pg.tx, 8);
    const ApertureGrid rx_grid = aperture_grid(pg.rx, 8);
    const std::vector<DictionaryAtom> atoms = farfield_dictionary(pg.tx_waves, pg.rx_waves);
    const PilotSchedule schedule = random_pilot_schedule(tx_grid, rx_grid, 10, 0.0, 19);
    const SensingMatrix sensing = sensing_matrix(schedule, atoms);

    // Plant a 2-sparse channel; noise-free measurements equal the matrix action.
    SparseEstimate planted;
    planted.coefficients = Eigen::VectorXcd::Zero(25);
    planted.support = {4, 19};
    planted.coefficients[4] = cplx(0.8, -0.4);
    planted.coefficients[19] = cplx(-0.2, 1.1);
    const KernelFn truth = reconstruct_channel(planted, atoms);

    const Eigen::VectorXcd v = measure(truth, schedule, 999);
    const Eigen::VectorXcd predicted = sensing.matrix * planted.coefficients;
    CHECK((v - predicted).norm() < 1e-10 * predicted.norm());

    const KernelFn silent = [](const Eigen::Vector3d&, const Eigen::Vector3d&) {
        return cplx(0.0, 0.0);
    };
    CHECK(measure(silent, schedule, 999).norm() == 0.0);

    // Noise is reproducible in the seed and absent when the level is zero.
    const PilotSchedule noisy = random_pilot_schedule(tx_grid, rx_grid, 10, 1e-3, 19);
    const Eigen::VectorXcd n1 = measure(truth, noisy, 5);
    const Eigen::VectorXcd n2 = measure(truth, noisy, 5);
    const Eigen::VectorXcd n3 = measure(truth, noisy, 6);
    CHECK((n1 - n2).norm() == 0.0);
    CHECK((n1 - n3).norm() > 0.0);
    CHECK((n1 - v).norm() > 0.0);
}

TEST_CASE("greedy recovery: single atoms, planted supports, stopping rules") {
    const Carrier c = make_carrier(15e9);
    const double edge = 2.0 * c.wavelength_m;
    const PlanarAperture tx = make_aperture({0, 0, 0}, Orientation{}, edge, edge);
    const PlanarAperture rx = make_aperture({0, 2, 0}, Orientation{}, edge, edge);
    const ApertureGrid tx_grid = aperture_grid(tx, 8);
    const ApertureGrid rx_grid = aperture_grid(rx, 8);
    const std::vector<DictionaryAtom> atoms =
        farfield_dictionary(build_grid(tx, c), build_grid(rx, c));
    REQUIRE(atoms.size() == 169);

    const PilotSchedule schedule = random_pilot_schedule(tx_grid, rx_grid, 12, 0.0, 3);
    const SensingMatrix sensing = sensing_matrix(schedule, atoms);

    // One active atom is found in one step with its coefficient.
    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(169);
    alpha[58] = cplx(1.3, 0.7);
    const Eigen::VectorXcd v1 = sensing.matrix * alpha;
    OmpStop one;
    one.sparsity = 1;
    const SparseEstimate first = omp_recover(sensing, v1, one);
    REQUIRE(first.support.size() == 1);
    CHECK(first.support[0] == 58);
    CHECK(std::abs(first.coefficients[58] - alpha[58]) < 1e-10);
    CHECK(first.residual_norm < 1e-10 * v1.norm());

    // Three planted atoms over several seeds: exact support, tiny error.
    detail::Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        SparseEstimate planted;
        planted.coefficients = Eigen::VectorXcd::Zero(169);
        std::set<Eigen::Index> want;
        while (want.size() < 3)
            want.insert(static_cast<Eigen::Index>(rng.raw() % 169));
        for (const Eigen::Index i : want) {
            planted.support.push_back(i);
            planted.coefficients[i] = rng.cnormal();
        }
        const KernelFn truth = reconstruct_channel(planted, atoms);
        const Eigen::VectorXcd v = measure(truth, schedule, 1);

        OmpStop stop;
        stop.sparsity = 3;
        const SparseEstimate found = omp_recover(sensing, v, stop);
        const std::set<Eigen::Index> got(found.support.begin(), found.support.end());
        CHECK(got == want);

        const KernelFn rebuilt = reconstruct_channel(found, atoms);
        const double nmse = kernel_l2_distance_sq(truth, rebuilt, tx_grid, rx_grid) /
                            kernel_l2_norm_sq(truth, tx_grid, rx_grid);
        CHECK(nmse < 1e-10);
    }

    // A residual threshold above |v| stops immediately.
    OmpStop lazy;
    lazy.residual = 2.0 * v1.norm();
    const SparseEstimate idle = omp_recover(sensing, v1, lazy);
    CHECK(idle.support.empty());
    CHECK(idle.coefficients.norm() == 0.0);
    CHECK(idle.residual_norm == doctest::Approx(v1.norm()).epsilon(1e-15));

    OmpStop none;
    none.sparsity = 0;
    CHECK(omp_recover(sensing, v1, none).support.empty());

    CHECK_THROWS_AS(omp_recover(sensing, Eigen::VectorXcd::Ones(5)), domain_error);
    OmpStop bad;
    bad.sparsity = -1;
    CHECK_THROWS_AS(omp_recover(sensing, v1, bad), config_error);
    OmpStop worse;
    worse.residual = -1.0;
    CHECK_THROWS_AS(omp_recover(sensing, v1, worse), config_error);
}

TEST_CASE("kernel synthesis and norms") {
    const Playground pg(1.0);
    const std::vector<DictionaryAtom> atoms = farfield_dictionary(pg.tx_waves, pg.rx_waves);
    const ApertureGrid tx_grid = aperture_grid(pg.tx, 8);
    const ApertureGrid rx_grid = aperture_grid(pg.rx, 8);

    SparseEstimate estimate;
    estimate.coefficients = Eigen::VectorXcd::Zero(25);
    estimate.support = {3, 11};
    estimate.coefficients[3] = cplx(0.5, 0.5);
    estimate.coefficients[11] = cplx(-1.0, 0.25);
    const KernelFn h = reconstruct_channel(estimate, atoms);

    const Eigen::Vector3d r(0.004, 2.0, -0.006);
    const Eigen::Vector3d s(-0.002, 0.0, 0.007);
    const cplx manual = estimate.coefficients[3] * atoms[3].normalized(r, s) +
                        estimate.coefficients[11] * atoms[11].normalized(r, s);
    CHECK(std::abs(h(r, s) - manual) < 1e-13 * std::abs(manual));

    // Empty support synthesizes the zero kernel.
    SparseEstimate empty;
    empty.coefficients = Eigen::VectorXcd::Zero(25);
    const KernelFn zero = reconstruct_channel(empty, atoms);
    CHECK(std::abs(zero(r, s)) == 0.0);
    CHECK(kernel_l2_norm_sq(zero, tx_grid, rx_grid) == 0.0);
    CHECK(kernel_l2_distance_sq(h, h, tx_grid, rx_grid) == 0.0);
    CHECK(kernel_l2_distance_sq(h, zero, tx_grid, rx_grid) ==
          doctest::Approx(kernel_l2_norm_sq(h, tx_grid, rx_grid)).epsilon(1e-12));

    // Unit-modulus kernels integrate to the aperture-area product.
    const KernelFn flat = [](const Eigen::Vector3d&, const Eigen::Vector3d&) {
        return cplx(1.0, 0.0);
    };
    CHECK(kernel_l2_norm_sq(flat, tx_grid, rx_grid) ==
          doctest::Approx(pg.tx.area() * pg.rx.area()).epsilon(1e-12));

    SparseEstimate short_estimate;
    short_estimate.coefficients = Eigen::VectorXcd::Zero(3);
    CHECK_THROWS_AS(reconstruct_channel(short_estimate, atoms), domain_error);
}

TEST_CASE("coefficient export lists every dictionary entry") {
    SparseEstimate estimate;
    estimate.coefficients = Eigen::VectorXcd::Zero(4);
    estimate.support = {2};
    estimate.coefficients[2] = cplx(1.5, -2.5);

    std::ostringstream os;
    export_estimate(estimate, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "index,re,im");
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        if (rows == 2)
            CHECK(line == "2,1.5,-2.5");
        else
            CHECK(line == std::to_string(rows) + ",0,0");
        ++rows;
    }
    CHECK(rows == 4);
}

}  // TEST_SUITE

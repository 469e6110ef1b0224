#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"

#include "capa/carrier.hpp"
#include "capa/channel.hpp"
#include "capa/detail/rng.hpp"
#include "capa/errors.hpp"
#include "capa/geometry.hpp"
#include "capa/quadrature.hpp"

using namespace capa;

namespace {

struct Link {
    Carrier carrier = make_carrier(15e9);
    PlanarAperture tx = make_aperture({0, 0, 0}, Orientation{}, 0.1, 0.1);
    PlanarAperture rx = make_aperture({0, 2, 0}, Orientation{}, 0.1, 0.1);
};

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("line-of-sight kernel modulus, phase step, and polarization match") {
    const Link link;
    const UniPolLosChannel simple = make_los_channel(link.tx, link.rx, link.carrier);

    const Eigen::Vector3d s(0.02, 0.0, -0.01);
    const Eigen::Vector3d r(0.01, 2.0, 0.03);
    const double distance = (r - s).norm();
    const double k0 = link.carrier.wavenumber_rad_per_m;
    const double eta0 = link.carrier.impedance_ohm;

    const cplx h = los_kernel(simple, r, s);
    CHECK(std::abs(h) == doctest::Approx(eta0 * k0 / (4.0 * pi * distance)).epsilon(1e-12));

    // Advancing the range by one wavelength leaves the phase unchanged (mod 2 pi).
    const Eigen::Vector3d r2 = s + (r - s).normalized() * (distance + link.carrier.wavelength_m);
    const cplx h2 = los_kernel(simple, r2, s);
    CHECK(std::arg(h2 / h) == doctest::Approx(0.0).epsilon(1e-9));

    // Crossed polarizations along the boresight null the matched-mode kernel.
    const UniPolLosChannel crossed =
        make_los_channel(link.tx, link.rx, link.carrier, make_polarization({1, 0, 0}),
                         make_polarization({0, 0, 1}));
    CHECK(std::abs(los_kernel(crossed, {0.0, 2.0, 0.0}, {0.0, 0.0, 0.0})) < 1e-20);

    CHECK_THROWS_AS(make_los_channel(link.tx, link.tx, link.carrier), domain_error);
}

TEST_CASE("tri-polarized kernel is transverse with rank at most two") {
    const Link link;
    const Eigen::Vector3d s(0.01, 0.0, 0.02);
    const Eigen::Vector3d r(-0.03, 2.0, 0.01);
    const Eigen::Matrix3cd h = los_kernel_tripol(link.tx, link.rx, link.carrier, r, s);
    const Eigen::Vector3d u = (r - s).normalized();

    CHECK((u.cast<cplx>().transpose() * h).norm() < 1e-12 * h.norm());

    // Projecting onto polarization vectors reproduces the matched scalar kernel.
    const Polarization pt = make_polarization({0.3, 0.0, 1.0});
    const Polarization pr = make_polarization({-0.2, 0.0, 0.9});
    const UniPolLosChannel matched = make_los_channel(link.tx, link.rx, link.carrier, pt, pr);
    const cplx projected =
        (pr.direction.cast<cplx>().transpose() * h * pt.direction.cast<cplx>()).value();
    CHECK(std::abs(projected - los_kernel(matched, r, s)) < 1e-12 * std::abs(projected));

    const Eigen::JacobiSVD<Eigen::Matrix3cd> svd(h);
    CHECK(svd.singularValues()(2) < 1e-12 * svd.singularValues()(0));
}

TEST_CASE("multipath kernel superposes single-scatterer contributions") {
    const Link link;
    const UniPolLosChannel los = make_los_channel(link.tx, link.rx, link.carrier);
    const Eigen::Vector3d r(0.02, 2.0, -0.01);
    const Eigen::Vector3d s(-0.01, 0.0, 0.04);

    CHECK(std::abs(multipath_kernel(los, {}, r, s) - los_kernel(los, r, s)) < 1e-18);

    Scatterer mute;
    mute.position_m = {0.5, 1.0, 0.2};
    mute.gain = cplx(0.0, 0.0);
    CHECK(std::abs(multipath_kernel(los, {mute}, r, s) - los_kernel(los, r, s)) < 1e-18);

    Scatterer first;
    first.position_m = {0.4, 1.2, 0.3};
    first.gain = cplx(0.8, -0.3);
    Scatterer second;
    second.position_m = {-0.6, 0.8, -0.2};
    second.gain = cplx(-0.1, 0.55);

    const cplx both = multipath_kernel(los, {first, second}, r, s);
    const cplx only_first = multipath_kernel(los, {first}, r, s);
    const cplx only_second = multipath_kernel(los, {second}, r, s);
    const cplx direct = los_kernel(los, r, s);
    // One-at-a-time evaluations each include the LoS term once.
    CHECK(std::abs(both - (only_first + only_second - direct)) < 1e-12 * std::abs(both));
}

TEST_CASE("tri-polarized scattering: transparent and depolarizing reflectors") {
    const Link link;
    const Eigen::Vector3d r(0.0, 2.0, 0.01);
    const Eigen::Vector3d s(0.01, 0.0, 0.0);

    Scatterer reflector;
    reflector.position_m = {0.3, 1.0, 0.4};
    const std::vector<Scatterer> cloud = {reflector};

    const Eigen::Matrix3cd los = los_kernel_tripol(link.tx, link.rx, link.carrier, r, s);
    const Eigen::Matrix3cd transparent = multipath_kernel_tripol(
        link.tx, link.rx, link.carrier, cloud, {Eigen::Matrix3cd::Zero()}, r, s);
    CHECK((transparent - los).norm() < 1e-15 * los.norm());

    // A rotation-type reflectivity mixes polarizations: the (x, z) cross entry
    // appears even though the LoS block lacks it at this broadside geometry.
    Eigen::Matrix3d rot =
        Eigen::AngleAxisd(0.8, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3cd depolarized = multipath_kernel_tripol(
        link.tx, link.rx, link.carrier, cloud, {rot.cast<cplx>()}, r, s);
    CHECK(std::abs(los(0, 2)) < 1e-12 * los.norm());
    CHECK(std::abs(depolarized(0, 2)) > 1e-8 * depolarized.norm());
}

TEST_CASE("doubly dispersive response: taps, support, and Doppler phase") {
    const Link link;
    const UniPolLosChannel los = make_los_channel(link.tx, link.rx, link.carrier);
    const Eigen::Vector3d r(0.0, 2.0, 0.0);
    const Eigen::Vector3d s(0.0, 0.0, 0.0);
    const double width = 1e-11;

    Scatterer sc;
    sc.position_m = {0.5, 1.0, 0.0};
    sc.gain = cplx(0.6, 0.2);
    sc.delay_s = 9e-9;
    sc.doppler_hz = 120.0;

    // Static scatterers give a time-invariant response at their own tap.
    Scatterer still = sc;
    still.doppler_hz = 0.0;
    const cplx t0 = doubly_dispersive_kernel(los, {still}, r, s, 0.0, still.delay_s, width);
    const cplx t1 = doubly_dispersive_kernel(los, {still}, r, s, 1.0, still.delay_s, width);
    CHECK(std::abs(t0) > 0.0);
    CHECK(std::abs(t0 - t1) < 1e-15 * std::abs(t0));

    // Query far from both tap delays: zero response.
    CHECK(std::abs(doubly_dispersive_kernel(los, {sc}, r, s, 0.0, 5e-7, width)) == 0.0);

    // Doppler advances the scattered tap phase by 2 pi nu dt.
    const double dt = 3.7e-3;
    const cplx tap0 = doubly_dispersive_kernel(los, {sc}, r, s, 0.0, sc.delay_s, width);
    const cplx tap1 = doubly_dispersive_kernel(los, {sc}, r, s, dt, sc.delay_s, width);
    const double expected = std::remainder(2.0 * pi * sc.doppler_hz * dt, 2.0 * pi);
    CHECK(std::arg(tap1 / tap0) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("directional density: isotropic limit, mode, and sphere integral") {
    const Carrier c = make_carrier(15e9);
    const double k0 = c.wavenumber_rad_per_m;
    const double unit = std::pow(2.0 * pi / k0, 2.0);

    VmfCluster nearly_flat{0.7, -0.4, 1e-14, 1.0};
    CHECK(vmf_density(1.1, 0.3, nearly_flat, c) == doctest::Approx(unit).epsilon(1e-9));

    VmfCluster cluster{0.6, 1.9, 12.0, 1.0};
    const double peak = vmf_density(cluster.modal_theta_rad, cluster.modal_phi_rad, cluster, c);
    detail::Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        CHECK(peak >= vmf_density(rng.uniform(0.0, pi), rng.uniform(-pi, pi), cluster, c));
    }

    // Full-sphere integral is 4 pi (2 pi / k0)^2 for every concentration.
    const GaussLegendreRule& rule = gl_rule(64);
    for (double alpha : {0.0, 3.0, 39.5}) {
        VmfCluster probe{0.45, 2.2, alpha, 1.0};
        const double integral = integrate_1d(
            [&](double theta) {
                return integrate_1d(
                           [&](double phi) { return vmf_density(theta, phi, probe, c); },
                           -pi, pi, rule) *
                       std::sin(theta);
            },
            0.0, pi, rule);
        CHECK(std::abs(integral - 4.0 * pi * unit) <= 1e-6 * 4.0 * pi * unit);
    }
}

TEST_CASE("joint angular power: products, mixtures, and a dominant cluster") {
    const Carrier c = make_carrier(15e9);
    const double unit = std::pow(2.0 * pi / c.wavenumber_rad_per_m, 2.0);

    AngularSpectrum iso{isotropic_side(), isotropic_side()};
    CHECK(angular_power(0.3, 0.1, 1.2, -0.5, iso, c) ==
          doctest::Approx(unit * unit).epsilon(1e-12));

    VmfCluster base{0.5, 0.9, 7.0, 1.0};
    AngularSide split = vmf_side({VmfCluster{0.5, 0.9, 7.0, 0.5}, VmfCluster{0.5, 0.9, 7.0, 0.5}});
    AngularSide single = vmf_side({base});
    for (double theta : {0.2, 0.8, 1.4}) {
        CHECK(side_density(theta, 0.4, split, c) ==
              doctest::Approx(side_density(theta, 0.4, single, c)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(vmf_side({VmfCluster{0.5, 0.9, 7.0, 0.4}}), config_error);

    // Single dominant transmit cluster at (20 deg, 90 deg), isotropic receive side.
    const double theta0 = 20.0 * pi / 180.0;
    const double phi0 = 90.0 * pi / 180.0;
    AngularSpectrum fig{vmf_side({VmfCluster{theta0, phi0, 39.5, 1.0}}), isotropic_side()};
    const double at_mode = angular_power(0.7, 0.2, theta0, phi0, fig, c);
    CHECK(at_mode > angular_power(0.7, 0.2, theta0 + 0.4, phi0, fig, c));
    CHECK(at_mode > angular_power(0.7, 0.2, theta0, phi0 - 0.7, fig, c));
}

TEST_CASE("stochastic realizations: determinism, normalization, and decorrelation") {
    const Carrier c = make_carrier(15e9);
    const PlanarAperture tx = make_aperture({0, 0, 0}, Orientation{}, 0.1, 0.1);
    const PlanarAperture rx = make_aperture({0, 2, 0}, Orientation{}, 0.3, 0.3);
    AngularSpectrum iso{isotropic_side(), isotropic_side()};

    const CorrelationRealization a = sample_correlation_channel(iso, tx, rx, c, 8, 99);
    const CorrelationRealization b = sample_correlation_channel(iso, tx, rx, c, 8, 99);
    CHECK((a.gains - b.gains).norm() == 0.0);
    CHECK(a.tx_cells.size() > 0);

    const Eigen::Vector3d s(0.012, 0.0, -0.02);
    const Eigen::Vector3d r1(0.05, 2.0, 0.03);
    const Eigen::Vector3d r2 = r1 + Eigen::Vector3d(10.0 * c.wavelength_m, 0.0, 0.0);

    const int trials = 10000;
    double mean_power = 0.0;
    cplx cross(0.0, 0.0);
    double p1 = 0.0, p2 = 0.0;
    for (int i = 0; i < trials; ++i) {
        const CorrelationRealization sample =
            sample_correlation_channel(iso, tx, rx, c, 8, 1000 + static_cast<std::uint64_t>(i));
        const cplx h1 = evaluate_realization(sample, r1, s);
        const cplx h2 = evaluate_realization(sample, r2, s);
        mean_power += std::norm(h1);
        cross += h1 * std::conj(h2);
        p1 += std::norm(h1);
        p2 += std::norm(h2);
    }
    mean_power /= trials;
    CHECK(mean_power == doctest::Approx(1.0).epsilon(0.05));
    // Ten wavelengths of separation decorrelates the isotropic field.
    CHECK(std::abs(cross) / std::sqrt(p1 * p2) < 0.2);
}

TEST_CASE("realization evaluation is an explicit weighted plane-wave sum") {
    const Carrier c = make_carrier(15e9);
    CorrelationRealization manual;
    manual.tx = make_aperture({0, 0, 0}, Orientation{}, 0.1, 0.1);
    manual.rx = make_aperture({0, 2, 0}, Orientation{}, 0.1, 0.1);
    manual.carrier = c;
    // No retained cells: the field vanishes identically.
    CHECK(std::abs(evaluate_realization(manual, {0, 2, 0}, {0, 0, 0})) == 0.0);

    WavenumberCell rx_cell;
    rx_cell.center_rad_per_m = {20.0, -35.0};
    WavenumberCell tx_cell;
    tx_cell.center_rad_per_m = {-10.0, 55.0};
    manual.rx_cells = {rx_cell};
    manual.tx_cells = {tx_cell};
    manual.gains = Eigen::MatrixXcd::Zero(1, 1);
    CHECK(std::abs(evaluate_realization(manual, {0.03, 2.0, 0.01}, {0, 0, 0})) == 0.0);
    manual.gains = Eigen::MatrixXcd::Constant(1, 1, cplx(0.3, -1.1));

    const Eigen::Vector3d r(0.03, 2.0, -0.04);
    const Eigen::Vector3d s(-0.01, 0.0, 0.02);
    const Eigen::Vector2d lr = global_to_local(manual.rx, r);
    const Eigen::Vector2d ls = global_to_local(manual.tx, s);
    const cplx expected = cplx(0.3, -1.1) *
                          std::polar(1.0, -rx_cell.center_rad_per_m.dot(lr)) *
                          std::polar(1.0, tx_cell.center_rad_per_m.dot(ls));
    CHECK(std::abs(evaluate_realization(manual, r, s) - expected) < 1e-14);

    // Linearity in the gains.
    manual.gains *= 2.0;
    CHECK(std::abs(evaluate_realization(manual, r, s) - 2.0 * expected) < 1e-14);
}

TEST_CASE("fading mixture interpolates between specular and scattered parts") {
    const Carrier c = make_carrier(15e9);
    const PlanarAperture tx = make_aperture({0, 0, 0}, Orientation{}, 0.1, 0.1);
    const PlanarAperture rx = make_aperture({0, 2, 0}, Orientation{}, 0.1, 0.1);
    const UniPolLosChannel los = make_los_channel(tx, rx, c);
    AngularSpectrum iso{isotropic_side(), isotropic_side()};
    const CorrelationRealization nlos = sample_correlation_channel(iso, tx, rx, c, 8, 5);

    const Eigen::Vector3d r(0.02, 2.0, 0.01);
    const Eigen::Vector3d s(0.0, 0.0, -0.03);

    const RicianChannel pure_nlos = make_rician(los, nlos, 0.0);
    CHECK(std::abs(rician_kernel(pure_nlos, r, s) - evaluate_realization(nlos, r, s)) < 1e-14);

    const RicianChannel pure_los = make_rician(los, nlos, 1e12);
    const cplx normalized_los = pure_los.los_scale * los_kernel(los, r, s);
    CHECK(std::abs(rician_kernel(pure_los, r, s) - normalized_los) <
          1e-5 * std::abs(normalized_los));

    // Average power stays near one for an intermediate mixing factor.
    const int trials = 2000;
    double power = 0.0;
    for (int i = 0; i < trials; ++i) {
        const CorrelationRealization sample =
            sample_correlation_channel(iso, tx, rx, c, 8, 40000 + static_cast<std::uint64_t>(i));
        power += std::norm(rician_kernel(los, sample, 1.5, r, s));
    }
    power /= trials;
    CHECK(power == doctest::Approx(1.0).epsilon(0.12));

    CHECK_THROWS_AS(make_rician(los, nlos, -0.5), domain_error);
}

}  // TEST_SUITE

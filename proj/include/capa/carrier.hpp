#pragma once

#include <complex>

namespace capa {

using cplx = std::complex<double>;

// 2018 CODATA values.
inline constexpr double light_speed_m_per_s = 299792458.0;
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // H/m
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double free_space_impedance_ohm = 376.730313668; // sqrt(mu0/eps0)

inline constexpr double pi = 3.14159265358979323846;

// Time-harmonic carrier description. Derived fields are filled by make_carrier.
struct Carrier {
    double frequency_hz = 0.0;
    double wavelength_m = 0.0;
    double wavenumber_rad_per_m = 0.0;   // k0 = 2*pi/wavelength
    double impedance_ohm = free_space_impedance_ohm;
};

// frequency_hz must be > 0.
Carrier make_carrier(double frequency_hz);

} // namespace capa

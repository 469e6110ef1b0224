#include "capa/carrier.hpp"

#include "capa/errors.hpp"

namespace capa {

Carrier make_carrier(double frequency_hz) {
    if (!(frequency_hz > 0.0))
        throw domain_error("carrier frequency must be positive, got " + std::to_string(frequency_hz));
    Carrier c;
    c.frequency_hz = frequency_hz;
    c.wavelength_m = light_speed_m_per_s / frequency_hz;
    c.wavenumber_rad_per_m = 2.0 * pi / c.wavelength_m;
    c.impedance_ohm = free_space_impedance_ohm;
    return c;
}

} // namespace capa

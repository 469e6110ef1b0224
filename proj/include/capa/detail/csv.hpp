#pragma once

#include <complex>
#include <cstdio>
#include <ostream>
#include <string>

namespace capa::csv {

// Locale-independent shortest round-trip formatting for CSV bodies.
inline std::string format(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::ostream& field(std::ostream& os, double value) { return os << format(value); }

inline std::ostream& field(std::ostream& os, const std::complex<double>& value) {
    return os << format(value.real()) << ',' << format(value.imag());
}

} // namespace capa::csv

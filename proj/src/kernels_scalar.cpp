#include "capa/detail/simd.hpp"

#include <cmath>

namespace capa::simd::scalar {

namespace {
constexpr double four_pi = 4.0 * 3.14159265358979323846;

// f(t, rho) with c_z = k0^2 eta0 / (4 pi) * f(k0 u, (dz/u)^2); series below t0 avoids
// the t^3 cancellation in the closed form.
inline double coupling_profile(double t, double rho) {
    if (t < 0.09) {
        const double t2 = t * t;
        return 2.0 / 3.0 + t2 * ((rho - 2.0) / 15.0 +
               t2 * ((1.0 / 140.0 - rho / 210.0) +
               t2 * (rho / 7560.0 - 1.0 / 5670.0)));
    }
    const double s = std::sin(t), c = std::cos(t);
    const double num = t * t * s + rho * (-t * t * s - 2.0 * t * c + 2.0 * s) +
                       (1.0 - rho) * (t * c - s);
    return num / (t * t * t);
}
} // namespace

void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im) {
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = k0 * r[i];
        const double amp = 1.0 / (four_pi * r[i]);
        out_re[i] = std::cos(theta) * amp;
        out_im[i] = -std::sin(theta) * amp;
    }
}

void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im) {
    const double a = scale.real(), b = scale.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = obs[0] - sx[i];
        const double dy = obs[1] - sy[i];
        const double dz = obs[2] - sz[i];
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double theta = k0 * r;
        const double amp = 1.0 / (four_pi * r);
        const double gre = std::cos(theta) * amp;
        const double gim = -std::sin(theta) * amp;
        out_re[i] = a * gre - b * gim;
        out_im[i] = a * gim + b * gre;
    }
}

void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im) {
    for (std::size_t i = 0; i < n; ++i) {
        out_re[i] = std::cos(phase[i]);
        out_im[i] = std::sin(phase[i]);
    }
}

void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out) {
    const double front = k0 * k0 * eta0 / four_pi;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = p[0] - qx[i];
        const double dy = p[1] - qy[i];
        const double dz = p[2] - qz[i];
        const double u2 = dx * dx + dy * dy + dz * dz;
        if (u2 == 0.0) {
            out[i] = front * (2.0 / 3.0);
            continue;
        }
        const double u = std::sqrt(u2);
        const double rho = (dz * dz) / u2;
        out[i] = front * coupling_profile(k0 * u, rho);
    }
}

} // namespace capa::simd::scalar

#include "capa/detail/simd.hpp"

#include "capa/errors.hpp"

#include <cstdlib>
#include <string>

namespace capa::simd {

namespace {

Backend detect_backend() {
#if defined(CAPA_HAVE_AVX2)
    bool hw = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    bool hw = false;
#endif
    const char* env = std::getenv("CAPA_SIMD");
    if (env != nullptr && env[0] != '\0') {
        const std::string mode(env);
        if (mode == "scalar")
            return Backend::scalar;
        if (mode == "avx2") {
            if (!hw)
                throw config_error("CAPA_SIMD=avx2 requested but AVX2/FMA is unavailable");
            return Backend::avx2;
        }
        if (mode != "auto")
            throw config_error("CAPA_SIMD must be one of: auto, scalar, avx2 (got '" + mode +
                               "')");
    }
    return hw ? Backend::avx2 : Backend::scalar;
}

} // namespace

Backend active_backend() {
    static const Backend backend = detect_backend();
    return backend;
}

const char* backend_name() {
    return active_backend() == Backend::avx2 ? "avx2" : "scalar";
}

void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im) {
#if defined(CAPA_HAVE_AVX2)
    if (active_backend() == Backend::avx2) {
        avx2::green_batch(r, n, k0, out_re, out_im);
        return;
    }
#endif
    scalar::green_batch(r, n, k0, out_re, out_im);
}

void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im) {
#if defined(CAPA_HAVE_AVX2)
    if (active_backend() == Backend::avx2) {
        avx2::los_batch(obs, sx, sy, sz, n, k0, scale, out_re, out_im);
        return;
    }
#endif
    scalar::los_batch(obs, sx, sy, sz, n, k0, scale, out_re, out_im);
}

void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im) {
#if defined(CAPA_HAVE_AVX2)
    if (active_backend() == Backend::avx2) {
        avx2::cis_batch(phase, n, out_re, out_im);
        return;
    }
#endif
    scalar::cis_batch(phase, n, out_re, out_im);
}

void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out) {
#if defined(CAPA_HAVE_AVX2)
    if (active_backend() == Backend::avx2) {
        avx2::coupling_z_batch(p, qx, qy, qz, n, k0, eta0, out);
        return;
    }
#endif
    scalar::coupling_z_batch(p, qx, qy, qz, n, k0, eta0, out);
}

} // namespace capa::simd

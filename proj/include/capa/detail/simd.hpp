#pragma once

#include <complex>
#include <cstddef>

namespace capa::simd {

enum class Backend { scalar, avx2 };

// Resolved once per process: CAPA_SIMD=scalar|avx2|auto, then CPU detection.
Backend active_backend();
const char* backend_name();

// All batch kernels share the layout: separate re/im output arrays, n elements.

// out = exp(-j k0 R) / (4 pi R) for each distance R (must be > 0).
void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im);

// Line-of-sight kernel against a fixed observation point:
// out[i] = scale_re_im * exp(-j k0 |obs - src_i|) / (4 pi |obs - src_i|).
// src given as separate coordinate arrays.
void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im);

// out[i] = exp(j phase[i]).
void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im);

// Pointwise z-polarized coupling coefficient against a fixed point p:
// out[i] = c_z(p - q_i) with the analytic value at zero separation.
void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out);

// Reference implementations (always available; used by equivalence tests).
namespace scalar {
void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im);
void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im);
void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im);
void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out);
} // namespace scalar

#if defined(CAPA_HAVE_AVX2)
namespace avx2 {
void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im);
void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im);
void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im);
void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out);
} // namespace avx2
#endif

} // namespace capa::simd

#include "capa/detail/simd.hpp"

#if defined(CAPA_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace capa::simd::avx2 {

namespace {

constexpr double four_pi = 4.0 * 3.14159265358979323846;

// Arguments above this magnitude fall back to libm lane-wise (never hit by the
// library's own call sites; keeps the kernel correct for arbitrary input).
constexpr double range_limit = 1.0e6;

const __m256d v_inv_pio2 = _mm256_set1_pd(6.36619772367581382433e-01);
const __m256d v_pio2_1 = _mm256_set1_pd(1.57079632673412561417e+00);
const __m256d v_pio2_1t = _mm256_set1_pd(6.07710050650619224932e-11);

const __m256d v_s1 = _mm256_set1_pd(-1.66666666666666324348e-01);
const __m256d v_s2 = _mm256_set1_pd(8.33333333332248946124e-03);
const __m256d v_s3 = _mm256_set1_pd(-1.98412698298579493134e-04);
const __m256d v_s4 = _mm256_set1_pd(2.75573137070700676789e-06);
const __m256d v_s5 = _mm256_set1_pd(-2.50507602534068634195e-08);
const __m256d v_s6 = _mm256_set1_pd(1.58969099521155010221e-10);

const __m256d v_c1 = _mm256_set1_pd(4.16666666666666019037e-02);
const __m256d v_c2 = _mm256_set1_pd(-1.38888888888741095749e-03);
const __m256d v_c3 = _mm256_set1_pd(2.48015872894767294178e-05);
const __m256d v_c4 = _mm256_set1_pd(-2.75573143513906633035e-07);
const __m256d v_c5 = _mm256_set1_pd(2.08757232129817482790e-09);
const __m256d v_c6 = _mm256_set1_pd(-1.13596475577881948265e-11);

const __m256d v_sign_mask = _mm256_set1_pd(-0.0);

// sin/cos of the reduced argument r in [-pi/4, pi/4], z = r^2.
inline __m256d kernel_sin(__m256d r, __m256d z) {
    __m256d p = _mm256_fmadd_pd(z, v_s6, v_s5);
    p = _mm256_fmadd_pd(z, p, v_s4);
    p = _mm256_fmadd_pd(z, p, v_s3);
    p = _mm256_fmadd_pd(z, p, v_s2);
    p = _mm256_fmadd_pd(z, p, v_s1);
    return _mm256_fmadd_pd(_mm256_mul_pd(r, z), p, r);
}

inline __m256d kernel_cos(__m256d z) {
    __m256d p = _mm256_fmadd_pd(z, v_c6, v_c5);
    p = _mm256_fmadd_pd(z, p, v_c4);
    p = _mm256_fmadd_pd(z, p, v_c3);
    p = _mm256_fmadd_pd(z, p, v_c2);
    p = _mm256_fmadd_pd(z, p, v_c1);
    const __m256d z2 = _mm256_mul_pd(z, z);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d half = _mm256_set1_pd(0.5);
    return _mm256_add_pd(_mm256_fnmadd_pd(z, half, one), _mm256_mul_pd(z2, p));
}

// Simultaneous sin/cos with quadrant fixup. Valid for |x| <= range_limit.
inline void sincos4(__m256d x, __m256d* s_out, __m256d* c_out) {
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, v_inv_pio2),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, v_pio2_1, x);
    r = _mm256_fnmadd_pd(n, v_pio2_1t, r);
    const __m256d z = _mm256_mul_pd(r, r);
    const __m256d s = kernel_sin(r, z);
    const __m256d c = kernel_cos(z);

    // q = n mod 4 as a double in {0,1,2,3} (n is exactly an integer).
    const __m256d quarter = _mm256_set1_pd(0.25);
    const __m256d four = _mm256_set1_pd(4.0);
    const __m256d qf = _mm256_floor_pd(_mm256_mul_pd(n, quarter));
    const __m256d q = _mm256_fnmadd_pd(qf, four, n);

    const __m256d q1 = _mm256_cmp_pd(q, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
    const __m256d q2 = _mm256_cmp_pd(q, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
    const __m256d q3 = _mm256_cmp_pd(q, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
    const __m256d odd = _mm256_or_pd(q1, q3);

    __m256d sv = _mm256_blendv_pd(s, c, odd);
    __m256d cv = _mm256_blendv_pd(c, s, odd);
    const __m256d neg_s = _mm256_or_pd(q2, q3);
    const __m256d neg_c = _mm256_or_pd(q1, q2);
    sv = _mm256_xor_pd(sv, _mm256_and_pd(neg_s, v_sign_mask));
    cv = _mm256_xor_pd(cv, _mm256_and_pd(neg_c, v_sign_mask));
    *s_out = sv;
    *c_out = cv;
}

inline bool any_out_of_range(__m256d x) {
    const __m256d ax = _mm256_andnot_pd(v_sign_mask, x);
    const __m256d m = _mm256_cmp_pd(ax, _mm256_set1_pd(range_limit), _CMP_GT_OQ);
    return _mm256_movemask_pd(m) != 0;
}

} // namespace

void green_batch(const double* r, std::size_t n, double k0, double* out_re, double* out_im) {
    const __m256d vk0 = _mm256_set1_pd(k0);
    const __m256d vfp = _mm256_set1_pd(four_pi);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vr = _mm256_loadu_pd(r + i);
        const __m256d theta = _mm256_mul_pd(vk0, vr);
        if (any_out_of_range(theta)) break;
        const __m256d amp = _mm256_div_pd(one, _mm256_mul_pd(vfp, vr));
        __m256d s, c;
        sincos4(theta, &s, &c);
        _mm256_storeu_pd(out_re + i, _mm256_mul_pd(c, amp));
        _mm256_storeu_pd(out_im + i, _mm256_xor_pd(_mm256_mul_pd(s, amp), v_sign_mask));
    }
    if (i < n)
        scalar::green_batch(r + i, n - i, k0, out_re + i, out_im + i);
}

void los_batch(const double obs[3], const double* sx, const double* sy, const double* sz,
               std::size_t n, double k0, std::complex<double> scale,
               double* out_re, double* out_im) {
    const __m256d ox = _mm256_set1_pd(obs[0]);
    const __m256d oy = _mm256_set1_pd(obs[1]);
    const __m256d oz = _mm256_set1_pd(obs[2]);
    const __m256d vk0 = _mm256_set1_pd(k0);
    const __m256d vfp = _mm256_set1_pd(four_pi);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d va = _mm256_set1_pd(scale.real());
    const __m256d vb = _mm256_set1_pd(scale.imag());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(ox, _mm256_loadu_pd(sx + i));
        const __m256d dy = _mm256_sub_pd(oy, _mm256_loadu_pd(sy + i));
        const __m256d dz = _mm256_sub_pd(oz, _mm256_loadu_pd(sz + i));
        __m256d r2 = _mm256_mul_pd(dx, dx);
        r2 = _mm256_fmadd_pd(dy, dy, r2);
        r2 = _mm256_fmadd_pd(dz, dz, r2);
        const __m256d vr = _mm256_sqrt_pd(r2);
        const __m256d theta = _mm256_mul_pd(vk0, vr);
        if (any_out_of_range(theta)) break;
        const __m256d amp = _mm256_div_pd(one, _mm256_mul_pd(vfp, vr));
        __m256d s, c;
        sincos4(theta, &s, &c);
        const __m256d gre = _mm256_mul_pd(c, amp);
        const __m256d gim = _mm256_xor_pd(_mm256_mul_pd(s, amp), v_sign_mask);
        _mm256_storeu_pd(out_re + i, _mm256_fnmadd_pd(vb, gim, _mm256_mul_pd(va, gre)));
        _mm256_storeu_pd(out_im + i, _mm256_fmadd_pd(va, gim, _mm256_mul_pd(vb, gre)));
    }
    if (i < n)
        scalar::los_batch(obs, sx + i, sy + i, sz + i, n - i, k0, scale, out_re + i, out_im + i);
}

void cis_batch(const double* phase, std::size_t n, double* out_re, double* out_im) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(phase + i);
        if (any_out_of_range(x)) break;
        __m256d s, c;
        sincos4(x, &s, &c);
        _mm256_storeu_pd(out_re + i, c);
        _mm256_storeu_pd(out_im + i, s);
    }
    if (i < n)
        scalar::cis_batch(phase + i, n - i, out_re + i, out_im + i);
}

void coupling_z_batch(const double p[3], const double* qx, const double* qy, const double* qz,
                      std::size_t n, double k0, double eta0, double* out) {
    const __m256d px = _mm256_set1_pd(p[0]);
    const __m256d py = _mm256_set1_pd(p[1]);
    const __m256d pz = _mm256_set1_pd(p[2]);
    const __m256d vk0 = _mm256_set1_pd(k0);
    const __m256d front = _mm256_set1_pd(k0 * k0 * eta0 / four_pi);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d tiny = _mm256_set1_pd(1e-300);
    const __m256d two_thirds = _mm256_set1_pd(2.0 / 3.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(px, _mm256_loadu_pd(qx + i));
        const __m256d dy = _mm256_sub_pd(py, _mm256_loadu_pd(qy + i));
        const __m256d dz = _mm256_sub_pd(pz, _mm256_loadu_pd(qz + i));
        __m256d u2 = _mm256_mul_pd(dx, dx);
        u2 = _mm256_fmadd_pd(dy, dy, u2);
        u2 = _mm256_fmadd_pd(dz, dz, u2);
        const __m256d zero_mask = _mm256_cmp_pd(u2, tiny, _CMP_LT_OQ);
        const __m256d safe_u2 = _mm256_max_pd(u2, tiny);
        const __m256d u = _mm256_sqrt_pd(safe_u2);
        const __m256d t = _mm256_mul_pd(vk0, u);
        if (any_out_of_range(t)) break;
        const __m256d rho = _mm256_div_pd(_mm256_mul_pd(dz, dz), safe_u2);

        // closed form: (t^2 s + rho(-t^2 s - 2 t c + 2 s) + (1-rho)(t c - s)) / t^3
        __m256d s, c;
        sincos4(t, &s, &c);
        const __m256d t2 = _mm256_mul_pd(t, t);
        const __m256d t2s = _mm256_mul_pd(t2, s);
        const __m256d tc = _mm256_mul_pd(t, c);
        const __m256d term_a = _mm256_add_pd(_mm256_fnmadd_pd(two, tc, _mm256_mul_pd(two, s)),
                                             _mm256_xor_pd(t2s, v_sign_mask));
        const __m256d term_b = _mm256_sub_pd(tc, s);
        __m256d num = _mm256_add_pd(t2s, _mm256_mul_pd(rho, term_a));
        num = _mm256_fmadd_pd(_mm256_sub_pd(one, rho), term_b, num);
        const __m256d t3 = _mm256_mul_pd(t2, t);
        const __m256d f_closed = _mm256_div_pd(num, t3);

        // series for small t
        const __m256d fifteenth = _mm256_set1_pd(1.0 / 15.0);
        const __m256d c4a = _mm256_set1_pd(1.0 / 140.0);
        const __m256d c4b = _mm256_set1_pd(1.0 / 210.0);
        const __m256d c6a = _mm256_set1_pd(1.0 / 5670.0);
        const __m256d c6b = _mm256_set1_pd(1.0 / 7560.0);
        const __m256d z = t2;
        __m256d f_ser = _mm256_fnmadd_pd(c6a, one, _mm256_mul_pd(c6b, rho));
        f_ser = _mm256_add_pd(_mm256_fnmadd_pd(c4b, rho, c4a), _mm256_mul_pd(z, f_ser));
        f_ser = _mm256_fmadd_pd(z, f_ser,
                                _mm256_mul_pd(_mm256_sub_pd(rho, two), fifteenth));
        f_ser = _mm256_fmadd_pd(z, f_ser, two_thirds);

        const __m256d small = _mm256_cmp_pd(t, _mm256_set1_pd(0.09), _CMP_LT_OQ);
        __m256d f = _mm256_blendv_pd(f_closed, f_ser, small);
        f = _mm256_blendv_pd(f, two_thirds, zero_mask);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(front, f));
    }
    if (i < n)
        scalar::coupling_z_batch(p, qx + i, qy + i, qz + i, n - i, k0, eta0, out + i);
}

} // namespace capa::simd::avx2

#endif // CAPA_HAVE_AVX2

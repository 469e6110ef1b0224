#include "capa/detail/blas.hpp"

#include "capa/errors.hpp"

#include <cblas.h>

#include <complex>

// The packaged lapacke.h pulls in lapack.h before its own config can honor
// LAPACK_COMPLEX_CPP, so pin the complex type by the documented macro route.
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#define lapack_complex_float_real(z) ((z).real())
#define lapack_complex_float_imag(z) ((z).imag())
#define lapack_complex_double_real(z) ((z).real())
#define lapack_complex_double_imag(z) ((z).imag())
#include <lapacke.h>

#include <cstdlib>
#include <mutex>
#include <string>

extern "C" void openblas_set_num_threads(int num_threads);

namespace capa::blasx {

namespace {

using cplx = std::complex<double>;

void init_impl() {
    // The bundled BLAS mis-detects the (masked) CPU model and falls back to a
    // generic kernel set; pin the core type to the actual ISA level unless the
    // user already chose one.
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
#if defined(__x86_64__)
        if (__builtin_cpu_supports("avx512f"))
            setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
        else if (__builtin_cpu_supports("avx2"))
            setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
#endif
    }
    if (const char* env = std::getenv("CAPA_THREADS"); env != nullptr && env[0] != '\0') {
        const int threads = std::atoi(env);
        if (threads < 1)
            throw config_error("CAPA_THREADS must be a positive integer");
        openblas_set_num_threads(threads);
    }
}

CBLAS_TRANSPOSE to_cblas_op(char op) {
    switch (op) {
    case 'N':
        return CblasNoTrans;
    case 'T':
        return CblasTrans;
    case 'C':
        return CblasConjTrans;
    default:
        throw domain_error("matrix op must be one of 'N', 'T', 'C'");
    }
}

void check_info(int info, const char* routine) {
    if (info != 0)
        throw numerical_error(std::string(routine) + " failed with info=" +
                              std::to_string(info));
}

} // namespace

void init() {
    static std::once_flag flag;
    std::call_once(flag, init_impl);
}

Eigen::MatrixXcd gemm(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                      char op_a, char op_b, cplx alpha) {
    init();
    const auto rows_a = op_a == 'N' ? a.rows() : a.cols();
    const auto inner_a = op_a == 'N' ? a.cols() : a.rows();
    const auto inner_b = op_b == 'N' ? b.rows() : b.cols();
    const auto cols_b = op_b == 'N' ? b.cols() : b.rows();
    if (inner_a != inner_b)
        throw domain_error("gemm: inner dimensions do not match");
    Eigen::MatrixXcd c(rows_a, cols_b);
    if (rows_a == 0 || cols_b == 0)
        return c;
    if (inner_a == 0) {
        c.setZero();
        return c;
    }
    const cplx beta{0.0, 0.0};
    cblas_zgemm(CblasColMajor, to_cblas_op(op_a), to_cblas_op(op_b),
                static_cast<int>(rows_a), static_cast<int>(cols_b),
                static_cast<int>(inner_a), &alpha, a.data(),
                static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()), &beta,
                c.data(), static_cast<int>(c.rows()));
    return c;
}

Svd svd_econ(Eigen::MatrixXcd a) {
    init();
    const auto m = a.rows();
    const auto n = a.cols();
    const auto r = std::min(m, n);
    Svd out;
    out.u.resize(m, r);
    out.s.resize(r);
    out.vh.resize(r, n);
    if (r == 0)
        return out;
    const int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'S', static_cast<int>(m), static_cast<int>(n), a.data(),
        static_cast<int>(m), out.s.data(), out.u.data(), static_cast<int>(m),
        out.vh.data(), static_cast<int>(r));
    check_info(info, "zgesdd");
    return out;
}

Eigen::VectorXd singular_values(Eigen::MatrixXcd a) {
    init();
    const auto m = a.rows();
    const auto n = a.cols();
    const auto r = std::min(m, n);
    Eigen::VectorXd s(r);
    if (r == 0)
        return s;
    const int info =
        LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', static_cast<int>(m), static_cast<int>(n),
                       a.data(), static_cast<int>(m), s.data(), nullptr, 1, nullptr, 1);
    check_info(info, "zgesdd");
    return s;
}

Eigen::MatrixXcd orthonormal_basis(Eigen::MatrixXcd a) {
    init();
    const auto m = a.rows();
    const auto n = a.cols();
    const auto k = std::min(m, n);
    if (k == 0)
        return Eigen::MatrixXcd(m, 0);
    Eigen::VectorXcd tau(k);
    int info = LAPACKE_zgeqrf(LAPACK_COL_MAJOR, static_cast<int>(m), static_cast<int>(n),
                              a.data(), static_cast<int>(m), tau.data());
    check_info(info, "zgeqrf");
    info = LAPACKE_zungqr(LAPACK_COL_MAJOR, static_cast<int>(m), static_cast<int>(k),
                          static_cast<int>(k), a.data(), static_cast<int>(m), tau.data());
    check_info(info, "zungqr");
    return a.leftCols(k);
}

HermitianEig hermitian_eig(Eigen::MatrixXcd a) {
    init();
    if (a.rows() != a.cols())
        throw domain_error("hermitian_eig: matrix must be square");
    const auto n = a.rows();
    HermitianEig out;
    out.values.resize(n);
    if (n == 0) {
        out.vectors.resize(0, 0);
        return out;
    }
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<int>(n),
                                    a.data(), static_cast<int>(n), out.values.data());
    check_info(info, "zheevd");
    out.vectors = std::move(a);
    return out;
}

} // namespace capa::blasx

#pragma once

#include <Eigen/Dense>

#include <complex>

namespace capa::blasx {

// Configures the BLAS runtime (core selection, thread count) once per process.
// Every wrapper below calls it implicitly; call sites never need to.
void init();

// Returns op(a) * op(b) with ops in {'N', 'T', 'C'}.
Eigen::MatrixXcd gemm(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                      char op_a = 'N', char op_b = 'N',
                      std::complex<double> alpha = {1.0, 0.0});

struct Svd {
    Eigen::MatrixXcd u;  // m x r, orthonormal columns
    Eigen::VectorXd s;   // r, descending
    Eigen::MatrixXcd vh; // r x n, orthonormal rows
};

// Economy SVD (r = min(m, n)) of a dense complex matrix.
Svd svd_econ(Eigen::MatrixXcd a);

// Singular values only (descending).
Eigen::VectorXd singular_values(Eigen::MatrixXcd a);

// Orthonormal basis for the column space: the thin-QR Q factor, m x min(m, n).
Eigen::MatrixXcd orthonormal_basis(Eigen::MatrixXcd a);

struct HermitianEig {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXcd vectors;
};

// Full eigendecomposition of a Hermitian matrix (lower triangle referenced).
HermitianEig hermitian_eig(Eigen::MatrixXcd a);

} // namespace capa::blasx

#pragma once

// Data-parallel inner loops of the policy network.
//
// Every kernel parallelizes over output rows only, so each output entry is
// accumulated by one thread in a fixed order: results are bitwise identical
// regardless of the OpenMP thread count. The serial versions in
// `kernels::reference` are the plain textbook loops the tests compare against.

#include <span>

#include "sagnn/matrix.hpp"

namespace sagnn::kernels {

/// C += A * B   (A: m x k, B: k x n, C: m x n)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);

/// C += A^T * B (A: k x m, B: k x n, C: m x n)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);

/// C += A * B^T (A: m x k, B: n x k, C: m x n)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

/// Y = S * X for sparse S (n x n) and dense X (n x f).
void spmm(const CsrMatrix& s, const Matrix& x, Matrix& y);

/// y = S * x for a single signal.
void spmv(const CsrMatrix& s, std::span<const double> x, std::span<double> y);

/// Y += X for equally shaped matrices.
void add_inplace(Matrix& y, const Matrix& x);

int max_threads();

namespace reference {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void spmm(const CsrMatrix& s, const Matrix& x, Matrix& y);
void spmv(const CsrMatrix& s, std::span<const double> x, std::span<double> y);

}  // namespace reference

}  // namespace sagnn::kernels

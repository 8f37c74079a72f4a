#include "sagnn/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sagnn::kernels {
namespace {

using Index = std::ptrdiff_t;

// Rows of C updated together so each streamed row of B is reused.
constexpr std::size_t kRowBlock = 4;

void check(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// c_rows[r][j] += a_vals[r] * b[j] for r < count, j < n
inline void axpy_rows(std::size_t count, const double* a_vals, const double* b, double* const* c_rows,
                      std::size_t n) {
    if (count == kRowBlock) {
        const double a0 = a_vals[0], a1 = a_vals[1], a2 = a_vals[2], a3 = a_vals[3];
        double* __restrict c0 = c_rows[0];
        double* __restrict c1 = c_rows[1];
        double* __restrict c2 = c_rows[2];
        double* __restrict c3 = c_rows[3];
        for (std::size_t j = 0; j < n; ++j) {
            const double bj = b[j];
            c0[j] += a0 * bj;
            c1[j] += a1 * bj;
            c2[j] += a2 * bj;
            c3[j] += a3 * bj;
        }
        return;
    }
    for (std::size_t r = 0; r < count; ++r) {
        const double a = a_vals[r];
        double* __restrict c = c_rows[r];
        for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
}

Matrix transposed(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(), "gemm_nn: shape mismatch");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const Index blocks = static_cast<Index>((m + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
        const std::size_t count = std::min(kRowBlock, m - i0);
        double* c_rows[kRowBlock];
        for (std::size_t r = 0; r < count; ++r) c_rows[r] = c.data() + (i0 + r) * n;
        double a_vals[kRowBlock];
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t r = 0; r < count; ++r) a_vals[r] = a(i0 + r, p);
            axpy_rows(count, a_vals, b.data() + p * n, c_rows, n);
        }
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(), "gemm_tn: shape mismatch");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    const Index blocks = static_cast<Index>((m + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
        const std::size_t count = std::min(kRowBlock, m - i0);
        double* c_rows[kRowBlock];
        for (std::size_t r = 0; r < count; ++r) c_rows[r] = c.data() + (i0 + r) * n;
        double a_vals[kRowBlock];
        for (std::size_t p = 0; p < k; ++p) {
            const double* a_row = a.data() + p * m + i0;
            for (std::size_t r = 0; r < count; ++r) a_vals[r] = a_row[r];
            axpy_rows(count, a_vals, b.data() + p * n, c_rows, n);
        }
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(), "gemm_nt: shape mismatch");
    gemm_nn(a, transposed(b), c);
}

void spmm(const CsrMatrix& s, const Matrix& x, Matrix& y) {
    check(x.rows() == s.n && y.rows() == s.n && y.cols() == x.cols(), "spmm: shape mismatch");
    const std::size_t f = x.cols();
    const Index n = static_cast<Index>(s.n);

#pragma omp parallel for schedule(static)
    for (Index ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* __restrict out = y.data() + i * f;
        std::fill(out, out + f, 0.0);
        for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
            const double w = s.val[e];
            const double* in = x.data() + s.col[e] * f;
            for (std::size_t j = 0; j < f; ++j) out[j] += w * in[j];
        }
    }
}

void spmv(const CsrMatrix& s, std::span<const double> x, std::span<double> y) {
    check(x.size() == s.n && y.size() == s.n, "spmv: length mismatch");
    const Index n = static_cast<Index>(s.n);

#pragma omp parallel for schedule(static)
    for (Index ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double acc = 0.0;
        for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) acc += s.val[e] * x[s.col[e]];
        y[i] = acc;
    }
}

void add_inplace(Matrix& y, const Matrix& x) {
    check(y.rows() == x.rows() && y.cols() == x.cols(), "add_inplace: shape mismatch");
    const Index total = static_cast<Index>(y.size());
    double* __restrict out = y.data();
    const double* in = x.data();

#pragma omp parallel for schedule(static)
    for (Index i = 0; i < total; ++i) out[i] += in[i];
}

namespace reference {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(), "gemm_nn: shape mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = c(i, j);
            for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
            c(i, j) = acc;
        }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(), "gemm_tn: shape mismatch");
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = c(i, j);
            for (std::size_t p = 0; p < a.rows(); ++p) acc += a(p, i) * b(p, j);
            c(i, j) = acc;
        }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(), "gemm_nt: shape mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double acc = c(i, j);
            for (std::size_t p = 0; p < a.cols(); ++p) acc += a(i, p) * b(j, p);
            c(i, j) = acc;
        }
}

void spmm(const CsrMatrix& s, const Matrix& x, Matrix& y) {
    check(x.rows() == s.n && y.rows() == s.n && y.cols() == x.cols(), "spmm: shape mismatch");
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) acc += s.val[e] * x(s.col[e], j);
            y(i, j) = acc;
        }
}

void spmv(const CsrMatrix& s, std::span<const double> x, std::span<double> y) {
    check(x.size() == s.n && y.size() == s.n, "spmv: length mismatch");
    for (std::size_t i = 0; i < s.n; ++i) {
        double acc = 0.0;
        for (std::size_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) acc += s.val[e] * x[s.col[e]];
        y[i] = acc;
    }
}

}  // namespace reference

}  // namespace sagnn::kernels

#pragma once

// Dense double-precision linear algebra for the disentangled head and the
// distribution metrics. Everything here runs outside the gradient tape.

#include <cstdint>
#include <vector>

namespace aacp::linalg {

struct Mat {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::int64_t r, std::int64_t c) : rows(r), cols(c), v(static_cast<std::size_t>(r * c), 0.0) {}

    double& operator()(std::int64_t i, std::int64_t j) { return v[static_cast<std::size_t>(i * cols + j)]; }
    double operator()(std::int64_t i, std::int64_t j) const { return v[static_cast<std::size_t>(i * cols + j)]; }

    static Mat identity(std::int64_t n) {
        Mat m(n, n);
        for (std::int64_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
double frobenius_norm(const Mat& a);

// Thin singular value decomposition A = U diag(S) V^T with r = min(M,N).
// U is M x r and V is N x r, both column-orthonormal; S is descending and
// non-negative. Sign convention: the largest-magnitude entry of every V
// column is positive (first such entry on ties).
struct SvdResult {
    Mat u;
    std::vector<double> s;
    Mat v;
};

// One-sided Jacobi, iteration cap 100 sweeps, off-diagonal tolerance 1e-12.
// Throws NumericError on non-finite input and ConvergenceError (with the
// residual in the message) if the cap is reached.
SvdResult svd(const Mat& a);

// Top-k right singular vectors of the column-centered matrix (rows are
// samples). Throws RankError when the centered matrix has rank < k, judged
// by singular values below 1e-10 * s_max.
Mat top_k_basis(const Mat& a, std::int64_t k);

// Column means of a sample matrix; used together with top_k_basis so callers
// can project new samples consistently with the centering.
std::vector<double> column_means(const Mat& a);

// Symmetric eigendecomposition s = q diag(lambda) q^T via cyclic Jacobi.
// Eigenvalues are returned in descending order.
void sym_eig(const Mat& s, Mat& q, std::vector<double>& lambda);

// Principal square root of a symmetric positive semidefinite matrix via
// symmetric eigendecomposition, with eigenvalues clamped at zero. Throws
// DomainError if the input is asymmetric or indefinite beyond tolerance.
Mat sqrtm_psd(const Mat& s);

}  // namespace aacp::linalg

#include "aacp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aacp/errors.hpp"

namespace aacp::linalg {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTol = 1e-12;

bool all_finite(const Mat& a) {
    for (const double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

// One-sided Jacobi on the columns of w (m x n, m >= n not required).
// Accumulates the right rotations into v (n x n). Returns the worst relative
// off-diagonal coupling seen in the last sweep.
double jacobi_orthogonalize(Mat& w, Mat& v) {
    const std::int64_t m = w.rows, n = w.cols;
    double last_max = 0.0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_coupling = 0.0;
        for (std::int64_t p = 0; p + 1 < n; ++p) {
            for (std::int64_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::int64_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                const double denom = std::sqrt(alpha * beta);
                if (denom == 0.0) continue;
                const double coupling = std::fabs(gamma) / denom;
                max_coupling = std::max(max_coupling, coupling);
                if (coupling <= kJacobiTol) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::int64_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::int64_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        last_max = max_coupling;
        if (max_coupling <= kJacobiTol) return max_coupling;
    }
    throw ConvergenceError("svd: Jacobi sweeps exhausted, residual coupling " + std::to_string(last_max));
}

// Orthonormal completion for (numerically) zero singular directions.
void complete_column(Mat& u, std::int64_t col) {
    const std::int64_t m = u.rows;
    for (std::int64_t cand = 0; cand < m; ++cand) {
        std::vector<double> e(static_cast<std::size_t>(m), 0.0);
        e[static_cast<std::size_t>(cand)] = 1.0;
        for (std::int64_t j = 0; j < col; ++j) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < m; ++i) dot += e[static_cast<std::size_t>(i)] * u(i, j);
            for (std::int64_t i = 0; i < m; ++i) e[static_cast<std::size_t>(i)] -= dot * u(i, j);
        }
        double norm = 0.0;
        for (const double x : e) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 1e-6) {
            for (std::int64_t i = 0; i < m; ++i) u(i, col) = e[static_cast<std::size_t>(i)] / norm;
            return;
        }
    }
    throw NumericError("svd: failed to complete an orthonormal basis");
}

// Core thin SVD for m >= n. Output columns are sorted by descending value.
SvdResult svd_tall(const Mat& a) {
    const std::int64_t m = a.rows, n = a.cols;
    Mat w = a;
    Mat v = Mat::identity(n);
    jacobi_orthogonalize(w, v);

    std::vector<double> sigma(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::int64_t i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
        sigma[static_cast<std::size_t>(j)] = std::sqrt(norm);
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
        return sigma[static_cast<std::size_t>(x)] > sigma[static_cast<std::size_t>(y)];
    });

    SvdResult out;
    out.u = Mat(m, n);
    out.v = Mat(n, n);
    out.s.resize(static_cast<std::size_t>(n));
    const double smax = sigma[static_cast<std::size_t>(order[0])];
    const double tiny = std::max(smax, 1.0) * 1e-300;  // only exact-zero columns in practice
    for (std::int64_t j = 0; j < n; ++j) {
        const std::int64_t src = order[static_cast<std::size_t>(j)];
        const double s = sigma[static_cast<std::size_t>(src)];
        out.s[static_cast<std::size_t>(j)] = s;
        for (std::int64_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
        if (s > tiny) {
            for (std::int64_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) / s;
        } else {
            complete_column(out.u, j);
        }
    }
    return out;
}

void apply_sign_convention(SvdResult& r) {
    const std::int64_t n = r.v.rows, k = r.v.cols;
    for (std::int64_t j = 0; j < k; ++j) {
        std::int64_t arg = 0;
        double best = -1.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double mag = std::fabs(r.v(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (r.v(arg, j) < 0.0) {
            for (std::int64_t i = 0; i < n; ++i) r.v(i, j) = -r.v(i, j);
            for (std::int64_t i = 0; i < r.u.rows; ++i) r.u(i, j) = -r.u(i, j);
        }
    }
}

}  // namespace

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw ShapeError("linalg::matmul: inner extents differ");
    Mat c(a.rows, b.cols);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t k = 0; k < a.cols; ++k) {
            const double av = a(i, k);
            for (std::int64_t j = 0; j < b.cols; ++j) c(i, j) += av * b(k, j);
        }
    return c;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const Mat& a) {
    double acc = 0.0;
    for (const double x : a.v) acc += x * x;
    return std::sqrt(acc);
}

SvdResult svd(const Mat& a) {
    if (a.rows < 1 || a.cols < 1) throw ShapeError("svd: empty matrix");
    if (!all_finite(a)) throw NumericError("svd: non-finite input entry");
    SvdResult r;
    if (a.rows >= a.cols) {
        r = svd_tall(a);
    } else {
        SvdResult t = svd_tall(transpose(a));
        r.u = std::move(t.v);
        r.v = std::move(t.u);
        r.s = std::move(t.s);
    }
    apply_sign_convention(r);
    return r;
}

std::vector<double> column_means(const Mat& a) {
    std::vector<double> mean(static_cast<std::size_t>(a.cols), 0.0);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t j = 0; j < a.cols; ++j) mean[static_cast<std::size_t>(j)] += a(i, j);
    for (auto& m : mean) m /= static_cast<double>(a.rows);
    return mean;
}

Mat top_k_basis(const Mat& a, std::int64_t k) {
    if (k < 1) throw UsageError("top_k_basis: k must be positive");
    if (a.rows < 2) throw RankError("top_k_basis: need at least two sample rows");
    Mat centered = a;
    const auto mean = column_means(a);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t j = 0; j < a.cols; ++j) centered(i, j) -= mean[static_cast<std::size_t>(j)];

    SvdResult r = svd(centered);
    if (static_cast<std::int64_t>(r.s.size()) < k)
        throw RankError("top_k_basis: matrix has fewer than k singular directions");
    if (r.s[static_cast<std::size_t>(k - 1)] < 1e-10 * r.s[0])
        throw RankError("top_k_basis: rank below k (singular value " +
                        std::to_string(r.s[static_cast<std::size_t>(k - 1)]) + " under threshold)");
    Mat basis(a.cols, k);
    for (std::int64_t i = 0; i < a.cols; ++i)
        for (std::int64_t j = 0; j < k; ++j) basis(i, j) = r.v(i, j);
    return basis;
}

void sym_eig(const Mat& s, Mat& q, std::vector<double>& lambda) {
    if (s.rows != s.cols) throw ShapeError("sym_eig: square matrix required");
    const std::int64_t n = s.rows;
    Mat a = s;
    q = Mat::identity(n);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::int64_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off <= 1e-26 * std::max(diag, 1e-300)) break;
        if (sweep == kMaxSweeps - 1)
            throw ConvergenceError("sym_eig: Jacobi sweeps exhausted, off-diagonal mass " + std::to_string(off));
        for (std::int64_t p = 0; p + 1 < n; ++p) {
            for (std::int64_t qq = p + 1; qq < n; ++qq) {
                const double apq = a(p, qq);
                if (apq == 0.0) continue;
                const double tau = (a(qq, qq) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (std::int64_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, qq);
                    a(i, p) = c * aip - sn * aiq;
                    a(i, qq) = sn * aip + c * aiq;
                }
                for (std::int64_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(qq, i);
                    a(p, i) = c * api - sn * aqi;
                    a(qq, i) = sn * api + c * aqi;
                }
                for (std::int64_t i = 0; i < n; ++i) {
                    const double qip = q(i, p), qiq = q(i, qq);
                    q(i, p) = c * qip - sn * qiq;
                    q(i, qq) = sn * qip + c * qiq;
                }
            }
        }
    }
    lambda.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) lambda[static_cast<std::size_t>(i)] = a(i, i);

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
        return lambda[static_cast<std::size_t>(x)] > lambda[static_cast<std::size_t>(y)];
    });
    Mat qs(n, n);
    std::vector<double> ls(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
        ls[static_cast<std::size_t>(j)] = lambda[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        for (std::int64_t i = 0; i < n; ++i) qs(i, j) = q(i, order[static_cast<std::size_t>(j)]);
    }
    q = std::move(qs);
    lambda = std::move(ls);
}

Mat sqrtm_psd(const Mat& s) {
    if (s.rows != s.cols) throw ShapeError("sqrtm_psd: square matrix required");
    if (!all_finite(s)) throw NumericError("sqrtm_psd: non-finite input entry");
    const std::int64_t n = s.rows;
    double max_abs = 0.0, max_asym = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            max_abs = std::max(max_abs, std::fabs(s(i, j)));
            max_asym = std::max(max_asym, std::fabs(s(i, j) - s(j, i)));
        }
    if (max_asym > 1e-8 * std::max(1.0, max_abs))
        throw DomainError("sqrtm_psd: input asymmetric beyond tolerance");

    Mat sym(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (s(i, j) + s(j, i));

    Mat q;
    std::vector<double> lam;
    sym_eig(sym, q, lam);
    const double lam_max = lam.empty() ? 0.0 : lam[0];
    for (auto& l : lam) {
        if (l < -1e-10 * std::max(1.0, lam_max))
            throw DomainError("sqrtm_psd: eigenvalue " + std::to_string(l) + " below the PSD tolerance");
        l = std::sqrt(std::max(l, 0.0));
    }
    // q diag(sqrt(lam)) q^T, symmetrized
    Mat r(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < n; ++k) acc += q(i, k) * lam[static_cast<std::size_t>(k)] * q(j, k);
            r(i, j) = acc;
            r(j, i) = acc;
        }
    return r;
}

}  // namespace aacp::linalg

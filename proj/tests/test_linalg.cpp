#include <doctest.h>

#include <cmath>

#include "aacp/errors.hpp"
#include "aacp/linalg.hpp"
#include "aacp/rng.hpp"
#include "oracles.hpp"

using aacp::Rng;
using namespace aacp::linalg;

namespace {

Mat random_mat(std::int64_t r, std::int64_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (auto& x : m.v) x = rng.uniform(lo, hi);
    return m;
}

double reconstruction_residual(const Mat& a, const SvdResult& r) {
    Mat usv(a.rows, a.cols);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t j = 0; j < a.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < r.s.size(); ++k)
                acc += r.u(i, static_cast<std::int64_t>(k)) * r.s[k] * r.v(j, static_cast<std::int64_t>(k));
            usv(i, j) = acc - a(i, j);
        }
    return frobenius_norm(usv) / std::max(1.0, frobenius_norm(a));
}

double orthonormality_defect(const Mat& m) {
    double worst = 0.0;
    for (std::int64_t a = 0; a < m.cols; ++a)
        for (std::int64_t b = 0; b < m.cols; ++b) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < m.rows; ++i) dot += m(i, a) * m(i, b);
            worst = std::max(worst, std::fabs(dot - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

}  // namespace

TEST_CASE("svd of the identity has unit singular values") {
    auto r = svd(Mat::identity(4));
    REQUIRE(r.s.size() == 4);
    for (const double s : r.s) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of diag(3,4) returns (4,3)") {
    Mat a(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 4.0;
    auto r = svd(a);
    CHECK(r.s[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(r.s[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("svd reconstruction and orthonormality on random matrices") {
    Rng rng(31);
    for (const auto& [m, n] : std::vector<std::pair<int, int>>{{32, 16}, {16, 32}, {7, 7}, {1, 5}, {64, 32}}) {
        auto a = random_mat(m, n, rng);
        auto r = svd(a);
        CHECK(reconstruction_residual(a, r) < 1e-8);
        CHECK(orthonormality_defect(r.u) < 1e-8);
        CHECK(orthonormality_defect(r.v) < 1e-8);
        for (std::size_t i = 0; i + 1 < r.s.size(); ++i) CHECK(r.s[i] >= r.s[i + 1]);
        for (const double s : r.s) CHECK(s >= 0.0);
    }
}

TEST_CASE("svd sign convention and determinism") {
    Rng rng(32);
    auto a = random_mat(9, 5, rng);
    auto r0 = svd(a);
    auto r1 = svd(a);
    for (std::size_t i = 0; i < r0.v.v.size(); ++i) CHECK(r0.v.v[i] == r1.v.v[i]);
    for (std::int64_t j = 0; j < r0.v.cols; ++j) {
        std::int64_t arg = 0;
        for (std::int64_t i = 0; i < r0.v.rows; ++i)
            if (std::fabs(r0.v(i, j)) > std::fabs(r0.v(arg, j))) arg = i;
        CHECK(r0.v(arg, j) > 0.0);
    }
}

TEST_CASE("svd of A and A^T share singular values; scaling scales them") {
    Rng rng(33);
    auto a = random_mat(12, 8, rng);
    auto r = svd(a);
    auto rt = svd(transpose(a));
    for (std::size_t i = 0; i < r.s.size(); ++i) CHECK(std::fabs(r.s[i] - rt.s[i]) < 1e-10);

    const double c = -2.5;
    Mat ca = a;
    for (auto& x : ca.v) x *= c;
    auto rc = svd(ca);
    for (std::size_t i = 0; i < r.s.size(); ++i) CHECK(std::fabs(rc.s[i] - std::fabs(c) * r.s[i]) < 1e-10);
}

TEST_CASE("svd rejects non-finite input") {
    Mat a(2, 2);
    a(0, 0) = std::nan("");
    CHECK_THROWS_AS((void)svd(a), aacp::NumericError);
}

TEST_CASE("top_k_basis recovers a planted subspace") {
    Rng rng(34);
    const std::int64_t D = 10, k = 3, B = 40;
    // random orthonormal T (D x k) via Gram-Schmidt on random vectors
    Mat t(D, k);
    for (std::int64_t j = 0; j < k; ++j) {
        std::vector<double> col(D);
        for (auto& x : col) x = rng.normal();
        for (std::int64_t prev = 0; prev < j; ++prev) {
            double dot = 0.0;
            for (std::int64_t i = 0; i < D; ++i) dot += col[static_cast<std::size_t>(i)] * t(i, prev);
            for (std::int64_t i = 0; i < D; ++i) col[static_cast<std::size_t>(i)] -= dot * t(i, prev);
        }
        double norm = 0.0;
        for (const double x : col) norm += x * x;
        norm = std::sqrt(norm);
        for (std::int64_t i = 0; i < D; ++i) t(i, j) = col[static_cast<std::size_t>(i)] / norm;
    }
    // rows are random combinations of the subspace basis
    Mat a(B, D);
    for (std::int64_t r = 0; r < B; ++r)
        for (std::int64_t j = 0; j < k; ++j) {
            const double coef = rng.uniform(-2.0, 2.0);
            for (std::int64_t i = 0; i < D; ++i) a(r, i) += coef * t(i, j);
        }
    Mat b = top_k_basis(a, k);
    CHECK(orthonormality_defect(b) < 1e-8);
    // projector difference: max |B B^T - T T^T| entry; small iff spans agree
    double worst = 0.0;
    for (std::int64_t i = 0; i < D; ++i)
        for (std::int64_t j = 0; j < D; ++j) {
            double pb = 0.0, pt = 0.0;
            for (std::int64_t c = 0; c < k; ++c) {
                pb += b(i, c) * b(j, c);
                pt += t(i, c) * t(j, c);
            }
            worst = std::max(worst, std::fabs(pb - pt));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("top_k_basis with k = min dims is square-orthonormal") {
    Rng rng(35);
    auto a = random_mat(12, 5, rng);
    Mat b = top_k_basis(a, 5);
    CHECK(b.rows == 5);
    CHECK(b.cols == 5);
    CHECK(orthonormality_defect(b) < 1e-8);
}

TEST_CASE("top_k_basis with one dominant direction matches power iteration") {
    Rng rng(36);
    const std::int64_t D = 8, B = 50;
    std::vector<double> dir(static_cast<std::size_t>(D));
    double norm = 0.0;
    for (auto& x : dir) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : dir) x /= norm;
    Mat a(B, D);
    for (std::int64_t r = 0; r < B; ++r) {
        const double coef = rng.uniform(-3.0, 3.0);
        for (std::int64_t i = 0; i < D; ++i)
            a(r, i) = coef * dir[static_cast<std::size_t>(i)] + 1e-3 * rng.normal();
    }
    Mat b = top_k_basis(a, 1);
    // power-iteration oracle runs on the explicitly centered matrix
    Mat centered = a;
    const auto mean = column_means(a);
    for (std::int64_t r = 0; r < B; ++r)
        for (std::int64_t i = 0; i < D; ++i) centered(r, i) -= mean[static_cast<std::size_t>(i)];
    auto v = oracle::dominant_right_singular_vector(centered.v, B, D);
    double dot = 0.0;
    for (std::int64_t i = 0; i < D; ++i) dot += b(i, 0) * v[static_cast<std::size_t>(i)];
    CHECK(1.0 - std::fabs(dot) < 1e-6);
}

TEST_CASE("top_k_basis is row-permutation invariant up to column sign") {
    Rng rng(37);
    auto a = random_mat(20, 6, rng);
    Mat b0 = top_k_basis(a, 4);
    Mat p(20, 6);
    std::vector<std::int64_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::int64_t i = 19; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)))]);
    for (std::int64_t r = 0; r < 20; ++r)
        for (std::int64_t c = 0; c < 6; ++c) p(r, c) = a(perm[static_cast<std::size_t>(r)], c);
    Mat b1 = top_k_basis(p, 4);
    for (std::int64_t j = 0; j < 4; ++j) {
        double dot = 0.0;
        for (std::int64_t i = 0; i < 6; ++i) dot += b0(i, j) * b1(i, j);
        CHECK(std::fabs(std::fabs(dot) - 1.0) < 1e-8);
    }
}

TEST_CASE("top_k_basis raises on rank deficiency") {
    Mat a(6, 4);  // rank 1 after centering
    Rng rng(38);
    for (std::int64_t r = 0; r < 6; ++r) {
        const double c = rng.uniform(-1.0, 1.0);
        for (std::int64_t j = 0; j < 4; ++j) a(r, j) = c * static_cast<double>(j + 1);
    }
    CHECK_THROWS_AS((void)top_k_basis(a, 3), aacp::RankError);
}

TEST_CASE("sqrtm_psd trivial cases") {
    auto r = sqrtm_psd(Mat::identity(3));
    for (std::int64_t i = 0; i < 3; ++i)
        for (std::int64_t j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

    Mat d(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    auto rd = sqrtm_psd(d);
    CHECK(rd(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rd(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::fabs(rd(0, 1)) < 1e-12);
}

TEST_CASE("sqrtm_psd matches residual and the Denman-Beavers oracle") {
    Rng rng(39);
    for (const int n : {3, 6, 10}) {
        auto g = random_mat(n + 3, n, rng);
        Mat s = matmul(transpose(g), g);  // PSD, almost surely PD
        for (std::int64_t i = 0; i < n; ++i) s(i, i) += 0.05;
        auto r = sqrtm_psd(s);
        // residual ||R*R - S||_F / max(1, ||S||_F)
        Mat rr = matmul(r, r);
        for (std::size_t i = 0; i < rr.v.size(); ++i) rr.v[i] -= s.v[i];
        CHECK(frobenius_norm(rr) / std::max(1.0, frobenius_norm(s)) < 1e-8);
        // independent iterative route
        auto db = oracle::sqrtm_denman_beavers(s.v, n);
        double worst = 0.0;
        for (std::size_t i = 0; i < db.size(); ++i) worst = std::max(worst, std::fabs(db[i] - r.v[i]));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("sqrtm_psd rejects asymmetric and indefinite input") {
    Mat a(2, 2);
    a(0, 1) = 1.0;  // asymmetric
    CHECK_THROWS_AS((void)sqrtm_psd(a), aacp::DomainError);

    Mat neg(2, 2);
    neg(0, 0) = 1.0;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS((void)sqrtm_psd(neg), aacp::DomainError);
}

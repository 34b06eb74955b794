#pragma once

// Independent reference implementations used only by the test suites.
// Everything here is deliberately written along a different code path than
// the library: direct nested loops, explicit formulas, an exact integer
// min-cost-flow solver. Keep this file free of library calls except for the
// tensor container itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "aacp/rng.hpp"
#include "aacp/tensor.hpp"

namespace oracle {

// Direct nested-loop 2-D convolution, no im2col.
inline std::vector<double> conv2d_naive(const std::vector<double>& x, std::int64_t N, std::int64_t C, std::int64_t H,
                                        std::int64_t W, const std::vector<double>& w, std::int64_t O, std::int64_t k,
                                        const std::vector<double>& b, std::int64_t stride, std::int64_t pad) {
    const std::int64_t OH = (H + 2 * pad - k) / stride + 1;
    const std::int64_t OW = (W + 2 * pad - k) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(N * O * OH * OW), 0.0);
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t o = 0; o < O; ++o)
            for (std::int64_t oh = 0; oh < OH; ++oh)
                for (std::int64_t ow = 0; ow < OW; ++ow) {
                    double acc = b[static_cast<std::size_t>(o)];
                    for (std::int64_t c = 0; c < C; ++c)
                        for (std::int64_t kh = 0; kh < k; ++kh)
                            for (std::int64_t kw = 0; kw < k; ++kw) {
                                const std::int64_t ih = oh * stride + kh - pad;
                                const std::int64_t iw = ow * stride + kw - pad;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                acc += x[static_cast<std::size_t>(((n * C + c) * H + ih) * W + iw)] *
                                       w[static_cast<std::size_t>(((o * C + c) * k + kh) * k + kw)];
                            }
                    out[static_cast<std::size_t>(((n * O + o) * OH + oh) * OW + ow)] = acc;
                }
    return out;
}

// Triple-loop matrix product.
inline std::vector<double> matmul_naive(const std::vector<double>& a, const std::vector<double>& b, std::int64_t M,
                                        std::int64_t K, std::int64_t N) {
    std::vector<double> out(static_cast<std::size_t>(M * N), 0.0);
    for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < K; ++k)
                acc += a[static_cast<std::size_t>(i * K + k)] * b[static_cast<std::size_t>(k * N + j)];
            out[static_cast<std::size_t>(i * N + j)] = acc;
        }
    return out;
}

// Two-pass mean / population standard deviation.
inline std::pair<double, double> mean_std_two_pass(const double* p, std::int64_t n) {
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += p[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(n);
    return {mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Central finite-difference gradient checking (64-bit)
// ---------------------------------------------------------------------------

struct FdReport {
    double max_rel_err = 0.0;
    std::int64_t checked = 0;
};

// `loss` rebuilds the graph from scratch and returns the scalar loss value
// given the current contents of the leaf tensors. `leaf` is perturbed entry
// by entry. `analytic` holds d loss / d leaf from one autodiff backward.
inline FdReport fd_check_leaf(const std::function<double()>& loss, aacp::TensorT<double>& leaf,
                              const std::vector<double>& analytic, aacp::Rng& rng, double h = 1e-3,
                              std::int64_t max_entries = 48) {
    FdReport rep;
    const std::int64_t n = leaf.numel();
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (n > max_entries) {
        for (std::int64_t i = 0; i < max_entries; ++i) {
            const auto j = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n - i))) + i;
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(max_entries));
    }
    auto raw = leaf.raw();
    for (const auto i : idx) {
        const double saved = raw[static_cast<std::size_t>(i)];
        raw[static_cast<std::size_t>(i)] = saved + h;
        const double lp = loss();
        raw[static_cast<std::size_t>(i)] = saved - h;
        const double lm = loss();
        raw[static_cast<std::size_t>(i)] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double ad = analytic[static_cast<std::size_t>(i)];
        const double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-6});
        rep.max_rel_err = std::max(rep.max_rel_err, std::fabs(fd - ad) / denom);
        ++rep.checked;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exact 1-D optimal transport via integer min-cost flow
// ---------------------------------------------------------------------------

// Solves min sum f_ij * |i - j| subject to the histogram marginals, with
// integer supplies, by successive shortest augmenting paths. Returns the
// optimal cost in units of (bin index distance) * (count units).
inline std::int64_t min_cost_flow_transport(const std::vector<std::int64_t>& supply,
                                            const std::vector<std::int64_t>& demand) {
    const std::size_t nb = supply.size();
    struct Edge {
        int to;
        std::int64_t cap;
        std::int64_t cost;
        std::size_t rev;
    };
    const int S = static_cast<int>(2 * nb);
    const int T = S + 1;
    std::vector<std::vector<Edge>> graph(static_cast<std::size_t>(T + 1));
    auto add_edge = [&](int u, int v, std::int64_t cap, std::int64_t cost) {
        graph[static_cast<std::size_t>(u)].push_back({v, cap, cost, graph[static_cast<std::size_t>(v)].size()});
        graph[static_cast<std::size_t>(v)].push_back({u, 0, -cost, graph[static_cast<std::size_t>(u)].size() - 1});
    };
    std::int64_t total = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        if (supply[i] > 0) add_edge(S, static_cast<int>(i), supply[i], 0);
        total += supply[i];
        if (demand[i] > 0) add_edge(static_cast<int>(nb + i), T, demand[i], 0);
        for (std::size_t j = 0; j < nb; ++j)
            add_edge(static_cast<int>(i), static_cast<int>(nb + j),
                     std::numeric_limits<std::int64_t>::max() / 4,
                     std::llabs(static_cast<long long>(i) - static_cast<long long>(j)));
    }
    std::int64_t flow_left = total, cost = 0;
    const std::int64_t INF = std::numeric_limits<std::int64_t>::max() / 4;
    while (flow_left > 0) {
        // Bellman-Ford shortest path on the residual graph.
        std::vector<std::int64_t> dist(graph.size(), INF);
        std::vector<int> prev_node(graph.size(), -1);
        std::vector<std::size_t> prev_edge(graph.size(), 0);
        dist[static_cast<std::size_t>(S)] = 0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t u = 0; u < graph.size(); ++u) {
                if (dist[u] == INF) continue;
                for (std::size_t e = 0; e < graph[u].size(); ++e) {
                    const Edge& ed = graph[u][e];
                    if (ed.cap <= 0) continue;
                    if (dist[u] + ed.cost < dist[static_cast<std::size_t>(ed.to)]) {
                        dist[static_cast<std::size_t>(ed.to)] = dist[u] + ed.cost;
                        prev_node[static_cast<std::size_t>(ed.to)] = static_cast<int>(u);
                        prev_edge[static_cast<std::size_t>(ed.to)] = e;
                        changed = true;
                    }
                }
            }
        }
        if (dist[static_cast<std::size_t>(T)] == INF) break;
        std::int64_t push = flow_left;
        for (int v = T; v != S; v = prev_node[static_cast<std::size_t>(v)]) {
            const Edge& ed = graph[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                                  [prev_edge[static_cast<std::size_t>(v)]];
            push = std::min(push, ed.cap);
        }
        for (int v = T; v != S; v = prev_node[static_cast<std::size_t>(v)]) {
            Edge& ed = graph[static_cast<std::size_t>(prev_node[static_cast<std::size_t>(v)])]
                            [prev_edge[static_cast<std::size_t>(v)]];
            ed.cap -= push;
            graph[static_cast<std::size_t>(v)][ed.rev].cap += push;
        }
        cost += push * dist[static_cast<std::size_t>(T)];
        flow_left -= push;
    }
    return cost;
}

// ---------------------------------------------------------------------------
// Dense helpers for linear-algebra oracles
// ---------------------------------------------------------------------------

// Lower-triangular Cholesky factor of a strictly positive definite matrix.
inline std::vector<double> cholesky_lower(const std::vector<double>& a, std::int64_t n) {
    std::vector<double> L(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j <= i; ++j) {
            double s = a[static_cast<std::size_t>(i * n + j)];
            for (std::int64_t k = 0; k < j; ++k)
                s -= L[static_cast<std::size_t>(i * n + k)] * L[static_cast<std::size_t>(j * n + k)];
            if (i == j)
                L[static_cast<std::size_t>(i * n + j)] = std::sqrt(std::max(s, 0.0));
            else
                L[static_cast<std::size_t>(i * n + j)] = s / L[static_cast<std::size_t>(j * n + j)];
        }
    }
    return L;
}

// Gauss-Jordan inverse for small well-conditioned matrices (test only).
inline std::vector<double> invert(std::vector<double> a, std::int64_t n) {
    std::vector<double> inv(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = 1.0;
    for (std::int64_t col = 0; col < n; ++col) {
        std::int64_t piv = col;
        for (std::int64_t r = col + 1; r < n; ++r)
            if (std::fabs(a[static_cast<std::size_t>(r * n + col)]) >
                std::fabs(a[static_cast<std::size_t>(piv * n + col)]))
                piv = r;
        for (std::int64_t j = 0; j < n; ++j) {
            std::swap(a[static_cast<std::size_t>(col * n + j)], a[static_cast<std::size_t>(piv * n + j)]);
            std::swap(inv[static_cast<std::size_t>(col * n + j)], inv[static_cast<std::size_t>(piv * n + j)]);
        }
        const double d = a[static_cast<std::size_t>(col * n + col)];
        for (std::int64_t j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(col * n + j)] /= d;
            inv[static_cast<std::size_t>(col * n + j)] /= d;
        }
        for (std::int64_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<std::size_t>(r * n + col)];
            if (f == 0.0) continue;
            for (std::int64_t j = 0; j < n; ++j) {
                a[static_cast<std::size_t>(r * n + j)] -= f * a[static_cast<std::size_t>(col * n + j)];
                inv[static_cast<std::size_t>(r * n + j)] -= f * inv[static_cast<std::size_t>(col * n + j)];
            }
        }
    }
    return inv;
}

// Denman-Beavers iteration for the principal matrix square root. An
// algorithmically independent route used to cross-check eigen-based sqrt.
inline std::vector<double> sqrtm_denman_beavers(const std::vector<double>& s, std::int64_t n, int iters = 60) {
    std::vector<double> y = s;
    std::vector<double> z(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) z[static_cast<std::size_t>(i * n + i)] = 1.0;
    for (int it = 0; it < iters; ++it) {
        const auto yi = invert(y, n);
        const auto zi = invert(z, n);
        std::vector<double> yn(static_cast<std::size_t>(n * n)), zn(static_cast<std::size_t>(n * n));
        for (std::int64_t i = 0; i < n * n; ++i) {
            yn[static_cast<std::size_t>(i)] = 0.5 * (y[static_cast<std::size_t>(i)] + zi[static_cast<std::size_t>(i)]);
            zn[static_cast<std::size_t>(i)] = 0.5 * (z[static_cast<std::size_t>(i)] + yi[static_cast<std::size_t>(i)]);
        }
        y = std::move(yn);
        z = std::move(zn);
    }
    return y;
}

// Power iteration for the dominant right singular vector of an MxN matrix.
inline std::vector<double> dominant_right_singular_vector(const std::vector<double>& a, std::int64_t m,
                                                          std::int64_t n, int iters = 500) {
    std::vector<double> v(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> av(static_cast<std::size_t>(m));
    for (int it = 0; it < iters; ++it) {
        for (std::int64_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::int64_t j = 0; j < n; ++j) acc += a[static_cast<std::size_t>(i * n + j)] * v[static_cast<std::size_t>(j)];
            av[static_cast<std::size_t>(i)] = acc;
        }
        double norm = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < m; ++i) acc += a[static_cast<std::size_t>(i * n + j)] * av[static_cast<std::size_t>(i)];
            v[static_cast<std::size_t>(j)] = acc;
            norm += acc * acc;
        }
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Random tensor helpers
// ---------------------------------------------------------------------------

template <class Real>
aacp::TensorT<Real> random_tensor(aacp::Shape shape, aacp::Rng& rng, double lo = -1.0, double hi = 1.0) {
    aacp::TensorT<Real> t(std::move(shape));
    for (auto& v : t.raw()) v = static_cast<Real>(rng.uniform(lo, hi));
    return t;
}

}  // namespace oracle

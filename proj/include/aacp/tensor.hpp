#pragma once

// Dense n-dimensional tensors with reverse-mode automatic differentiation.
//
// Storage is row-major and owned by shared buffers; tensors are immutable
// once they participate in an op. A GradientTape records one forward pass
// as an ordered list of backward closures and replays them in reverse.
// Tapes are thread-local and single-use. Everything is templated on the
// scalar type: float is the training precision, double is the verification
// precision used by the gradient-check suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aacp/errors.hpp"
#include "aacp/rng.hpp"

namespace aacp {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& s) {
    std::int64_t n = 1;
    for (const auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <class Real>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(Shape shape) : shape_(std::move(shape)) {
        for (const auto d : shape_)
            if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
        storage_ = std::make_shared<Storage>();
        storage_->data = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(numel_of(shape_)), Real(0));
    }

    TensorT(Shape shape, std::vector<Real> values) : shape_(std::move(shape)) {
        if (numel_of(shape_) != static_cast<std::int64_t>(values.size()))
            throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape_));
        storage_ = std::make_shared<Storage>();
        storage_->data = std::make_shared<std::vector<Real>>(std::move(values));
    }

    static TensorT scalar(Real v) { return TensorT(Shape{1}, std::vector<Real>{v}); }

    static TensorT full(Shape shape, Real v) {
        TensorT t(std::move(shape));
        std::fill(t.raw().begin(), t.raw().end(), v);
        return t;
    }

    static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

    static TensorT randn(Shape shape, Rng& rng, Real stddev = Real(1)) {
        TensorT t(std::move(shape));
        for (auto& v : *t.data_) v = static_cast<Real>(rng.normal()) * stddev;
        return t;
    }

    bool defined() const { return storage_ != nullptr; }
    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return storage_ ? static_cast<std::int64_t>(storage_->data->size()) : 0; }

    std::span<const Real> data() const { return {storage_->data->data(), storage_->data->size()}; }

    // Mutable view of the storage. Valid for initialization only; tensors
    // must not be written after they have been fed to an op.
    std::span<Real> raw() { return {storage_->data->data(), storage_->data->size()}; }

    Real value() const {
        if (numel() != 1) throw UsageError("value() requires a scalar tensor, shape is " + shape_str(shape_));
        return (*storage_->data)[0];
    }

    bool tracked() const { return storage_ && storage_->grad != nullptr; }

    std::span<Real> grad() const {
        if (!tracked()) throw UsageError("tensor has no gradient accumulator");
        return {storage_->grad->data(), storage_->grad->size()};
    }

    // Allocates the gradient accumulator, making this a differentiable leaf.
    // Copies made before or after see the same accumulator: the gradient
    // lives with the shared storage, not the handle.
    TensorT& track() {
        if (!storage_) throw UsageError("cannot track an undefined tensor");
        if (!storage_->grad) storage_->grad = std::make_shared<std::vector<Real>>(storage_->data->size(), Real(0));
        return *this;
    }

    void zero_grad() {
        if (storage_ && storage_->grad) std::fill(storage_->grad->begin(), storage_->grad->end(), Real(0));
    }

    // Same data, no gradient accumulator, never recorded on a tape.
    TensorT detach() const {
        TensorT t;
        t.shape_ = shape_;
        t.storage_ = std::make_shared<Storage>();
        t.storage_->data = storage_->data;
        return t;
    }

    template <class Other>
    TensorT<Other> cast() const {
        TensorT<Other> t(shape_);
        auto dst = t.raw();
        const auto src = data();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<Other>(src[i]);
        return t;
    }

private:
    struct Storage {
        std::shared_ptr<std::vector<Real>> data;
        std::shared_ptr<std::vector<Real>> grad;  // null until tracked
    };
    Shape shape_{};
    std::shared_ptr<Storage> storage_{};
};

using Tensor = TensorT<float>;

// Records one forward pass. Nodes are appended in execution order, so the
// reverse sweep visits every node after all of its consumers; inputs always
// precede their dependents. A tape runs backward() at most once.
template <class Real>
class GradientTape {
public:
    GradientTape() : prev_(current_) { current_ = this; }
    ~GradientTape() { current_ = prev_; }
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    static GradientTape* current() { return current_; }

    void record(const char* op, std::function<void()> backward) {
        if (consumed_) throw UsageError("gradient tape was already consumed by backward()");
        nodes_.push_back(Node{op, std::move(backward)});
    }

    std::size_t size() const { return nodes_.size(); }

    void backward(const TensorT<Real>& loss) {
        if (consumed_) throw UsageError("backward() may run only once per tape");
        if (!loss.tracked()) throw UsageError("backward() target is detached from the tape");
        if (loss.numel() != 1) throw UsageError("backward() target must be a scalar");
        consumed_ = true;
        loss.grad()[0] += Real(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    }

private:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
    bool consumed_ = false;
    GradientTape* prev_ = nullptr;
    static thread_local GradientTape* current_;
};

template <class Real>
thread_local GradientTape<Real>* GradientTape<Real>::current_ = nullptr;

using Tape = GradientTape<float>;

namespace detail {

template <class Real>
bool trace_active(std::initializer_list<const TensorT<Real>*> inputs) {
    if (!GradientTape<Real>::current()) return false;
    for (const auto* t : inputs)
        if (t->tracked()) return true;
    return false;
}

template <class Real>
void record(const char* op, TensorT<Real>& out, std::function<void()> backward) {
    out.track();
    GradientTape<Real>::current()->record(op, std::move(backward));
}

// C (MxN) += A (MxK) * B (KxN), all row-major. The inner loop over j is a
// fixed-order accumulation, so results are bit-identical for a given input
// regardless of how callers are scheduled.
template <class Real>
void gemm_add(const Real* A, const Real* B, Real* C, std::int64_t M, std::int64_t K, std::int64_t N) {
    for (std::int64_t i = 0; i < M; ++i) {
        const Real* a = A + i * K;
        Real* c = C + i * N;
        for (std::int64_t k = 0; k < K; ++k) {
            const Real av = a[k];
            const Real* bk = B + k * N;
            for (std::int64_t j = 0; j < N; ++j) c[j] += av * bk[j];
        }
    }
}

// C (MxK) += A (MxN) * B^T (B is KxN).
template <class Real>
void gemm_nt_add(const Real* A, const Real* B, Real* C, std::int64_t M, std::int64_t N, std::int64_t K) {
    for (std::int64_t i = 0; i < M; ++i) {
        const Real* a = A + i * N;
        Real* c = C + i * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const Real* bk = B + k * N;
            Real acc = Real(0);
            for (std::int64_t j = 0; j < N; ++j) acc += a[j] * bk[j];
            c[k] += acc;
        }
    }
}

// C (KxN) += A^T * B (A is MxK, B is MxN).
template <class Real>
void gemm_tn_add(const Real* A, const Real* B, Real* C, std::int64_t M, std::int64_t K, std::int64_t N) {
    for (std::int64_t i = 0; i < M; ++i) {
        const Real* a = A + i * K;
        const Real* b = B + i * N;
        for (std::int64_t k = 0; k < K; ++k) {
            const Real av = a[k];
            Real* c = C + k * N;
            for (std::int64_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

template <class Real>
void check_same_shape(const TensorT<Real>& a, const TensorT<Real>& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> add(const TensorT<Real>& a, const TensorT<Real>& b) {
    detail::check_same_shape(a, b, "add");
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = da[i] + db[i];
    if (detail::trace_active<Real>({&a, &b})) {
        detail::record<Real>("add", out, [a, b, out]() {
            const auto g = out.grad();
            if (a.tracked()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.tracked()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> sub(const TensorT<Real>& a, const TensorT<Real>& b) {
    detail::check_same_shape(a, b, "sub");
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = da[i] - db[i];
    if (detail::trace_active<Real>({&a, &b})) {
        detail::record<Real>("sub", out, [a, b, out]() {
            const auto g = out.grad();
            if (a.tracked()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.tracked()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> mul(const TensorT<Real>& a, const TensorT<Real>& b) {
    detail::check_same_shape(a, b, "mul");
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data(), db = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = da[i] * db[i];
    if (detail::trace_active<Real>({&a, &b})) {
        detail::record<Real>("mul", out, [a, b, out]() {
            const auto g = out.grad();
            const auto da = a.data(), db = b.data();
            if (a.tracked()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * db[i];
            }
            if (b.tracked()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * da[i];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> add_scalar(const TensorT<Real>& a, Real c) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = da[i] + c;
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("add_scalar", out, [a, out]() {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

template <class Real>
TensorT<Real> mul_scalar(const TensorT<Real>& a, Real c) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = da[i] * c;
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("mul_scalar", out, [a, out, c]() {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
        });
    }
    return out;
}

// a (MxN) + v broadcast across rows; v has N entries.
template <class Real>
TensorT<Real> add_rowvec(const TensorT<Real>& a, const TensorT<Real>& v) {
    if (a.rank() != 2 || v.numel() != a.dim(1))
        throw ShapeError("add_rowvec: need [M,N] and [N], got " + shape_str(a.shape()) + " and " + shape_str(v.shape()));
    const std::int64_t M = a.dim(0), N = a.dim(1);
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data(), dv = v.data();
    for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < N; ++j) o[i * N + j] = da[i * N + j] + dv[j];
    if (detail::trace_active<Real>({&a, &v})) {
        detail::record<Real>("add_rowvec", out, [a, v, out, M, N]() {
            const auto g = out.grad();
            if (a.tracked()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (v.tracked()) {
                auto gv = v.grad();
                for (std::int64_t i = 0; i < M; ++i)
                    for (std::int64_t j = 0; j < N; ++j) gv[j] += g[i * N + j];
            }
        });
    }
    return out;
}

// a (MxN) * v broadcast across rows (per-column gate); v has N entries.
template <class Real>
TensorT<Real> mul_rowvec(const TensorT<Real>& a, const TensorT<Real>& v) {
    if (a.rank() != 2 || v.numel() != a.dim(1))
        throw ShapeError("mul_rowvec: need [M,N] and [N], got " + shape_str(a.shape()) + " and " + shape_str(v.shape()));
    const std::int64_t M = a.dim(0), N = a.dim(1);
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto da = a.data(), dv = v.data();
    for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < N; ++j) o[i * N + j] = da[i * N + j] * dv[j];
    if (detail::trace_active<Real>({&a, &v})) {
        detail::record<Real>("mul_rowvec", out, [a, v, out, M, N]() {
            const auto g = out.grad();
            const auto da = a.data(), dv = v.data();
            if (a.tracked()) {
                auto ga = a.grad();
                for (std::int64_t i = 0; i < M; ++i)
                    for (std::int64_t j = 0; j < N; ++j) ga[i * N + j] += g[i * N + j] * dv[j];
            }
            if (v.tracked()) {
                auto gv = v.grad();
                for (std::int64_t i = 0; i < M; ++i)
                    for (std::int64_t j = 0; j < N; ++j) gv[j] += g[i * N + j] * da[i * N + j];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix product, transpose, reshape
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> matmul(const TensorT<Real>& a, const TensorT<Real>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: rank-2 tensors required");
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const std::int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
    TensorT<Real> out(Shape{M, N});
    detail::gemm_add(a.data().data(), b.data().data(), out.raw().data(), M, K, N);
    if (detail::trace_active<Real>({&a, &b})) {
        detail::record<Real>("matmul", out, [a, b, out, M, K, N]() {
            const auto g = out.grad();
            if (a.tracked())
                detail::gemm_nt_add(g.data(), b.data().data(), a.grad().data(), M, N, K);
            if (b.tracked())
                detail::gemm_tn_add(a.data().data(), g.data(), b.grad().data(), M, K, N);
        });
    }
    return out;
}

template <class Real>
TensorT<Real> transpose2d(const TensorT<Real>& a) {
    if (a.rank() != 2) throw ShapeError("transpose2d: rank-2 tensor required");
    const std::int64_t M = a.dim(0), N = a.dim(1);
    TensorT<Real> out(Shape{N, M});
    auto o = out.raw();
    const auto d = a.data();
    for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < N; ++j) o[j * M + i] = d[i * N + j];
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("transpose2d", out, [a, out, M, N]() {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::int64_t i = 0; i < M; ++i)
                for (std::int64_t j = 0; j < N; ++j) ga[i * N + j] += g[j * M + i];
        });
    }
    return out;
}

template <class Real>
TensorT<Real> reshape(const TensorT<Real>& a, Shape shape) {
    if (numel_of(shape) != a.numel())
        throw ShapeError("reshape: element count mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
    TensorT<Real> out(std::move(shape));
    auto o = out.raw();
    const auto d = a.data();
    std::copy(d.begin(), d.end(), o.begin());
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("reshape", out, [a, out]() {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> relu(const TensorT<Real>& a) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto d = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = d[i] > Real(0) ? d[i] : Real(0);
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("relu", out, [a, out]() {
            const auto g = out.grad();
            const auto d = a.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (d[i] > Real(0)) ga[i] += g[i];
        });
    }
    return out;
}

// Exact erf form: 0.5 x (1 + erf(x / sqrt(2))).
template <class Real>
TensorT<Real> gelu(const TensorT<Real>& a) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto d = a.data();
    constexpr Real kInvSqrt2 = Real(0.70710678118654752440);
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = Real(0.5) * d[i] * (Real(1) + std::erf(d[i] * kInvSqrt2));
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("gelu", out, [a, out]() {
            const auto g = out.grad();
            const auto d = a.data();
            auto ga = a.grad();
            constexpr Real kInvSqrt2 = Real(0.70710678118654752440);
            constexpr Real kInvSqrt2Pi = Real(0.39894228040143267794);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const Real x = d[i];
                const Real cdf = Real(0.5) * (Real(1) + std::erf(x * kInvSqrt2));
                const Real pdf = kInvSqrt2Pi * std::exp(Real(-0.5) * x * x);
                ga[i] += g[i] * (cdf + x * pdf);
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> sigmoid(const TensorT<Real>& a) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto d = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = Real(1) / (Real(1) + std::exp(-d[i]));
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("sigmoid", out, [a, out]() {
            const auto g = out.grad();
            const auto y = out.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (Real(1) - y[i]);
        });
    }
    return out;
}

// Clamp to [0,1]; gradient passes through inside the interval (inclusive).
template <class Real>
TensorT<Real> clamp01(const TensorT<Real>& a) {
    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto d = a.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::clamp(d[i], Real(0), Real(1));
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("clamp01", out, [a, out]() {
            const auto g = out.grad();
            const auto d = a.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (d[i] >= Real(0) && d[i] <= Real(1)) ga[i] += g[i];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Softmax along an arbitrary axis (max-subtracted)
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> softmax(const TensorT<Real>& a, int axis) {
    if (axis < 0 || axis >= a.rank()) throw ShapeError("softmax: axis out of range");
    const auto& s = a.shape();
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
    const std::int64_t n = s[static_cast<std::size_t>(axis)];
    for (int i = axis + 1; i < a.rank(); ++i) inner *= s[static_cast<std::size_t>(i)];

    TensorT<Real> out(a.shape());
    auto o = out.raw();
    const auto d = a.data();
    for (std::int64_t ou = 0; ou < outer; ++ou) {
        for (std::int64_t in = 0; in < inner; ++in) {
            const std::int64_t base = ou * n * inner + in;
            Real mx = d[base];
            for (std::int64_t t = 1; t < n; ++t) mx = std::max(mx, d[base + t * inner]);
            Real sum = Real(0);
            for (std::int64_t t = 0; t < n; ++t) {
                const Real e = std::exp(d[base + t * inner] - mx);
                o[base + t * inner] = e;
                sum += e;
            }
            const Real inv = Real(1) / sum;
            for (std::int64_t t = 0; t < n; ++t) o[base + t * inner] *= inv;
        }
    }
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("softmax", out, [a, out, outer, n, inner]() {
            const auto g = out.grad();
            const auto y = out.data();
            auto ga = a.grad();
            for (std::int64_t ou = 0; ou < outer; ++ou) {
                for (std::int64_t in = 0; in < inner; ++in) {
                    const std::int64_t base = ou * n * inner + in;
                    Real dot = Real(0);
                    for (std::int64_t t = 0; t < n; ++t) dot += g[base + t * inner] * y[base + t * inner];
                    for (std::int64_t t = 0; t < n; ++t) {
                        const std::int64_t k = base + t * inner;
                        ga[k] += (g[k] - dot) * y[k];
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Layer normalization over the last axis with affine parameters.
template <class Real>
TensorT<Real> layer_norm(const TensorT<Real>& x, const TensorT<Real>& gamma, const TensorT<Real>& beta,
                         Real eps = Real(1e-5)) {
    if (x.rank() < 1) throw ShapeError("layer_norm: rank >= 1 required");
    const std::int64_t N = x.dim(x.rank() - 1);
    if (gamma.numel() != N || beta.numel() != N)
        throw ShapeError("layer_norm: affine parameters must have the last-axis extent");
    const std::int64_t rows = x.numel() / N;

    TensorT<Real> out(x.shape());
    TensorT<Real> xhat(x.shape());  // saved for backward
    std::vector<Real> inv_std(static_cast<std::size_t>(rows));
    auto o = out.raw();
    auto xh = xhat.raw();
    const auto d = x.data(), dg = gamma.data(), db = beta.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const Real* row = d.data() + r * N;
        Real mean = Real(0);
        for (std::int64_t j = 0; j < N; ++j) mean += row[j];
        mean /= Real(N);
        Real var = Real(0);
        for (std::int64_t j = 0; j < N; ++j) {
            const Real c = row[j] - mean;
            var += c * c;
        }
        var /= Real(N);
        const Real is = Real(1) / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(r)] = is;
        for (std::int64_t j = 0; j < N; ++j) {
            const Real h = (row[j] - mean) * is;
            xh[r * N + j] = h;
            o[r * N + j] = h * dg[j] + db[j];
        }
    }
    if (detail::trace_active<Real>({&x, &gamma, &beta})) {
        detail::record<Real>("layer_norm", out, [x, gamma, beta, out, xhat, inv_std = std::move(inv_std), rows, N]() {
            const auto g = out.grad();
            const auto xh = xhat.data();
            const auto dg = gamma.data();
            for (std::int64_t r = 0; r < rows; ++r) {
                const Real is = inv_std[static_cast<std::size_t>(r)];
                if (x.tracked()) {
                    // dL/dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
                    Real m1 = Real(0), m2 = Real(0);
                    for (std::int64_t j = 0; j < N; ++j) {
                        const Real dxh = g[r * N + j] * dg[j];
                        m1 += dxh;
                        m2 += dxh * xh[r * N + j];
                    }
                    m1 /= Real(N);
                    m2 /= Real(N);
                    auto gx = x.grad();
                    for (std::int64_t j = 0; j < N; ++j) {
                        const Real dxh = g[r * N + j] * dg[j];
                        gx[r * N + j] += is * (dxh - m1 - xh[r * N + j] * m2);
                    }
                }
                if (gamma.tracked()) {
                    auto gg = gamma.grad();
                    for (std::int64_t j = 0; j < N; ++j) gg[j] += g[r * N + j] * xh[r * N + j];
                }
                if (beta.tracked()) {
                    auto gb = beta.grad();
                    for (std::int64_t j = 0; j < N; ++j) gb[j] += g[r * N + j];
                }
            }
        });
    }
    return out;
}

// Per-row standardization without affine terms: (x - mean) / sqrt(var + eps).
// Used to normalize reconstruction-target patches.
template <class Real>
TensorT<Real> row_standardize(const TensorT<Real>& x, Real eps = Real(1e-6)) {
    if (x.rank() != 2) throw ShapeError("row_standardize: rank-2 tensor required");
    TensorT<Real> ones(Shape{x.dim(1)});
    std::fill(ones.raw().begin(), ones.raw().end(), Real(1));
    TensorT<Real> zeros_(Shape{x.dim(1)});
    return layer_norm(x, ones, zeros_, eps);
}

// ---------------------------------------------------------------------------
// Channel statistics (per sample & channel over the spatial extent)
// ---------------------------------------------------------------------------

// Returns the per-(sample, channel) mean and standard deviation of an
// [N,C,H,W] map. The deviation is the population statistic over H*W and is
// floored at `floor_eps` so downstream divisions stay finite on constant
// maps; the floored branch contributes zero gradient.
template <class Real>
std::pair<TensorT<Real>, TensorT<Real>> channel_stats(const TensorT<Real>& f, Real floor_eps = Real(1e-5)) {
    if (f.rank() != 4) throw ShapeError("channel_stats: [N,C,H,W] tensor required");
    const std::int64_t N = f.dim(0), C = f.dim(1), HW = f.dim(2) * f.dim(3);
    TensorT<Real> mu(Shape{N, C});
    TensorT<Real> sigma(Shape{N, C});
    auto dm = mu.raw();
    auto ds = sigma.raw();
    const auto d = f.data();
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const Real* p = d.data() + nc * HW;
        Real m = Real(0);
        for (std::int64_t i = 0; i < HW; ++i) m += p[i];
        m /= Real(HW);
        Real v = Real(0);
        for (std::int64_t i = 0; i < HW; ++i) {
            const Real c = p[i] - m;
            v += c * c;
        }
        v /= Real(HW);
        dm[nc] = m;
        ds[nc] = std::max(std::sqrt(v), floor_eps);
    }
    if (detail::trace_active<Real>({&f})) {
        mu.track();
        sigma.track();
        GradientTape<Real>::current()->record("channel_stats", [f, mu, sigma, N, C, HW, floor_eps]() {
            const auto gm = mu.grad();
            const auto gs = sigma.grad();
            const auto dm = mu.data();
            const auto ds = sigma.data();
            const auto d = f.data();
            auto gf = f.grad();
            for (std::int64_t nc = 0; nc < N * C; ++nc) {
                const Real gmu = gm[nc] / Real(HW);
                const bool live = ds[nc] > floor_eps;
                const Real k = live ? gs[nc] / (Real(HW) * ds[nc]) : Real(0);
                const Real* p = d.data() + nc * HW;
                Real* gp = gf.data() + nc * HW;
                for (std::int64_t i = 0; i < HW; ++i) gp[i] += gmu + k * (p[i] - dm[nc]);
            }
        });
    }
    return {mu, sigma};
}

namespace detail {

enum class ChannelOp { Add, Sub, Mul, Div };

// out[n,c,h,w] = f[n,c,h,w] (op) v[n,c]
template <class Real, ChannelOp Op>
TensorT<Real> channel_broadcast(const TensorT<Real>& f, const TensorT<Real>& v, const char* name) {
    if (f.rank() != 4) throw ShapeError(std::string(name) + ": [N,C,H,W] tensor required");
    if (v.rank() != 2 || v.dim(0) != f.dim(0) || v.dim(1) != f.dim(1))
        throw ShapeError(std::string(name) + ": per-channel tensor must be [N,C], got " + shape_str(v.shape()));
    const std::int64_t NC = f.dim(0) * f.dim(1), HW = f.dim(2) * f.dim(3);
    TensorT<Real> out(f.shape());
    auto o = out.raw();
    const auto df = f.data(), dv = v.data();
    for (std::int64_t nc = 0; nc < NC; ++nc) {
        const Real val = dv[nc];
        const Real* p = df.data() + nc * HW;
        Real* q = o.data() + nc * HW;
        for (std::int64_t i = 0; i < HW; ++i) {
            if constexpr (Op == ChannelOp::Add) q[i] = p[i] + val;
            if constexpr (Op == ChannelOp::Sub) q[i] = p[i] - val;
            if constexpr (Op == ChannelOp::Mul) q[i] = p[i] * val;
            if constexpr (Op == ChannelOp::Div) q[i] = p[i] / val;
        }
    }
    if (trace_active<Real>({&f, &v})) {
        record<Real>(name, out, [f, v, out, NC, HW]() {
            const auto g = out.grad();
            const auto df = f.data(), dv = v.data();
            for (std::int64_t nc = 0; nc < NC; ++nc) {
                const Real val = dv[nc];
                const Real* gp = g.data() + nc * HW;
                if (f.tracked()) {
                    Real* gf = f.grad().data() + nc * HW;
                    for (std::int64_t i = 0; i < HW; ++i) {
                        if constexpr (Op == ChannelOp::Add || Op == ChannelOp::Sub) gf[i] += gp[i];
                        if constexpr (Op == ChannelOp::Mul) gf[i] += gp[i] * val;
                        if constexpr (Op == ChannelOp::Div) gf[i] += gp[i] / val;
                    }
                }
                if (v.tracked()) {
                    const Real* p = df.data() + nc * HW;
                    Real acc = Real(0);
                    for (std::int64_t i = 0; i < HW; ++i) {
                        if constexpr (Op == ChannelOp::Add) acc += gp[i];
                        if constexpr (Op == ChannelOp::Sub) acc -= gp[i];
                        if constexpr (Op == ChannelOp::Mul) acc += gp[i] * p[i];
                        if constexpr (Op == ChannelOp::Div) acc -= gp[i] * p[i] / (val * val);
                    }
                    v.grad()[static_cast<std::size_t>(nc)] += acc;
                }
            }
        });
    }
    return out;
}

}  // namespace detail

template <class Real>
TensorT<Real> add_channelwise(const TensorT<Real>& f, const TensorT<Real>& v) {
    return detail::channel_broadcast<Real, detail::ChannelOp::Add>(f, v, "add_channelwise");
}
template <class Real>
TensorT<Real> sub_channelwise(const TensorT<Real>& f, const TensorT<Real>& v) {
    return detail::channel_broadcast<Real, detail::ChannelOp::Sub>(f, v, "sub_channelwise");
}
template <class Real>
TensorT<Real> mul_channelwise(const TensorT<Real>& f, const TensorT<Real>& v) {
    return detail::channel_broadcast<Real, detail::ChannelOp::Mul>(f, v, "mul_channelwise");
}
template <class Real>
TensorT<Real> div_channelwise(const TensorT<Real>& f, const TensorT<Real>& v) {
    return detail::channel_broadcast<Real, detail::ChannelOp::Div>(f, v, "div_channelwise");
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

namespace detail {

// col is (C*k*k) x (OH*OW), one sample at a time.
template <class Real>
void im2col(const Real* x, std::int64_t C, std::int64_t H, std::int64_t W, std::int64_t k, std::int64_t stride,
            std::int64_t pad, std::int64_t OH, std::int64_t OW, Real* col) {
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t kh = 0; kh < k; ++kh) {
            for (std::int64_t kw = 0; kw < k; ++kw) {
                Real* dst = col + ((c * k + kh) * k + kw) * OH * OW;
                for (std::int64_t oh = 0; oh < OH; ++oh) {
                    const std::int64_t ih = oh * stride + kh - pad;
                    if (ih < 0 || ih >= H) {
                        std::fill(dst + oh * OW, dst + (oh + 1) * OW, Real(0));
                        continue;
                    }
                    const Real* src = x + (c * H + ih) * W;
                    for (std::int64_t ow = 0; ow < OW; ++ow) {
                        const std::int64_t iw = ow * stride + kw - pad;
                        dst[oh * OW + ow] = (iw >= 0 && iw < W) ? src[iw] : Real(0);
                    }
                }
            }
        }
    }
}

template <class Real>
void col2im_add(const Real* col, std::int64_t C, std::int64_t H, std::int64_t W, std::int64_t k, std::int64_t stride,
                std::int64_t pad, std::int64_t OH, std::int64_t OW, Real* gx) {
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t kh = 0; kh < k; ++kh) {
            for (std::int64_t kw = 0; kw < k; ++kw) {
                const Real* src = col + ((c * k + kh) * k + kw) * OH * OW;
                for (std::int64_t oh = 0; oh < OH; ++oh) {
                    const std::int64_t ih = oh * stride + kh - pad;
                    if (ih < 0 || ih >= H) continue;
                    Real* dst = gx + (c * H + ih) * W;
                    for (std::int64_t ow = 0; ow < OW; ++ow) {
                        const std::int64_t iw = ow * stride + kw - pad;
                        if (iw >= 0 && iw < W) dst[iw] += src[oh * OW + ow];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// 2-D convolution of x [N,C,H,W] with weight [O,C,k,k] and bias [O].
// OH = (H + 2*pad - k) / stride + 1 with floor division.
template <class Real>
TensorT<Real> conv2d(const TensorT<Real>& x, const TensorT<Real>& w, const TensorT<Real>& b, std::int64_t stride = 1,
                     std::int64_t pad = 0) {
    if (x.rank() != 4 || w.rank() != 4) throw ShapeError("conv2d: input [N,C,H,W] and weight [O,C,k,k] required");
    if (w.dim(2) != w.dim(3)) throw ShapeError("conv2d: square kernels only");
    if (x.dim(1) != w.dim(1))
        throw ShapeError("conv2d: channel mismatch, input C=" + std::to_string(x.dim(1)) + " weight C=" + std::to_string(w.dim(1)));
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t O = w.dim(0), k = w.dim(2);
    if (b.numel() != O) throw ShapeError("conv2d: bias must have O entries");
    if (k > H + 2 * pad || k > W + 2 * pad) throw ShapeError("conv2d: kernel larger than padded input");
    const std::int64_t OH = (H + 2 * pad - k) / stride + 1;
    const std::int64_t OW = (W + 2 * pad - k) / stride + 1;
    const std::int64_t CKK = C * k * k;

    TensorT<Real> out(Shape{N, O, OH, OW});
    std::vector<Real> col(static_cast<std::size_t>(CKK * OH * OW));
    const auto dx = x.data();
    const auto dw = w.data();
    const auto db = b.data();
    auto o = out.raw();
    for (std::int64_t n = 0; n < N; ++n) {
        detail::im2col(dx.data() + n * C * H * W, C, H, W, k, stride, pad, OH, OW, col.data());
        Real* on = o.data() + n * O * OH * OW;
        for (std::int64_t oc = 0; oc < O; ++oc)
            std::fill(on + oc * OH * OW, on + (oc + 1) * OH * OW, db[oc]);
        detail::gemm_add(dw.data(), col.data(), on, O, CKK, OH * OW);
    }

    if (detail::trace_active<Real>({&x, &w, &b})) {
        detail::record<Real>("conv2d", out, [x, w, b, out, N, C, H, W, O, k, stride, pad, OH, OW, CKK]() {
            const auto g = out.grad();
            std::vector<Real> col(static_cast<std::size_t>(CKK * OH * OW));
            std::vector<Real> gcol(static_cast<std::size_t>(CKK * OH * OW));
            const auto dx = x.data();
            const auto dw = w.data();
            for (std::int64_t n = 0; n < N; ++n) {
                const Real* gn = g.data() + n * O * OH * OW;
                if (b.tracked()) {
                    auto gb = b.grad();
                    for (std::int64_t oc = 0; oc < O; ++oc) {
                        Real acc = Real(0);
                        const Real* p = gn + oc * OH * OW;
                        for (std::int64_t i = 0; i < OH * OW; ++i) acc += p[i];
                        gb[oc] += acc;
                    }
                }
                if (w.tracked() || x.tracked())
                    detail::im2col(dx.data() + n * C * H * W, C, H, W, k, stride, pad, OH, OW, col.data());
                if (w.tracked())
                    detail::gemm_nt_add(gn, col.data(), w.grad().data(), O, OH * OW, CKK);
                if (x.tracked()) {
                    std::fill(gcol.begin(), gcol.end(), Real(0));
                    detail::gemm_tn_add(dw.data(), gn, gcol.data(), O, CKK, OH * OW);
                    detail::col2im_add(gcol.data(), C, H, W, k, stride, pad, OH, OW, x.grad().data() + n * C * H * W);
                }
            }
        });
    }
    return out;
}

// 1-D convolution along each row of x [M,E] with a single k-tap filter and a
// scalar bias, zero padded. Used by the channel-gating descriptor.
template <class Real>
TensorT<Real> conv1d_rows(const TensorT<Real>& x, const TensorT<Real>& w, const TensorT<Real>& b, std::int64_t pad) {
    if (x.rank() != 2 || w.rank() != 1) throw ShapeError("conv1d_rows: x [M,E] and w [k] required");
    if (b.numel() != 1) throw ShapeError("conv1d_rows: scalar bias required");
    const std::int64_t M = x.dim(0), E = x.dim(1), k = w.dim(0);
    const std::int64_t OE = E + 2 * pad - k + 1;
    if (OE != E) throw ShapeError("conv1d_rows: padding must preserve length");
    if (E < k) throw ShapeError("conv1d_rows: row shorter than kernel");

    TensorT<Real> out(Shape{M, E});
    auto o = out.raw();
    const auto dx = x.data(), dw = w.data();
    const Real bias = b.data()[0];
    for (std::int64_t m = 0; m < M; ++m) {
        const Real* row = dx.data() + m * E;
        for (std::int64_t e = 0; e < E; ++e) {
            Real acc = bias;
            for (std::int64_t j = 0; j < k; ++j) {
                const std::int64_t src = e + j - pad;
                if (src >= 0 && src < E) acc += dw[j] * row[src];
            }
            o[m * E + e] = acc;
        }
    }
    if (detail::trace_active<Real>({&x, &w, &b})) {
        detail::record<Real>("conv1d_rows", out, [x, w, b, out, M, E, k, pad]() {
            const auto g = out.grad();
            const auto dx = x.data(), dw = w.data();
            for (std::int64_t m = 0; m < M; ++m) {
                const Real* grow = g.data() + m * E;
                for (std::int64_t e = 0; e < E; ++e) {
                    const Real ge = grow[e];
                    for (std::int64_t j = 0; j < k; ++j) {
                        const std::int64_t src = e + j - pad;
                        if (src < 0 || src >= E) continue;
                        if (x.tracked()) x.grad()[static_cast<std::size_t>(m * E + src)] += ge * dw[j];
                        if (w.tracked()) w.grad()[static_cast<std::size_t>(j)] += ge * dx[m * E + src];
                    }
                    if (b.tracked()) b.grad()[0] += ge;
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Row gather / scatter and concatenation
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> gather_rows(const TensorT<Real>& x, const std::vector<std::int64_t>& ids) {
    if (x.rank() != 2) throw ShapeError("gather_rows: rank-2 tensor required");
    if (ids.empty()) throw UsageError("gather_rows: empty index set");
    const std::int64_t N = x.dim(1);
    for (const auto i : ids)
        if (i < 0 || i >= x.dim(0)) throw ShapeError("gather_rows: row index out of range");
    TensorT<Real> out(Shape{static_cast<std::int64_t>(ids.size()), N});
    auto o = out.raw();
    const auto d = x.data();
    for (std::size_t r = 0; r < ids.size(); ++r)
        std::copy_n(d.data() + ids[r] * N, N, o.data() + static_cast<std::int64_t>(r) * N);
    if (detail::trace_active<Real>({&x})) {
        detail::record<Real>("gather_rows", out, [x, out, ids, N]() {
            const auto g = out.grad();
            auto gx = x.grad();
            for (std::size_t r = 0; r < ids.size(); ++r)
                for (std::int64_t j = 0; j < N; ++j)
                    gx[ids[r] * N + j] += g[static_cast<std::int64_t>(r) * N + j];
        });
    }
    return out;
}

// Rebuilds a full [L,E] sequence: visible rows come from `visible` in order,
// every masked row is the shared learned token.
template <class Real>
TensorT<Real> assemble_rows(const TensorT<Real>& visible, const std::vector<std::int64_t>& visible_ids,
                            const std::vector<std::int64_t>& masked_ids, const TensorT<Real>& mask_token,
                            std::int64_t total_rows) {
    if (visible.rank() != 2) throw ShapeError("assemble_rows: rank-2 visible block required");
    const std::int64_t E = visible.dim(1);
    if (mask_token.numel() != E) throw ShapeError("assemble_rows: mask token width mismatch");
    if (static_cast<std::int64_t>(visible_ids.size()) != visible.dim(0))
        throw ShapeError("assemble_rows: visible id count mismatch");
    if (static_cast<std::int64_t>(visible_ids.size() + masked_ids.size()) != total_rows)
        throw ShapeError("assemble_rows: ids must cover all rows exactly once");

    TensorT<Real> out(Shape{total_rows, E});
    auto o = out.raw();
    const auto dv = visible.data();
    const auto dt = mask_token.data();
    for (std::size_t r = 0; r < visible_ids.size(); ++r)
        std::copy_n(dv.data() + static_cast<std::int64_t>(r) * E, E, o.data() + visible_ids[r] * E);
    for (const auto m : masked_ids) std::copy_n(dt.data(), E, o.data() + m * E);
    if (detail::trace_active<Real>({&visible, &mask_token})) {
        detail::record<Real>("assemble_rows", out, [visible, mask_token, out, visible_ids, masked_ids, E]() {
            const auto g = out.grad();
            if (visible.tracked()) {
                auto gv = visible.grad();
                for (std::size_t r = 0; r < visible_ids.size(); ++r)
                    for (std::int64_t j = 0; j < E; ++j)
                        gv[static_cast<std::int64_t>(r) * E + j] += g[visible_ids[r] * E + j];
            }
            if (mask_token.tracked()) {
                auto gt = mask_token.grad();
                for (const auto m : masked_ids)
                    for (std::int64_t j = 0; j < E; ++j) gt[j] += g[m * E + j];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> slice_cols(const TensorT<Real>& x, std::int64_t c0, std::int64_t len) {
    if (x.rank() != 2) throw ShapeError("slice_cols: rank-2 tensor required");
    if (c0 < 0 || len <= 0 || c0 + len > x.dim(1)) throw ShapeError("slice_cols: column range out of bounds");
    const std::int64_t M = x.dim(0), N = x.dim(1);
    TensorT<Real> out(Shape{M, len});
    auto o = out.raw();
    const auto d = x.data();
    for (std::int64_t i = 0; i < M; ++i) std::copy_n(d.data() + i * N + c0, len, o.data() + i * len);
    if (detail::trace_active<Real>({&x})) {
        detail::record<Real>("slice_cols", out, [x, out, c0, len, M, N]() {
            const auto g = out.grad();
            auto gx = x.grad();
            for (std::int64_t i = 0; i < M; ++i)
                for (std::int64_t j = 0; j < len; ++j) gx[i * N + c0 + j] += g[i * len + j];
        });
    }
    return out;
}

template <class Real>
TensorT<Real> concat_cols(const std::vector<TensorT<Real>>& parts) {
    if (parts.empty()) throw UsageError("concat_cols: no inputs");
    const std::int64_t M = parts[0].dim(0);
    std::int64_t N = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != M) throw ShapeError("concat_cols: row counts must agree");
        N += p.dim(1);
    }
    TensorT<Real> out(Shape{M, N});
    auto o = out.raw();
    std::int64_t off = 0;
    for (const auto& p : parts) {
        const auto d = p.data();
        const std::int64_t w = p.dim(1);
        for (std::int64_t i = 0; i < M; ++i) std::copy_n(d.data() + i * w, w, o.data() + i * N + off);
        off += w;
    }
    bool any = false;
    if (GradientTape<Real>::current())
        for (const auto& p : parts) any = any || p.tracked();
    if (any) {
        detail::record<Real>("concat_cols", out, [parts, out, M, N]() {
            const auto g = out.grad();
            std::int64_t off = 0;
            for (const auto& p : parts) {
                const std::int64_t w = p.dim(1);
                if (p.tracked()) {
                    auto gp = p.grad();
                    for (std::int64_t i = 0; i < M; ++i)
                        for (std::int64_t j = 0; j < w; ++j) gp[i * w + j] += g[i * N + off + j];
                }
                off += w;
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> concat_rows(const std::vector<TensorT<Real>>& parts) {
    if (parts.empty()) throw UsageError("concat_rows: no inputs");
    const std::int64_t N = parts[0].dim(1);
    std::int64_t M = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(1) != N) throw ShapeError("concat_rows: column counts must agree");
        M += p.dim(0);
    }
    TensorT<Real> out(Shape{M, N});
    auto o = out.raw();
    std::int64_t off = 0;
    for (const auto& p : parts) {
        const auto d = p.data();
        std::copy(d.begin(), d.end(), o.begin() + off * N);
        off += p.dim(0);
    }
    bool any = false;
    if (GradientTape<Real>::current())
        for (const auto& p : parts) any = any || p.tracked();
    if (any) {
        detail::record<Real>("concat_rows", out, [parts, out, N]() {
            const auto g = out.grad();
            std::int64_t off = 0;
            for (const auto& p : parts) {
                if (p.tracked()) {
                    auto gp = p.grad();
                    for (std::int64_t i = 0; i < p.numel(); ++i) gp[i] += g[off * N + i];
                }
                off += p.dim(0);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> sum_all(const TensorT<Real>& a) {
    Real acc = Real(0);
    for (const auto v : a.data()) acc += v;
    TensorT<Real> out = TensorT<Real>::scalar(acc);
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("sum_all", out, [a, out]() {
            const Real g = out.grad()[0];
            auto ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

template <class Real>
TensorT<Real> mean_all(const TensorT<Real>& a) {
    Real acc = Real(0);
    for (const auto v : a.data()) acc += v;
    const Real inv = Real(1) / static_cast<Real>(a.numel());
    TensorT<Real> out = TensorT<Real>::scalar(acc * inv);
    if (detail::trace_active<Real>({&a})) {
        detail::record<Real>("mean_all", out, [a, out, inv]() {
            const Real g = out.grad()[0] * inv;
            auto ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

// Column means of an [M,N] tensor -> [N]. Pools token sequences.
template <class Real>
TensorT<Real> mean_rows(const TensorT<Real>& x) {
    if (x.rank() != 2) throw ShapeError("mean_rows: rank-2 tensor required");
    const std::int64_t M = x.dim(0), N = x.dim(1);
    TensorT<Real> out(Shape{N});
    auto o = out.raw();
    const auto d = x.data();
    for (std::int64_t i = 0; i < M; ++i)
        for (std::int64_t j = 0; j < N; ++j) o[j] += d[i * N + j];
    const Real inv = Real(1) / static_cast<Real>(M);
    for (std::int64_t j = 0; j < N; ++j) o[j] *= inv;
    if (detail::trace_active<Real>({&x})) {
        detail::record<Real>("mean_rows", out, [x, out, M, N, inv]() {
            const auto g = out.grad();
            auto gx = x.grad();
            for (std::int64_t i = 0; i < M; ++i)
                for (std::int64_t j = 0; j < N; ++j) gx[i * N + j] += g[j] * inv;
        });
    }
    return out;
}

// Global average pool of [N,C,H,W] over the spatial extent -> [N,C].
template <class Real>
TensorT<Real> spatial_mean(const TensorT<Real>& f) {
    if (f.rank() != 4) throw ShapeError("spatial_mean: [N,C,H,W] tensor required");
    const std::int64_t NC = f.dim(0) * f.dim(1), HW = f.dim(2) * f.dim(3);
    TensorT<Real> out(Shape{f.dim(0), f.dim(1)});
    auto o = out.raw();
    const auto d = f.data();
    const Real inv = Real(1) / static_cast<Real>(HW);
    for (std::int64_t nc = 0; nc < NC; ++nc) {
        Real acc = Real(0);
        const Real* p = d.data() + nc * HW;
        for (std::int64_t i = 0; i < HW; ++i) acc += p[i];
        o[nc] = acc * inv;
    }
    if (detail::trace_active<Real>({&f})) {
        detail::record<Real>("spatial_mean", out, [f, out, NC, HW, inv]() {
            const auto g = out.grad();
            auto gf = f.grad();
            for (std::int64_t nc = 0; nc < NC; ++nc) {
                const Real gv = g[nc] * inv;
                Real* p = gf.data() + nc * HW;
                for (std::int64_t i = 0; i < HW; ++i) p[i] += gv;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Patch extraction
// ---------------------------------------------------------------------------

// Splits a [1,C,H,W] image into non-overlapping patches -> [L, C*p*p] with
// L = (H/p)*(W/p). Row t corresponds to patch (t / gw, t % gw); columns are
// flattened (c, py, px).
template <class Real>
TensorT<Real> patchify(const TensorT<Real>& x, std::int64_t p) {
    if (x.rank() != 4 || x.dim(0) != 1) throw ShapeError("patchify: [1,C,H,W] tensor required");
    const std::int64_t C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (p <= 0 || H % p != 0 || W % p != 0)
        throw ShapeError("patchify: extents must be divisible by the patch size");
    const std::int64_t gh = H / p, gw = W / p, L = gh * gw, D = C * p * p;
    TensorT<Real> out(Shape{L, D});
    auto o = out.raw();
    const auto d = x.data();
    for (std::int64_t t = 0; t < L; ++t) {
        const std::int64_t ty = t / gw, tx = t % gw;
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t py = 0; py < p; ++py)
                for (std::int64_t px = 0; px < p; ++px)
                    o[t * D + (c * p + py) * p + px] = d[(c * H + ty * p + py) * W + tx * p + px];
    }
    if (detail::trace_active<Real>({&x})) {
        detail::record<Real>("patchify", out, [x, out, C, H, W, p, gw, L, D]() {
            const auto g = out.grad();
            auto gx = x.grad();
            for (std::int64_t t = 0; t < L; ++t) {
                const std::int64_t ty = t / gw, tx = t % gw;
                for (std::int64_t c = 0; c < C; ++c)
                    for (std::int64_t py = 0; py < p; ++py)
                        for (std::int64_t px = 0; px < p; ++px)
                            gx[(c * H + ty * p + py) * W + tx * p + px] += g[t * D + (c * p + py) * p + px];
            }
        });
    }
    return out;
}

}  // namespace aacp

#pragma once

// Primitive layer math: convolution (standard / grouped / depthwise) via
// im2col, batch normalization, the three activations, and softmax
// cross-entropy. Forward and backward are exact pairs; every reduction runs
// in a fixed order so results are bitwise reproducible, and the im2col GEMM
// accumulates taps in the same (channel, ky, kx) order a direct loop would.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymmkit/tensor.hpp"
#include "asymmkit/threading.hpp"

namespace asymmkit {

struct ConvParams {
    int in_c = 0;
    int out_c = 0;
    int k = 1;
    int stride = 1;
    int pad = 0;
    int groups = 1;

    void validate() const {
        if (in_c <= 0 || out_c <= 0 || k <= 0 || stride <= 0 || pad < 0 || groups <= 0)
            throw std::invalid_argument("conv: non-positive parameter");
        if (in_c % groups != 0 || out_c % groups != 0)
            throw std::invalid_argument("conv: channels not divisible by groups");
    }
    int out_dim(int in) const { return (in + 2 * pad - k) / stride + 1; }
    bool depthwise() const { return groups == in_c && in_c == out_c; }
    bool pointwise() const { return k == 1 && groups == 1; }
    Shape weight_shape() const { return Shape{out_c, in_c / groups, k, k}; }
};

namespace detail {

// col layout: rows = (in_c * k * k), row index ic*k*k + ky*k + kx; columns =
// (oh * ow). Rows for one group are contiguous, so the per-group GEMM can use
// a row slice. Padding is materialized as zeros.
template <typename T>
void im2col(const Tensor<T>& x, int n, const ConvParams& cp, int oh, int ow, T* col) {
    const Shape xs = x.shape();
    const int k = cp.k;
    for (int ic = 0; ic < xs.c; ++ic)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) *
                                   (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * cp.stride - cp.pad + ky;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * cp.stride - cp.pad + kx;
                        row[static_cast<std::size_t>(oy) * ow + ox] =
                            (iy >= 0 && iy < xs.h && ix >= 0 && ix < xs.w)
                                ? x.at(n, ic, iy, ix)
                                : T(0);
                    }
                }
            }
}

// Scatter-add of a col buffer back into an NCHW gradient image.
template <typename T>
void col2im_add(const T* col, int n, const ConvParams& cp, int oh, int ow, Tensor<T>& gx) {
    const Shape xs = gx.shape();
    const int k = cp.k;
    for (int ic = 0; ic < xs.c; ++ic)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + (static_cast<std::size_t>(ic) * k * k + ky * k + kx) *
                                         (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * cp.stride - cp.pad + ky;
                    if (iy < 0 || iy >= xs.h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * cp.stride - cp.pad + kx;
                        if (ix < 0 || ix >= xs.w) continue;
                        gx.at(n, ic, iy, ix) += row[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
            }
}

// C[M x N] (+)= A[M x K] * B[K x N]; k is the inner summation index, ascending,
// so the accumulation order per output element never depends on tiling or on
// the parallel split over rows.
template <typename T>
void gemm(const T* A, const T* B, T* C, int M, int K, int N, bool accumulate) {
    parallel_for(M, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            T* crow = C + i * N;
            if (!accumulate)
                for (int j = 0; j < N; ++j) crow[j] = T(0);
            const T* arow = A + i * K;
            for (int k = 0; k < K; ++k) {
                const T a = arow[k];
                const T* brow = B + static_cast<std::size_t>(k) * N;
                for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

// C[M x K] += A[M x N] * B[K x N]^T  (dot products along N).
template <typename T>
void gemm_abT_acc(const T* A, const T* B, T* C, int M, int N, int K) {
    parallel_for(M, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            const T* arow = A + i * N;
            T* crow = C + i * K;
            for (int k = 0; k < K; ++k) {
                const T* brow = B + static_cast<std::size_t>(k) * N;
                T acc = T(0);
                for (int j = 0; j < N; ++j) acc += arow[j] * brow[j];
                crow[k] += acc;
            }
        }
    });
}

}  // namespace detail

// Bias-free convolution (BN supplies the shift everywhere; the classifier's
// bias is added by its own layer).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& cp) {
    cp.validate();
    const Shape xs = x.shape();
    if (xs.c != cp.in_c)
        throw std::invalid_argument("conv: input has " + std::to_string(xs.c) +
                                    " channels, expected " + std::to_string(cp.in_c));
    if (!(w.shape() == cp.weight_shape()))
        throw std::invalid_argument("conv: weight shape " + w.shape().str() + " != " +
                                    cp.weight_shape().str());
    const int oh = cp.out_dim(xs.h), ow = cp.out_dim(xs.w);
    if (oh <= 0 || ow <= 0)
        throw std::invalid_argument("conv: empty output for input " + xs.str());

    Tensor<T> y(Shape{xs.n, cp.out_c, oh, ow});
    const int K = (cp.in_c / cp.groups) * cp.k * cp.k;
    const int N = oh * ow;
    const int cpg_out = cp.out_c / cp.groups;
    std::vector<T> col(static_cast<std::size_t>(cp.in_c) * cp.k * cp.k * N);
    for (int n = 0; n < xs.n; ++n) {
        detail::im2col(x, n, cp, oh, ow, col.data());
        for (int g = 0; g < cp.groups; ++g) {
            const T* A = w.data() + static_cast<std::size_t>(g) * cpg_out * K;
            const T* B = col.data() + static_cast<std::size_t>(g) * K * N;
            T* C = y.data() + (static_cast<std::size_t>(n) * cp.out_c + g * cpg_out) *
                                  static_cast<std::size_t>(N);
            detail::gemm(A, B, C, cpg_out, K, N, /*accumulate=*/false);
        }
    }
    return y;
}

// Returns grad_x; accumulates weight gradient into grad_w (+=), so callers
// can sum over minibatches / multiple uses of shared weights.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvParams& cp,
                          const Tensor<T>& grad_out, Tensor<T>& grad_w) {
    const Shape xs = x.shape();
    const int oh = cp.out_dim(xs.h), ow = cp.out_dim(xs.w);
    if (!(grad_out.shape() == Shape{xs.n, cp.out_c, oh, ow}))
        throw std::invalid_argument("conv backward: grad shape " + grad_out.shape().str());
    if (!(grad_w.shape() == cp.weight_shape()))
        throw std::invalid_argument("conv backward: grad_w shape mismatch");

    Tensor<T> gx(xs);
    const int K = (cp.in_c / cp.groups) * cp.k * cp.k;
    const int N = oh * ow;
    const int cpg_out = cp.out_c / cp.groups;
    std::vector<T> col(static_cast<std::size_t>(cp.in_c) * cp.k * cp.k * N);
    std::vector<T> gcol(col.size());
    std::vector<T> wT(static_cast<std::size_t>(cpg_out) * K);
    for (int n = 0; n < xs.n; ++n) {
        detail::im2col(x, n, cp, oh, ow, col.data());
        for (int g = 0; g < cp.groups; ++g) {
            const T* go = grad_out.data() +
                          (static_cast<std::size_t>(n) * cp.out_c + g * cpg_out) *
                              static_cast<std::size_t>(N);
            const T* wg = w.data() + static_cast<std::size_t>(g) * cpg_out * K;
            // grad_w[oc, r] += sum_j go[oc, j] * col[r, j]
            detail::gemm_abT_acc(go, col.data() + static_cast<std::size_t>(g) * K * N,
                                 grad_w.data() + static_cast<std::size_t>(g) * cpg_out * K,
                                 cpg_out, N, K);
            // gcol[r, j] = sum_oc w[oc, r] * go[oc, j]  (via transposed weights)
            for (int oc = 0; oc < cpg_out; ++oc)
                for (int r = 0; r < K; ++r)
                    wT[static_cast<std::size_t>(r) * cpg_out + oc] =
                        wg[static_cast<std::size_t>(oc) * K + r];
            detail::gemm(wT.data(), go, gcol.data() + static_cast<std::size_t>(g) * K * N,
                         K, cpg_out, N, /*accumulate=*/false);
        }
        detail::col2im_add(gcol.data(), n, cp, oh, ow, gx);
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Batch normalization. Per-channel statistics over (n, h, w); train mode uses
// batch statistics (biased variance) and folds them into the running buffers
// as running = momentum * running + (1 - momentum) * batch.

template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<T> inv_std;  // per channel
    bool train = true;
};

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, bool train,
                            T momentum, T eps, BatchNormCache<T>* cache = nullptr) {
    const Shape xs = x.shape();
    const int C = xs.c;
    if (gamma.shape().c != C || beta.shape().c != C)
        throw std::invalid_argument("batchnorm: channel mismatch");
    const std::int64_t per_c = static_cast<std::int64_t>(xs.n) * xs.h * xs.w;
    if (train && per_c < 2)
        throw std::invalid_argument("batchnorm: train mode needs n*h*w >= 2");

    Tensor<T> y(xs);
    const std::size_t plane = static_cast<std::size_t>(xs.h) * xs.w;
    if (cache) {
        cache->xhat = Tensor<T>(xs);
        cache->inv_std.assign(C, T(0));
        cache->train = train;
    }
    for (int c = 0; c < C; ++c) {
        T mean, inv_std;
        if (train) {
            T sum = T(0);
            for (int n = 0; n < xs.n; ++n) {
                const T* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) sum += p[i];
            }
            mean = sum / static_cast<T>(per_c);
            T ssq = T(0);
            for (int n = 0; n < xs.n; ++n) {
                const T* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const T d = p[i] - mean;
                    ssq += d * d;
                }
            }
            const T var = ssq / static_cast<T>(per_c);
            inv_std = T(1) / std::sqrt(var + eps);
            running_mean.vec()[c] = momentum * running_mean.vec()[c] + (T(1) - momentum) * mean;
            running_var.vec()[c] = momentum * running_var.vec()[c] + (T(1) - momentum) * var;
        } else {
            mean = running_mean.vec()[c];
            inv_std = T(1) / std::sqrt(running_var.vec()[c] + eps);
        }
        const T g = gamma.vec()[c], b = beta.vec()[c];
        for (int n = 0; n < xs.n; ++n) {
            const T* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            T* q = y.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            T* xh = cache ? cache->xhat.data() + (static_cast<std::size_t>(n) * C + c) * plane
                          : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const T h = (p[i] - mean) * inv_std;
                if (xh) xh[i] = h;
                q[i] = g * h + b;
            }
        }
        if (cache) cache->inv_std[c] = inv_std;
    }
    return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& grad_out, const Tensor<T>& gamma,
                             const BatchNormCache<T>& cache, Tensor<T>& grad_gamma,
                             Tensor<T>& grad_beta) {
    const Shape xs = grad_out.shape();
    const int C = xs.c;
    const std::int64_t per_c = static_cast<std::int64_t>(xs.n) * xs.h * xs.w;
    const std::size_t plane = static_cast<std::size_t>(xs.h) * xs.w;
    Tensor<T> gx(xs);
    for (int c = 0; c < C; ++c) {
        T sum_go = T(0), sum_go_xh = T(0);
        for (int n = 0; n < xs.n; ++n) {
            const T* go = grad_out.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            const T* xh = cache.xhat.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_go += go[i];
                sum_go_xh += go[i] * xh[i];
            }
        }
        grad_gamma.vec()[c] += sum_go_xh;
        grad_beta.vec()[c] += sum_go;
        const T g = gamma.vec()[c];
        const T inv_std = cache.inv_std[c];
        if (cache.train) {
            const T inv_m = T(1) / static_cast<T>(per_c);
            for (int n = 0; n < xs.n; ++n) {
                const T* go = grad_out.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                const T* xh = cache.xhat.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                T* q = gx.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    q[i] = g * inv_std * (go[i] - inv_m * sum_go - xh[i] * inv_m * sum_go_xh);
            }
        } else {
            for (int n = 0; n < xs.n; ++n) {
                const T* go = grad_out.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                T* q = gx.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) q[i] = g * inv_std * go[i];
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Activations. Subgradient conventions: relu'(0) = 0; hsigmoid' = 0 at the
// clamp boundaries x = +-3; hswish' takes the right-limit at its kinks
// (0 at x = -3, 1 at x = +3).

enum class ActKind { relu, hswish, hsigmoid };

inline const char* act_name(ActKind a) {
    switch (a) {
        case ActKind::relu: return "relu";
        case ActKind::hswish: return "hswish";
        default: return "hsigmoid";
    }
}

template <typename T>
T act_eval(ActKind kind, T x) {
    switch (kind) {
        case ActKind::relu: return x > T(0) ? x : T(0);
        case ActKind::hsigmoid: {
            T t = x + T(3);
            if (t < T(0)) t = T(0);
            if (t > T(6)) t = T(6);
            return t / T(6);
        }
        case ActKind::hswish: {
            if (x <= T(-3)) return T(0);
            if (x >= T(3)) return x;
            return x * (x + T(3)) / T(6);
        }
    }
    return T(0);
}

template <typename T>
T act_grad(ActKind kind, T x) {
    switch (kind) {
        case ActKind::relu: return x > T(0) ? T(1) : T(0);
        case ActKind::hsigmoid: return (x > T(-3) && x < T(3)) ? T(1) / T(6) : T(0);
        case ActKind::hswish: {
            if (x < T(-3)) return T(0);
            if (x >= T(3)) return T(1);
            return (T(2) * x + T(3)) / T(6);
        }
    }
    return T(0);
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& x, ActKind kind) {
    Tensor<T> y = x;
    for (T& v : y.vec()) v = act_eval(kind, v);
    return y;
}

template <typename T>
Tensor<T> activation_backward(const Tensor<T>& x, ActKind kind, const Tensor<T>& grad_out) {
    if (!(x.shape() == grad_out.shape()))
        throw std::invalid_argument("activation backward: shape mismatch");
    Tensor<T> gx(x.shape());
    const T* px = x.data();
    const T* pg = grad_out.data();
    T* po = gx.data();
    for (std::size_t i = 0; i < gx.size(); ++i) po[i] = pg[i] * act_grad(kind, px[i]);
    return gx;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy over logits shaped (n, classes, 1, 1); mean over the
// batch, stabilized by max subtraction. grad = (softmax - onehot) / n.

template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        Tensor<T>* grad_logits = nullptr) {
    const Shape s = logits.shape();
    if (s.h != 1 || s.w != 1)
        throw std::invalid_argument("softmax: logits must be (n, classes, 1, 1)");
    if (static_cast<int>(labels.size()) != s.n)
        throw std::invalid_argument("softmax: label count != batch");
    if (grad_logits) *grad_logits = Tensor<T>(s);
    T loss = T(0);
    std::vector<T> probs(s.c);
    for (int n = 0; n < s.n; ++n) {
        const int label = labels[n];
        if (label < 0 || label >= s.c)
            throw std::invalid_argument("softmax: label " + std::to_string(label) +
                                        " out of range");
        const T* row = logits.data() + static_cast<std::size_t>(n) * s.c;
        T mx = row[0];
        for (int c = 1; c < s.c; ++c) mx = std::max(mx, row[c]);
        T denom = T(0);
        for (int c = 0; c < s.c; ++c) {
            probs[c] = std::exp(row[c] - mx);
            denom += probs[c];
        }
        loss += -(row[label] - mx - std::log(denom));
        if (grad_logits) {
            T* g = grad_logits->data() + static_cast<std::size_t>(n) * s.c;
            for (int c = 0; c < s.c; ++c)
                g[c] = (probs[c] / denom - (c == label ? T(1) : T(0))) / static_cast<T>(s.n);
        }
    }
    return loss / static_cast<T>(s.n);
}

}  // namespace asymmkit

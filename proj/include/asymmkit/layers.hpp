#pragma once

// Stateful layer modules: each owns indices into a ParamStore (created at
// construction, in execution order) plus whatever forward caches its backward
// needs. backward() returns grad wrt the layer input and accumulates (+=)
// into the store's gradient buffers.

#include <string>

#include "asymmkit/ops.hpp"
#include "asymmkit/params.hpp"
#include "asymmkit/tensor.hpp"

namespace asymmkit {

template <typename T>
class Conv2dLayer {
  public:
    Conv2dLayer() = default;
    Conv2dLayer(ParamStore<T>& store, const std::string& prefix, ConvParams cp,
                bool with_bias = false)
        : cp_(cp) {
        cp_.validate();
        w_ = store.add(prefix + ".w", cp_.weight_shape(), /*wd_exempt=*/false);
        if (with_bias)
            b_ = store.add(prefix + ".b", Shape{1, cp_.out_c, 1, 1}, /*wd_exempt=*/true);
    }

    const ConvParams& conv_params() const { return cp_; }
    std::size_t weight_index() const { return w_; }

    Tensor<T> forward(ParamStore<T>& store, const Tensor<T>& x) {
        x_ = x;
        Tensor<T> y = conv2d_forward(x, store[w_].value, cp_);
        if (b_ != npos) {
            const Shape ys = y.shape();
            const std::size_t plane = static_cast<std::size_t>(ys.h) * ys.w;
            const T* b = store[b_].value.data();
            for (int n = 0; n < ys.n; ++n)
                for (int c = 0; c < ys.c; ++c) {
                    T* p = y.data() + (static_cast<std::size_t>(n) * ys.c + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) p[i] += b[c];
                }
        }
        return y;
    }

    Tensor<T> backward(ParamStore<T>& store, const Tensor<T>& grad_out) {
        if (b_ != npos) {
            const Shape gs = grad_out.shape();
            const std::size_t plane = static_cast<std::size_t>(gs.h) * gs.w;
            T* gb = store[b_].grad.data();
            for (int n = 0; n < gs.n; ++n)
                for (int c = 0; c < gs.c; ++c) {
                    const T* p =
                        grad_out.data() + (static_cast<std::size_t>(n) * gs.c + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) gb[c] += p[i];
                }
        }
        return conv2d_backward(x_, store[w_].value, cp_, grad_out, store[w_].grad);
    }

  private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    ConvParams cp_;
    std::size_t w_ = npos;
    std::size_t b_ = npos;
    Tensor<T> x_;
};

template <typename T>
class BatchNormLayer {
  public:
    BatchNormLayer() = default;
    BatchNormLayer(ParamStore<T>& store, const std::string& prefix, int channels, T momentum,
                   T eps)
        : momentum_(momentum), eps_(eps) {
        const Shape s{1, channels, 1, 1};
        gamma_ = store.add(prefix + ".gamma", s, /*wd_exempt=*/true);
        beta_ = store.add(prefix + ".beta", s, /*wd_exempt=*/true);
        rmean_ = store.add(prefix + ".running_mean", s, true, /*buffer=*/true);
        rvar_ = store.add(prefix + ".running_var", s, true, /*buffer=*/true);
        store[gamma_].value.fill(T(1));
        store[rvar_].value.fill(T(1));
    }

    Tensor<T> forward(ParamStore<T>& store, const Tensor<T>& x, bool train) {
        return batchnorm_forward(x, store[gamma_].value, store[beta_].value,
                                 store[rmean_].value, store[rvar_].value, train, momentum_,
                                 eps_, &cache_);
    }

    Tensor<T> backward(ParamStore<T>& store, const Tensor<T>& grad_out) {
        return batchnorm_backward(grad_out, store[gamma_].value, cache_, store[gamma_].grad,
                                  store[beta_].grad);
    }

  private:
    T momentum_ = T(0.9);
    T eps_ = T(1e-5);
    std::size_t gamma_ = 0, beta_ = 0, rmean_ = 0, rvar_ = 0;
    BatchNormCache<T> cache_;
};

template <typename T>
class ActivationLayer {
  public:
    ActivationLayer() = default;
    explicit ActivationLayer(ActKind kind) : kind_(kind) {}

    Tensor<T> forward(const Tensor<T>& x) {
        x_ = x;
        return activation_forward(x, kind_);
    }
    Tensor<T> backward(const Tensor<T>& grad_out) {
        return activation_backward(x_, kind_, grad_out);
    }

  private:
    ActKind kind_ = ActKind::relu;
    Tensor<T> x_;
};

// Squeeze-and-excite: global pool -> 1x1 reduce -> relu -> 1x1 expand ->
// hsigmoid -> channelwise scale. Both 1x1 maps are bias-free.
template <typename T>
class SqueezeExciteLayer {
  public:
    SqueezeExciteLayer() = default;
    SqueezeExciteLayer(ParamStore<T>& store, const std::string& prefix, int channels, int mid)
        : channels_(channels),
          reduce_(store, prefix + ".reduce", ConvParams{channels, mid, 1, 1, 0, 1}),
          expand_(store, prefix + ".expand", ConvParams{mid, channels, 1, 1, 0, 1}) {}

    Tensor<T> forward(ParamStore<T>& store, const Tensor<T>& x) {
        x_ = x;
        pooled_ = global_avg_pool(x);
        Tensor<T> u = reduce_.forward(store, pooled_);
        u_ = u;
        Tensor<T> v = expand_.forward(store, activation_forward(u, ActKind::relu));
        v_ = v;
        gate_ = activation_forward(v, ActKind::hsigmoid);

        const Shape s = x.shape();
        Tensor<T> y(s);
        const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const T g = gate_.at(n, c, 0, 0);
                const T* p = x.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                T* q = y.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) q[i] = p[i] * g;
            }
        return y;
    }

    Tensor<T> backward(ParamStore<T>& store, const Tensor<T>& grad_out) {
        const Shape s = x_.shape();
        const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;

        // Direct term through the scaling, plus the per-channel gate gradient.
        Tensor<T> gx(s);
        Tensor<T> dgate(Shape{s.n, s.c, 1, 1});
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const T g = gate_.at(n, c, 0, 0);
                const T* go = grad_out.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                const T* px = x_.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                T* q = gx.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                T acc = T(0);
                for (std::size_t i = 0; i < plane; ++i) {
                    q[i] = go[i] * g;
                    acc += go[i] * px[i];
                }
                dgate.at(n, c, 0, 0) = acc;
            }

        Tensor<T> dv = activation_backward(v_, ActKind::hsigmoid, dgate);
        Tensor<T> dur = expand_.backward(store, dv);
        Tensor<T> du = activation_backward(u_, ActKind::relu, dur);
        Tensor<T> dpool = reduce_.backward(store, du);

        // Spread the pooled gradient evenly back over (h, w).
        const T inv = T(1) / static_cast<T>(plane);
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const T d = dpool.at(n, c, 0, 0) * inv;
                T* q = gx.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) q[i] += d;
            }
        return gx;
    }

  private:
    int channels_ = 0;
    Conv2dLayer<T> reduce_, expand_;
    Tensor<T> x_, pooled_, u_, v_, gate_;
};

}  // namespace asymmkit

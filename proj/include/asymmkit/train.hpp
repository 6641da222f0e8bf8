#pragma once

// SGD with momentum and weight decay, the warmup + cosine schedule, the
// finite-difference gradient checker, and the toy training loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "asymmkit/arch.hpp"
#include "asymmkit/data.hpp"
#include "asymmkit/ops.hpp"
#include "asymmkit/params.hpp"

namespace asymmkit {

struct TrainConfig {
    double lr = 0.05;  // toy-scale default; full-scale recipes use far larger
    double momentum = 0.9;
    double weight_decay = 3e-5;
    int epochs = 125;
    int warmup_epochs = 5;
    int batch = 16;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(lr >= 0) || !(momentum >= 0) || !(weight_decay >= 0))
            throw std::invalid_argument("train config: negative hyperparameter");
        if (epochs <= 0 || batch <= 0 || warmup_epochs < 0 || warmup_epochs > epochs)
            throw std::invalid_argument("train config: need 0 <= warmup <= epochs, batch > 0");
    }
};

// Linear warmup from 0 to base over [0, warmup_steps], then cosine decay to 0
// over the remainder. Continuous at the junction (both sides equal base).
inline double lr_at(std::int64_t step, std::int64_t total_steps, std::int64_t warmup_steps,
                    double base) {
    if (step < 0 || step > total_steps) throw std::invalid_argument("lr_at: step out of range");
    if (warmup_steps > 0 && step < warmup_steps)
        return base * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const std::int64_t span = total_steps - warmup_steps;
    const double progress =
        span > 0 ? static_cast<double>(step - warmup_steps) / static_cast<double>(span) : 1.0;
    return base * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// v <- m*v + g + wd*w (decay skipped for exempt entries: BN affine, biases);
// w <- w - lr*v. Gradients are zeroed afterwards.
template <typename T>
void sgd_step(ParamStore<T>& store, T lr, T momentum, T weight_decay) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        ParamEntry<T>& e = store[i];
        if (e.buffer) continue;
        const T wd = e.wd_exempt ? T(0) : weight_decay;
        T* w = e.value.data();
        T* g = e.grad.data();
        T* v = e.momentum.data();
        for (std::size_t j = 0; j < e.value.size(); ++j) {
            v[j] = momentum * v[j] + g[j] + wd * w[j];
            w[j] -= lr * v[j];
            g[j] = T(0);
        }
    }
}

// Fan-in-scaled normal init for every ".w" entry; identical rule to
// Network::init_params so standalone blocks can be seeded the same way.
template <typename T>
void he_init(ParamStore<T>& store, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < store.size(); ++i) {
        ParamEntry<T>& e = store[i];
        if (e.buffer || e.name.size() < 2 || e.name.rfind(".w") != e.name.size() - 2) continue;
        const Shape ws = e.value.shape();
        const double std_dev = std::sqrt(2.0 / (static_cast<double>(ws.c) * ws.h * ws.w));
        for (T& v : e.value.vec()) v = static_cast<T>(rng.normal(0.0, std_dev));
    }
}

// Raised when a forward/loss evaluation produces NaN/Inf (maps to the CLI's
// numeric-failure exit code, distinct from usage errors).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wraps a single block as a checkable model (own store + Network-like API).
template <typename T>
class BlockHarness {
  public:
    BlockHarness(const BlockSpec& spec, int c_in) : block_(store_, "block00", spec, c_in) {}

    ParamStore<T>& params() { return store_; }
    Tensor<T> forward(const Tensor<T>& x, bool train) { return block_.forward(store_, x, train); }
    Tensor<T> backward(const Tensor<T>& g) { return block_.backward(store_, g); }
    Block<T>& block() { return block_; }

  private:
    ParamStore<T> store_;
    Block<T> block_;
};

// Single-op models with the same interface, for op-level checks.
template <typename T>
class ConvHarness {
  public:
    explicit ConvHarness(ConvParams cp, bool with_bias = false)
        : conv_(store_, "conv", cp, with_bias) {}
    ParamStore<T>& params() { return store_; }
    Tensor<T> forward(const Tensor<T>& x, bool) { return conv_.forward(store_, x); }
    Tensor<T> backward(const Tensor<T>& g) { return conv_.backward(store_, g); }

  private:
    ParamStore<T> store_;
    Conv2dLayer<T> conv_;
};

template <typename T>
class BatchNormHarness {
  public:
    explicit BatchNormHarness(int channels) : bn_(store_, "bn", channels, T(0.9), T(1e-5)) {}
    ParamStore<T>& params() { return store_; }
    Tensor<T> forward(const Tensor<T>& x, bool train) { return bn_.forward(store_, x, train); }
    Tensor<T> backward(const Tensor<T>& g) { return bn_.backward(store_, g); }

  private:
    ParamStore<T> store_;
    BatchNormLayer<T> bn_;
};

template <typename T>
class ActHarness {
  public:
    explicit ActHarness(ActKind kind) : act_(kind) {}
    ParamStore<T>& params() { return store_; }  // empty: input gradients only
    Tensor<T> forward(const Tensor<T>& x, bool) { return act_.forward(x); }
    Tensor<T> backward(const Tensor<T>& g) { return act_.backward(g); }

  private:
    ParamStore<T> store_;
    ActivationLayer<T> act_;
};

template <typename T>
class SeHarness {
  public:
    SeHarness(int channels, int mid) : se_(store_, "se", channels, mid) {}
    ParamStore<T>& params() { return store_; }
    Tensor<T> forward(const Tensor<T>& x, bool) { return se_.forward(store_, x); }
    Tensor<T> backward(const Tensor<T>& g) { return se_.backward(store_, g); }

  private:
    ParamStore<T> store_;
    SqueezeExciteLayer<T> se_;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int params_checked = 0;
    int inputs_checked = 0;
};

// Central finite differences against the analytic backward, on a scalar loss
// L = sum(y * P) with P a fixed random projection. Checks a random sample of
// parameter coordinates and input coordinates. BN runs in train mode (batch
// statistics differentiate like everything else), so the input batch must
// carry at least two samples.
template <typename Model, typename T>
GradCheckReport gradcheck(Model& model, Shape input_shape, std::uint64_t seed,
                          int param_coords = 100, int input_coords = 50, T eps = T(1e-5)) {
    static_assert(sizeof(T) == 8, "gradcheck needs float-64 headroom");
    Rng rng(seed);
    Tensor<T> x(input_shape);
    for (T& v : x.vec()) v = static_cast<T>(rng.normal());

    Tensor<T> y = model.forward(x, true);
    Tensor<T> proj(y.shape());
    for (T& v : proj.vec()) v = static_cast<T>(rng.normal());

    auto loss = [&]() {
        const Tensor<T> out = model.forward(x, true);
        const T* a = out.data();
        const T* b = proj.data();
        T acc = T(0);
        for (std::size_t i = 0; i < out.size(); ++i) acc += a[i] * b[i];
        if (!std::isfinite(static_cast<double>(acc)))
            throw numeric_error("gradcheck: non-finite loss");
        return acc;
    };

    ParamStore<T>& store = model.params();
    store.zero_grads();
    model.forward(x, true);
    Tensor<T> gx = model.backward(proj);

    // Snapshot analytic gradients before the FD evaluations overwrite caches.
    std::vector<Tensor<T>> param_grads;
    param_grads.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) param_grads.push_back(store[i].grad);

    GradCheckReport rep;
    auto record = [&](T analytic, T fd) {
        const double ga = static_cast<double>(analytic), gf = static_cast<double>(fd);
        const double denom = std::max({1.0, std::abs(ga), std::abs(gf)});
        rep.max_rel_err = std::max(rep.max_rel_err, std::abs(ga - gf) / denom);
    };

    std::vector<std::size_t> trainable;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < store.size(); ++i)
        if (!store[i].buffer) {
            trainable.push_back(i);
            total += static_cast<std::int64_t>(store[i].value.size());
        }
    const int n_param = static_cast<int>(std::min<std::int64_t>(param_coords, total));
    for (int t = 0; t < n_param; ++t) {
        std::int64_t flat = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
        std::size_t ei = 0;
        for (std::size_t i : trainable) {
            if (flat < static_cast<std::int64_t>(store[i].value.size())) {
                ei = i;
                break;
            }
            flat -= static_cast<std::int64_t>(store[i].value.size());
        }
        T& w = store[ei].value.vec()[static_cast<std::size_t>(flat)];
        const T keep = w;
        w = keep + eps;
        const T lp = loss();
        w = keep - eps;
        const T lm = loss();
        w = keep;
        record(param_grads[ei].vec()[static_cast<std::size_t>(flat)], (lp - lm) / (2 * eps));
        ++rep.params_checked;
    }

    const int n_input = static_cast<int>(
        std::min<std::int64_t>(input_coords, static_cast<std::int64_t>(x.size())));
    for (int t = 0; t < n_input; ++t) {
        const std::size_t idx = static_cast<std::size_t>(rng.below(x.size()));
        T& v = x.vec()[idx];
        const T keep = v;
        v = keep + eps;
        const T lp = loss();
        v = keep - eps;
        const T lm = loss();
        v = keep;
        record(gx.vec()[idx], (lp - lm) / (2 * eps));
        ++rep.inputs_checked;
    }
    return rep;
}

// Softmax cross-entropy is its own scalar loss, so it gets a dedicated check:
// FD on the loss directly, against the returned logit gradient.
inline GradCheckReport gradcheck_softmax(int n, int classes, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<double> logits(Shape{n, classes, 1, 1});
    for (double& v : logits.vec()) v = rng.normal();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.below(classes));

    Tensor<double> grad;
    softmax_cross_entropy(logits, labels, &grad);
    const double eps = 1e-5;
    GradCheckReport rep;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double& v = logits.vec()[i];
        const double keep = v;
        v = keep + eps;
        const double lp = softmax_cross_entropy<double>(logits, labels);
        v = keep - eps;
        const double lm = softmax_cross_entropy<double>(logits, labels);
        v = keep;
        const double fd = (lp - lm) / (2 * eps);
        const double ga = grad.vec()[i];
        rep.max_rel_err =
            std::max(rep.max_rel_err, std::abs(ga - fd) / std::max({1.0, std::abs(ga), std::abs(fd)}));
        ++rep.inputs_checked;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Toy training loop. Deterministic: fixed data order (no shuffling, no
// augmentation), batch count = floor(n / batch) per epoch, accuracy evaluated
// in infer mode at each epoch end.

struct TrainResult {
    double final_loss = 0.0;
    double final_acc = 0.0;
    std::int64_t steps = 0;
};

template <typename T>
double evaluate(Network<T>& net, const Dataset& data, int batch) {
    int correct = 0;
    for (int start = 0; start < data.n; start += batch) {
        const int count = std::min(batch, data.n - start);
        Tensor<T> logits = net.forward(data.batch<T>(start, count), /*train=*/false);
        const std::vector<int> labels = data.batch_labels(start, count);
        for (int i = 0; i < count; ++i) {
            const T* row = logits.data() + static_cast<std::size_t>(i) * logits.shape().c;
            int best = 0;
            for (int c = 1; c < logits.shape().c; ++c)
                if (row[c] > row[best]) best = c;
            if (best == labels[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / data.n;
}

template <typename T>
TrainResult train_toy(Network<T>& net, const Dataset& data, const TrainConfig& cfg,
                      std::ostream* log = nullptr, std::int64_t max_steps = -1) {
    cfg.validate();
    if (data.n == 0) throw std::invalid_argument("train: empty dataset");
    if (data.classes > net.spec().head.classes)
        throw std::invalid_argument("train: dataset has more classes than the head");
    const int batch = std::min(cfg.batch, data.n);
    const int steps_per_epoch = data.n / batch;
    const std::int64_t total_steps = static_cast<std::int64_t>(cfg.epochs) * steps_per_epoch;
    const std::int64_t warmup_steps =
        static_cast<std::int64_t>(cfg.warmup_epochs) * steps_per_epoch;
    const std::int64_t run_steps = max_steps >= 0 ? std::min(max_steps, total_steps) : total_steps;

    TrainResult res;
    std::int64_t step = 0;
    double last_loss = 0.0;
    while (step < run_steps) {
        for (int b = 0; b < steps_per_epoch && step < run_steps; ++b, ++step) {
            const double lr = lr_at(step, total_steps, warmup_steps, cfg.lr);
            Tensor<T> logits = net.forward(data.batch<T>(b * batch, batch), /*train=*/true);
            Tensor<T> grad;
            const T loss =
                softmax_cross_entropy(logits, data.batch_labels(b * batch, batch), &grad);
            if (!std::isfinite(static_cast<double>(loss)))
                throw numeric_error("train: non-finite loss at step " + std::to_string(step));
            net.backward(grad);
            sgd_step(net.params(), static_cast<T>(lr), static_cast<T>(cfg.momentum),
                     static_cast<T>(cfg.weight_decay));
            last_loss = static_cast<double>(loss);
            if (log)
                *log << "step=" << step << " lr=" << std::setprecision(9) << lr
                     << " loss=" << std::setprecision(9) << last_loss << "\n";
        }
        const double acc = evaluate(net, data, batch);
        res.final_acc = acc;
        if (log)
            *log << "step=" << step << " lr=" << std::setprecision(9)
                 << lr_at(step, total_steps, warmup_steps, cfg.lr)
                 << " loss=" << std::setprecision(9) << last_loss
                 << " acc=" << std::setprecision(6) << acc << "\n";
    }
    res.final_loss = last_loss;
    res.steps = step;
    return res;
}

}  // namespace asymmkit

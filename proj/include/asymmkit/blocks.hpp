#pragma once

// The bottleneck family. One Block class covers all three kinds because they
// share a skeleton - [pointwise expand] -> depthwise -> [SE] -> pointwise
// project -> [residual] - and differ only in how the depthwise input is
// assembled:
//
//   mmblock:  expand to p channels, DW on p
//   pruned:   expand to p - c_in, concat(x, generated) -> DW on p
//   asymm:    expand to p - r*c_in, concat(2r copies of x, generated)
//             -> DW on p + r*c_in
//
// The asymmetry rate r is clamped to 0 whenever r*c_in >= p (no room to trade
// generated channels for reused ones), and an asymm block with effective rate
// 0 runs the exact mmblock code path, so the degeneration is bitwise.
//
// `dwsep` is the plain depthwise-separable pair (DW+PW, both with BN and the
// row nonlinearity) used by the V1-style reference net; it shares the row
// format but none of the bottleneck machinery.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymmkit/layers.hpp"

namespace asymmkit {

enum class BlockKind { mmblock, pruned, asymm, dwsep };

inline const char* block_kind_name(BlockKind k) {
    switch (k) {
        case BlockKind::mmblock: return "mmblock";
        case BlockKind::pruned: return "pruned";
        case BlockKind::asymm: return "asymm";
        default: return "dwsep";
    }
}

struct BlockSpec {
    BlockKind kind = BlockKind::mmblock;
    int k = 3;        // depthwise kernel
    int p = 0;        // expanded width (total, pre-asymmetry)
    int c_out = 0;    // output channels
    int s = 1;        // depthwise stride
    bool se = false;  // squeeze-excite after the depthwise stage
    ActKind nl = ActKind::relu;
    int r = 0;        // asymmetry rate (asymm kind only)
};

// Divisible-by-8 rounding used for derived widths (SE bottleneck): round to
// the nearest multiple, never below 8, bumped up if rounding lost > 10%.
inline int make_divisible(int v, int divisor = 8) {
    int nv = (v + divisor / 2) / divisor * divisor;
    if (nv < divisor) nv = divisor;
    if (nv < v - v / 10) nv += divisor;  // i.e. nv < 0.9 * v
    return nv;
}

// Channel bookkeeping for one block. This is the single source of truth:
// both the layer builder below and the static cost analyzer call it, which
// is what makes "analyzer params == built param count" hold by construction.
struct BlockWidths {
    int c_in = 0;
    int r_eff = 0;     // clamped asymmetry rate
    int gen = 0;       // first-PW output channels (0 = first PW skipped)
    int dw_width = 0;  // depthwise channel count
    int se_mid = 0;    // SE bottleneck width (valid when spec.se)
    bool residual = false;
};

inline BlockWidths resolve_widths(const BlockSpec& spec, int c_in) {
    if (c_in <= 0 || spec.c_out <= 0 || spec.p <= 0 || spec.s <= 0 || spec.k <= 0)
        throw std::invalid_argument("block: non-positive dimension");
    BlockWidths w;
    w.c_in = c_in;
    switch (spec.kind) {
        case BlockKind::dwsep:
            w.gen = 0;
            w.dw_width = c_in;
            return w;
        case BlockKind::pruned:
            if (spec.p <= c_in)
                throw std::invalid_argument("pruned block: p <= c_in, no room to prune");
            w.gen = spec.p - c_in;
            w.dw_width = spec.p;
            break;
        case BlockKind::asymm:
            w.r_eff = (spec.r > 0 && spec.r * c_in < spec.p) ? spec.r : 0;
            w.gen = spec.p - w.r_eff * c_in;
            w.dw_width = spec.p + w.r_eff * c_in;
            if (w.r_eff == 0 && w.gen == c_in) w.gen = 0;  // p == c_in: no expansion
            break;
        case BlockKind::mmblock:
            w.gen = (spec.p == c_in) ? 0 : spec.p;
            w.dw_width = spec.p;
            break;
    }
    if (spec.se) w.se_mid = make_divisible(w.dw_width / 4);
    w.residual = (spec.s == 1 && c_in == spec.c_out);
    return w;
}

template <typename T>
class Block {
  public:
    Block() = default;
    Block(ParamStore<T>& store, const std::string& prefix, const BlockSpec& spec, int c_in,
          T bn_momentum = T(0.9), T bn_eps = T(1e-5))
        : spec_(spec), w_(resolve_widths(spec, c_in)) {
        if (spec.kind == BlockKind::dwsep) {
            dw_ = Conv2dLayer<T>(store, prefix + ".dw",
                                 ConvParams{c_in, c_in, spec.k, spec.s, spec.k / 2, c_in});
            dw_bn_ = BatchNormLayer<T>(store, prefix + ".dw_bn", c_in, bn_momentum, bn_eps);
            dw_act_ = ActivationLayer<T>(spec.nl);
            pw2_ = Conv2dLayer<T>(store, prefix + ".pw",
                                  ConvParams{c_in, spec.c_out, 1, 1, 0, 1});
            pw2_bn_ =
                BatchNormLayer<T>(store, prefix + ".pw_bn", spec.c_out, bn_momentum, bn_eps);
            pw2_act_ = ActivationLayer<T>(spec.nl);
            return;
        }
        if (w_.gen > 0) {
            pw1_ = Conv2dLayer<T>(store, prefix + ".pw1", ConvParams{c_in, w_.gen, 1, 1, 0, 1});
            pw1_bn_ = BatchNormLayer<T>(store, prefix + ".pw1_bn", w_.gen, bn_momentum, bn_eps);
            pw1_act_ = ActivationLayer<T>(spec.nl);
        }
        dw_ = Conv2dLayer<T>(store, prefix + ".dw",
                             ConvParams{w_.dw_width, w_.dw_width, spec.k, spec.s, spec.k / 2,
                                        w_.dw_width});
        dw_bn_ = BatchNormLayer<T>(store, prefix + ".dw_bn", w_.dw_width, bn_momentum, bn_eps);
        dw_act_ = ActivationLayer<T>(spec.nl);
        if (spec.se)
            se_ = SqueezeExciteLayer<T>(store, prefix + ".se", w_.dw_width, w_.se_mid);
        pw2_ = Conv2dLayer<T>(store, prefix + ".pw2",
                              ConvParams{w_.dw_width, spec.c_out, 1, 1, 0, 1});
        pw2_bn_ = BatchNormLayer<T>(store, prefix + ".pw2_bn", spec.c_out, bn_momentum, bn_eps);
        // pw2 is linear (no activation): the projection back to the bottleneck
        // width stays un-rectified so the residual sum mixes signed features.
    }

    const BlockSpec& spec() const { return spec_; }
    const BlockWidths& widths() const { return w_; }

    Tensor<T> forward(ParamStore<T>& store, const Tensor<T>& x, bool train) {
        if (x.shape().c != w_.c_in)
            throw std::invalid_argument("block: input channels " +
                                        std::to_string(x.shape().c) + ", expected " +
                                        std::to_string(w_.c_in));
        if (spec_.kind == BlockKind::dwsep) {
            Tensor<T> t = dw_act_.forward(dw_bn_.forward(store, dw_.forward(store, x), train));
            return pw2_act_.forward(pw2_bn_.forward(store, pw2_.forward(store, t), train));
        }
        x_ = x;
        Tensor<T> generated;
        if (w_.gen > 0)
            generated =
                pw1_act_.forward(pw1_bn_.forward(store, pw1_.forward(store, x), train));

        Tensor<T> dw_in;
        if (spec_.kind == BlockKind::asymm && w_.r_eff > 0) {
            std::vector<const Tensor<T>*> parts;
            for (int i = 0; i < 2 * w_.r_eff; ++i) parts.push_back(&x);
            parts.push_back(&generated);
            dw_in = concat_channels(parts);
        } else if (spec_.kind == BlockKind::pruned) {
            dw_in = concat_channels<T>({&x, &generated});
        } else {
            dw_in = (w_.gen > 0) ? std::move(generated) : x;
        }

        Tensor<T> d = dw_act_.forward(dw_bn_.forward(store, dw_.forward(store, dw_in), train));
        if (spec_.se) d = se_.forward(store, d);
        Tensor<T> y = pw2_bn_.forward(store, pw2_.forward(store, d), train);
        if (w_.residual) y = add(y, x);
        return y;
    }

    Tensor<T> backward(ParamStore<T>& store, const Tensor<T>& grad_out) {
        if (spec_.kind == BlockKind::dwsep) {
            Tensor<T> g = pw2_.backward(store, pw2_bn_.backward(store, pw2_act_.backward(grad_out)));
            return dw_.backward(store, dw_bn_.backward(store, dw_act_.backward(g)));
        }
        Tensor<T> g = pw2_.backward(store, pw2_bn_.backward(store, grad_out));
        if (spec_.se) g = se_.backward(store, g);
        Tensor<T> g_dwin = dw_.backward(store, dw_bn_.backward(store, dw_act_.backward(g)));

        Tensor<T> gx(x_.shape());
        Tensor<T> g_gen;
        if (spec_.kind == BlockKind::asymm && w_.r_eff > 0) {
            // Split the concat gradient: 2*r_eff leading x-copies sum into
            // grad_x, the tail drives the first-PW path.
            for (int i = 0; i < 2 * w_.r_eff; ++i)
                gx = add(gx, slice_channels(g_dwin, i * w_.c_in, (i + 1) * w_.c_in));
            g_gen = slice_channels(g_dwin, 2 * w_.r_eff * w_.c_in, w_.dw_width);
        } else if (spec_.kind == BlockKind::pruned) {
            gx = add(gx, slice_channels(g_dwin, 0, w_.c_in));
            g_gen = slice_channels(g_dwin, w_.c_in, w_.dw_width);
        } else if (w_.gen > 0) {
            g_gen = std::move(g_dwin);
        } else {
            gx = add(gx, g_dwin);
        }

        if (w_.gen > 0)
            gx = add(gx, pw1_.backward(store, pw1_bn_.backward(
                                                  store, pw1_act_.backward(g_gen))));
        if (w_.residual) gx = add(gx, grad_out);
        return gx;
    }

  private:
    BlockSpec spec_;
    BlockWidths w_;
    Conv2dLayer<T> pw1_, dw_, pw2_;
    BatchNormLayer<T> pw1_bn_, dw_bn_, pw2_bn_;
    ActivationLayer<T> pw1_act_, dw_act_, pw2_act_;  // pw2_act_ used by dwsep only
    SqueezeExciteLayer<T> se_;
    Tensor<T> x_;
};

}  // namespace asymmkit

#include <catch2/catch_amalgamated.hpp>

#include "asymmkit/blocks.hpp"
#include "asymmkit/cost.hpp"
#include "asymmkit/rng.hpp"
#include "asymmkit/train.hpp"

using namespace asymmkit;

namespace {

Tensor<double> randn(Shape s, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<double> t(s);
    for (auto& v : t.vec()) v = rng.normal();
    return t;
}

// Train-mode BN through the free function, with scratch running buffers so
// the block's own statistics are untouched.
Tensor<double> bn_train(const Tensor<double>& x, const Tensor<double>& gamma,
                        const Tensor<double>& beta) {
    Tensor<double> rm(Shape{1, x.shape().c, 1, 1});
    Tensor<double> rv(Shape{1, x.shape().c, 1, 1});
    rv.fill(1.0);
    BatchNormCache<double> cache;
    return batchnorm_forward(x, gamma, beta, rm, rv, /*train=*/true, 0.9, 1e-5, &cache);
}

}  // namespace

TEST_CASE("channel bookkeeping per block kind", "[blocks]") {
    SECTION("asymm splits expansion into reused and generated channels") {
        BlockSpec s{BlockKind::asymm, 3, 64, 16, 1, false, ActKind::relu, 1};
        BlockWidths w = resolve_widths(s, 16);
        REQUIRE(w.r_eff == 1);
        REQUIRE(w.gen == 48);       // p - r*c_in
        REQUIRE(w.dw_width == 80);  // p + r*c_in
        REQUIRE(w.residual);
    }
    SECTION("rate clamps to zero when r*c_in leaves no generated channels") {
        BlockSpec s{BlockKind::asymm, 3, 64, 40, 1, false, ActKind::relu, 2};
        BlockWidths w = resolve_widths(s, 40);  // 2*40 >= 64
        REQUIRE(w.r_eff == 0);
        REQUIRE(w.gen == 64);
        REQUIRE(w.dw_width == 64);
    }
    SECTION("clamp boundary is strict: r*c_in == p clamps") {
        BlockSpec s{BlockKind::asymm, 3, 24, 12, 1, false, ActKind::relu, 2};
        REQUIRE(resolve_widths(s, 12).r_eff == 0);  // 2*12 == 24
        s.r = 1;
        BlockWidths w = resolve_widths(s, 12);  // 1*12 < 24
        REQUIRE(w.r_eff == 1);
        REQUIRE(w.dw_width == 36);
    }
    SECTION("expansion ratio 1 skips the first pointwise") {
        BlockSpec s{BlockKind::asymm, 3, 16, 16, 2, false, ActKind::relu, 1};
        BlockWidths w = resolve_widths(s, 16);  // r*c_in == p -> clamp, then p == c_in
        REQUIRE(w.r_eff == 0);
        REQUIRE(w.gen == 0);
        REQUIRE(w.dw_width == 16);
        REQUIRE_FALSE(w.residual);  // stride 2

        BlockSpec m{BlockKind::mmblock, 3, 16, 16, 1, false, ActKind::relu, 0};
        REQUIRE(resolve_widths(m, 16).gen == 0);
    }
    SECTION("pruned keeps the input as the first c_in expanded channels") {
        BlockSpec s{BlockKind::pruned, 3, 24, 16, 1, false, ActKind::relu, 0};
        BlockWidths w = resolve_widths(s, 16);
        REQUIRE(w.gen == 8);
        REQUIRE(w.dw_width == 24);

        s.p = 16;  // nothing left to generate
        REQUIRE_THROWS_AS(resolve_widths(s, 16), std::invalid_argument);
    }
    SECTION("dwsep has no expansion at all") {
        BlockSpec s{BlockKind::dwsep, 3, 32, 64, 1, false, ActKind::relu, 0};
        BlockWidths w = resolve_widths(s, 32);
        REQUIRE(w.gen == 0);
        REQUIRE(w.dw_width == 32);
    }
    SECTION("non-positive dimensions throw") {
        BlockSpec s{BlockKind::mmblock, 3, 24, 16, 1, false, ActKind::relu, 0};
        REQUIRE_THROWS_AS(resolve_widths(s, 0), std::invalid_argument);
        s.c_out = 0;
        REQUIRE_THROWS_AS(resolve_widths(s, 16), std::invalid_argument);
    }
}

TEST_CASE("divisible-by-8 rounding", "[blocks]") {
    REQUIRE(make_divisible(4) == 8);    // clamped to the divisor
    REQUIRE(make_divisible(8) == 8);
    REQUIRE(make_divisible(12) == 16);  // ties round up
    REQUIRE(make_divisible(23) == 24);
    REQUIRE(make_divisible(25) == 24);  // within 10%, keep the rounded value
    REQUIRE(make_divisible(60) == 64);
    REQUIRE(make_divisible(144) == 144);
}

TEST_CASE("squeeze-excite bottleneck width is quarter width, rounded", "[blocks]") {
    BlockSpec wide{BlockKind::mmblock, 3, 240, 80, 1, true, ActKind::hswish, 0};
    REQUIRE(resolve_widths(wide, 40).se_mid == 64);  // 240/4 = 60 -> 64

    BlockSpec narrow{BlockKind::mmblock, 3, 16, 16, 2, true, ActKind::relu, 0};
    REQUIRE(resolve_widths(narrow, 16).se_mid == 8);  // 16/4 = 4 -> floor of 8
}

TEST_CASE("block forward matches a hand-built composition bitwise", "[blocks]") {
    SECTION("inverted residual: pw-bn-act, dw-bn-act, pw-bn, skip") {
        const int c = 8, p = 24;
        BlockHarness<double> h(BlockSpec{BlockKind::mmblock, 3, p, c, 1, false, ActKind::relu, 0},
                               c);
        he_init(h.params(), 101);
        const Tensor<double> x = randn(Shape{2, c, 6, 6}, 102);
        const Tensor<double> got = h.forward(x, /*train=*/true);

        ParamStore<double>& st = h.params();
        auto W = [&](const char* n) -> const Tensor<double>& { return st.at(n).value; };
        Tensor<double> t = conv2d_forward(x, W("block00.pw1.w"), ConvParams{c, p, 1, 1, 0, 1});
        t = bn_train(t, W("block00.pw1_bn.gamma"), W("block00.pw1_bn.beta"));
        t = activation_forward(t, ActKind::relu);
        t = conv2d_forward(t, W("block00.dw.w"), ConvParams{p, p, 3, 1, 1, p});
        t = bn_train(t, W("block00.dw_bn.gamma"), W("block00.dw_bn.beta"));
        t = activation_forward(t, ActKind::relu);
        t = conv2d_forward(t, W("block00.pw2.w"), ConvParams{p, c, 1, 1, 0, 1});
        t = bn_train(t, W("block00.pw2_bn.gamma"), W("block00.pw2_bn.beta"));
        t = add(t, x);

        REQUIRE(got.same_values(t));
    }

    SECTION("asymm rate 1 with SE: two stacked input copies feed the depthwise") {
        const int c = 8, p = 24, gen = p - c, dww = p + c;  // 16 generated, 32 depthwise
        BlockHarness<double> h(BlockSpec{BlockKind::asymm, 3, p, c, 1, true, ActKind::hswish, 1},
                               c);
        he_init(h.params(), 103);
        const Tensor<double> x = randn(Shape{2, c, 6, 6}, 104);
        const Tensor<double> got = h.forward(x, /*train=*/true);

        ParamStore<double>& st = h.params();
        auto W = [&](const char* n) -> const Tensor<double>& { return st.at(n).value; };
        Tensor<double> g = conv2d_forward(x, W("block00.pw1.w"), ConvParams{c, gen, 1, 1, 0, 1});
        g = bn_train(g, W("block00.pw1_bn.gamma"), W("block00.pw1_bn.beta"));
        g = activation_forward(g, ActKind::hswish);

        Tensor<double> d = concat_channels<double>({&x, &x, &g});
        REQUIRE(d.shape().c == dww);
        d = conv2d_forward(d, W("block00.dw.w"), ConvParams{dww, dww, 3, 1, 1, dww});
        d = bn_train(d, W("block00.dw_bn.gamma"), W("block00.dw_bn.beta"));
        d = activation_forward(d, ActKind::hswish);

        // squeeze-excite: pool -> reduce -> relu -> expand -> hsigmoid -> scale
        Tensor<double> u = conv2d_forward(global_avg_pool(d), W("block00.se.reduce.w"),
                                          ConvParams{dww, 8, 1, 1, 0, 1});
        Tensor<double> v = conv2d_forward(activation_forward(u, ActKind::relu),
                                          W("block00.se.expand.w"), ConvParams{8, dww, 1, 1, 0, 1});
        Tensor<double> gate = activation_forward(v, ActKind::hsigmoid);
        for (int n = 0; n < d.shape().n; ++n)
            for (int ch = 0; ch < dww; ++ch)
                for (int y = 0; y < d.shape().h; ++y)
                    for (int xx = 0; xx < d.shape().w; ++xx)
                        d.at(n, ch, y, xx) *= gate.at(n, ch, 0, 0);

        Tensor<double> t = conv2d_forward(d, W("block00.pw2.w"), ConvParams{dww, c, 1, 1, 0, 1});
        t = bn_train(t, W("block00.pw2_bn.gamma"), W("block00.pw2_bn.beta"));
        t = add(t, x);

        REQUIRE(got.same_values(t));
    }
}

TEST_CASE("asymm block at rate 0 IS the inverted residual, bitwise", "[blocks]") {
    const BlockSpec asym{BlockKind::asymm, 3, 24, 8, 1, true, ActKind::hswish, 0};
    const BlockSpec mm{BlockKind::mmblock, 3, 24, 8, 1, true, ActKind::hswish, 0};
    BlockHarness<double> a(asym, 8), b(mm, 8);
    he_init(a.params(), 107);
    REQUIRE(a.params().size() == b.params().size());
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        REQUIRE(a.params()[i].value.shape() == b.params()[i].value.shape());
        b.params()[i].value = a.params()[i].value;
    }

    const Tensor<double> x = randn(Shape{2, 8, 6, 6}, 108);
    Tensor<double> ya = a.forward(x, true), yb = b.forward(x, true);
    REQUIRE(ya.same_values(yb));

    const Tensor<double> g = randn(ya.shape(), 109);
    REQUIRE(a.backward(g).same_values(b.backward(g)));
    for (std::size_t i = 0; i < a.params().size(); ++i)
        REQUIRE(a.params()[i].grad.same_values(b.params()[i].grad));

    REQUIRE(block_madds(asym, 8, 6) == block_madds(mm, 8, 6));
    REQUIRE(a.params().trainable_count() == b.params().trainable_count());
}

TEST_CASE("block output shapes", "[blocks]") {
    SECTION("stride 2 halves odd and even extents alike") {
        BlockHarness<double> h(
            BlockSpec{BlockKind::asymm, 5, 24, 12, 2, false, ActKind::relu, 1}, 8);
        he_init(h.params(), 111);
        REQUIRE((h.forward(randn(Shape{1, 8, 16, 16}, 112), false).shape() ==
                 Shape{1, 12, 8, 8}));
        REQUIRE(
            (h.forward(randn(Shape{1, 8, 7, 7}, 113), false).shape() == Shape{1, 12, 4, 4}));
    }
    SECTION("SE and residual preserve the depthwise output shape") {
        BlockHarness<double> h(
            BlockSpec{BlockKind::pruned, 3, 24, 8, 1, true, ActKind::hswish, 0}, 8);
        he_init(h.params(), 114);
        REQUIRE(
            (h.forward(randn(Shape{2, 8, 9, 9}, 115), true).shape() == Shape{2, 8, 9, 9}));
    }
    SECTION("wrong input channel count throws") {
        BlockHarness<double> h(
            BlockSpec{BlockKind::mmblock, 3, 24, 8, 1, false, ActKind::relu, 0}, 8);
        REQUIRE_THROWS_AS(h.forward(randn(Shape{1, 9, 6, 6}, 116), false),
                          std::invalid_argument);
    }
}

TEST_CASE("residual applies exactly when stride 1 and width preserved", "[blocks]") {
    // With all-zero weights every conv emits zeros and train-mode BN keeps
    // them zero, so the block output is x when the skip exists and 0 when not.
    const Tensor<double> x = randn(Shape{2, 8, 6, 6}, 117);
    auto zero_block_out = [&](int c_out, int s) {
        BlockHarness<double> h(
            BlockSpec{BlockKind::asymm, 3, 24, c_out, s, true, ActKind::hswish, 1}, 8);
        return h.forward(x, /*train=*/true);
    };

    REQUIRE(zero_block_out(8, 1).same_values(x));  // skip active

    Tensor<double> no_skip = zero_block_out(12, 1);  // width change: no skip
    for (double v : no_skip.vec()) REQUIRE(v == 0.0);

    Tensor<double> strided = zero_block_out(8, 2);  // stride: no skip
    REQUIRE((strided.shape() == Shape{2, 8, 3, 3}));
    for (double v : strided.vec()) REQUIRE(v == 0.0);
}

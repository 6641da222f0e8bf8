#pragma once

// Static MAdds/parameter accounting over a NetworkSpec. Uses the exact same
// width resolution as the builder (resolve_widths), so analyzer params equal
// the built ParamStore's trainable count by construction.
//
// Conventions: one MAdd = one multiply-accumulate; a conv costs
// out_h*out_w*out_c*(k*k*in_c/g) MAdds. BN, activations, pooling, and the SE
// gating arithmetic cost zero MAdds, but SE's two 1x1 convs are real convs
// and are counted (as pointwise class, at 1x1 spatial extent). Params are
// conv weights + BN gamma/beta + the classifier bias; BN running statistics
// are buffers, not parameters.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "asymmkit/arch.hpp"

namespace asymmkit {

enum class OpClass { dw, pw, vanilla };

inline const char* op_class_name(OpClass c) {
    switch (c) {
        case OpClass::dw: return "DW";
        case OpClass::pw: return "PW";
        default: return "vanilla";
    }
}

struct CostEntry {
    std::string name;
    OpClass cls = OpClass::pw;
    std::int64_t madds = 0;
    std::int64_t params = 0;  // includes the conv's BN affine params (and bias)
};

// Per-block conv-cost decomposition (SE listed separately).
struct BlockCostSplit {
    std::string name;
    std::int64_t pw1 = 0, dw = 0, pw2 = 0, se = 0;
    std::int64_t total() const { return pw1 + dw + pw2 + se; }
};

struct CostReport {
    std::vector<CostEntry> entries;
    std::vector<BlockCostSplit> blocks;
    std::int64_t total_madds = 0;
    std::int64_t total_params = 0;
    double pct_dw = 0, pct_pw = 0, pct_vanilla = 0;
};

inline std::int64_t conv_madds(int out_h, int out_w, int out_c, int in_c, int k, int groups) {
    return static_cast<std::int64_t>(out_h) * out_w * out_c *
           (static_cast<std::int64_t>(k) * k * (in_c / groups));
}

inline OpClass classify_conv(int k, int in_c, int out_c, int groups) {
    if (groups == in_c && in_c == out_c) return OpClass::dw;
    if (k == 1 && groups == 1) return OpClass::pw;
    return OpClass::vanilla;
}

// Analytic complexity ratio of an asymm block against its inverted-residual
// twin (stride 1, SE ignored): 1 + r*k^2 / (2tc + k^2 t).
inline double complexity_ratio(double t, int r, int c, int k) {
    if (!(t > r) || r < 0 || c < 1 || k < 1)
        throw std::invalid_argument("complexity_ratio: need t > r >= 0, c >= 1, k >= 1");
    return 1.0 + (static_cast<double>(r) * k * k) / (2.0 * t * c + static_cast<double>(k) * k * t);
}

// Conv MAdds of a single block at input spatial size h (square), optionally
// without SE. Shares resolve_widths with the builder.
inline std::int64_t block_madds(const BlockSpec& spec, int c_in, int h, bool count_se = true) {
    const BlockWidths w = resolve_widths(spec, c_in);
    const int oh = spatial_out(h, spec.k, spec.s);
    std::int64_t m = 0;
    if (spec.kind == BlockKind::dwsep) {
        m += conv_madds(oh, oh, c_in, c_in, spec.k, c_in);
        m += conv_madds(oh, oh, spec.c_out, c_in, 1, 1);
        return m;
    }
    if (w.gen > 0) m += conv_madds(h, h, w.gen, c_in, 1, 1);
    m += conv_madds(oh, oh, w.dw_width, w.dw_width, spec.k, w.dw_width);
    if (spec.se && count_se) {
        m += conv_madds(1, 1, w.se_mid, w.dw_width, 1, 1);
        m += conv_madds(1, 1, w.dw_width, w.se_mid, 1, 1);
    }
    m += conv_madds(oh, oh, spec.c_out, w.dw_width, 1, 1);
    return m;
}

inline CostReport network_cost(const NetworkSpec& spec) {
    CostReport rep;
    std::int64_t by_class[3] = {0, 0, 0};

    auto push = [&](const std::string& name, OpClass cls, std::int64_t madds,
                    std::int64_t params) {
        rep.entries.push_back({name, cls, madds, params});
        rep.total_madds += madds;
        rep.total_params += params;
        by_class[static_cast<int>(cls)] += madds;
    };
    // A conv entry carries its BN affine params with it.
    auto conv_bn = [&](const std::string& name, int out_hw, int in_c, int out_c, int k,
                       int groups) {
        push(name, classify_conv(k, in_c, out_c, groups),
             conv_madds(out_hw, out_hw, out_c, in_c, k, groups),
             static_cast<std::int64_t>(out_c) * k * k * (in_c / groups) + 2 * out_c);
    };

    int h = spatial_out(spec.resolution, 3, 2);
    conv_bn("stem.conv", h, 3, spec.stem_c, 3, 1);
    int c_in = spec.stem_c;

    for (std::size_t i = 0; i < spec.rows.size(); ++i) {
        const BlockSpec& b = spec.rows[i];
        const BlockWidths w = resolve_widths(b, c_in);
        std::string prefix = "block";
        prefix += (i < 10 ? "0" : "") + std::to_string(i);
        const int oh = spatial_out(h, b.k, b.s);
        BlockCostSplit split;
        split.name = prefix;
        if (b.kind == BlockKind::dwsep) {
            conv_bn(prefix + ".dw", oh, c_in, c_in, b.k, c_in);
            split.dw = rep.entries.back().madds;
            conv_bn(prefix + ".pw", oh, c_in, b.c_out, 1, 1);
            split.pw2 = rep.entries.back().madds;
        } else {
            if (w.gen > 0) {
                conv_bn(prefix + ".pw1", h, c_in, w.gen, 1, 1);
                split.pw1 = rep.entries.back().madds;
            }
            conv_bn(prefix + ".dw", oh, w.dw_width, w.dw_width, b.k, w.dw_width);
            split.dw = rep.entries.back().madds;
            if (b.se) {
                // SE convs run on the pooled 1x1 map and are bias-free.
                push(prefix + ".se.reduce", OpClass::pw,
                     conv_madds(1, 1, w.se_mid, w.dw_width, 1, 1),
                     static_cast<std::int64_t>(w.se_mid) * w.dw_width);
                push(prefix + ".se.expand", OpClass::pw,
                     conv_madds(1, 1, w.dw_width, w.se_mid, 1, 1),
                     static_cast<std::int64_t>(w.dw_width) * w.se_mid);
                split.se = rep.entries[rep.entries.size() - 2].madds +
                           rep.entries.back().madds;
            }
            conv_bn(prefix + ".pw2", oh, w.dw_width, b.c_out, 1, 1);
            split.pw2 = rep.entries.back().madds;
        }
        rep.blocks.push_back(split);
        h = oh;
        c_in = b.c_out;
    }

    if (spec.head.conv_width > 0) {
        conv_bn("head.conv", h, c_in, spec.head.conv_width, 1, 1);
        c_in = spec.head.conv_width;
    }
    if (spec.head.hidden_width > 0) {
        conv_bn("head.hidden", 1, c_in, spec.head.hidden_width, 1, 1);
        c_in = spec.head.hidden_width;
    }
    push("classifier", OpClass::pw, conv_madds(1, 1, spec.head.classes, c_in, 1, 1),
         static_cast<std::int64_t>(spec.head.classes) * c_in + spec.head.classes);

    const double total = static_cast<double>(rep.total_madds);
    rep.pct_dw = 100.0 * by_class[0] / total;
    rep.pct_pw = 100.0 * by_class[1] / total;
    rep.pct_vanilla = 100.0 * by_class[2] / total;
    return rep;
}

// Millions with one decimal, rounded half away from zero (table style).
inline std::string fmt_millions(std::int64_t v) {
    const double m = static_cast<double>(v) / 1e6;
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << (std::floor(m * 10.0 + 0.5) / 10.0);
    return os.str();
}

inline std::string format_report_table(const NetworkSpec& spec, const CostReport& rep) {
    std::ostringstream os;
    os << "arch " << spec.name << "  multiplier " << format_multiplier(spec.multiplier)
       << "  input " << spec.resolution << "\n";
    os << std::left << std::setw(22) << "layer" << std::setw(9) << "class" << std::right
       << std::setw(14) << "madds" << std::setw(12) << "params" << "\n";
    for (const CostEntry& e : rep.entries)
        os << std::left << std::setw(22) << e.name << std::setw(9) << op_class_name(e.cls)
           << std::right << std::setw(14) << e.madds << std::setw(12) << e.params << "\n";
    os << "total madds " << rep.total_madds << " (" << fmt_millions(rep.total_madds)
       << "M)  params " << rep.total_params << " (" << fmt_millions(rep.total_params)
       << "M)\n";
    os << std::fixed << std::setprecision(2) << "class split: DW " << rep.pct_dw << "%  PW "
       << rep.pct_pw << "%  vanilla " << rep.pct_vanilla << "%\n";
    return os.str();
}

inline std::string format_report_struct(const NetworkSpec& spec, const CostReport& rep) {
    std::ostringstream os;
    os << "arch=" << spec.name << " multiplier=" << format_multiplier(spec.multiplier)
       << " input=" << spec.resolution << "\n";
    for (const CostEntry& e : rep.entries)
        os << "layer=" << e.name << " class=" << op_class_name(e.cls) << " madds=" << e.madds
           << " params=" << e.params << "\n";
    os << "total_madds=" << rep.total_madds << " total_params=" << rep.total_params << "\n";
    os << std::fixed << std::setprecision(4) << "pct_dw=" << rep.pct_dw
       << " pct_pw=" << rep.pct_pw << " pct_vanilla=" << rep.pct_vanilla << "\n";
    return os.str();
}

}  // namespace asymmkit

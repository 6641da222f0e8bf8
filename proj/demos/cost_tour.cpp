// Walks the cost analyzer: full per-layer report for one network, the
// multiplier sweep, the asymmetry-rate sweep, and a custom spec round-trip.

#include <iostream>
#include <sstream>

#include "asymmkit/asymmkit.hpp"

namespace ak = asymmkit;

int main() {
    // Per-layer breakdown of the large bottleneck stack.
    ak::NetworkSpec large = ak::builtin_spec("asymmnet-l");
    std::cout << ak::format_report_table(large, ak::network_cost(large)) << "\n";

    // Width-multiplier sweep across the twin small stacks.
    std::cout << "multiplier sweep (madds M / params M)\n";
    for (const char* name : {"asymmnet-s", "mbv3-s", "pruned-s"}) {
        std::cout << "  " << name << ":";
        for (double alpha : {0.35, 0.5, 0.75, 1.0, 1.25}) {
            const ak::NetworkSpec s = ak::scale_spec(ak::builtin_spec(name), alpha);
            const ak::CostReport rep = ak::network_cost(s);
            std::cout << "  " << alpha << "->" << ak::fmt_millions(rep.total_madds) << "/"
                      << ak::fmt_millions(rep.total_params);
        }
        std::cout << "\n";
    }

    // Asymmetry-rate sweep: r = 0 collapses to the plain inverted residual.
    std::cout << "\nrate sweep on asymmnet-l\n";
    for (int r : {0, 1, 2}) {
        const ak::NetworkSpec s = ak::with_rate(large, r);
        const ak::CostReport rep = ak::network_cost(s);
        std::cout << "  r=" << r << "  madds " << ak::fmt_millions(rep.total_madds) << "M  params "
                  << ak::fmt_millions(rep.total_params) << "M\n";
    }

    // Spec text is a stable interchange format: dump -> parse -> same costs.
    std::stringstream ss(ak::dump_spec(ak::scale_spec(ak::builtin_spec("asymmnet-s"), 0.5)));
    const ak::NetworkSpec reparsed = ak::parse_spec(ss);
    const ak::CostReport rep = ak::network_cost(reparsed);
    std::cout << "\nreparsed " << reparsed.name << " @ " << reparsed.multiplier << ": "
              << rep.total_madds << " madds, " << rep.total_params << " params\n";
    return 0;
}

// Grid-sweep walkthrough: run the replicated cross-validation harness on the
// rolled-sheet benchmark and print the per-cell summary table it produces.

#include <cstdio>

#include "skelreg/skelreg.hpp"

using namespace skelreg;

int main() {
    ExperimentConfig cfg;
    cfg.dataset = "swissroll";
    cfg.swissroll_n = 600;
    cfg.ambient_dim = 50;
    cfg.noise_dim_magnitude = 2.5;
    cfg.n_replicates = 3;
    cfg.n_folds = 5;
    cfg.seed = 9;
    cfg.knot_counts = {23, 27};
    cfg.restarts = 10;
    cfg.kernel_family = KernelFamily::epanechnikov;
    cfg.skernel_bandwidths = default_bandwidth_multipliers();
    cfg.sknn_k = {5, 10, 20};
    cfg.eknn_k = {5, 10, 20};

    const ExperimentReport report = run_experiment(cfg);

    std::printf("%-10s %-22s %10s %10s %10s\n", "method", "params", "median",
                "p5", "p95");
    for (const auto& cell : report.cells)
        std::printf("%-10s %-22s %10.1f %10.1f %10.1f\n", cell.method.c_str(),
                    cell.param_key().c_str(), cell.median, cell.p5, cell.p95);

    std::printf("\nbest per method:\n");
    for (const auto& [method, idx] : report.best)
        std::printf("  %-10s %-22s median %.1f\n", method.c_str(),
                    report.cells[idx].param_key().c_str(),
                    report.cells[idx].median);
    return 0;
}

#pragma once

#include "camrl/scheduler.hpp"

namespace camrl {

/// Synthetic composite-objective instances for solver benchmarking: random
/// network weights, losses, cross-task evaluations, similarities, and a
/// random partially-trained cycle, assembled exactly like a live epoch.
struct BenchOptions {
    int task_count = 8;
    int w_dim = 12;
    bool convex_only = false;  // zero the ranking weights, leaving the
                               // linear + quadratic (convex) part
    double d = 200.0;
};

struct BenchInstance {
    CompositeProblem problem;
    Vec x0;
};

BenchInstance make_bench_instance(Rng& rng, const BenchOptions& opts);

struct BenchResult {
    double fw_final = 0.0;
    double pgd_final = 0.0;
    SolverTrace fw_trace;
    SolverTrace pgd_trace;
};

BenchResult run_bench_instance(const BenchInstance& inst, int iters, double pgd_step = 0.01);

struct BenchTable {
    std::vector<BenchResult> results;
    int fw_wins_or_ties = 0;  // fw_final <= pgd_final + 1e-6
};

/// Runs Frank-Wolfe and projected gradient descent with equal iteration
/// budgets over `instances` random problems.
BenchTable solve_bench(int instances, int iters, std::uint64_t seed,
                       const BenchOptions& opts = {});

}  // namespace camrl

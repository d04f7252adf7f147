#include "camrl/bench.hpp"

#include <algorithm>
#include <numeric>

namespace camrl {

BenchInstance make_bench_instance(Rng& rng, const BenchOptions& opts) {
    const int n = opts.task_count;
    if (n < 2) throw std::invalid_argument("bench: need at least two tasks");
    HyperConfig hp;
    hp.d = opts.d;

    std::vector<Vec> w_all(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(opts.w_dim)));
    for (auto& w : w_all)
        for (double& v : w) v = rng.uniform(-1.0, 1.0);

    TransferMatrix b = TransferMatrix::identity(n);
    for (int t = 0; t < n; ++t) {
        Vec row(static_cast<std::size_t>(n - 1));
        double sum = 0.0;
        for (double& v : row) {
            v = rng.uniform();
            sum += v;
        }
        const double budget = rng.uniform() * hp.radius;
        for (double& v : row) v *= budget / sum;
        b.set_outgoing_row(t, row, hp.radius);
    }

    Vec losses(static_cast<std::size_t>(n));
    for (double& v : losses) v = rng.uniform(-2.0, 2.0);

    MutualEval mutual(n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t)
            if (s != t && rng.uniform() < 0.7) mutual.record(s, t, rng.uniform(-1.0, 1.0), 0);

    // Random cycle position: some tasks already trained in a random order.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    const int trained_count = rng.uniform_int(n);  // 0 .. n-1, leaves U nonempty
    std::vector<int> trained(perm.begin(), perm.begin() + trained_count);
    std::vector<int> untrained(perm.begin() + trained_count, perm.end());
    std::sort(untrained.begin(), untrained.end());
    const int t = untrained[static_cast<std::size_t>(rng.uniform_int(
        static_cast<int>(untrained.size())))];

    Vec sims(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        sims[static_cast<std::size_t>(i)] =
            cosine_similarity(w_all[static_cast<std::size_t>(i)], w_all[static_cast<std::size_t>(t)]);

    Vec lambda = {rng.uniform(0.5, 1.5), rng.uniform(0.05, 0.5), 0.0, 0.0, 0.0};
    if (!opts.convex_only)
        for (int k = 2; k <= 4; ++k) lambda[static_cast<std::size_t>(k)] = rng.uniform(0.005, 0.05);

    BenchInstance inst;
    inst.x0 = b.outgoing_row(t);
    inst.problem = build_composite(t, b, w_all, losses, mutual, hard_rank(sims), trained,
                                   untrained, hp, lambda);
    return inst;
}

BenchResult run_bench_instance(const BenchInstance& inst, int iters, double pgd_step) {
    BenchResult out;
    const Objective obj = inst.problem.as_objective();
    out.fw_trace = fw_vanilla(obj, inst.x0, inst.problem.radius(), iters);
    out.pgd_trace = pgd(obj, inst.x0, inst.problem.radius(), pgd_step, iters);
    out.fw_final = out.fw_trace.best_objective;
    out.pgd_final = out.pgd_trace.best_objective;
    return out;
}

BenchTable solve_bench(int instances, int iters, std::uint64_t seed, const BenchOptions& opts) {
    if (instances < 1) throw std::invalid_argument("solve_bench: need at least one instance");
    Rng rng = Rng::stream(seed, "solve-bench");
    BenchTable table;
    table.results.reserve(static_cast<std::size_t>(instances));
    for (int i = 0; i < instances; ++i) {
        const BenchInstance inst = make_bench_instance(rng, opts);
        BenchResult r = run_bench_instance(inst, iters);
        if (r.fw_final <= r.pgd_final + 1e-6) ++table.fw_wins_or_ties;
        table.results.push_back(std::move(r));
    }
    return table;
}

}  // namespace camrl

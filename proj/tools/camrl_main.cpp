#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "camrl/bench.hpp"
#include "camrl/config.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int cmd_run(const std::string& config_path) {
    camrl::RunConfig cfg;
    try {
        cfg = camrl::load_run_config(config_path);
    } catch (const camrl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    }

    if (const char* env = std::getenv("CAMRL_OUTPUT_DIR"); env != nullptr && *env != '\0')
        cfg.output_dir = env;

    try {
        const fs::path out_dir(cfg.output_dir);
        fs::create_directories(out_dir);
        std::ofstream metrics(out_dir / "metrics.jsonl");
        if (!metrics) {
            std::cerr << "io error: cannot write to " << out_dir << "\n";
            return kExitIo;
        }
        const camrl::RunSummary summary =
            camrl::run_training(cfg, [&metrics](const camrl::EpochRecord& rec) {
                metrics << camrl::serialize_epoch_record(rec) << '\n';
            });
        metrics.close();

        std::ofstream csv(out_dir / "summary.csv");
        camrl::write_summary_csv(csv, summary);
        std::ofstream final_state(out_dir / "final_state.json");
        final_state << camrl::serialize_run_summary(summary) << '\n';

        double mean_eval = 0.0;
        for (double r : summary.final_eval) mean_eval += r;
        mean_eval /= summary.task_count;
        std::cout << "tasks: " << summary.task_count << "  epochs: " << summary.epochs_run
                  << "  mean final eval reward: " << mean_eval << "\n"
                  << "wrote " << (out_dir / "metrics.jsonl").string() << ", "
                  << (out_dir / "summary.csv").string() << ", "
                  << (out_dir / "final_state.json").string() << "\n";
        return kExitOk;
    } catch (const camrl::numerical_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    }
}

int cmd_solve_bench(int instances, int iters, std::uint64_t seed, int tasks, bool convex,
                    const std::string& out_dir) {
    camrl::BenchOptions opts;
    opts.task_count = tasks;
    opts.convex_only = convex;
    camrl::BenchTable table;
    try {
        table = camrl::solve_bench(instances, iters, seed, opts);
    } catch (const camrl::numerical_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    }

    std::cout << "instance,fw_final,pgd_final,fw_wins_or_ties\n";
    for (std::size_t i = 0; i < table.results.size(); ++i) {
        const auto& r = table.results[i];
        std::cout << i << ',' << r.fw_final << ',' << r.pgd_final << ','
                  << (r.fw_final <= r.pgd_final + 1e-6 ? 1 : 0) << '\n';
    }
    std::cout << "fw wins or ties: " << table.fw_wins_or_ties << " / " << table.results.size()
              << "\n";

    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        std::ofstream summary(dir / "bench_summary.csv");
        summary << "instance,fw_final,pgd_final,fw_wins_or_ties\n";
        for (std::size_t i = 0; i < table.results.size(); ++i) {
            const auto& r = table.results[i];
            summary << i << ',' << r.fw_final << ',' << r.pgd_final << ','
                    << (r.fw_final <= r.pgd_final + 1e-6 ? 1 : 0) << '\n';
        }
        std::ofstream traces(dir / "traces.csv");
        traces << "instance,solver,iter,objective,fw_gap,l1_norm\n";
        for (std::size_t i = 0; i < table.results.size(); ++i) {
            const auto dump = [&](const char* name, const camrl::SolverTrace& tr) {
                for (std::size_t m = 0; m < tr.rows.size(); ++m)
                    traces << i << ',' << name << ',' << m << ',' << tr.rows[m].objective << ','
                           << tr.rows[m].fw_gap << ',' << tr.rows[m].l1_norm << '\n';
            };
            dump("fw", table.results[i].fw_trace);
            dump("pgd", table.results[i].pgd_trace);
        }
        std::cout << "wrote " << (dir / "bench_summary.csv").string() << ", "
                  << (dir / "traces.csv").string() << "\n";
    }
    return kExitOk;
}

int cmd_rank_demo(const std::vector<double>& values, const std::vector<double>& ds) {
    std::cout << "d";
    for (std::size_t i = 0; i < values.size(); ++i) std::cout << ",y" << i;
    std::cout << '\n';
    for (double d : ds) {
        if (d < 0.0) {
            std::cerr << "rank-demo: d must be nonnegative\n";
            return kExitConfig;
        }
        const camrl::Vec y = camrl::smooth_rank(values, d);
        std::cout << d;
        for (double v : y) std::cout << ',' << v;
        std::cout << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curriculum-based asymmetric multi-task RL simulator"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run a full training experiment from a config file");
    run->add_option("config", config_path, "Path to the JSON run config")->required();

    int instances = 50;
    int iters = 200;
    std::uint64_t seed = 0;
    int tasks = 8;
    bool convex = false;
    std::string bench_out;
    CLI::App* bench = app.add_subcommand(
        "solve-bench", "Compare Frank-Wolfe against projected gradient descent");
    bench->add_option("--instances", instances, "Number of random problem instances");
    bench->add_option("--iters", iters, "Iteration budget for both solvers");
    bench->add_option("--seed", seed, "Instance generator seed");
    bench->add_option("--tasks", tasks, "Task count per instance");
    bench->add_flag("--convex", convex, "Zero the ranking weights (convex instances)");
    bench->add_option("--out", bench_out, "Directory for CSV summary and traces");

    std::vector<double> values;
    std::vector<double> ds = {0.0, 50.0, 200.0};
    CLI::App* demo = app.add_subcommand("rank-demo", "Print smooth ranks for a list of values");
    demo->add_option("--values", values, "Values to rank")->delimiter(',')->required();
    demo->add_option("--d", ds, "Sharpness coefficients")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path);
    if (bench->parsed()) return cmd_solve_bench(instances, iters, seed, tasks, convex, bench_out);
    return cmd_rank_demo(values, ds);
}

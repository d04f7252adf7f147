#include "camrl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace camrl {

namespace {

double mean_of(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_std(const Vec& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Last entry z-scored against the task's own history; 0 when the history is
// degenerate.
double history_z(const Vec& history) {
    if (history.empty()) throw std::invalid_argument("history_z: empty history");
    const double mu = mean_of(history);
    const double sd = population_std(history, mu);
    if (sd == 0.0) return 0.0;
    return (history.back() - mu) / sd;
}

void check_weights(const Vec& weights) {
    if (weights.size() != 3) throw std::invalid_argument("imul weights: need 3 entries");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("imul weights: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("imul weights: must sum to 1");
}

}  // namespace

const char* mode_name(Mode mode) {
    return mode == Mode::Parallel ? "parallel" : "curriculum";
}

ImulTerms compute_imul(const EpochState& state, const HyperConfig& hp, const Vec& weights) {
    check_weights(weights);
    const int n_tasks = state.task_count();
    if (n_tasks == 0) throw std::invalid_argument("compute_imul: no tasks");
    for (const Vec& h : state.policy_loss_history)
        if (h.empty()) throw std::invalid_argument("compute_imul: empty loss history");
    for (const Vec& h : state.reward_history)
        if (h.empty()) throw std::invalid_argument("compute_imul: empty reward history");

    ImulTerms t;
    t.epoch_decay = std::exp(-static_cast<double>(state.epoch) / hp.a);

    double l_nor = 0.0;
    for (const Vec& h : state.policy_loss_history) l_nor += history_z(h);
    l_nor /= static_cast<double>(n_tasks);
    t.progress = std::min(1.0, std::exp(-l_nor * hp.b));

    Vec z(static_cast<std::size_t>(n_tasks));
    for (int i = 0; i < n_tasks; ++i)
        z[static_cast<std::size_t>(i)] = history_z(state.reward_history[static_cast<std::size_t>(i)]);
    const double mu = mean_of(z);
    const double sd = population_std(z, mu);
    int outside = 0;
    for (double v : z)
        if (v < mu - hp.c * sd || v > mu + hp.c * sd) ++outside;
    t.dispersion = static_cast<double>(outside) / static_cast<double>(n_tasks);

    t.value = combine_imul(t, weights);
    return t;
}

double combine_imul(const ImulTerms& terms, const Vec& weights) {
    check_weights(weights);
    return weights[0] * terms.epoch_decay + weights[1] * terms.progress +
           weights[2] * terms.dispersion;
}

Mode switch_mode(double imul, double u, ImulBranch branch) {
    if (imul < 0.0) throw std::invalid_argument("switch_mode: negative indicator");
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("switch_mode: u outside [0, 1]");
    const bool below = u < imul;
    if (branch == ImulBranch::CurriculumWhenBelow)
        return below ? Mode::Curriculum : Mode::Parallel;
    return below ? Mode::Parallel : Mode::Curriculum;
}

HyperState update_lambdas(const std::vector<Vec>& term_histories, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("update_lambdas: epsilon must be positive");
    HyperState hs;
    hs.sigma.resize(term_histories.size(), 0.0);
    hs.lambda.resize(term_histories.size(), 0.0);
    for (std::size_t i = 0; i < term_histories.size(); ++i) {
        const Vec& h = term_histories[i];
        double se = 0.0;
        if (h.size() >= 2) {
            const double mu = mean_of(h);
            double ss = 0.0;
            for (double x : h) ss += (x - mu) * (x - mu);
            const double sample_std = std::sqrt(ss / static_cast<double>(h.size() - 1));
            se = sample_std / std::sqrt(static_cast<double>(h.size()));
        }
        hs.sigma[i] = se;
        const double denom = (i == 0) ? 2.0 * se * se + epsilon : 4.0 * se * se + epsilon;
        hs.lambda[i] = 1.0 / denom;
    }
    return hs;
}

std::optional<ExtraRankTerm> prior_rank_term(const PriorKnowledge& prior) {
    std::vector<int> present;
    for (std::size_t i = 0; i < prior.ranks.size(); ++i)
        if (prior.ranks[i].has_value()) {
            if (*prior.ranks[i] < 1)
                throw std::invalid_argument("prior knowledge: ranks must be >= 1");
            present.push_back(static_cast<int>(i));
        }
    if (present.size() < 2) return std::nullopt;

    // Order by external rank (ties by task index); best public performance
    // gets the largest target so its incoming transfer stays smallest.
    std::vector<int> order = present;
    std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        const int rl = *prior.ranks[static_cast<std::size_t>(lhs)];
        const int rr = *prior.ranks[static_cast<std::size_t>(rhs)];
        if (rl != rr) return rl < rr;
        return lhs < rhs;
    });
    const int q = static_cast<int>(present.size());
    std::vector<int> target_of_task(prior.ranks.size(), 0);
    for (int pos = 0; pos < q; ++pos)
        target_of_task[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = q - pos;

    ExtraRankTerm term;
    term.row_indices = present;
    for (int i : present) term.targets.push_back(target_of_task[static_cast<std::size_t>(i)]);
    return term;
}

double prior_knowledge_loss(const PriorKnowledge& prior, const Vec& b_row, double d) {
    if (b_row.size() != prior.ranks.size())
        throw std::invalid_argument("prior_knowledge_loss: row length mismatch");
    const auto term = prior_rank_term(prior);
    if (!term.has_value()) return 0.0;
    Vec values(term->row_indices.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = b_row[static_cast<std::size_t>(term->row_indices[k])];
    return rank_loss({values, term->targets, d});
}

Vec prior_knowledge_loss_grad(const PriorKnowledge& prior, const Vec& b_row, double d) {
    if (b_row.size() != prior.ranks.size())
        throw std::invalid_argument("prior_knowledge_loss_grad: row length mismatch");
    Vec g(b_row.size(), 0.0);
    const auto term = prior_rank_term(prior);
    if (!term.has_value()) return g;
    Vec values(term->row_indices.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = b_row[static_cast<std::size_t>(term->row_indices[k])];
    const Vec rg = rank_loss_grad({values, term->targets, d});
    for (std::size_t k = 0; k < values.size(); ++k)
        g[static_cast<std::size_t>(term->row_indices[k])] = rg[k];
    return g;
}

EffectiveControls ablation_controls(const HyperConfig& hp, const AblationFlags& flags) {
    if (flags.disable_mode_switch && flags.force_parallel)
        throw std::invalid_argument("ablation flags: cannot force both modes");
    EffectiveControls out{hp, flags};
    if (flags.c_zero) out.hyper.c = 0.0;
    if (flags.d_zero) out.hyper.d = 0.0;
    return out;
}

void RunConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("run config: negative epoch budget");
    suite.validate();
    hyper.validate();
    if (hidden1 < 1 || hidden2 < 1)
        throw std::invalid_argument("run config: hidden widths must be >= 1");
    if (learning_rate < 0.0) throw std::invalid_argument("run config: negative learning rate");
    if (discount < 0.0 || discount > 1.0)
        throw std::invalid_argument("run config: discount must be in [0, 1]");
    check_weights(imul_weights);
    ablation_controls(hyper, ablations);  // flag conflicts
    const std::size_t lambda_count = prior.has_value() ? 6 : 5;
    if (ablations.freeze_lambda && ablations.fixed_lambda.size() != lambda_count)
        throw std::invalid_argument("run config: fixed_lambda has wrong length");
    if (prior.has_value() && prior->ranks.size() != static_cast<std::size_t>(suite.task_count()))
        throw std::invalid_argument("run config: prior table length != task count");
    if (output_dir.empty()) throw std::invalid_argument("run config: empty output dir");
}

SelectionResult select_next_task(const EpochState& state, const TransferMatrix& B,
                                 const std::vector<TaskTrainer>& trainers,
                                 const MutualEval& mutual, const HyperConfig& hp,
                                 const Vec& lambda, SimilarityMeasure measure, Rng& rng,
                                 const std::optional<ExtraRankTerm>& prior) {
    if (state.untrained.empty())
        throw std::logic_error("select_next_task: cycle complete (untrained set empty)");

    std::vector<Vec> w_all;
    w_all.reserve(trainers.size());
    for (const TaskTrainer& tr : trainers) w_all.push_back(tr.flat_params());
    Vec losses(trainers.size());
    for (std::size_t i = 0; i < trainers.size(); ++i) {
        if (state.policy_loss_history[i].empty())
            throw std::logic_error("select_next_task: missing loss history");
        losses[i] = state.policy_loss_history[i].back();
    }

    SelectionResult best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int t : state.untrained) {  // ascending, so ties keep the lowest index
        const SimilarityResult sim = similarity_vector(trainers, t, measure, rng);
        CompositeProblem problem = build_composite(t, B, w_all, losses, mutual, sim.ranks,
                                                   state.trained_order, state.untrained, hp,
                                                   lambda, prior);
        const double obj = problem.value(B.outgoing_row(t));
        if (obj < best_obj) {
            best_obj = obj;
            best.task = t;
            best.objective = obj;
            best.problem = std::move(problem);
        }
    }
    return best;
}

Simulation::Simulation(const RunConfig& config, MetricsSink sink)
    : cfg_(config),
      controls_(ablation_controls(config.hyper, config.ablations)),
      sink_(std::move(sink)),
      sched_rng_(Rng::stream(config.seed, "scheduler")),
      mutual_rng_(Rng::stream(config.seed, "mutual-eval")),
      b_(TransferMatrix::identity(std::max(1, config.suite.task_count()))),
      mutual_(std::max(1, config.suite.task_count())),
      prior_(config.prior) {
    cfg_.validate();
    tasks_ = make_task_suite(cfg_.seed, cfg_.suite);
    const int n = static_cast<int>(tasks_.size());
    trainers_.reserve(static_cast<std::size_t>(n));
    eval_rngs_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        trainers_.emplace_back(cfg_.hidden1, cfg_.hidden2, cfg_.learning_rate, cfg_.discount,
                               Rng::stream(cfg_.seed, "task/" + std::to_string(i)));
        eval_rngs_.push_back(Rng::stream(cfg_.seed, "eval/" + std::to_string(i)));
    }
    state_.policy_loss_history.resize(static_cast<std::size_t>(n));
    state_.reward_history.resize(static_cast<std::size_t>(n));
    state_.untrained.resize(static_cast<std::size_t>(n));
    std::iota(state_.untrained.begin(), state_.untrained.end(), 0);
    if (prior_.has_value()) prior_term_ = prior_rank_term(*prior_);
    state_.term_history.resize(prior_term_.has_value() ? 6 : 5);
    refresh_lambdas();
}

void Simulation::refresh_lambdas() {
    if (controls_.flags.freeze_lambda)
        hyper_ = HyperState{controls_.flags.fixed_lambda,
                            Vec(controls_.flags.fixed_lambda.size(), 0.0)};
    else
        hyper_ = update_lambdas(state_.term_history, controls_.hyper.epsilon);
    if (controls_.flags.lambda2_zero) hyper_.lambda[2] = 0.0;
    if (controls_.flags.lambda3_zero) hyper_.lambda[3] = 0.0;
    if (controls_.flags.lambda4_zero) hyper_.lambda[4] = 0.0;
}

Vec Simulation::last_losses() const {
    Vec losses(trainers_.size());
    for (std::size_t i = 0; i < trainers_.size(); ++i)
        losses[i] = state_.policy_loss_history[i].back();
    return losses;
}

void Simulation::train_all_parallel(std::vector<char>& trained_now,
                                    std::vector<TrainStats>& stats) {
    for (std::size_t i = 0; i < trainers_.size(); ++i) {
        stats[i] = train_step(trainers_[i], tasks_[i], controls_.hyper.episodes_per_epoch);
        trained_now[i] = 1;
    }
}

void Simulation::run_warmup() {
    for (int e = 0; e < controls_.hyper.warmup_epochs; ++e) {
        ++state_.epoch;
        std::vector<char> trained_now(trainers_.size(), 0);
        std::vector<TrainStats> stats(trainers_.size());
        train_all_parallel(trained_now, stats);
        finish_epoch(Mode::Parallel, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                     trained_now, stats);
    }
}

void Simulation::run_main_epoch() {
    ++state_.epoch;
    std::optional<ImulTerms> imul;
    std::optional<double> u;
    Mode mode;
    if (controls_.flags.force_parallel) {
        mode = Mode::Parallel;
    } else if (controls_.flags.disable_mode_switch) {
        mode = Mode::Curriculum;
    } else {
        ImulTerms t = compute_imul(state_, controls_.hyper, cfg_.imul_weights);
        if (controls_.flags.term1_off) t.epoch_decay = 0.0;
        if (controls_.flags.term2_off) t.progress = 0.0;
        t.value = combine_imul(t, cfg_.imul_weights);
        imul = t;
        u = sched_rng_.uniform();
        mode = switch_mode(t.value, *u, cfg_.imul_branch);
    }

    std::vector<char> trained_now(trainers_.size(), 0);
    std::vector<TrainStats> stats(trainers_.size());
    std::optional<int> selected;
    std::optional<double> fw_objective;

    if (mode == Mode::Parallel) {
        train_all_parallel(trained_now, stats);
    } else {
        if (state_.untrained.empty()) {
            state_.untrained.resize(trainers_.size());
            std::iota(state_.untrained.begin(), state_.untrained.end(), 0);
            state_.trained_order.clear();
        }
        SelectionResult sel =
            select_next_task(state_, b_, trainers_, mutual_, controls_.hyper, hyper_.lambda,
                             cfg_.similarity, sched_rng_, prior_term_);
        const int t = sel.task;
        selected = t;

        const Vec* extra = nullptr;
        Vec extra_grad;
        if (sel.problem.dimension() > 0) {
            const SolverTrace trace =
                fw_vanilla(sel.problem.as_objective(), b_.outgoing_row(t), controls_.hyper.radius,
                           controls_.hyper.fw_iters);
            b_.set_outgoing_row(t, trace.best_x, controls_.hyper.radius);
            fw_objective = trace.best_objective;

            const CompositeTerms terms = sel.problem.terms(trace.best_x);
            const Vec term_vec = terms.as_vector(prior_term_.has_value());
            for (std::size_t k = 0; k < term_vec.size(); ++k)
                state_.term_history[k].push_back(term_vec[k]);

            // Alternating step on the network weights: 0.01 x the objective
            // gradient with respect to w_t (the coupling term is its only
            // deterministic w_t dependence; the policy-loss part is what the
            // trainer's own update already descends).
            extra_grad = sel.problem.coupling_w_gradient(trace.best_x);
            for (double& g : extra_grad) g *= 0.01;
            extra = &extra_grad;
        }
        stats[static_cast<std::size_t>(t)] =
            train_step(trainers_[static_cast<std::size_t>(t)], tasks_[static_cast<std::size_t>(t)],
                       controls_.hyper.episodes_per_epoch, extra);
        trained_now[static_cast<std::size_t>(t)] = 1;
        state_.trained_order.push_back(t);
        state_.untrained.erase(
            std::find(state_.untrained.begin(), state_.untrained.end(), t));
    }
    finish_epoch(mode, imul, u, selected, fw_objective, trained_now, stats);
}

void Simulation::finish_epoch(Mode mode, const std::optional<ImulTerms>& imul,
                              std::optional<double> u, std::optional<int> selected,
                              std::optional<double> fw_objective,
                              const std::vector<char>& trained_now,
                              const std::vector<TrainStats>& stats) {
    state_.mode_log.push_back(mode);

    EpochRecord rec;
    rec.epoch = state_.epoch;
    rec.mode = mode;
    rec.imul = imul;
    rec.u = u;
    rec.lambda = hyper_.lambda;
    rec.selected_task = selected;
    rec.fw_objective = fw_objective;

    for (std::size_t i = 0; i < trainers_.size(); ++i) {
        Vec& lh = state_.policy_loss_history[i];
        if (trained_now[i])
            lh.push_back(stats[i].mean_policy_loss);
        else
            lh.push_back(lh.back());  // stale value persists, like the PM reuse rule
        state_.reward_history[i].push_back(
            evaluate(trainers_[i], tasks_[i], controls_.hyper.eval_episodes, eval_rngs_[i]));
    }

    mutual_eval_update(trainers_, tasks_, mutual_, mutual_rng_, controls_.hyper, state_.epoch);
    refresh_lambdas();

    if (sink_) {
        rec.policy_loss = last_losses();
        rec.eval_reward.resize(trainers_.size());
        for (std::size_t i = 0; i < trainers_.size(); ++i)
            rec.eval_reward[i] = state_.reward_history[i].back();
        rec.b_row_major = b_.row_major();
        rec.pr_row_major = performance_rank_matrix(mutual_);
        sink_(rec);
    }
    b_.validate(controls_.hyper.radius);
}

void Simulation::run() {
    run_warmup();
    for (int e = 0; e < cfg_.epochs; ++e) run_main_epoch();
}

void Simulation::add_task(const GridTask& task) {
    task.validate();
    const int idx = static_cast<int>(tasks_.size());
    tasks_.push_back(task);
    trainers_.emplace_back(cfg_.hidden1, cfg_.hidden2, cfg_.learning_rate, cfg_.discount,
                           Rng::stream(cfg_.seed, "task/" + std::to_string(idx)));
    eval_rngs_.push_back(Rng::stream(cfg_.seed, "eval/" + std::to_string(idx)));
    b_ = b_.extended();
    mutual_ = mutual_.extended();
    state_.untrained.push_back(idx);

    // Seed the newcomer's histories with a probe batch (no learning) so the
    // indicator and selection have data next epoch.
    TaskTrainer& tr = trainers_.back();
    std::vector<Episode> probe;
    for (int k = 0; k < controls_.hyper.episodes_per_epoch; ++k)
        probe.push_back(run_episode(tr, task, tr.rng()));
    state_.policy_loss_history.emplace_back();
    state_.policy_loss_history.back().push_back(policy_loss(tr, probe));
    state_.reward_history.emplace_back();
    state_.reward_history.back().push_back(
        evaluate(tr, task, controls_.hyper.eval_episodes, eval_rngs_.back()));

    if (prior_.has_value()) {
        prior_->ranks.push_back(std::nullopt);
        prior_term_ = prior_rank_term(*prior_);
    }
}

Vec Simulation::final_eval_rewards() const {
    Vec out(trainers_.size(), 0.0);
    for (std::size_t i = 0; i < trainers_.size(); ++i)
        if (!state_.reward_history[i].empty()) out[i] = state_.reward_history[i].back();
    return out;
}

Vec Simulation::final_policy_losses() const {
    Vec out(trainers_.size(), 0.0);
    for (std::size_t i = 0; i < trainers_.size(); ++i)
        if (!state_.policy_loss_history[i].empty()) out[i] = state_.policy_loss_history[i].back();
    return out;
}

RunSummary run_training(const RunConfig& config, MetricsSink sink) {
    Simulation sim(config, std::move(sink));
    sim.run();
    RunSummary summary;
    summary.task_count = sim.task_count();
    summary.epochs_run = sim.state().epoch;
    summary.final_eval = sim.final_eval_rewards();
    summary.final_policy_loss = sim.final_policy_losses();
    summary.b_row_major = sim.transfer().row_major();
    summary.pr_row_major = performance_rank_matrix(sim.mutual());
    return summary;
}

}  // namespace camrl

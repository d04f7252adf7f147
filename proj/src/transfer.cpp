#include "camrl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace camrl {

namespace {

constexpr double kRowTol = 1e-12;

int b_index(int column, int t) { return column < t ? column : column - 1; }

}  // namespace

TransferMatrix TransferMatrix::identity(int task_count) {
    if (task_count < 1) throw std::invalid_argument("transfer matrix: task count must be >= 1");
    Vec data(static_cast<std::size_t>(task_count) * task_count, 0.0);
    for (int i = 0; i < task_count; ++i) data[static_cast<std::size_t>(i * task_count + i)] = 1.0;
    return TransferMatrix(task_count, std::move(data));
}

Vec TransferMatrix::outgoing_row(int t) const {
    if (t < 0 || t >= n_) throw std::invalid_argument("outgoing_row: task out of range");
    Vec b;
    b.reserve(static_cast<std::size_t>(n_ - 1));
    for (int j = 0; j < n_; ++j)
        if (j != t) b.push_back(at(t, j));
    return b;
}

void TransferMatrix::set_outgoing_row(int t, const Vec& b, double radius) {
    if (t < 0 || t >= n_) throw std::invalid_argument("set_outgoing_row: task out of range");
    if (static_cast<int>(b.size()) != n_ - 1)
        throw std::invalid_argument("set_outgoing_row: length mismatch");
    double sum = 0.0;
    for (double v : b) {
        if (v < 0.0) throw std::invalid_argument("set_outgoing_row: negative entry");
        sum += v;
    }
    if (sum > radius + kRowTol) throw std::invalid_argument("set_outgoing_row: budget exceeded");
    int k = 0;
    for (int j = 0; j < n_; ++j) {
        if (j == t) continue;
        data_[static_cast<std::size_t>(t * n_ + j)] = b[static_cast<std::size_t>(k++)];
    }
}

Vec TransferMatrix::full_row(int t) const {
    if (t < 0 || t >= n_) throw std::invalid_argument("full_row: task out of range");
    return Vec(data_.begin() + static_cast<std::ptrdiff_t>(t) * n_,
               data_.begin() + static_cast<std::ptrdiff_t>(t + 1) * n_);
}

TransferMatrix TransferMatrix::extended() const {
    const int m = n_ + 1;
    Vec data(static_cast<std::size_t>(m) * m, 0.0);
    for (int s = 0; s < n_; ++s)
        for (int t = 0; t < n_; ++t) data[static_cast<std::size_t>(s * m + t)] = at(s, t);
    data[static_cast<std::size_t>(m * m - 1)] = 1.0;
    return TransferMatrix(m, std::move(data));
}

void TransferMatrix::validate(double radius) const {
    for (int s = 0; s < n_; ++s) {
        double row_sum = 0.0;
        for (int t = 0; t < n_; ++t) {
            const double v = at(s, t);
            if (s == t) {
                if (v != 1.0) throw std::logic_error("transfer matrix: diagonal entry != 1");
            } else {
                if (v < 0.0) throw std::logic_error("transfer matrix: negative off-diagonal");
                row_sum += v;
            }
        }
        if (row_sum > radius + kRowTol)
            throw std::logic_error("transfer matrix: row budget exceeded");
    }
}

void HyperConfig::validate() const {
    if (a <= 0.0 || b <= 0.0 || c <= 0.0 || d <= 0.0)
        throw std::invalid_argument("hyper config: a, b, c, d must be positive");
    if (mu1 <= 0.0 || mu2 <= 0.0)
        throw std::invalid_argument("hyper config: mu1, mu2 must be positive");
    if (radius <= 0.0 || radius >= 0.5)
        throw std::invalid_argument("hyper config: radius must be in (0, 0.5)");
    if (epsilon <= 0.0) throw std::invalid_argument("hyper config: epsilon must be positive");
    if (episodes_per_epoch < 1 || warmup_epochs < 1 || fw_iters < 1 || eval_episodes < 1)
        throw std::invalid_argument("hyper config: loop sizes must be >= 1");
}

MutualEval::MutualEval(int task_count)
    : n_(task_count),
      pm_(static_cast<std::size_t>(task_count) * task_count, 0.0),
      set_(static_cast<std::size_t>(task_count) * task_count, 0),
      updated_(static_cast<std::size_t>(task_count) * task_count, -1) {
    if (task_count < 1) throw std::invalid_argument("mutual eval: task count must be >= 1");
}

double MutualEval::pm(int s, int t) const {
    if (!has(s, t)) throw std::logic_error("mutual eval: entry not recorded");
    return pm_[static_cast<std::size_t>(s * n_ + t)];
}

void MutualEval::record(int s, int t, double value, int epoch) {
    const std::size_t i = static_cast<std::size_t>(s * n_ + t);
    pm_[i] = value;
    set_[i] = 1;
    updated_[i] = epoch;
}

MutualEval MutualEval::extended() const {
    MutualEval out(n_ + 1);
    for (int s = 0; s < n_; ++s)
        for (int t = 0; t < n_; ++t)
            if (has(s, t)) out.record(s, t, pm(s, t), last_updated(s, t));
    return out;
}

std::vector<int> performance_rank_matrix(const MutualEval& mutual) {
    const int n = mutual.size();
    std::vector<int> pr(static_cast<std::size_t>(n) * n, 0);
    for (int t = 0; t < n; ++t) {
        std::vector<int> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), 0);
        // Unset entries sort below every recorded value; ties keep row order.
        std::sort(rows.begin(), rows.end(), [&](int lhs, int rhs) {
            const bool hl = mutual.has(lhs, t);
            const bool hr = mutual.has(rhs, t);
            if (hl != hr) return !hl;
            if (hl && mutual.pm(lhs, t) != mutual.pm(rhs, t))
                return mutual.pm(lhs, t) < mutual.pm(rhs, t);
            return lhs < rhs;
        });
        for (int pos = 0; pos < n; ++pos)
            pr[static_cast<std::size_t>(rows[static_cast<std::size_t>(pos)] * n + t)] = pos + 1;
    }
    return pr;
}

void mutual_eval_update(std::vector<TaskTrainer>& trainers, const std::vector<GridTask>& tasks,
                        MutualEval& mutual, Rng& rng, const HyperConfig& hp, int epoch) {
    const int n = static_cast<int>(trainers.size());
    if (n < 2) return;
    for (int draw = 0; draw < 3; ++draw) {
        const int i = rng.uniform_int(n);
        int j = rng.uniform_int(n - 1);
        if (j >= i) ++j;
        mutual.record(i, j, evaluate(trainers[static_cast<std::size_t>(i)],
                                     tasks[static_cast<std::size_t>(j)], hp.eval_episodes, rng),
                      epoch);
        mutual.record(j, i, evaluate(trainers[static_cast<std::size_t>(j)],
                                     tasks[static_cast<std::size_t>(i)], hp.eval_episodes, rng),
                      epoch);
    }
}

SimilarityResult similarity_vector(const std::vector<TaskTrainer>& trainers, int t,
                                   SimilarityMeasure measure, Rng& rng) {
    const int n = static_cast<int>(trainers.size());
    if (t < 0 || t >= n) throw std::invalid_argument("similarity_vector: task out of range");
    Vec sims(static_cast<std::size_t>(n), 0.0);

    if (measure == SimilarityMeasure::CriticCosine) {
        const Vec& ref = trainers[static_cast<std::size_t>(t)].critic().flat;
        for (int i = 0; i < n; ++i)
            sims[static_cast<std::size_t>(i)] =
                cosine_similarity(trainers[static_cast<std::size_t>(i)].critic().flat, ref);
    } else {
        std::vector<Vec> states(100, Vec(kObsDim));
        for (auto& s : states)
            for (double& v : s) v = rng.uniform();
        const std::vector<Vec> ref = embedding(trainers[static_cast<std::size_t>(t)], states);
        for (int i = 0; i < n; ++i) {
            const std::vector<Vec> emb = embedding(trainers[static_cast<std::size_t>(i)], states);
            double mean_sq = 0.0;
            for (std::size_t m = 0; m < states.size(); ++m)
                mean_sq += squared_distance(emb[m], ref[m]);
            mean_sq /= static_cast<double>(states.size());
            sims[static_cast<std::size_t>(i)] = -std::sqrt(mean_sq);
        }
    }
    return {sims, hard_rank(sims)};
}

LossVector loss_vector(const Vec& policy_losses, int t) {
    const int n = static_cast<int>(policy_losses.size());
    if (t < 0 || t >= n) throw std::invalid_argument("loss_vector: task out of range");
    LossVector out;
    out.excluding.reserve(static_cast<std::size_t>(n - 1));
    for (int j = 0; j < n; ++j)
        if (j != t) out.excluding.push_back(policy_losses[static_cast<std::size_t>(j)]);
    out.ranks = hard_rank(policy_losses);
    return out;
}

Vec CompositeTerms::as_vector(bool with_prior) const {
    Vec v{base, coupling, mutual_rank, loss_rank, sim_rank};
    if (with_prior) v.push_back(prior_rank);
    return v;
}

CompositeProblem build_composite(int t, const TransferMatrix& B, const std::vector<Vec>& w_all,
                                 const Vec& losses, const MutualEval& mutual,
                                 const std::vector<int>& sim_ranks,
                                 const std::vector<int>& trained_order,
                                 const std::vector<int>& untrained, const HyperConfig& hp,
                                 const Vec& lambda, const std::optional<ExtraRankTerm>& prior) {
    const int n = B.size();
    if (t < 0 || t >= n) throw std::invalid_argument("build_composite: task out of range");
    if (static_cast<int>(w_all.size()) != n || static_cast<int>(losses.size()) != n ||
        mutual.size() != n || static_cast<int>(sim_ranks.size()) != n)
        throw std::invalid_argument("build_composite: input sizes disagree with task count");
    const std::size_t expected_lambda = prior.has_value() ? 6 : 5;
    if (lambda.size() != expected_lambda)
        throw std::invalid_argument("build_composite: lambda must have 5 (or 6 with prior) entries");
    if (std::find(untrained.begin(), untrained.end(), t) == untrained.end())
        throw std::invalid_argument("build_composite: t must be untrained");

    CompositeProblem p;
    p.task_ = t;
    p.n_tasks_ = n;
    p.radius_ = hp.radius;
    p.mu1_ = hp.mu1;
    p.mu2_ = hp.mu2;
    p.d_ = hp.d;
    p.lambda_ = lambda;
    p.prior_ = prior;
    p.sim_ranks_ = sim_ranks;

    const LossVector lv = loss_vector(losses, t);
    p.loss_t_ = losses[static_cast<std::size_t>(t)];
    p.losses_excl_ = lv.excluding;
    p.loss_ranks_ = lv.ranks;

    // Ranking targets from recorded cross-task performance: tasks with a
    // (possibly stale) p_{t,i}, best performance ranked 1.
    Vec p_values;
    for (int i = 0; i < n; ++i) {
        if (i == t || !mutual.has(t, i)) continue;
        p.mutual_b_idx_.push_back(b_index(i, t));
        p_values.push_back(mutual.pm(t, i));
    }
    if (!p_values.empty()) p.mutual_targets_ = hard_rank(p_values);

    // Quadratic coupling over still-untrained tasks, with already-trained
    // contributions folded into a constant per column.
    p.w_t_ = w_all[static_cast<std::size_t>(t)];
    p.wt_sq_ = dot(p.w_t_, p.w_t_);
    for (int s : untrained) {
        if (s == t) continue;
        Vec c = w_all[static_cast<std::size_t>(s)];
        for (int j : trained_order) {
            const double w = B.at(j, s);
            if (w == 0.0) continue;
            const Vec& wj = w_all[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < c.size(); ++i) c[i] -= w * wj[i];
        }
        p.coupling_b_idx_.push_back(b_index(s, t));
        p.coupling_cross_.push_back(dot(p.w_t_, c));
        p.coupling_const_sq_.push_back(dot(c, c));
        p.coupling_const_.push_back(std::move(c));
    }

    if (prior.has_value()) {
        if (prior->row_indices.size() != prior->targets.size() || prior->row_indices.size() < 2)
            throw std::invalid_argument("build_composite: malformed prior term");
        for (int idx : prior->row_indices)
            if (idx < 0 || idx >= n)
                throw std::invalid_argument("build_composite: prior index out of range");
    }
    return p;
}

Vec CompositeProblem::full_row(const Vec& b) const {
    Vec row(static_cast<std::size_t>(n_tasks_));
    for (int j = 0; j < n_tasks_; ++j) {
        if (j == task_)
            row[static_cast<std::size_t>(j)] = 1.0;
        else
            row[static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(b_index(j, task_))];
    }
    return row;
}

void CompositeProblem::check_b(const Vec& b) const {
    if (static_cast<int>(b.size()) != n_tasks_ - 1)
        throw std::invalid_argument("composite: b has wrong length");
    double sum = 0.0;
    for (double v : b) {
        if (v < -1e-9) throw std::invalid_argument("composite: b has negative entry");
        sum += std::abs(v);
    }
    if (sum > radius_ + 1e-9) throw std::invalid_argument("composite: b exceeds the L1 budget");
}

CompositeTerms CompositeProblem::terms(const Vec& b) const {
    check_b(b);
    CompositeTerms out;

    double sum_b = 0.0;
    for (double v : b) sum_b += v;
    out.base = lambda_[0] * ((1.0 + mu1_ * sum_b) * loss_t_ - mu2_ * dot(b, losses_excl_));

    double coupling = 0.0;
    for (std::size_t k = 0; k < coupling_b_idx_.size(); ++k) {
        const double bs = b[static_cast<std::size_t>(coupling_b_idx_[k])];
        coupling += coupling_const_sq_[k] - 2.0 * bs * coupling_cross_[k] + bs * bs * wt_sq_;
    }
    out.coupling = lambda_[1] * coupling;

    if (!mutual_b_idx_.empty()) {
        Vec values(mutual_b_idx_.size());
        for (std::size_t k = 0; k < mutual_b_idx_.size(); ++k)
            values[k] = b[static_cast<std::size_t>(mutual_b_idx_[k])];
        out.mutual_rank = lambda_[2] * rank_loss({values, mutual_targets_, d_});
    }

    const Vec row = full_row(b);
    out.loss_rank = lambda_[3] * rank_loss({row, loss_ranks_, d_});
    out.sim_rank = lambda_[4] * rank_loss({row, sim_ranks_, d_});

    if (prior_.has_value()) {
        Vec values(prior_->row_indices.size());
        for (std::size_t k = 0; k < values.size(); ++k)
            values[k] = row[static_cast<std::size_t>(prior_->row_indices[k])];
        out.prior_rank = lambda_[5] * rank_loss({values, prior_->targets, d_});
    }
    return out;
}

Vec CompositeProblem::gradient(const Vec& b) const {
    check_b(b);
    Vec g(b.size(), 0.0);

    for (std::size_t j = 0; j < b.size(); ++j)
        g[j] = lambda_[0] * (mu1_ * loss_t_ - mu2_ * losses_excl_[j]);

    for (std::size_t k = 0; k < coupling_b_idx_.size(); ++k) {
        const std::size_t j = static_cast<std::size_t>(coupling_b_idx_[k]);
        g[j] += lambda_[1] * (-2.0 * coupling_cross_[k] + 2.0 * b[j] * wt_sq_);
    }

    if (!mutual_b_idx_.empty()) {
        Vec values(mutual_b_idx_.size());
        for (std::size_t k = 0; k < mutual_b_idx_.size(); ++k)
            values[k] = b[static_cast<std::size_t>(mutual_b_idx_[k])];
        const Vec rg = rank_loss_grad({values, mutual_targets_, d_});
        for (std::size_t k = 0; k < mutual_b_idx_.size(); ++k)
            g[static_cast<std::size_t>(mutual_b_idx_[k])] += lambda_[2] * rg[k];
    }

    const Vec row = full_row(b);
    const Vec g3 = rank_loss_grad({row, loss_ranks_, d_});
    const Vec g4 = rank_loss_grad({row, sim_ranks_, d_});
    for (int j = 0; j < n_tasks_; ++j) {
        if (j == task_) continue;  // diagonal entry is constant
        const std::size_t bi = static_cast<std::size_t>(b_index(j, task_));
        g[bi] += lambda_[3] * g3[static_cast<std::size_t>(j)] +
                 lambda_[4] * g4[static_cast<std::size_t>(j)];
    }

    if (prior_.has_value()) {
        Vec values(prior_->row_indices.size());
        for (std::size_t k = 0; k < values.size(); ++k)
            values[k] = row[static_cast<std::size_t>(prior_->row_indices[k])];
        const Vec rg = rank_loss_grad({values, prior_->targets, d_});
        for (std::size_t k = 0; k < values.size(); ++k) {
            const int j = prior_->row_indices[k];
            if (j == task_) continue;
            g[static_cast<std::size_t>(b_index(j, task_))] += lambda_[5] * rg[k];
        }
    }
    return g;
}

Vec CompositeProblem::coupling_w_gradient(const Vec& b) const {
    check_b(b);
    Vec g(w_t_.size(), 0.0);
    for (std::size_t k = 0; k < coupling_b_idx_.size(); ++k) {
        const double bs = b[static_cast<std::size_t>(coupling_b_idx_[k])];
        if (bs == 0.0) continue;
        // d/dw_t ||c_s - b_s w_t||^2 = -2 b_s (c_s - b_s w_t)
        const Vec& c = coupling_const_[k];
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += lambda_[1] * (-2.0 * bs) * (c[i] - bs * w_t_[i]);
    }
    return g;
}

Objective CompositeProblem::as_objective() const {
    return {[this](const Vec& b) { return value(b); },
            [this](const Vec& b) { return gradient(b); }};
}

double composite_objective(const CompositeProblem& problem, const Vec& b) {
    return problem.value(b);
}

Vec composite_gradient(const CompositeProblem& problem, const Vec& b) {
    return problem.gradient(b);
}

}  // namespace camrl

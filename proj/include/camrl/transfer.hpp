#pragma once

#include <optional>

#include "camrl/ranking.hpp"
#include "camrl/solver.hpp"
#include "camrl/tasks.hpp"

namespace camrl {

/// T x T asymmetric transfer weights. Invariants: unit diagonal, nonnegative
/// off-diagonal entries, and each row's off-diagonal L1 norm within the
/// budget. Row t with the diagonal removed is the outgoing-transfer vector
/// optimized by the solver.
class TransferMatrix {
public:
    static TransferMatrix identity(int task_count);

    int size() const { return n_; }
    double at(int s, int t) const { return data_[static_cast<std::size_t>(s * n_ + t)]; }
    const Vec& row_major() const { return data_; }

    /// Row t without the diagonal entry, length T-1.
    Vec outgoing_row(int t) const;

    /// Writes an outgoing row back without touching the diagonal. Rejects
    /// vectors that would break the invariants.
    void set_outgoing_row(int t, const Vec& b, double radius);

    /// Full row t including the diagonal, length T.
    Vec full_row(int t) const;

    /// (T+1) x (T+1) matrix: old block bit-exact, new row/column zero, new
    /// diagonal entry 1.
    TransferMatrix extended() const;

    void validate(double radius) const;

private:
    TransferMatrix(int n, Vec data) : n_(n), data_(std::move(data)) {}
    int n_ = 0;
    Vec data_;
};

/// Loss coefficients and loop sizes shared across the library. Defaults are
/// the published operating point (a=1000, b=1/40, c=2, d=200,
/// mu1=mu2=0.01, radius=0.05, epsilon=0.01).
struct HyperConfig {
    double a = 1000.0;
    double b = 1.0 / 40.0;
    double c = 2.0;
    double d = 200.0;
    double mu1 = 0.01;
    double mu2 = 0.01;
    double radius = 0.05;
    double epsilon = 0.01;
    int episodes_per_epoch = 10;  // K
    int warmup_epochs = 5;        // N
    int fw_iters = 50;
    int eval_episodes = 20;

    void validate() const;
};

/// Cross-task evaluation results. pm(s, t) is the average reward of task s's
/// network evaluated on task t; entries persist until overwritten by a later
/// mutual-evaluation draw.
class MutualEval {
public:
    explicit MutualEval(int task_count);

    int size() const { return n_; }
    bool has(int s, int t) const { return set_[static_cast<std::size_t>(s * n_ + t)] != 0; }
    double pm(int s, int t) const;
    int last_updated(int s, int t) const { return updated_[static_cast<std::size_t>(s * n_ + t)]; }
    void record(int s, int t, double value, int epoch);

    MutualEval extended() const;

private:
    int n_;
    Vec pm_;
    std::vector<char> set_;
    std::vector<int> updated_;
};

/// Column-wise ascending ranks of PM: within each column, the smallest entry
/// gets rank 1 and the largest gets rank T, so a bigger rank means better
/// evaluation performance. Unset entries rank lowest; ties break by row
/// index. Returned row-major, T x T.
std::vector<int> performance_rank_matrix(const MutualEval& mutual);

/// Per epoch: draw 3 random task pairs and cross-evaluate both directions of
/// each pair over eval_episodes greedy episodes. No-op with fewer than two
/// tasks.
void mutual_eval_update(std::vector<TaskTrainer>& trainers, const std::vector<GridTask>& tasks,
                        MutualEval& mutual, Rng& rng, const HyperConfig& hp, int epoch);

enum class SimilarityMeasure {
    CriticCosine,        // cosine of flattened critic parameters
    EmbeddingDistance,   // negative RMS actor-embedding distance over 100 states
};

struct SimilarityResult {
    Vec sims;                 // s_{i,t} for all i, self entry included
    std::vector<int> ranks;   // descending ranks (most similar task = 1)
};

SimilarityResult similarity_vector(const std::vector<TaskTrainer>& trainers, int t,
                                   SimilarityMeasure measure, Rng& rng);

/// Policy losses of all tasks split for task t: the vector with index t
/// removed plus descending ranks over the full vector (hardest task = 1).
struct LossVector {
    Vec excluding;            // l_t^o, length T-1
    std::vector<int> ranks;   // length T
};

LossVector loss_vector(const Vec& policy_losses, int t);

/// Optional extra ranking term over full-row coordinates (used for external
/// difficulty priors): selected row indices and their target ranks 1..q.
struct ExtraRankTerm {
    std::vector<int> row_indices;
    std::vector<int> targets;
};

/// Per-term values of the composite objective, already weighted by their
/// lambda coefficients.
struct CompositeTerms {
    double base = 0.0;        // lambda0 [(1 + mu1 sum b) L(w_t) - mu2 b . l_t^o]
    double coupling = 0.0;    // lambda1 sum_s ||w_s - sum_j B_{pi(j)s} w_pi(j) - b_s w_t||^2
    double mutual_rank = 0.0; // lambda2 ranking vs recorded cross-task performance
    double loss_rank = 0.0;   // lambda3 ranking vs task difficulty
    double sim_rank = 0.0;    // lambda4 ranking vs task similarity
    double prior_rank = 0.0;  // lambda5 ranking vs external priors (optional)

    double total() const {
        return base + coupling + mutual_rank + loss_rank + sim_rank + prior_rank;
    }
    Vec as_vector(bool with_prior) const;
};

/// The constrained objective minimized over one outgoing-transfer row, with
/// every input frozen at construction time. value/gradient reject infeasible
/// points.
class CompositeProblem {
public:
    CompositeProblem() = default;  // empty problem; assemble via build_composite

    double value(const Vec& b) const { return terms(b).total(); }
    CompositeTerms terms(const Vec& b) const;
    Vec gradient(const Vec& b) const;

    /// Gradient of the coupling term with respect to w_t at the given b
    /// (the only objective term with a deterministic w_t dependence).
    Vec coupling_w_gradient(const Vec& b) const;

    Objective as_objective() const;

    int task() const { return task_; }
    int dimension() const { return n_tasks_ - 1; }
    double radius() const { return radius_; }

private:
    friend CompositeProblem build_composite(int t, const TransferMatrix& B,
                                            const std::vector<Vec>& w_all, const Vec& losses,
                                            const MutualEval& mutual,
                                            const std::vector<int>& sim_ranks,
                                            const std::vector<int>& trained_order,
                                            const std::vector<int>& untrained,
                                            const HyperConfig& hp, const Vec& lambda,
                                            const std::optional<ExtraRankTerm>& prior);

    Vec full_row(const Vec& b) const;
    void check_b(const Vec& b) const;

    int task_ = 0;
    int n_tasks_ = 0;
    double radius_ = 0.0;
    double mu1_ = 0.0, mu2_ = 0.0, d_ = 0.0;
    Vec lambda_;
    double loss_t_ = 0.0;
    Vec losses_excl_;
    std::vector<int> loss_ranks_;
    std::vector<int> sim_ranks_;
    std::vector<int> mutual_b_idx_;       // b coordinates with a recorded p_{t,i}
    std::vector<int> mutual_targets_;
    std::vector<int> coupling_b_idx_;     // b coordinates for s in U \ {t}
    std::vector<Vec> coupling_const_;     // w_s - sum_j B_{pi(j)s} w_pi(j)
    Vec coupling_cross_;                  // <w_t, coupling_const_s>
    Vec coupling_const_sq_;               // ||coupling_const_s||^2
    Vec w_t_;
    double wt_sq_ = 0.0;
    std::optional<ExtraRankTerm> prior_;
};

/// Assembles the objective for task t at the current transfer matrix.
/// lambda carries 5 entries, or 6 when a prior term is supplied.
/// trained_order is the in-order list of tasks already trained this cycle;
/// untrained is the current complement (t must be in it).
CompositeProblem build_composite(int t, const TransferMatrix& B, const std::vector<Vec>& w_all,
                                 const Vec& losses, const MutualEval& mutual,
                                 const std::vector<int>& sim_ranks,
                                 const std::vector<int>& trained_order,
                                 const std::vector<int>& untrained, const HyperConfig& hp,
                                 const Vec& lambda,
                                 const std::optional<ExtraRankTerm>& prior = std::nullopt);

/// Convenience wrappers evaluating one point.
double composite_objective(const CompositeProblem& problem, const Vec& b);
Vec composite_gradient(const CompositeProblem& problem, const Vec& b);

}  // namespace camrl

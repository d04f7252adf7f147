#pragma once

#include <optional>
#include <string>

#include "camrl/transfer.hpp"

namespace camrl {

enum class Mode { Parallel, Curriculum };
const char* mode_name(Mode mode);

/// Branch convention for the mode switch. CurriculumWhenBelow (the default)
/// picks curriculum training when u < I_mul, matching the indicator's
/// construction (each term grows when joint training should be likelier);
/// ParallelWhenBelow is the inverted convention, selectable from config.
enum class ImulBranch { CurriculumWhenBelow, ParallelWhenBelow };

struct ImulTerms {
    double epoch_decay = 0.0;  // exp(-n / a)
    double progress = 0.0;     // min(1, exp(-L_nor * b))
    double dispersion = 0.0;   // fraction of tasks outside the +-c std band
    double value = 0.0;
};

/// Epoch bookkeeping: per-task histories, one history per composite-loss
/// term (appended on curriculum epochs), the mode log, and the curriculum
/// cycle (trained order pi and untrained set, disjoint, covering all tasks).
struct EpochState {
    int epoch = 0;  // 1-based index of the epoch in progress
    std::vector<Vec> policy_loss_history;
    std::vector<Vec> reward_history;
    std::vector<Vec> term_history;
    std::vector<Mode> mode_log;
    std::vector<int> trained_order;
    std::vector<int> untrained;  // ascending

    int task_count() const { return static_cast<int>(policy_loss_history.size()); }
};

/// The mode-switch indicator and its three terms, each in [0, 1]:
///   (i)  exp(-n/a) with n the current epoch;
///   (ii) exp(-L_nor * b) clamped to 1, where L_nor averages each task's
///        last policy loss z-scored against its own history;
///  (iii) the fraction of tasks whose history-normalized last reward falls
///        strictly outside [mean - c std, mean + c std] across tasks
///        (population std).
/// value = weights . terms. Requires at least one recorded epoch.
ImulTerms compute_imul(const EpochState& state, const HyperConfig& hp, const Vec& weights);

double combine_imul(const ImulTerms& terms, const Vec& weights);

Mode switch_mode(double imul, double u, ImulBranch branch);

struct HyperState {
    Vec lambda;
    Vec sigma;
};

/// Uncertainty-driven loss weights from the per-term histories:
/// sigma_i = standard error (sample std / sqrt(count), 0 below two samples),
/// lambda_0 = 1/(2 sigma_0^2 + eps), lambda_i = 1/(4 sigma_i^2 + eps).
HyperState update_lambdas(const std::vector<Vec>& term_histories, double epsilon);

/// Externally supplied difficulty ranks per task (1 = easiest / best public
/// performance); absent entries are skipped. Ties allowed, broken by index.
struct PriorKnowledge {
    std::vector<std::optional<int>> ranks;
};

/// Ranking targets over the B-row coordinates of tasks with a prior: the
/// easiest task gets the largest target rank, so minimizing the loss pushes
/// its transfer weight down. Empty below two present tasks.
std::optional<ExtraRankTerm> prior_rank_term(const PriorKnowledge& prior);

/// rank_loss over the prior-bearing entries of a full B row; 0 with fewer
/// than two present tasks.
double prior_knowledge_loss(const PriorKnowledge& prior, const Vec& b_row, double d);
Vec prior_knowledge_loss_grad(const PriorKnowledge& prior, const Vec& b_row, double d);

struct AblationFlags {
    bool disable_mode_switch = false;  // always curriculum after warmup
    bool force_parallel = false;       // always parallel (single-task baseline)
    bool term1_off = false;            // epoch-decay term contributes 0
    bool term2_off = false;            // progress term contributes 0
    bool c_zero = false;
    bool d_zero = false;
    bool lambda2_zero = false;
    bool lambda3_zero = false;
    bool lambda4_zero = false;
    bool freeze_lambda = false;        // disable auto-adjustment
    Vec fixed_lambda = {1.0, 0.01, 0.01, 0.01, 0.01};
};

/// Resolves ablation flags into the hyper parameters actually used (c and d
/// overrides) plus the flags. Rejects contradictory combinations.
struct EffectiveControls {
    HyperConfig hyper;
    AblationFlags flags;
};
EffectiveControls ablation_controls(const HyperConfig& hp, const AblationFlags& flags);

/// Full run settings. Serialization lives in config.hpp.
struct RunConfig {
    std::uint64_t seed = 0;
    int epochs = 300;  // main-loop epochs after warmup
    SuiteSpec suite = SuiteSpec::defaults();
    int hidden1 = 8;
    int hidden2 = 8;
    double learning_rate = 0.01;
    double discount = 0.99;
    HyperConfig hyper;
    ImulBranch imul_branch = ImulBranch::CurriculumWhenBelow;
    Vec imul_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    SimilarityMeasure similarity = SimilarityMeasure::CriticCosine;
    AblationFlags ablations;
    std::optional<PriorKnowledge> prior;
    std::string output_dir = "out";

    void validate() const;
};

/// One structured record per epoch; warmup and forced-mode epochs carry no
/// indicator values.
struct EpochRecord {
    int epoch = 0;
    Mode mode = Mode::Parallel;
    std::optional<ImulTerms> imul;
    std::optional<double> u;
    Vec lambda;  // weights in effect during the epoch
    std::optional<int> selected_task;
    std::optional<double> fw_objective;
    Vec policy_loss;
    Vec eval_reward;
    Vec b_row_major;
    std::vector<int> pr_row_major;
};

using MetricsSink = std::function<void(const EpochRecord&)>;

struct SelectionResult {
    int task = -1;
    double objective = 0.0;
    CompositeProblem problem;
};

/// Evaluates the composite objective for every untrained task at its current
/// outgoing row and returns the argmin (lowest index on ties). Throws when
/// the untrained set is empty; the caller resets the cycle first.
SelectionResult select_next_task(const EpochState& state, const TransferMatrix& B,
                                 const std::vector<TaskTrainer>& trainers,
                                 const MutualEval& mutual, const HyperConfig& hp,
                                 const Vec& lambda, SimilarityMeasure measure, Rng& rng,
                                 const std::optional<ExtraRankTerm>& prior);

/// Owns one training run: tasks, trainers, transfer matrix, mutual
/// evaluation, histories, and the random streams, all derived from one
/// master seed. Single-threaded and fully deterministic. add_task extends a
/// finished or in-progress run to T+1 tasks without touching the existing
/// trainers.
class Simulation {
public:
    explicit Simulation(const RunConfig& config, MetricsSink sink = {});

    void run();  // warmup then config.epochs main epochs
    void run_warmup();
    void run_main_epoch();
    void add_task(const GridTask& task);

    int task_count() const { return static_cast<int>(tasks_.size()); }
    const TransferMatrix& transfer() const { return b_; }
    const MutualEval& mutual() const { return mutual_; }
    const EpochState& state() const { return state_; }
    const HyperState& hyper_state() const { return hyper_; }
    const std::vector<TaskTrainer>& trainers() const { return trainers_; }
    const std::vector<GridTask>& tasks() const { return tasks_; }

    Vec final_eval_rewards() const;
    Vec final_policy_losses() const;

private:
    void train_all_parallel(std::vector<char>& trained_now, std::vector<TrainStats>& stats);
    void finish_epoch(Mode mode, const std::optional<ImulTerms>& imul, std::optional<double> u,
                      std::optional<int> selected, std::optional<double> fw_objective,
                      const std::vector<char>& trained_now, const std::vector<TrainStats>& stats);
    void refresh_lambdas();
    Vec last_losses() const;

    RunConfig cfg_;
    EffectiveControls controls_;
    MetricsSink sink_;
    std::vector<GridTask> tasks_;
    std::vector<TaskTrainer> trainers_;
    std::vector<Rng> eval_rngs_;
    Rng sched_rng_;
    Rng mutual_rng_;
    TransferMatrix b_;
    MutualEval mutual_;
    EpochState state_;
    HyperState hyper_;
    std::optional<PriorKnowledge> prior_;
    std::optional<ExtraRankTerm> prior_term_;
};

struct RunSummary {
    int task_count = 0;
    int epochs_run = 0;
    Vec final_eval;
    Vec final_policy_loss;
    Vec b_row_major;
    std::vector<int> pr_row_major;
};

RunSummary run_training(const RunConfig& config, MetricsSink sink = {});

}  // namespace camrl

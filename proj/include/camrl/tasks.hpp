#pragma once

#include "camrl/numcore.hpp"

namespace camrl {

inline constexpr int kNumActions = 4;  // up, down, left, right
inline constexpr int kObsDim = 4;      // normalized (x, y, goal_x, goal_y)

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Small episodic gridworld. Moving into a wall or obstacle keeps the agent
/// in place; every step pays step_reward and reaching the goal additionally
/// pays goal_reward and ends the episode. With probability slip_prob the
/// chosen action is replaced by a uniformly random one.
struct GridTask {
    int width = 0;
    int height = 0;
    Cell start;
    Cell goal;
    std::vector<int> obstacles;  // sorted cell ids y * width + x
    double step_reward = -0.01;
    double goal_reward = 1.0;
    double slip_prob = 0.0;
    int max_steps = 0;

    int cell_id(Cell c) const { return c.y * width + c.x; }
    bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
    bool blocked(Cell c) const;

    /// Observation shared by all tasks: cell centers scaled to (0, 1), so one
    /// network shape fits every grid size.
    Vec observation(Cell c) const;

    void validate() const;
};

struct StepResult {
    Cell next;
    double reward;
    bool done;
};

StepResult grid_step(const GridTask& task, Cell cell, int action, Rng& rng);

/// Tiered suite description; the default is six tasks in three difficulty
/// tiers (two 4x4 open grids, two 6x6 with obstacles, two 8x8 with slip 0.1).
struct SuiteSpec {
    struct Tier {
        int count = 0;
        int width = 0;
        int height = 0;
        int obstacles = 0;
        double slip_prob = 0.0;
        int max_steps = 0;
    };
    std::vector<Tier> tiers;

    static SuiteSpec defaults();
    int task_count() const;
    void validate() const;
};

/// Deterministic suite for a given seed: start/goal are sampled at least
/// half the grid perimeter apart and obstacle layouts are rejected until a
/// start-goal path exists.
std::vector<GridTask> make_task_suite(std::uint64_t seed, const SuiteSpec& spec);

struct Transition {
    Vec obs;
    int action = 0;
    double reward = 0.0;
    Vec next_obs;
    bool terminal = false;
};

struct Episode {
    std::vector<Transition> transitions;
    double total_reward = 0.0;
};

struct TrainStats {
    double mean_policy_loss = 0.0;
    double mean_reward = 0.0;
};

/// Actor-critic pair for one task. The actor maps an observation to action
/// logits; the critic maps observation + action one-hot to a scalar Q value.
/// All trainers in a suite share the same parameter dimensionality, which the
/// cross-task coupling term requires.
class TaskTrainer {
public:
    /// learning_rate drives the critic; the actor uses
    /// learning_rate * actor_lr_scale. The actor's gradient magnitude scales
    /// with the policy's action-value spread, which is an order of magnitude
    /// smaller than the critic's TD residuals, so it needs the larger step to
    /// track the critic at all.
    TaskTrainer(int hidden1, int hidden2, double learning_rate, double discount, Rng rng,
                double actor_lr_scale = 20.0);

    const MlpParams& actor() const { return actor_; }
    const MlpParams& critic() const { return critic_; }
    MlpParams& actor() { return actor_; }
    MlpParams& critic() { return critic_; }

    /// w_t: flattened actor followed by flattened critic.
    Vec flat_params() const;
    void set_flat_params(const Vec& w);
    int flat_param_count() const;

    double learning_rate() const { return learning_rate_; }
    double actor_lr_scale() const { return actor_lr_scale_; }
    double discount() const { return discount_; }
    Rng& rng() { return rng_; }

private:
    MlpParams actor_;
    MlpParams critic_;
    double learning_rate_;
    double actor_lr_scale_;
    double discount_;
    Rng rng_;
};

Episode run_episode(const TaskTrainer& trainer, const GridTask& task, Rng& rng);

/// mean over transitions of log pi(a|s) - Q(a, s); the per-task training
/// signal consumed by the curriculum layer.
double policy_loss(const TaskTrainer& trainer, const std::vector<Episode>& batch);

/// Collects k episodes, updating the critic by one-step TD regression and
/// the actor by the gradient of sum_a pi(a|s)(log pi(a|s) - Q(s,a)) at each
/// visited state (critic held fixed), one update per episode. The reported
/// policy loss for each episode is computed with the parameters that
/// generated it. When extra_grad is supplied it is applied once at the end
/// as an additional gradient on the flattened parameters.
TrainStats train_step(TaskTrainer& trainer, const GridTask& task, int k_episodes,
                      const Vec* extra_grad = nullptr);

/// Mean total reward over n episodes under greedy (argmax) action selection,
/// no learning.
double evaluate(const TaskTrainer& trainer, const GridTask& task, int n_episodes, Rng& rng);

/// Actor second-hidden-layer activations per state.
std::vector<Vec> embedding(const TaskTrainer& trainer, const std::vector<Vec>& states);

}  // namespace camrl

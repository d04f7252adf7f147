#include "camrl/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace camrl {

namespace {

constexpr int kDx[kNumActions] = {0, 0, -1, 1};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0};

// log softmax via log-sum-exp; stays finite for arbitrarily spread logits.
Vec log_softmax(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double lse = m + std::log(z);
    Vec out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

int argmax(const Vec& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int sample_from(const Vec& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

Vec critic_input(const Vec& obs, int action) {
    Vec in(obs);
    in.resize(obs.size() + kNumActions, 0.0);
    in[obs.size() + static_cast<std::size_t>(action)] = 1.0;
    return in;
}

double q_value(const MlpParams& critic, const Vec& obs, int action) {
    return mlp_forward(critic, critic_input(obs, action)).output[0];
}

bool path_exists(const GridTask& task) {
    std::vector<char> seen(static_cast<std::size_t>(task.width * task.height), 0);
    std::queue<Cell> frontier;
    frontier.push(task.start);
    seen[static_cast<std::size_t>(task.cell_id(task.start))] = 1;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop();
        if (c == task.goal) return true;
        for (int a = 0; a < kNumActions; ++a) {
            const Cell n{c.x + kDx[a], c.y + kDy[a]};
            if (!task.in_bounds(n) || task.blocked(n)) continue;
            char& mark = seen[static_cast<std::size_t>(task.cell_id(n))];
            if (!mark) {
                mark = 1;
                frontier.push(n);
            }
        }
    }
    return false;
}

}  // namespace

bool GridTask::blocked(Cell c) const {
    return std::binary_search(obstacles.begin(), obstacles.end(), cell_id(c));
}

Vec GridTask::observation(Cell c) const {
    return {(c.x + 0.5) / width, (c.y + 0.5) / height, (goal.x + 0.5) / width,
            (goal.y + 0.5) / height};
}

void GridTask::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("grid task: empty grid");
    if (!in_bounds(start) || !in_bounds(goal))
        throw std::invalid_argument("grid task: start/goal out of bounds");
    if (start == goal) throw std::invalid_argument("grid task: start equals goal");
    if (blocked(start) || blocked(goal))
        throw std::invalid_argument("grid task: start/goal on an obstacle");
    if (slip_prob < 0.0 || slip_prob >= 1.0)
        throw std::invalid_argument("grid task: slip_prob must be in [0, 1)");
    if (max_steps < 0) throw std::invalid_argument("grid task: negative max_steps");
    if (!std::is_sorted(obstacles.begin(), obstacles.end()))
        throw std::invalid_argument("grid task: obstacles must be sorted");
}

StepResult grid_step(const GridTask& task, Cell cell, int action, Rng& rng) {
    if (action < 0 || action >= kNumActions) throw std::invalid_argument("grid_step: bad action");
    if (task.slip_prob > 0.0 && rng.uniform() < task.slip_prob) action = rng.uniform_int(kNumActions);
    Cell next{cell.x + kDx[action], cell.y + kDy[action]};
    if (!task.in_bounds(next) || task.blocked(next)) next = cell;
    const bool done = next == task.goal;
    return {next, task.step_reward + (done ? task.goal_reward : 0.0), done};
}

SuiteSpec SuiteSpec::defaults() {
    SuiteSpec spec;
    spec.tiers = {
        {2, 4, 4, 0, 0.0, 32},
        {2, 6, 6, 4, 0.0, 48},
        {2, 8, 8, 0, 0.1, 64},
    };
    return spec;
}

int SuiteSpec::task_count() const {
    int n = 0;
    for (const auto& t : tiers) n += t.count;
    return n;
}

void SuiteSpec::validate() const {
    if (tiers.empty()) throw std::invalid_argument("suite spec: no tiers");
    for (const auto& t : tiers) {
        if (t.count < 1) throw std::invalid_argument("suite spec: tier count must be >= 1");
        if (t.width < 2 || t.height < 2)
            throw std::invalid_argument("suite spec: grids must be at least 2x2");
        if (t.obstacles < 0 || t.obstacles > t.width * t.height - 2)
            throw std::invalid_argument("suite spec: obstacle count out of range");
        if (t.slip_prob < 0.0 || t.slip_prob >= 1.0)
            throw std::invalid_argument("suite spec: slip_prob must be in [0, 1)");
        if (t.max_steps < 1) throw std::invalid_argument("suite spec: max_steps must be >= 1");
    }
}

std::vector<GridTask> make_task_suite(std::uint64_t seed, const SuiteSpec& spec) {
    spec.validate();
    Rng rng = Rng::stream(seed, "suite");
    std::vector<GridTask> tasks;
    tasks.reserve(static_cast<std::size_t>(spec.task_count()));

    for (const auto& tier : spec.tiers) {
        for (int k = 0; k < tier.count; ++k) {
            GridTask task;
            task.width = tier.width;
            task.height = tier.height;
            task.slip_prob = tier.slip_prob;
            task.max_steps = tier.max_steps;
            const int min_dist = (tier.width + tier.height) / 2;

            for (int attempt = 0;; ++attempt) {
                if (attempt >= 200) throw std::runtime_error("make_task_suite: no valid layout");
                task.start = {rng.uniform_int(tier.width), rng.uniform_int(tier.height)};
                task.goal = {rng.uniform_int(tier.width), rng.uniform_int(tier.height)};
                const int dist =
                    std::abs(task.start.x - task.goal.x) + std::abs(task.start.y - task.goal.y);
                if (dist < min_dist) continue;

                task.obstacles.clear();
                bool clash = false;
                while (static_cast<int>(task.obstacles.size()) < tier.obstacles) {
                    const Cell c{rng.uniform_int(tier.width), rng.uniform_int(tier.height)};
                    if (c == task.start || c == task.goal) continue;
                    const int id = task.cell_id(c);
                    if (std::find(task.obstacles.begin(), task.obstacles.end(), id) !=
                        task.obstacles.end()) {
                        clash = true;
                        break;
                    }
                    task.obstacles.push_back(id);
                }
                if (clash) continue;
                std::sort(task.obstacles.begin(), task.obstacles.end());
                if (!path_exists(task)) continue;
                break;
            }
            task.validate();
            tasks.push_back(std::move(task));
        }
    }
    return tasks;
}

TaskTrainer::TaskTrainer(int hidden1, int hidden2, double learning_rate, double discount, Rng rng,
                         double actor_lr_scale)
    : actor_{MlpShape{kObsDim, hidden1, hidden2, kNumActions}, {}},
      critic_{MlpShape{kObsDim + kNumActions, hidden1, hidden2, 1}, {}},
      learning_rate_(learning_rate),
      actor_lr_scale_(actor_lr_scale),
      discount_(discount),
      rng_(rng) {
    actor_ = make_mlp(actor_.shape, rng_);
    critic_ = make_mlp(critic_.shape, rng_);
}

Vec TaskTrainer::flat_params() const {
    Vec w;
    w.reserve(actor_.flat.size() + critic_.flat.size());
    w.insert(w.end(), actor_.flat.begin(), actor_.flat.end());
    w.insert(w.end(), critic_.flat.begin(), critic_.flat.end());
    return w;
}

void TaskTrainer::set_flat_params(const Vec& w) {
    if (w.size() != actor_.flat.size() + critic_.flat.size())
        throw std::invalid_argument("set_flat_params: length mismatch");
    std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(actor_.flat.size()),
              actor_.flat.begin());
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(actor_.flat.size()), w.end(),
              critic_.flat.begin());
}

int TaskTrainer::flat_param_count() const {
    return static_cast<int>(actor_.flat.size() + critic_.flat.size());
}

Episode run_episode(const TaskTrainer& trainer, const GridTask& task, Rng& rng) {
    Episode ep;
    Cell cell = task.start;
    for (int step = 0; step < task.max_steps; ++step) {
        const Vec obs = task.observation(cell);
        const Vec probs = softmax(mlp_forward(trainer.actor(), obs).output);
        const int action = sample_from(probs, rng);
        const StepResult r = grid_step(task, cell, action, rng);
        ep.transitions.push_back({obs, action, r.reward, task.observation(r.next), r.done});
        ep.total_reward += r.reward;
        cell = r.next;
        if (r.done) break;
    }
    return ep;
}

double policy_loss(const TaskTrainer& trainer, const std::vector<Episode>& batch) {
    double sum = 0.0;
    int n = 0;
    for (const Episode& ep : batch) {
        for (const Transition& tr : ep.transitions) {
            const Vec logp = log_softmax(mlp_forward(trainer.actor(), tr.obs).output);
            sum += logp[static_cast<std::size_t>(tr.action)] -
                   q_value(trainer.critic(), tr.obs, tr.action);
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("policy_loss: empty batch");
    return sum / n;
}

namespace {

void apply_episode_update(TaskTrainer& trainer, const Episode& ep) {
    const double lr = trainer.learning_rate();
    const double actor_lr = lr * trainer.actor_lr_scale();

    for (const Transition& tr : ep.transitions) {
        // One-step TD regression toward r + gamma * max_a' Q(s', a'),
        // applied online per transition.
        const Vec q_in = critic_input(tr.obs, tr.action);
        const double q = mlp_forward(trainer.critic(), q_in).output[0];
        double target = tr.reward;
        if (!tr.terminal) {
            double qmax = q_value(trainer.critic(), tr.next_obs, 0);
            for (int a = 1; a < kNumActions; ++a)
                qmax = std::max(qmax, q_value(trainer.critic(), tr.next_obs, a));
            target += trainer.discount() * qmax;
        }
        const MlpGrads cg = mlp_backward(trainer.critic(), q_in, {2.0 * (q - target)});
        for (std::size_t i = 0; i < cg.flat.size(); ++i)
            trainer.critic().flat[i] -= lr * cg.flat[i];

        // Actor: gradient of sum_a pi(a|s)(log pi(a|s) - Q(s,a)) at this
        // state, critic frozen:  d/dz_k = pi_k ((log pi_k - Q_k) - L(s)).
        const Vec logits = mlp_forward(trainer.actor(), tr.obs).output;
        const Vec logp = log_softmax(logits);
        Vec qa(kNumActions);
        for (int a = 0; a < kNumActions; ++a) qa[a] = q_value(trainer.critic(), tr.obs, a);
        double ls = 0.0;
        Vec pi(kNumActions);
        for (int a = 0; a < kNumActions; ++a) {
            pi[a] = std::exp(logp[a]);
            ls += pi[a] * (logp[a] - qa[a]);
        }
        Vec dz(kNumActions);
        for (int a = 0; a < kNumActions; ++a) dz[a] = pi[a] * ((logp[a] - qa[a]) - ls);
        const MlpGrads ag = mlp_backward(trainer.actor(), tr.obs, dz);
        for (std::size_t i = 0; i < ag.flat.size(); ++i)
            trainer.actor().flat[i] -= actor_lr * ag.flat[i];
    }
}

}  // namespace

TrainStats train_step(TaskTrainer& trainer, const GridTask& task, int k_episodes,
                      const Vec* extra_grad) {
    if (k_episodes < 1) throw std::invalid_argument("train_step: k_episodes must be >= 1");
    double loss_sum = 0.0;
    int loss_count = 0;
    double reward_sum = 0.0;
    for (int k = 0; k < k_episodes; ++k) {
        const Episode ep = run_episode(trainer, task, trainer.rng());
        reward_sum += ep.total_reward;
        if (!ep.transitions.empty()) {
            loss_sum += policy_loss(trainer, {ep});
            ++loss_count;
        }
        apply_episode_update(trainer, ep);
    }
    if (extra_grad != nullptr) {
        if (static_cast<int>(extra_grad->size()) != trainer.flat_param_count())
            throw std::invalid_argument("train_step: extra_grad length mismatch");
        Vec w = trainer.flat_params();
        const double lr = trainer.learning_rate();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (*extra_grad)[i];
        trainer.set_flat_params(w);
    }
    return {loss_count > 0 ? loss_sum / loss_count : 0.0, reward_sum / k_episodes};
}

double evaluate(const TaskTrainer& trainer, const GridTask& task, int n_episodes, Rng& rng) {
    if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
    double total = 0.0;
    for (int e = 0; e < n_episodes; ++e) {
        Cell cell = task.start;
        for (int step = 0; step < task.max_steps; ++step) {
            const int action = argmax(mlp_forward(trainer.actor(), task.observation(cell)).output);
            const StepResult r = grid_step(task, cell, action, rng);
            total += r.reward;
            cell = r.next;
            if (r.done) break;
        }
    }
    return total / n_episodes;
}

std::vector<Vec> embedding(const TaskTrainer& trainer, const std::vector<Vec>& states) {
    std::vector<Vec> out;
    out.reserve(states.size());
    for (const Vec& s : states) out.push_back(mlp_forward(trainer.actor(), s).hidden);
    return out;
}

}  // namespace camrl

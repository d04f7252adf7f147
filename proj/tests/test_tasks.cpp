#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "camrl/tasks.hpp"
#include "oracles.hpp"

using namespace camrl;

namespace {

// actions: 0 up, 1 down, 2 left, 3 right
constexpr int kRight = 3;

TaskTrainer make_trainer(std::uint64_t seed, double lr = 0.01) {
    return TaskTrainer(8, 8, lr, 0.99, Rng::stream(seed, "task/0"));
}

void zero_params(TaskTrainer& t) {
    std::fill(t.actor().flat.begin(), t.actor().flat.end(), 0.0);
    std::fill(t.critic().flat.begin(), t.critic().flat.end(), 0.0);
}

// Always moves right; other logits are 800+ below so their probabilities
// underflow to exactly zero.
void craft_go_right(TaskTrainer& t) {
    zero_params(t);
    const MlpShape s = t.actor().shape;
    const int b3 = s.h1 * (s.in + 1) + s.h2 * (s.h1 + 1) + s.out * s.h2;
    t.actor().flat[static_cast<std::size_t>(b3 + kRight)] = 1000.0;
}

// Right until the last column, then down: logit(down) = 4000 * x_norm via a
// one-hot chain through both hidden layers, logit(right) = 3000.
void craft_right_then_down(TaskTrainer& t) {
    zero_params(t);
    const MlpShape s = t.actor().shape;
    const int w2 = s.h1 * (s.in + 1);
    const int w3 = w2 + s.h2 * (s.h1 + 1);
    const int b3 = w3 + s.out * s.h2;
    t.actor().flat[0] = 1.0;                                      // W1[0][0]: reads x_norm
    t.actor().flat[static_cast<std::size_t>(w2)] = 1.0;           // W2[0][0]
    t.actor().flat[static_cast<std::size_t>(w3 + 1 * s.h2)] = 4000.0;  // W3[down][0]
    t.actor().flat[static_cast<std::size_t>(b3 + kRight)] = 3000.0;
}

GridTask two_by_two(Cell start, Cell goal, double slip = 0.0, int max_steps = 16) {
    GridTask task;
    task.width = 2;
    task.height = 2;
    task.start = start;
    task.goal = goal;
    task.slip_prob = slip;
    task.max_steps = max_steps;
    task.validate();
    return task;
}

GridTask open_grid(int side, int max_steps) {
    GridTask task;
    task.width = side;
    task.height = side;
    task.start = {0, 0};
    task.goal = {side - 1, side - 1};
    task.max_steps = max_steps;
    task.validate();
    return task;
}

}  // namespace

TEST_CASE("task suite: determinism, tier structure, invariants") {
    const SuiteSpec spec = SuiteSpec::defaults();
    const auto a = make_task_suite(77, spec);
    const auto b = make_task_suite(77, spec);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].width == b[i].width);
        CHECK(a[i].start == b[i].start);
        CHECK(a[i].goal == b[i].goal);
        CHECK(a[i].obstacles == b[i].obstacles);
        CHECK_NOTHROW(a[i].validate());
    }
    CHECK(a[0].width == 4);
    CHECK(a[2].width == 6);
    CHECK(a[2].obstacles.size() == 4);
    CHECK(a[4].width == 8);
    CHECK(a[4].slip_prob == doctest::Approx(0.1));

    SuiteSpec bad;
    bad.tiers = {{1, 1, 1, 0, 0.0, 4}};
    CHECK_THROWS_AS(make_task_suite(1, bad), std::invalid_argument);
}

TEST_CASE("run episode: one step to an adjacent goal") {
    TaskTrainer t = make_trainer(1);
    craft_go_right(t);
    const GridTask task = two_by_two({0, 0}, {1, 0});
    Rng rng(5);
    const Episode ep = run_episode(t, task, rng);
    REQUIRE(ep.transitions.size() == 1);
    CHECK(ep.total_reward == doctest::Approx(0.99));
    CHECK(ep.transitions[0].terminal);
}

TEST_CASE("run episode: crafted 5x5 policy walks the manhattan path") {
    TaskTrainer t = make_trainer(2);
    craft_right_then_down(t);
    const GridTask task = open_grid(5, 40);
    Rng rng(9);
    const Episode ep = run_episode(t, task, rng);
    CHECK(ep.transitions.size() == 8);
    CHECK(ep.total_reward == doctest::Approx(0.92));
}

TEST_CASE("run episode: zero step budget gives an empty episode") {
    TaskTrainer t = make_trainer(3);
    GridTask task = two_by_two({0, 0}, {1, 1});
    task.max_steps = 0;
    Rng rng(1);
    const Episode ep = run_episode(t, task, rng);
    CHECK(ep.transitions.empty());
    CHECK(ep.total_reward == 0.0);
}

TEST_CASE("policy loss closed-form cases") {
    const GridTask task = two_by_two({0, 0}, {1, 1});

    TaskTrainer uniform = make_trainer(4);
    zero_params(uniform);
    Rng rng(2);
    const Episode ep = run_episode(uniform, task, rng);
    REQUIRE(!ep.transitions.empty());
    CHECK(policy_loss(uniform, {ep}) == doctest::Approx(std::log(0.25)).epsilon(1e-12));

    TaskTrainer det = make_trainer(5);
    craft_go_right(det);
    Rng rng2(3);
    const GridTask right_task = two_by_two({0, 0}, {1, 0});
    const Episode ep2 = run_episode(det, right_task, rng2);
    CHECK(policy_loss(det, {ep2}) == 0.0);  // log 1 - 0, exactly

    // Q == 5 via the critic's output bias, deterministic policy: loss = -5
    TaskTrainer q5 = make_trainer(6);
    craft_go_right(q5);
    std::fill(q5.critic().flat.begin(), q5.critic().flat.end(), 0.0);
    q5.critic().flat.back() = 5.0;
    CHECK(policy_loss(q5, {ep2}) == doctest::Approx(-5.0));

    CHECK_THROWS_AS(policy_loss(det, {}), std::invalid_argument);
}

TEST_CASE("train step: zero learning rate leaves parameters unchanged") {
    TaskTrainer t(8, 8, 0.0, 0.99, Rng::stream(10, "task/0"));
    const GridTask task = two_by_two({0, 0}, {1, 1});
    const Vec before = t.flat_params();
    const TrainStats stats = train_step(t, task, 5);
    CHECK(t.flat_params() == before);
    CHECK(std::isfinite(stats.mean_policy_loss));
    CHECK(std::isfinite(stats.mean_reward));
}

TEST_CASE("train step: fixed seeds reproduce parameters bit-exactly") {
    const GridTask task = two_by_two({0, 0}, {1, 1});
    TaskTrainer a = make_trainer(20);
    TaskTrainer b = make_trainer(20);
    for (int e = 0; e < 5; ++e) {
        train_step(a, task, 4);
        train_step(b, task, 4);
    }
    CHECK(a.flat_params() == b.flat_params());
}

TEST_CASE("train step: extra gradient shifts parameters by -lr * g") {
    const GridTask task = two_by_two({0, 0}, {1, 1});
    TaskTrainer a = make_trainer(21, 0.05);
    TaskTrainer b = make_trainer(21, 0.05);
    Vec extra(static_cast<std::size_t>(a.flat_param_count()), 0.0);
    extra[7] = 2.0;
    train_step(a, task, 3);
    train_step(b, task, 3, &extra);
    const Vec pa = a.flat_params();
    const Vec pb = b.flat_params();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (i == 7)
            CHECK(pb[i] == doctest::Approx(pa[i] - 0.05 * 2.0).epsilon(1e-15));
        else
            CHECK(pb[i] == pa[i]);
    }
}

TEST_CASE("evaluate: deterministic crafted policy scores 0.92 for any episode count") {
    TaskTrainer t = make_trainer(30);
    craft_right_then_down(t);
    const GridTask task = open_grid(5, 40);
    Rng r1(1), r2(2);
    CHECK(evaluate(t, task, 1, r1) == doctest::Approx(0.92));
    CHECK(evaluate(t, task, 7, r2) == doctest::Approx(0.92));
}

TEST_CASE("evaluate: zero slip means zero variance across episodes") {
    TaskTrainer t = make_trainer(31);
    const GridTask task = open_grid(4, 32);
    Rng r1(1), r2(99);
    const double a = evaluate(t, task, 1, r1);
    const double b = evaluate(t, task, 25, r2);
    CHECK(a == b);
}

TEST_CASE("uniform-random actor matches a monte-carlo oracle") {
    TaskTrainer t = make_trainer(32);
    zero_params(t);  // uniform policy
    const GridTask task = two_by_two({0, 0}, {1, 1});

    // oracle: independent simulator with its own rng and dynamics
    std::mt19937 gen(12345);
    std::uniform_int_distribution<int> pick(0, 3);
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {0, 0, 0, 0};
    const int dyv[4] = {-1, 1, 0, 0};
    (void)dy;
    const int oracle_n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int e = 0; e < oracle_n; ++e) {
        int x = 0, y = 0;
        double total = 0.0;
        for (int step = 0; step < task.max_steps; ++step) {
            const int a = pick(gen);
            int nx = x + dx[a], ny = y + dyv[a];
            if (nx < 0 || nx > 1 || ny < 0 || ny > 1) {
                nx = x;
                ny = y;
            }
            const bool done = (nx == 1 && ny == 1);
            total += -0.01 + (done ? 1.0 : 0.0);
            x = nx;
            y = ny;
            if (done) break;
        }
        sum += total;
        sumsq += total * total;
    }
    const double oracle_mean = sum / oracle_n;
    const double oracle_var = sumsq / oracle_n - oracle_mean * oracle_mean;

    const int n = 20000;
    Rng rng(4242);
    double got = 0.0;
    for (int e = 0; e < n; ++e) got += run_episode(t, task, rng).total_reward;
    got /= n;

    const double se = std::sqrt(oracle_var / oracle_n + oracle_var / n);
    CHECK(std::abs(got - oracle_mean) <= 3.0 * se);
}

TEST_CASE("embedding: zero actor, identical trainers, width") {
    TaskTrainer t = make_trainer(40);
    zero_params(t);
    const std::vector<Vec> states = {{0.1, 0.2, 0.3, 0.4}, {0.9, 0.8, 0.7, 0.6}};
    const auto emb = embedding(t, states);
    REQUIRE(emb.size() == 2);
    for (const Vec& e : emb) {
        CHECK(e.size() == 8);
        for (double v : e) CHECK(v == 0.0);
    }
    TaskTrainer a = make_trainer(41);
    TaskTrainer b = make_trainer(41);
    CHECK(embedding(a, states) == embedding(b, states));
}

TEST_CASE("flat parameter view round-trips bit-exactly and dims agree across a suite") {
    const auto tasks = make_task_suite(7, SuiteSpec::defaults());
    std::vector<TaskTrainer> trainers;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        trainers.emplace_back(8, 8, 0.01, 0.99, Rng::stream(7, "task/" + std::to_string(i)));
    const int dim = trainers[0].flat_param_count();
    for (TaskTrainer& t : trainers) {
        CHECK(t.flat_param_count() == dim);
        const Vec w = t.flat_params();
        t.set_flat_params(w);
        CHECK(t.flat_params() == w);
    }
}

TEST_CASE("actor gradient path agrees with finite differences on a frozen loss") {
    Rng rng(50);
    int tested = 0;
    while (tested < 20) {
        TaskTrainer t(6, 5, 0.01, 0.99, Rng::stream(1000 + tested, "task/0"));
        const Vec obs = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        Vec q(4);
        for (double& v : q) v = rng.uniform(-1, 1);

        const MlpShape s = t.actor().shape;
        const oracle::MlpTrace tr =
            oracle::eval_mlp(oracle::split_flat(t.actor().flat, s.in, s.h1, s.h2, s.out), obs);
        bool near_kink = false;
        for (double z : tr.pre1) near_kink |= std::abs(z) < 1e-4;
        for (double z : tr.pre2) near_kink |= std::abs(z) < 1e-4;
        if (near_kink) continue;

        // frozen one-state loss: sum_a pi(a)(log pi(a) - q_a), critic frozen
        const auto loss_of = [&](const Vec& flat) {
            const MlpParams probe{s, flat};
            const Vec logits = mlp_forward(probe, obs).output;
            double m = logits[0];
            for (double v : logits) m = std::max(m, v);
            double z = 0.0;
            for (double v : logits) z += std::exp(v - m);
            const double lse = m + std::log(z);
            double loss = 0.0;
            for (int a = 0; a < 4; ++a) {
                const double logp = logits[static_cast<std::size_t>(a)] - lse;
                loss += std::exp(logp) * (logp - q[static_cast<std::size_t>(a)]);
            }
            return loss;
        };

        // analytic: dz_k = pi_k ((log pi_k - q_k) - loss)
        const Vec logits = mlp_forward(t.actor(), obs).output;
        const Vec pi = softmax(logits);
        const double base = loss_of(t.actor().flat);
        Vec dz(4);
        for (int a = 0; a < 4; ++a)
            dz[static_cast<std::size_t>(a)] =
                pi[static_cast<std::size_t>(a)] *
                ((std::log(pi[static_cast<std::size_t>(a)]) - q[static_cast<std::size_t>(a)]) -
                 base);
        const MlpGrads analytic = mlp_backward(t.actor(), obs, dz);
        const Vec fd = finite_diff_grad(loss_of, t.actor().flat, 1e-6);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            const double tol = std::max(1e-8, 1e-5 * std::abs(fd[i]));
            CHECK(std::abs(analytic.flat[i] - fd[i]) <= tol);
        }
        ++tested;
    }
}

TEST_CASE("learnability: easy-task evaluation improves over 50 epochs for most seeds") {
    int improved = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tasks = make_task_suite(seed, SuiteSpec::defaults());
        TaskTrainer t(8, 8, 0.01, 0.99, Rng::stream(seed, "task/0"));
        Rng eval_rng = Rng::stream(seed, "eval/0");
        const double before = evaluate(t, tasks[0], 20, eval_rng);
        for (int e = 0; e < 50; ++e) train_step(t, tasks[0], 10);
        const double after = evaluate(t, tasks[0], 20, eval_rng);
        if (after > before) ++improved;
    }
    CHECK(improved >= 4);
}

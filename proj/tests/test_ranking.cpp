#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "camrl/ranking.hpp"
#include "oracles.hpp"

using namespace camrl;

namespace {

RankInstance random_instance(Rng& rng, int max_q, double d) {
    const int q = 2 + rng.uniform_int(max_q - 1);
    RankInstance inst;
    inst.d = d;
    inst.values.resize(static_cast<std::size_t>(q));
    for (double& v : inst.values) v = rng.uniform(0.0, 0.06);
    Vec shuffled(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) shuffled[static_cast<std::size_t>(i)] = rng.uniform();
    inst.targets = hard_rank(shuffled);  // random permutation of 1..q
    return inst;
}

}  // namespace

TEST_CASE("smooth rank closed-form cases") {
    // single element: the self term contributes exactly 0.5
    CHECK(smooth_rank({7.3}, 200.0)[0] == doctest::Approx(1.5).epsilon(1e-15));

    const Vec tie = smooth_rank({0.4, 0.4}, 200.0);
    CHECK(tie[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(tie[1] == doctest::Approx(2.0).epsilon(1e-15));

    // direct evaluation of the formula at d = 200, values (0.03, 0.01)
    const Vec y = smooth_rank({0.03, 0.01}, 200.0);
    const double th = std::tanh(4.0);
    CHECK(y[0] == doctest::Approx(3.0 - (0.5 + 0.5 * th + 0.5)).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(3.0 - (0.5 - 0.5 * th + 0.5)).epsilon(1e-14));
    CHECK(y[0] == doctest::Approx(1.50034).epsilon(1e-5));
    CHECK(y[1] == doctest::Approx(2.49966).epsilon(1e-5));
}

TEST_CASE("smooth rank output range and reverse ordering") {
    Rng rng(3);
    for (int it = 0; it < 200; ++it) {
        Vec v(static_cast<std::size_t>(2 + rng.uniform_int(7)));
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        const double d = rng.uniform(0.01, 300.0);
        const Vec y = smooth_rank(v, d);
        for (double yi : y) {
            CHECK(yi >= 0.5);
            CHECK(yi <= static_cast<double>(v.size()) + 0.5);
        }
        // larger value => strictly smaller smooth rank
        for (std::size_t a = 0; a < v.size(); ++a)
            for (std::size_t b = 0; b < v.size(); ++b)
                if (v[a] > v[b]) CHECK(y[a] < y[b]);
    }
}

TEST_CASE("smooth rank is shift invariant") {
    Rng rng(17);
    for (int it = 0; it < 100; ++it) {
        Vec v(5);
        for (double& x : v) x = rng.uniform(-1, 1);
        const double d = rng.uniform(0.0, 250.0);
        const double c = rng.uniform(-10, 10);
        Vec shifted = v;
        for (double& x : shifted) x += c;
        const Vec y0 = smooth_rank(v, d);
        const Vec y1 = smooth_rank(shifted, d);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12));
    }
}

TEST_CASE("hard rank examples and sort oracle") {
    CHECK(hard_rank({5, 1, 9}) == std::vector<int>{2, 3, 1});
    CHECK(hard_rank({7, 7}) == std::vector<int>{1, 2});

    Rng rng(29);
    for (int it = 0; it < 100; ++it) {
        Vec v(static_cast<std::size_t>(1 + rng.uniform_int(9)));
        for (double& x : v) x = rng.uniform(-5, 5);
        CHECK(hard_rank(v) == oracle::descending_ranks(v));
    }
}

TEST_CASE("rank loss worked example and d = 0 closed form") {
    RankInstance inst{{0.03, 0.01}, {1, 2}, 200.0};
    CHECK(rank_loss(inst) ==
          doctest::Approx(oracle::rank_loss_formula(inst.values, inst.targets, inst.d))
              .epsilon(1e-13));

    // d = 0: every smooth rank equals q + 1 - q/2, gradient identically zero
    RankInstance flat{{0.5, -2.0, 3.0, 0.0}, {1, 2, 3, 4}, 0.0};
    const double q = 4.0;
    const double y = q + 1.0 - q / 2.0;
    double expected = 0.0;
    for (int j = 1; j <= 4; ++j) expected += (j - y) * (j - y);
    CHECK(rank_loss(flat) == doctest::Approx(expected).epsilon(1e-14));
    for (double g : rank_loss_grad(flat)) CHECK(g == 0.0);
}

TEST_CASE("saturation floor: aligned separated values approach 0.25 q") {
    Rng rng(31);
    for (int it = 0; it < 50; ++it) {
        const int q = 2 + rng.uniform_int(5);
        // descending, pairwise gaps >= 0.5 so tanh(d gap) is fully saturated
        Vec v(static_cast<std::size_t>(q));
        double cur = rng.uniform(0, 1);
        for (int j = 0; j < q; ++j) {
            v[static_cast<std::size_t>(j)] = cur;
            cur -= 0.5 + rng.uniform(0, 0.5);
        }
        std::vector<int> targets(static_cast<std::size_t>(q));
        for (int j = 0; j < q; ++j) targets[static_cast<std::size_t>(j)] = j + 1;
        const double loss = rank_loss({v, targets, 200.0});
        CHECK(loss >= 0.25 * q - 1e-3);
        CHECK(loss <= 0.25 * q + 1e-3);
    }
}

TEST_CASE("saturation: gaps >= 0.02 at d = 200 pin smooth ranks to hard rank + 0.5") {
    Rng rng(37);
    for (int it = 0; it < 100; ++it) {
        const int q = 2 + rng.uniform_int(5);
        Vec sorted(static_cast<std::size_t>(q));
        double cur = rng.uniform(0, 1);
        for (int j = 0; j < q; ++j) {
            sorted[static_cast<std::size_t>(j)] = cur;
            cur += 0.02 + rng.uniform(0.0, 0.3);
        }
        // random shuffle
        Vec v = sorted;
        for (int i = q - 1; i > 0; --i)
            std::swap(v[static_cast<std::size_t>(i)],
                      v[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
        const Vec y = smooth_rank(v, 200.0);
        const std::vector<int> hr = hard_rank(v);
        for (int j = 0; j < q; ++j)
            CHECK(std::abs(y[static_cast<std::size_t>(j)] -
                           (hr[static_cast<std::size_t>(j)] + 0.5)) <= 1e-3);
    }
}

TEST_CASE("rank loss gradient: symmetry and equal-values antisymmetry") {
    const RankInstance inst{{0.7, 0.7}, {1, 2}, 50.0};
    const Vec g = rank_loss_grad(inst);
    CHECK(g[0] == doctest::Approx(-g[1]).epsilon(1e-12));
}

TEST_CASE("rank loss gradient matches finite differences on 200 instances") {
    Rng rng(41);
    const double ds[3] = {5.0, 20.0, 50.0};
    for (int it = 0; it < 200; ++it) {
        const RankInstance inst = random_instance(rng, 8, ds[it % 3]);
        const Vec analytic = rank_loss_grad(inst);
        const auto f = [&](const Vec& v) { return rank_loss({v, inst.targets, inst.d}); };
        const Vec fd = finite_diff_grad(f, inst.values, 1e-6);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double tol = std::max(1e-8, 1e-5 * std::abs(fd[i]));
            INFO("it ", it, " coord ", i);
            CHECK(std::abs(analytic[i] - fd[i]) <= tol);
        }
    }
}

TEST_CASE("rank loss is nonnegative") {
    Rng rng(43);
    for (int it = 0; it < 200; ++it) {
        const RankInstance inst = random_instance(rng, 7, rng.uniform(0.0, 250.0));
        CHECK(rank_loss(inst) >= 0.0);
    }
}

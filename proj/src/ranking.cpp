#include "camrl/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace camrl {

namespace {

void check_instance(const RankInstance& inst) {
    if (inst.values.empty()) throw std::invalid_argument("rank instance: empty values");
    if (inst.targets.size() != inst.values.size())
        throw std::invalid_argument("rank instance: targets/values length mismatch");
    if (inst.d < 0.0) throw std::invalid_argument("rank instance: d must be nonnegative");
}

}  // namespace

Vec smooth_rank(const Vec& values, double d) {
    if (values.empty()) throw std::invalid_argument("smooth_rank: empty values");
    if (d < 0.0) throw std::invalid_argument("smooth_rank: d must be nonnegative");
    const std::size_t q = values.size();
    Vec y(q);
    for (std::size_t j = 0; j < q; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < q; ++k) s += 0.5 * std::tanh(d * (values[j] - values[k])) + 0.5;
        y[j] = static_cast<double>(q) + 1.0 - s;
    }
    return y;
}

std::vector<int> hard_rank(const Vec& values) {
    if (values.empty()) throw std::invalid_argument("hard_rank: empty values");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    std::vector<int> rank(values.size());
    for (std::size_t pos = 0; pos < idx.size(); ++pos) rank[idx[pos]] = static_cast<int>(pos) + 1;
    return rank;
}

double rank_loss(const RankInstance& inst) {
    check_instance(inst);
    const Vec y = smooth_rank(inst.values, inst.d);
    double loss = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double e = static_cast<double>(inst.targets[j]) - y[j];
        loss += e * e;
    }
    return loss;
}

Vec rank_loss_grad(const RankInstance& inst) {
    check_instance(inst);
    const std::size_t q = inst.values.size();
    const Vec y = smooth_rank(inst.values, inst.d);

    // residual_j = 2 (y'_j - target_j);  dy'_j/dv_k = g'(v_j - v_k) for k != j
    // and -sum_{s != j} g'(v_j - v_s) for k = j, with g'(x) = 0.5 d (1 - tanh^2(dx)).
    Vec res(q);
    for (std::size_t j = 0; j < q; ++j) res[j] = 2.0 * (y[j] - static_cast<double>(inst.targets[j]));

    Vec grad(q, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
        for (std::size_t k = 0; k < q; ++k) {
            if (k == j) continue;
            const double th = std::tanh(inst.d * (inst.values[j] - inst.values[k]));
            const double gp = 0.5 * inst.d * (1.0 - th * th);
            grad[k] += res[j] * gp;
            grad[j] -= res[j] * gp;
        }
    }
    return grad;
}

}  // namespace camrl

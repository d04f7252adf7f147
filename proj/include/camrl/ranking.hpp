#pragma once

#include "camrl/numcore.hpp"

namespace camrl {

/// One ranking-loss instance: q values to be ranked, the desired rank of
/// each value (descending convention: rank 1 = largest), and the tanh
/// sharpness d. Target ranks may contain ties; they are used as given.
struct RankInstance {
    Vec values;
    std::vector<int> targets;
    double d = 0.0;
};

/// Differentiable surrogate of the descending rank of each value:
///   y'_j = q + 1 - sum_s (0.5 tanh(d (v_j - v_s)) + 0.5)
/// Larger value => smaller y'. The self term contributes exactly 0.5, so a
/// perfectly separated element saturates at hard rank + 0.5 rather than at
/// its integer rank.
Vec smooth_rank(const Vec& values, double d);

/// Exact descending ranks in {1..q}; ties broken by index (the lower index
/// gets the smaller rank).
std::vector<int> hard_rank(const Vec& values);

/// sum_j (target_j - y'_j)^2.
double rank_loss(const RankInstance& inst);

/// Analytic gradient of rank_loss with respect to the values.
Vec rank_loss_grad(const RankInstance& inst);

}  // namespace camrl

#pragma once

#include "camrl/numcore.hpp"

namespace camrl {

/// Objective handed to the solvers as callables. Both must stay valid and
/// read-only over any captured state for the duration of a solve.
struct Objective {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
};

/// Per-iteration log of one constrained solve over
/// { x >= 0, ||x||_1 <= radius }. Row m is the state of the m-th iterate
/// before the step is taken; best_x is the best-objective iterate seen,
/// including the post-loop point.
struct SolverTrace {
    struct Row {
        double objective;
        double fw_gap;
        double l1_norm;
    };
    std::vector<Row> rows;
    Vec best_x;
    double best_objective = 0.0;
};

/// Linear minimization oracle over { s >= 0, ||s||_1 <= radius }: the zero
/// vector if all gradient components are nonnegative, else radius * e_i for
/// the most negative component (lowest index on ties).
Vec lmo(const Vec& gradient, double radius);

/// max_{s >= 0, ||s||_1 <= radius} <g, x - s>  =  <g, x> - radius * min(0, min_i g_i).
/// Requires x feasible.
double fw_gap(const Vec& gradient, const Vec& x, double radius);

/// Vanilla Frank-Wolfe with step gamma_m = 2/(m+2). Iterates stay feasible
/// as convex combinations of feasible points. Throws numerical_error on
/// NaN/Inf in the objective or gradient.
SolverTrace fw_vanilla(const Objective& obj, Vec x0, double radius, int max_iters);

/// Euclidean projection onto { x >= 0, ||x||_1 <= radius }: clamp negatives,
/// then if the budget is still exceeded apply the simplex threshold shift.
Vec project_box_l1(Vec x, double radius);

/// Projected gradient descent with a fixed step; comparison baseline.
SolverTrace pgd(const Objective& obj, Vec x0, double radius, double step, int max_iters);

}  // namespace camrl

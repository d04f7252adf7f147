#include "camrl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace camrl {

namespace {

constexpr double kFeasTol = 1e-9;

void check_feasible(const Vec& x, double radius, const char* where) {
    for (double v : x)
        if (v < -kFeasTol) throw std::invalid_argument(std::string(where) + ": negative entry");
    if (l1_norm(x) > radius + kFeasTol)
        throw std::invalid_argument(std::string(where) + ": L1 norm exceeds radius");
}

double checked_value(const Objective& obj, const Vec& x, int iter) {
    const double f = obj.value(x);
    if (!std::isfinite(f))
        throw numerical_error("solver: objective not finite at iteration " + std::to_string(iter));
    return f;
}

Vec checked_gradient(const Objective& obj, const Vec& x, int iter) {
    Vec g = obj.gradient(x);
    if (!all_finite(g))
        throw numerical_error("solver: gradient not finite at iteration " + std::to_string(iter));
    return g;
}

void consider_final(const Objective& obj, const Vec& x, SolverTrace& trace) {
    const double f = obj.value(x);
    if (std::isfinite(f) && f < trace.best_objective) {
        trace.best_objective = f;
        trace.best_x = x;
    }
}

}  // namespace

Vec lmo(const Vec& gradient, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("lmo: radius must be positive");
    Vec s(gradient.size(), 0.0);
    if (gradient.empty()) return s;
    std::size_t best = 0;
    for (std::size_t i = 1; i < gradient.size(); ++i)
        if (gradient[i] < gradient[best]) best = i;
    if (gradient[best] < 0.0) s[best] = radius;
    return s;
}

double fw_gap(const Vec& gradient, const Vec& x, double radius) {
    if (gradient.size() != x.size()) throw std::invalid_argument("fw_gap: length mismatch");
    check_feasible(x, radius, "fw_gap");
    double gmin = 0.0;
    for (double g : gradient) gmin = std::min(gmin, g);
    return dot(gradient, x) - radius * gmin;
}

SolverTrace fw_vanilla(const Objective& obj, Vec x0, double radius, int max_iters) {
    if (max_iters < 1) throw std::invalid_argument("fw_vanilla: max_iters must be >= 1");
    check_feasible(x0, radius, "fw_vanilla");

    SolverTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(max_iters));
    Vec x = std::move(x0);
    trace.best_x = x;
    trace.best_objective = checked_value(obj, x, 0);

    for (int m = 0; m < max_iters; ++m) {
        const double f = checked_value(obj, x, m);
        const Vec g = checked_gradient(obj, x, m);
        trace.rows.push_back({f, fw_gap(g, x, radius), l1_norm(x)});
        if (f < trace.best_objective) {
            trace.best_objective = f;
            trace.best_x = x;
        }
        const Vec s = lmo(g, radius);
        const double gamma = 2.0 / (m + 2.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += gamma * (s[i] - x[i]);
    }
    consider_final(obj, x, trace);
    return trace;
}

Vec project_box_l1(Vec x, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("project_box_l1: radius must be positive");
    for (double& v : x) v = std::max(0.0, v);
    double sum = 0.0;
    for (double v : x) sum += v;
    if (sum <= radius) return x;

    // Simplex threshold: find tau so that sum_i max(0, x_i - tau) = radius.
    Vec u = x;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        const double t = (cumsum - radius) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0)
            tau = t;
        else
            break;
    }
    for (double& v : x) v = std::max(0.0, v - tau);
    return x;
}

SolverTrace pgd(const Objective& obj, Vec x0, double radius, double step, int max_iters) {
    if (max_iters < 1) throw std::invalid_argument("pgd: max_iters must be >= 1");
    if (step <= 0.0) throw std::invalid_argument("pgd: step must be positive");
    check_feasible(x0, radius, "pgd");

    SolverTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(max_iters));
    Vec x = std::move(x0);
    trace.best_x = x;
    trace.best_objective = checked_value(obj, x, 0);

    for (int m = 0; m < max_iters; ++m) {
        const double f = checked_value(obj, x, m);
        const Vec g = checked_gradient(obj, x, m);
        trace.rows.push_back({f, fw_gap(g, x, radius), l1_norm(x)});
        if (f < trace.best_objective) {
            trace.best_objective = f;
            trace.best_x = x;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * g[i];
        x = project_box_l1(std::move(x), radius);
    }
    consider_final(obj, x, trace);
    return trace;
}

}  // namespace camrl

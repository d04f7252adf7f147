// Independent straight-line oracles used by the test suites. Everything here
// is written directly from the defining formulas with its own arithmetic so
// the library implementations are checked against a second code path.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using Dv = std::vector<double>;

// --- feedforward net, layer-by-layer with nested vectors -------------------

struct MlpLayers {
    // weights[l][r][c], biases[l][r]; ReLU between layers, linear output.
    std::vector<std::vector<Dv>> weights;
    std::vector<Dv> biases;
};

// Splits a flat parameter vector laid out as [W1|b1|W2|b2|W3|b3], row-major.
inline MlpLayers split_flat(const Dv& flat, int in, int h1, int h2, int out) {
    MlpLayers net;
    const int dims[4] = {in, h1, h2, out};
    std::size_t pos = 0;
    for (int l = 0; l < 3; ++l) {
        const int rows = dims[l + 1];
        const int cols = dims[l];
        std::vector<Dv> w(rows, Dv(cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w[r][c] = flat[pos++];
        Dv b(rows);
        for (int r = 0; r < rows; ++r) b[r] = flat[pos++];
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

struct MlpTrace {
    Dv output;
    Dv hidden;          // activations after the second hidden layer
    Dv pre1, pre2;      // pre-activations, for ReLU-kink guards
};

inline MlpTrace eval_mlp(const MlpLayers& net, const Dv& input) {
    Dv x = input;
    MlpTrace tr;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Dv y(net.biases[l]);
        for (std::size_t r = 0; r < y.size(); ++r)
            for (std::size_t c = 0; c < x.size(); ++c) y[r] += net.weights[l][r][c] * x[c];
        if (l + 1 < net.weights.size()) {
            if (l == 0) tr.pre1 = y;
            if (l == 1) tr.pre2 = y;
            for (double& v : y) v = std::max(0.0, v);
            if (l == 1) tr.hidden = y;
        }
        x = std::move(y);
    }
    tr.output = x;
    return tr;
}

// --- ranking ----------------------------------------------------------------

inline Dv smooth_rank_formula(const Dv& v, double d) {
    const std::size_t q = v.size();
    Dv y(q);
    for (std::size_t j = 0; j < q; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < q; ++k) s += 0.5 * std::tanh(d * (v[j] - v[k])) + 0.5;
        y[j] = static_cast<double>(q) + 1.0 - s;
    }
    return y;
}

inline double rank_loss_formula(const Dv& v, const std::vector<int>& targets, double d) {
    const Dv y = smooth_rank_formula(v, d);
    double loss = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j)
        loss += (targets[j] - y[j]) * (targets[j] - y[j]);
    return loss;
}

// argsort-based descending ranks, ties by index.
inline std::vector<int> descending_ranks(const Dv& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    std::vector<int> rank(v.size());
    for (std::size_t p = 0; p < idx.size(); ++p) rank[idx[p]] = static_cast<int>(p) + 1;
    return rank;
}

// --- L1-ball geometry --------------------------------------------------------

// Brute-force linear minimization over the vertex set {0} u {r e_i}.
inline Dv lmo_vertices(const Dv& g, double radius) {
    Dv best(g.size(), 0.0);
    double best_val = 0.0;  // value at the origin
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double val = radius * g[i];
        if (val < best_val) {
            best_val = val;
            std::fill(best.begin(), best.end(), 0.0);
            best[i] = radius;
        }
    }
    return best;
}

inline double gap_vertices(const Dv& g, const Dv& x, double radius) {
    double gx = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gx += g[i] * x[i];
    double best = gx;  // s = 0
    for (std::size_t i = 0; i < g.size(); ++i) best = std::max(best, gx - radius * g[i]);
    return best;
}

// Dense grid search for the Euclidean projection onto {x >= 0, sum <= r},
// dimension <= 3, resolution `step`.
inline Dv grid_project(const Dv& x, double radius, double step) {
    const std::size_t dim = x.size();
    const int n = static_cast<int>(std::floor(radius / step)) + 1;
    Dv best(dim, 0.0);
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) best_d2 += x[i] * x[i];

    Dv p(dim, 0.0);
    const auto consider = [&]() {
        double sum = 0.0;
        for (double v : p) sum += v;
        if (sum > radius + 1e-12) return;
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d2 += (p[i] - x[i]) * (p[i] - x[i]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = p;
        }
    };
    if (dim == 1) {
        for (int a = 0; a < n; ++a) {
            p[0] = a * step;
            consider();
        }
    } else if (dim == 2) {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                p[0] = a * step;
                p[1] = b * step;
                consider();
            }
    } else {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    p[0] = a * step;
                    p[1] = b * step;
                    p[2] = c * step;
                    consider();
                }
    }
    return best;
}

// --- composite objective ------------------------------------------------------

struct CompositeInputs {
    int t = 0;
    int n_tasks = 0;
    std::vector<Dv> b_matrix;  // full T x T transfer matrix
    std::vector<Dv> w;         // per-task parameter vectors
    Dv losses;                 // policy loss per task
    std::vector<Dv> pm;        // pm[s][t]
    std::vector<std::vector<char>> pm_set;
    std::vector<int> sim_ranks;
    std::vector<int> trained_order;
    std::vector<int> untrained;
    double mu1 = 0.0, mu2 = 0.0, d = 0.0;
    Dv lambda;  // 5 entries (or 6 with prior)
    bool has_prior = false;
    std::vector<int> prior_row_indices;
    std::vector<int> prior_targets;
};

// Literal term-by-term transcription of the curriculum objective at b.
inline double composite_value(const CompositeInputs& in, const Dv& b) {
    const int T = in.n_tasks;
    const int t = in.t;

    // full row with b substituted off the diagonal
    Dv row(static_cast<std::size_t>(T));
    {
        int k = 0;
        for (int j = 0; j < T; ++j) row[j] = (j == t) ? 1.0 : b[k++];
    }

    double sum_b = 0.0;
    for (double v : b) sum_b += v;
    Dv l_excl;
    for (int j = 0; j < T; ++j)
        if (j != t) l_excl.push_back(in.losses[j]);
    double b_dot_l = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) b_dot_l += b[j] * l_excl[j];
    const double term0 =
        in.lambda[0] * ((1.0 + in.mu1 * sum_b) * in.losses[t] - in.mu2 * b_dot_l);

    double term1 = 0.0;
    for (int s : in.untrained) {
        if (s == t) continue;
        Dv r = in.w[s];
        for (int j : in.trained_order)
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= in.b_matrix[j][s] * in.w[j][i];
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= row[s] * in.w[t][i];
        double sq = 0.0;
        for (double v : r) sq += v * v;
        term1 += sq;
    }
    term1 *= in.lambda[1];

    double term2 = 0.0;
    {
        Dv p_vals, b_vals;
        for (int i = 0; i < T; ++i) {
            if (i == t || !in.pm_set[t][i]) continue;
            p_vals.push_back(in.pm[t][i]);
            b_vals.push_back(row[i]);
        }
        if (!p_vals.empty())
            term2 = in.lambda[2] * rank_loss_formula(b_vals, descending_ranks(p_vals), in.d);
    }

    const double term3 =
        in.lambda[3] * rank_loss_formula(row, descending_ranks(in.losses), in.d);
    const double term4 = in.lambda[4] * rank_loss_formula(row, in.sim_ranks, in.d);

    double term5 = 0.0;
    if (in.has_prior) {
        Dv vals;
        for (int idx : in.prior_row_indices) vals.push_back(row[idx]);
        term5 = in.lambda[5] * rank_loss_formula(vals, in.prior_targets, in.d);
    }
    return term0 + term1 + term2 + term3 + term4 + term5;
}

// --- misc ---------------------------------------------------------------------

// 5-point central difference; error O(h^4), used where the tanh curvature
// makes the 3-point stencil too blunt.
template <typename F>
Dv central_diff5(const F& f, Dv x, double h) {
    Dv g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + 2 * h;
        const double f2p = f(x);
        x[i] = xi + h;
        const double f1p = f(x);
        x[i] = xi - h;
        const double f1m = f(x);
        x[i] = xi - 2 * h;
        const double f2m = f(x);
        x[i] = xi;
        g[i] = (f2m - 8.0 * f1m + 8.0 * f1p - f2p) / (12.0 * h);
    }
    return g;
}

}  // namespace oracle

#include "camrl/numcore.hpp"

#include <algorithm>
#include <cmath>

namespace camrl {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double l2_norm(const Vec& v) { return std::sqrt(dot(v, v)); }

double squared_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

// xoshiro256** seeded through splitmix64.
Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

Rng Rng::stream(std::uint64_t master_seed, std::string_view name) {
    std::uint64_t s = master_seed;
    const std::uint64_t a = splitmix64(s);
    return Rng(a ^ fnv1a64(name));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >>
                            64);
}

double cosine_similarity(const Vec& u, const Vec& v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
    const double nu = l2_norm(u);
    const double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Vec softmax(const Vec& v) {
    if (v.empty()) return {};
    const double m = *std::max_element(v.begin(), v.end());
    Vec out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, Vec x, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

MlpParams make_mlp(MlpShape shape, Rng& rng, double init_range) {
    MlpParams p{shape, Vec(static_cast<std::size_t>(shape.param_count()))};
    for (double& w : p.flat) w = rng.uniform(-init_range, init_range);
    return p;
}

namespace {

// Flat layout offsets: [W1 | b1 | W2 | b2 | W3 | b3].
struct Offsets {
    int w1, b1, w2, b2, w3, b3;
    explicit Offsets(const MlpShape& s)
        : w1(0),
          b1(s.h1 * s.in),
          w2(b1 + s.h1),
          b2(w2 + s.h2 * s.h1),
          w3(b2 + s.h2),
          b3(w3 + s.out * s.h2) {}
};

void affine(const double* w, const double* b, const Vec& x, int rows, int cols, Vec& out) {
    out.assign(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double s = b[r];
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) s += wr[c] * x[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = s;
    }
}

void relu_inplace(Vec& v) {
    for (double& x : v)
        if (x < 0.0) x = 0.0;
}

}  // namespace

MlpEval mlp_forward(const MlpParams& params, const Vec& input) {
    const MlpShape& s = params.shape;
    if (static_cast<int>(input.size()) != s.in)
        throw std::invalid_argument("mlp_forward: input length != in_dim");
    if (static_cast<int>(params.flat.size()) != s.param_count())
        throw std::invalid_argument("mlp_forward: parameter vector has wrong length");
    const Offsets o(s);
    const double* f = params.flat.data();

    Vec a1, a2, out;
    affine(f + o.w1, f + o.b1, input, s.h1, s.in, a1);
    relu_inplace(a1);
    affine(f + o.w2, f + o.b2, a1, s.h2, s.h1, a2);
    relu_inplace(a2);
    affine(f + o.w3, f + o.b3, a2, s.out, s.h2, out);
    return {std::move(out), std::move(a2)};
}

MlpGrads mlp_backward(const MlpParams& params, const Vec& input, const Vec& out_grad) {
    const MlpShape& s = params.shape;
    if (static_cast<int>(input.size()) != s.in)
        throw std::invalid_argument("mlp_backward: input length != in_dim");
    if (static_cast<int>(out_grad.size()) != s.out)
        throw std::invalid_argument("mlp_backward: out_grad length != out_dim");
    const Offsets o(s);
    const double* f = params.flat.data();

    // Forward pass keeping pre-activations for the ReLU masks.
    Vec z1, z2, a1, a2;
    affine(f + o.w1, f + o.b1, input, s.h1, s.in, z1);
    a1 = z1;
    relu_inplace(a1);
    affine(f + o.w2, f + o.b2, a1, s.h2, s.h1, z2);
    a2 = z2;
    relu_inplace(a2);

    MlpGrads g{s, Vec(params.flat.size(), 0.0)};
    double* gf = g.flat.data();

    // Output layer: d(out.r)/dW3 = r a2^T, d/db3 = r.
    Vec d2(static_cast<std::size_t>(s.h2), 0.0);  // gradient wrt a2
    for (int r = 0; r < s.out; ++r) {
        const double gr = out_grad[static_cast<std::size_t>(r)];
        gf[o.b3 + r] = gr;
        double* wrow = gf + o.w3 + static_cast<std::size_t>(r) * s.h2;
        const double* w3row = f + o.w3 + static_cast<std::size_t>(r) * s.h2;
        for (int c = 0; c < s.h2; ++c) {
            wrow[c] = gr * a2[static_cast<std::size_t>(c)];
            d2[static_cast<std::size_t>(c)] += gr * w3row[c];
        }
    }
    for (int c = 0; c < s.h2; ++c)
        if (z2[static_cast<std::size_t>(c)] <= 0.0) d2[static_cast<std::size_t>(c)] = 0.0;

    Vec d1(static_cast<std::size_t>(s.h1), 0.0);
    for (int r = 0; r < s.h2; ++r) {
        const double gr = d2[static_cast<std::size_t>(r)];
        gf[o.b2 + r] = gr;
        double* wrow = gf + o.w2 + static_cast<std::size_t>(r) * s.h1;
        const double* w2row = f + o.w2 + static_cast<std::size_t>(r) * s.h1;
        for (int c = 0; c < s.h1; ++c) {
            wrow[c] = gr * a1[static_cast<std::size_t>(c)];
            d1[static_cast<std::size_t>(c)] += gr * w2row[c];
        }
    }
    for (int c = 0; c < s.h1; ++c)
        if (z1[static_cast<std::size_t>(c)] <= 0.0) d1[static_cast<std::size_t>(c)] = 0.0;

    for (int r = 0; r < s.h1; ++r) {
        const double gr = d1[static_cast<std::size_t>(r)];
        gf[o.b1 + r] = gr;
        double* wrow = gf + o.w1 + static_cast<std::size_t>(r) * s.in;
        for (int c = 0; c < s.in; ++c) wrow[c] = gr * input[static_cast<std::size_t>(c)];
    }
    return g;
}

}  // namespace camrl

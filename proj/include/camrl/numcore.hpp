#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace camrl {

using Vec = std::vector<double>;

/// Raised when an objective or gradient produces NaN/Inf mid-run.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double dot(const Vec& a, const Vec& b);
double l1_norm(const Vec& v);
double l2_norm(const Vec& v);
double squared_distance(const Vec& a, const Vec& b);
bool all_finite(const Vec& v);

/// Deterministic random stream. Wraps a fixed 64-bit generator and maps raw
/// draws to doubles itself so sequences are identical across standard
/// libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Derives an independent named sub-stream from a master seed, e.g.
    /// Rng::stream(seed, "suite") or Rng::stream(seed, "task/3").
    static Rng stream(std::uint64_t master_seed, std::string_view name);

    std::uint64_t next_u64();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    int uniform_int(int n);                  // {0, ..., n-1}

private:
    std::uint64_t state_[4];
};

/// u.v / (|u||v|); defined as 0 when either vector is all-zero.
double cosine_similarity(const Vec& u, const Vec& v);

/// Numerically stable softmax (max subtraction); entries sum to 1.
Vec softmax(const Vec& v);

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, Vec x, double h);

/// Fixed two-hidden-layer architecture in -> h1 -> h2 -> out with ReLU
/// hidden activations and a linear output head.
struct MlpShape {
    int in = 0;
    int h1 = 0;
    int h2 = 0;
    int out = 0;

    int param_count() const { return h1 * (in + 1) + h2 * (h1 + 1) + out * (h2 + 1); }
    bool operator==(const MlpShape&) const = default;
};

/// Parameters stored as one flat vector (layout: W1, b1, W2, b2, W3, b3,
/// weight matrices row-major). The flat view is the storage, so
/// flatten/unflatten is the identity.
struct MlpParams {
    MlpShape shape;
    Vec flat;
};

using MlpGrads = MlpParams;

/// Uniform init in [-init_range, init_range] from the given stream.
MlpParams make_mlp(MlpShape shape, Rng& rng, double init_range = 0.1);

struct MlpEval {
    Vec output;  // linear head, length out
    Vec hidden;  // second hidden layer activations (the embedding), length h2
};

MlpEval mlp_forward(const MlpParams& params, const Vec& input);

/// Exact reverse-mode gradient of dot(output, out_grad) with respect to all
/// parameters, same layout as MlpParams.
MlpGrads mlp_backward(const MlpParams& params, const Vec& input, const Vec& out_grad);

}  // namespace camrl

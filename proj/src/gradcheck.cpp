#include "siamq/gradcheck.hpp"

#include <random>

#include "siamq/seeds.hpp"

namespace siamq::ad {

namespace {

TensorD random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape,
                      double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    TensorD t(std::move(shape));
    for (auto& v : t.data) v = dist(rng);
    return t;
}

// Inputs kept away from zero so the relu kink cannot sit inside the
// finite-difference stencil.
TensorD random_tensor_off_zero(std::mt19937_64& rng,
                               std::vector<std::size_t> shape) {
    std::uniform_real_distribution<double> mag(0.05, 1.0);
    std::bernoulli_distribution sign(0.5);
    TensorD t(std::move(shape));
    for (auto& v : t.data) v = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    return t;
}

// Scalarizes an op output through a fixed random weighting so every output
// element contributes to the checked loss.
int weighted_sum(GraphD& g, int out, const TensorD& weights) {
    return g.sum(g.mul(out, g.value(weights)));
}

// Builds the graph from already-registered parameter node ids and returns the
// scalar loss node.
using GraphBuilder = std::function<int(GraphD&, const std::vector<int>&)>;

double run_case(GradCheckCase& result, const std::vector<TensorD>& params,
                const GraphBuilder& build) {
    auto register_params = [](GraphD& g, const std::vector<TensorD>& p) {
        std::vector<int> ids;
        ids.reserve(p.size());
        for (const auto& t : p) ids.push_back(g.param(t));
        return ids;
    };
    auto forward = [&](const std::vector<TensorD>& p) {
        GraphD g;
        return g.val(build(g, register_params(g, p))).data[0];
    };
    auto analytic = [&](const std::vector<TensorD>& p) {
        GraphD g;
        const std::vector<int> ids = register_params(g, p);
        g.backward(build(g, ids));
        std::vector<TensorD> grads;
        for (int id : ids) grads.push_back(g.grad(id));
        return grads;
    };
    GradCheck checker;
    const double err = checker.max_relative_error(params, forward, analytic);
    result.max_rel_err = std::max(result.max_rel_err, err);
    return err;
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::size_t cases_per_op,
                                               std::uint64_t seed,
                                               double tolerance) {
    std::vector<GradCheckCase> results;

    auto run_op = [&](const std::string& name,
                      const std::function<void(GradCheckCase&, std::mt19937_64&)>& one) {
        GradCheckCase r;
        r.name = name;
        for (std::size_t i = 0; i < cases_per_op; ++i) {
            std::mt19937_64 rng(derive_seed(seed, name, i));
            one(r, rng);
        }
        r.passed = r.max_rel_err < tolerance;
        results.push_back(r);
    };

    run_op("conv1d", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> dim(1, 4);
        std::uniform_int_distribution<std::size_t> len(4, 12);
        const std::size_t B = dim(rng), Cin = dim(rng), Cout = dim(rng);
        const std::size_t L = len(rng);
        std::uniform_int_distribution<std::size_t> kd(1, L);
        const std::size_t K = kd(rng);
        std::uniform_int_distribution<std::size_t> sd(1, 2), pd(0, K / 2 + 1);
        const std::size_t stride = sd(rng), pad = pd(rng);
        const std::size_t Lout = (L + 2 * pad - K) / stride + 1;
        std::vector<TensorD> params = {random_tensor(rng, {B, Cin, L}),
                                       random_tensor(rng, {Cout, Cin, K}),
                                       random_tensor(rng, {Cout})};
        const TensorD w = random_tensor(rng, {B, Cout, Lout});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            const int out = g.conv1d(ids[0], ids[1], ids[2], stride, pad);
            return weighted_sum(g, out, w);
        });
    });

    run_op("relu", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> len(1, 24);
        std::vector<TensorD> params = {random_tensor_off_zero(rng, {len(rng)})};
        const TensorD w = random_tensor(rng, params[0].shape);
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.relu(ids[0]), w);
        });
    });

    run_op("channel_norm", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> dim(1, 4), len(2, 10);
        const std::size_t B = dim(rng), C = dim(rng), L = len(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, C, L})};
        const TensorD w = random_tensor(rng, {B, C, L});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.channel_norm(ids[0]), w);
        });
    });

    run_op("global_avg_pool", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> dim(1, 4), len(1, 10);
        const std::size_t B = dim(rng), C = dim(rng), L = len(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, C, L})};
        const TensorD w = random_tensor(rng, {B, C});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.global_avg_pool(ids[0]), w);
        });
    });

    run_op("linear", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> dim(1, 6);
        const std::size_t B = dim(rng), n = dim(rng), m = dim(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, n}),
                                       random_tensor(rng, {m, n}),
                                       random_tensor(rng, {m})};
        const TensorD w = random_tensor(rng, {B, m});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.linear(ids[0], ids[1], ids[2]), w);
        });
    });

    run_op("matmul", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> dim(1, 5);
        const std::size_t A = dim(rng), K = dim(rng), C = dim(rng);
        std::vector<TensorD> params = {random_tensor(rng, {A, K}),
                                       random_tensor(rng, {K, C})};
        const TensorD w = random_tensor(rng, {A, C});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.matmul(ids[0], ids[1]), w);
        });
    });

    run_op("residual_add", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> len(1, 24);
        const std::size_t n = len(rng);
        std::vector<TensorD> params = {random_tensor(rng, {n}),
                                       random_tensor(rng, {n})};
        const TensorD w = random_tensor(rng, {n});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.add(ids[0], ids[1]), w);
        });
    });

    run_op("softmax_cross_entropy", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> bd(1, 6), cd(2, 5);
        const std::size_t B = bd(rng), C = cd(rng);
        std::vector<std::size_t> labels(B);
        std::uniform_int_distribution<std::size_t> ld(0, C - 1);
        for (auto& l : labels) l = ld(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, C}, -2.0, 2.0)};
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return g.softmax_cross_entropy(ids[0], labels);
        });
    });

    run_op("mean_squared_error", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> bd(1, 6);
        const std::size_t B = bd(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, 1})};
        const TensorD target = random_tensor(rng, {B, 1});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return g.mean_squared_error(ids[0], target);
        });
    });

    run_op("cosine_similarity", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> bd(1, 4), dd(2, 8);
        const std::size_t B = bd(rng), d = dd(rng);
        std::vector<TensorD> params = {random_tensor(rng, {B, d}),
                                       random_tensor(rng, {B, d})};
        const TensorD w = random_tensor(rng, {B});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            return weighted_sum(g, g.cosine_similarity(ids[0], ids[1]), w);
        });
    });

    // Composed objective graph. The stopped targets are held as constants:
    // perturbing them numerically would measure the path the stop-gradient
    // deliberately cuts, so they cannot be finite-difference parameters (their
    // exact-zero gradient is asserted separately). The differentiable side
    // runs through a shared affine map to exercise the full chain
    // linear -> cosine -> mean -> add -> scale with gradient accumulation.
    run_op("pair_loss", [](GradCheckCase& r, std::mt19937_64& rng) {
        std::uniform_int_distribution<std::size_t> bd(1, 4), dd(2, 8);
        const std::size_t B = bd(rng), d = dd(rng);
        std::vector<TensorD> params = {
            random_tensor(rng, {B, d}),  // h1 (predictor input, view 1)
            random_tensor(rng, {B, d}),  // h2 (predictor input, view 2)
            random_tensor(rng, {d, d}),  // shared predictor weights
            random_tensor(rng, {d})};    // shared predictor bias
        const TensorD z1 = random_tensor(rng, {B, d});
        const TensorD z2 = random_tensor(rng, {B, d});
        run_case(r, params, [&](GraphD& g, const std::vector<int>& ids) {
            const int p1 = g.linear(ids[0], ids[2], ids[3]);
            const int p2 = g.linear(ids[1], ids[2], ids[3]);
            return pair_loss(g, p1, g.value(z1), p2, g.value(z2));
        });
    });

    return results;
}

}  // namespace siamq::ad

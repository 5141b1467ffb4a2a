#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "siamq/errors.hpp"
#include "siamq/gradcheck.hpp"
#include "siamq/tensor.hpp"

using namespace siamq;
using namespace siamq::ad;

TEST_CASE("conv1d with an identity kernel reproduces the input") {
    GraphD g;
    const int x = g.value(TensorD({1, 1, 5}, {1, 2, 3, 4, 5}));
    const int w = g.value(TensorD({1, 1, 1}, {1}));
    const int b = g.value(TensorD({1}, {0}));
    const int y = g.conv1d(x, w, b, 1, 0);
    CHECK(g.val(y).shape == std::vector<std::size_t>{1, 1, 5});
    CHECK(g.val(y).data == std::vector<double>{1, 2, 3, 4, 5});
}

TEST_CASE("conv1d computes the sliding dot product") {
    GraphD g;
    const int x = g.value(TensorD({1, 1, 3}, {1, 2, 3}));
    const int w = g.value(TensorD({1, 1, 2}, {1, 1}));
    const int b = g.value(TensorD({1}, {0}));
    const int y = g.conv1d(x, w, b, 1, 0);
    CHECK(g.val(y).data == std::vector<double>{3, 5});
}

TEST_CASE("conv1d applies stride, zero padding, and bias") {
    GraphD g;
    const int x = g.value(TensorD({1, 1, 4}, {1, 2, 3, 4}));
    const int w = g.value(TensorD({1, 1, 3}, {1, 1, 1}));
    const int b = g.value(TensorD({1}, {10}));
    // padded input 0,1,2,3,4,0; stride 2 windows at offsets 0 and 2
    const int y = g.conv1d(x, w, b, 2, 1);
    CHECK(g.val(y).data == std::vector<double>{13, 19});
}

TEST_CASE("linear matches a hand computation") {
    GraphD g;
    const int x = g.value(TensorD({1, 2}, {1, 2}));
    const int w = g.value(TensorD({2, 2}, {1, 0, 0, 1}));
    const int b = g.value(TensorD({2}, {5, -5}));
    const int y = g.linear(x, w, b);
    CHECK(g.val(y).data == std::vector<double>{6, -3});
}

TEST_CASE("channel_norm standardizes each example") {
    GraphD g;
    const int x = g.value(TensorD({1, 1, 4}, {1, 2, 3, 4}));
    const int y = g.channel_norm(x);
    const auto& out = g.val(y).data;
    double mean = 0.0, var = 0.0;
    for (double v : out) mean += v;
    mean /= 4.0;
    for (double v : out) var += (v - mean) * (v - mean);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cosine_similarity handles the canonical cases") {
    GraphD g;
    const int a = g.value(TensorD({3}, {1, 0, 0}));
    CHECK(g.val(g.cosine_similarity(a, g.value(TensorD({3}, {2, 0, 0})))).data[0] ==
          doctest::Approx(1.0));
    CHECK(g.val(g.cosine_similarity(a, g.value(TensorD({3}, {0, 5, 0})))).data[0] ==
          doctest::Approx(0.0));
    CHECK(g.val(g.cosine_similarity(a, g.value(TensorD({3}, {-3, 0, 0})))).data[0] ==
          doctest::Approx(-1.0));
}

TEST_CASE("cosine_similarity works row-wise and stays in [-1, 1]") {
    GraphD g;
    const int a = g.value(TensorD({2, 2}, {1, 0, 1, 1}));
    const int b = g.value(TensorD({2, 2}, {1, 0, 1, 1}));
    const auto& out = g.val(g.cosine_similarity(a, b));
    REQUIRE(out.shape == std::vector<std::size_t>{2});
    for (double v : out.data) {
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(1.0));
    }
}

TEST_CASE("cosine_similarity rejects zero-norm vectors") {
    GraphD g;
    const int a = g.value(TensorD({2}, {0, 0}));
    const int b = g.value(TensorD({2}, {1, 1}));
    CHECK_THROWS_AS(g.cosine_similarity(a, b), NumericError);
}

TEST_CASE("backward of a plain sum is all ones") {
    GraphD g;
    const int x = g.param(TensorD({4}, {1, -2, 3, -4}));
    g.backward(g.sum(x));
    CHECK(g.grad(x).data == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("stop_gradient blocks the backward path entirely") {
    GraphD g;
    const int x = g.param(TensorD({3}, {1, 2, 3}));
    g.backward(g.sum(g.stop_gradient(x)));
    CHECK(g.grad(x).data == std::vector<double>{0, 0, 0});
}

TEST_CASE("stop_gradient treats its output as a constant factor") {
    // d/dx sum(x * sg(x)) = sg(x), not 2x
    GraphD g;
    const int x = g.param(TensorD({3}, {1, 2, 3}));
    g.backward(g.sum(g.mul(x, g.stop_gradient(x))));
    CHECK(g.grad(x).data == std::vector<double>{1, 2, 3});
}

TEST_CASE("second backward without reset is an error") {
    GraphD g;
    const int x = g.param(TensorD({2}, {1, 2}));
    const int loss = g.sum(x);
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), NumericError);
    g.reset();
    const int x2 = g.param(TensorD({2}, {1, 2}));
    g.backward(g.sum(x2));  // fine after reset
    CHECK(g.grad(x2).data == std::vector<double>{1, 1});
}

TEST_CASE("backward requires a scalar loss") {
    GraphD g;
    const int x = g.param(TensorD({3}, {1, 2, 3}));
    CHECK_THROWS_AS(g.backward(x), NumericError);
}

TEST_CASE("pair_loss hits the contract endpoints") {
    // identical unit rows: every cosine is 1, loss is -1
    {
        GraphD g;
        const int p1 = g.value(TensorD({2, 2}, {1, 0, 0, 1}));
        const int z2 = g.value(TensorD({2, 2}, {1, 0, 0, 1}));
        const int loss = pair_loss(g, p1, z2, p1, z2);
        CHECK(g.val(loss).data[0] == doctest::Approx(-1.0));
    }
    // orthogonal rows: loss is 0
    {
        GraphD g;
        const int p = g.value(TensorD({1, 2}, {1, 0}));
        const int z = g.value(TensorD({1, 2}, {0, 1}));
        const int loss = pair_loss(g, p, z, p, z);
        CHECK(g.val(loss).data[0] == doctest::Approx(0.0));
    }
    // opposed rows: loss is +1 (upper bound)
    {
        GraphD g;
        const int p = g.value(TensorD({1, 2}, {1, 0}));
        const int z = g.value(TensorD({1, 2}, {-1, 0}));
        const int loss = pair_loss(g, p, z, p, z);
        CHECK(g.val(loss).data[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("pair_loss sends no gradient into the projector targets") {
    GraphD g;
    const int p1 = g.param(TensorD({1, 3}, {0.5, -0.2, 0.8}));
    const int z1 = g.param(TensorD({1, 3}, {0.1, 0.9, -0.3}));
    const int p2 = g.param(TensorD({1, 3}, {-0.4, 0.6, 0.2}));
    const int z2 = g.param(TensorD({1, 3}, {0.7, 0.2, 0.5}));
    g.backward(pair_loss(g, p1, z1, p2, z2));
    // predictors receive gradient, stop-gradient targets do not
    bool p_nonzero = false;
    for (double v : g.grad(p1).data) p_nonzero = p_nonzero || v != 0.0;
    for (double v : g.grad(p2).data) p_nonzero = p_nonzero || v != 0.0;
    CHECK(p_nonzero);
    for (double v : g.grad(z1).data) CHECK(v == 0.0);
    for (double v : g.grad(z2).data) CHECK(v == 0.0);
}

TEST_CASE("softmax cross entropy decreases toward the correct class") {
    GraphD g;
    const int good = g.value(TensorD({1, 2}, {5.0, -5.0}));
    const int bad = g.value(TensorD({1, 2}, {-5.0, 5.0}));
    const double l_good = g.val(g.softmax_cross_entropy(good, {0})).data[0];
    const double l_bad = g.val(g.softmax_cross_entropy(bad, {0})).data[0];
    CHECK(l_good < 0.01);
    CHECK(l_bad > 5.0);
}

TEST_CASE("mean_squared_error matches a hand computation") {
    GraphD g;
    const int p = g.param(TensorD({2}, {1.0, 3.0}));
    const int loss = g.mean_squared_error(p, TensorD({2}, {0.0, 1.0}));
    CHECK(g.val(loss).data[0] == doctest::Approx(2.5));
    g.backward(loss);
    CHECK(g.grad(p).data[0] == doctest::Approx(1.0));   // 2/2 * (1-0)
    CHECK(g.grad(p).data[1] == doctest::Approx(2.0));   // 2/2 * (3-1)
}

TEST_CASE("finite-difference suite passes at a reduced case count") {
    const auto results = run_gradcheck_suite(8, 2024, 1e-4);
    CHECK(results.size() >= 10);  // every differentiable op plus the pair loss
    for (const auto& r : results) {
        INFO(r.name << " max_rel_err=" << r.max_rel_err);
        CHECK(r.passed);
    }
}

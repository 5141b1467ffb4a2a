#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "siamq/checkpoint.hpp"
#include "siamq/errors.hpp"
#include "siamq/model.hpp"

using namespace siamq;

namespace {

EncoderConfig small_config() {
    EncoderConfig cfg;
    cfg.n_blocks = 2;
    cfg.base_channels = 4;
    cfg.embedding_dim = 16;
    cfg.input_length = 64;
    cfg.z_dim = 16;
    return cfg;
}

ad::TensorF random_input(std::size_t batch, std::size_t len, std::uint64_t seed) {
    ad::TensorF x({batch, 1, len});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : x.data) v = dist(rng);
    return x;
}

// Parameter count computed from the layer dimensions alone, without touching
// the allocation code.
std::size_t expected_parameter_count(const EncoderConfig& c) {
    const std::size_t stem = c.base_channels * 1 * 7 + c.base_channels;
    std::size_t blocks = 0, cin = c.base_channels;
    for (std::size_t i = 0; i < c.n_blocks; ++i) {
        const std::size_t cout = c.base_channels << (i / 2);
        blocks += cout * cin * 3 + cout;   // conv1
        blocks += cout * cout * 3 + cout;  // conv2
        blocks += cout * cin * 1 + cout;   // 1x1 skip projection
        cin = cout;
    }
    const std::size_t fc = c.embedding_dim * cin + c.embedding_dim;
    const std::size_t proj = c.z_dim * c.embedding_dim + c.z_dim +
                             c.z_dim * c.z_dim + c.z_dim;
    const std::size_t bott = c.z_dim / 4;
    const std::size_t pred = bott * c.z_dim + bott + c.z_dim * bott + c.z_dim;
    std::size_t head = 0;
    if (c.head != HeadKind::None) {
        const std::size_t outs = c.head == HeadKind::BinaryClassification ? 2 : 1;
        head = outs * c.embedding_dim + outs;
    }
    return stem + blocks + fc + proj + pred + head;
}

}  // namespace

TEST_CASE("parameter count matches the independent dimension arithmetic") {
    EncoderConfig cfg;  // defaults: 2 blocks, base 8, emb 64, z 128
    const auto m = init_model<float>(cfg, 1);
    CHECK(m.parameter_count() == expected_parameter_count(cfg));
    CHECK(m.parameter_count() == 34768);

    EncoderConfig with_head = cfg;
    with_head.head = HeadKind::BinaryClassification;
    const auto mh = init_model<float>(with_head, 1);
    CHECK(mh.parameter_count() == expected_parameter_count(with_head));
    CHECK(mh.parameter_count() == 34768 + 2 * 64 + 2);
}

TEST_CASE("parameter count grows with depth") {
    std::size_t prev = 0;
    for (std::size_t nb : {2, 4, 6}) {
        EncoderConfig cfg = small_config();
        cfg.n_blocks = nb;
        const auto m = init_model<float>(cfg, 1);
        CHECK(m.parameter_count() == expected_parameter_count(cfg));
        CHECK(m.parameter_count() > prev);
        prev = m.parameter_count();
    }
}

TEST_CASE("init is seed-deterministic with zero biases") {
    const auto cfg = small_config();
    const auto a = init_model<float>(cfg, 42);
    const auto b = init_model<float>(cfg, 42);
    const auto c = init_model<float>(cfg, 43);
    REQUIRE(a.names == b.names);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        CHECK(a.tensors[i].data == b.tensors[i].data);
        if (a.tensors[i].data != c.tensors[i].data) any_diff = true;
        if (a.names[i].ends_with(".b"))
            for (float v : a.tensors[i].data) CHECK(v == 0.0f);
    }
    CHECK(any_diff);
}

TEST_CASE("config validation rejects out-of-range settings") {
    EncoderConfig cfg = small_config();
    cfg.n_blocks = 1;
    CHECK_THROWS_AS(init_model<float>(cfg, 0), DataError);
    cfg = small_config();
    cfg.n_blocks = 9;
    CHECK_THROWS_AS(init_model<float>(cfg, 0), DataError);
    cfg = small_config();
    cfg.z_dim = 18;
    CHECK_THROWS_AS(init_model<float>(cfg, 0), DataError);
    cfg = small_config();
    cfg.embedding_dim = 4;
    CHECK_THROWS_AS(init_model<float>(cfg, 0), DataError);
}

TEST_CASE("encode produces finite embeddings of the right shape") {
    const auto cfg = small_config();
    const auto m = init_model<float>(cfg, 3);
    ad::GraphF g;
    const auto ids = register_params(g, m);
    const int h = encode(g, ids, cfg, g.value(random_input(4, cfg.input_length, 5)));
    const auto& hv = g.val(h);
    REQUIRE(hv.shape == std::vector<std::size_t>{4, cfg.embedding_dim});
    for (float v : hv.data) CHECK(std::isfinite(v));
}

TEST_CASE("encode treats batch rows independently") {
    const auto cfg = small_config();
    const auto m = init_model<float>(cfg, 3);
    const auto x1 = random_input(1, cfg.input_length, 5);
    const auto x2 = random_input(1, cfg.input_length, 6);

    auto run = [&](const std::vector<const ad::TensorF*>& rows) {
        ad::TensorF x({rows.size(), 1, cfg.input_length});
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(rows[i]->data.begin(), rows[i]->data.end(),
                      x.data.begin() + i * cfg.input_length);
        ad::GraphF g;
        const auto ids = register_params(g, m);
        return g.val(encode(g, ids, cfg, g.value(std::move(x))));
    };

    const auto fwd = run({&x1, &x2});
    const auto rev = run({&x2, &x1});
    const std::size_t d = cfg.embedding_dim;
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(fwd.data[i] == doctest::Approx(rev.data[d + i]).epsilon(1e-5));
        CHECK(fwd.data[d + i] == doctest::Approx(rev.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("encode rejects a wrong input length") {
    const auto cfg = small_config();
    const auto m = init_model<float>(cfg, 3);
    ad::GraphF g;
    const auto ids = register_params(g, m);
    CHECK_THROWS_AS(
        encode(g, ids, cfg, g.value(random_input(1, cfg.input_length + 1, 0))),
        DataError);
}

TEST_CASE("projector and predictor shapes follow the config") {
    const auto cfg = small_config();
    const auto m = init_model<float>(cfg, 3);
    ad::GraphF g;
    const auto ids = register_params(g, m);
    const int h = encode(g, ids, cfg, g.value(random_input(2, cfg.input_length, 9)));
    const int z = project(g, ids, h);
    const int p = predict(g, ids, z);
    CHECK(g.shape(z) == std::vector<std::size_t>{2, cfg.z_dim});
    CHECK(g.shape(p) == std::vector<std::size_t>{2, cfg.z_dim});
    for (float v : g.val(p).data) CHECK(std::isfinite(v));
}

TEST_CASE("head_forward needs a head and produces the task width") {
    auto cfg = small_config();
    const auto no_head = init_model<float>(cfg, 3);
    {
        ad::GraphF g;
        const auto ids = register_params(g, no_head);
        const int h = encode(g, ids, cfg, g.value(random_input(1, cfg.input_length, 9)));
        CHECK_THROWS_AS(head_forward(g, ids, cfg, h), DataError);
    }
    cfg.head = HeadKind::BinaryClassification;
    const auto m = init_model<float>(cfg, 3);
    ad::GraphF g;
    const auto ids = register_params(g, m);
    const int h = encode(g, ids, cfg, g.value(random_input(3, cfg.input_length, 9)));
    CHECK(g.shape(head_forward(g, ids, cfg, h)) == std::vector<std::size_t>{3, 2});
}

TEST_CASE("checkpoint round trip is bit-exact") {
    auto cfg = small_config();
    cfg.head = HeadKind::Regression;
    const auto m = init_model<float>(cfg, 99);
    const auto path =
        (std::filesystem::temp_directory_path() / "siamq_test_ckpt.sqck").string();
    save_checkpoint(m, path);
    const auto r = load_checkpoint(path);
    REQUIRE(r.names == m.names);
    CHECK(r.config.n_blocks == cfg.n_blocks);
    CHECK(r.config.head == cfg.head);
    for (std::size_t i = 0; i < m.tensors.size(); ++i) {
        CHECK(r.tensors[i].shape == m.tensors[i].shape);
        CHECK(r.tensors[i].data == m.tensors[i].data);  // bitwise for floats
    }

    // saving the loaded bundle reproduces the same bytes
    const auto path2 =
        (std::filesystem::temp_directory_path() / "siamq_test_ckpt2.sqck").string();
    save_checkpoint(r, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("checkpoint load rejects truncation and config mismatch") {
    const auto cfg = small_config();
    const auto m = init_model<float>(cfg, 1);
    const auto path =
        (std::filesystem::temp_directory_path() / "siamq_test_trunc.sqck").string();
    save_checkpoint(m, path);

    // truncate the file in the middle of the tensor payload
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full / 2);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);

    save_checkpoint(m, path);
    EncoderConfig other = cfg;
    other.embedding_dim = cfg.embedding_dim * 2;
    CHECK_THROWS_AS(load_checkpoint(path, other), DataError);
    CHECK_NOTHROW(load_checkpoint(path, cfg));
    std::filesystem::remove(path);
}

TEST_CASE("missing checkpoint file is a data error") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/siamq.sqck"), DataError);
}

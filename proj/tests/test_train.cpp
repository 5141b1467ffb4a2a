#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "siamq/errors.hpp"
#include "siamq/train.hpp"

using namespace siamq;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.n_blocks = 2;
    cfg.base_channels = 4;
    cfg.embedding_dim = 16;
    cfg.input_length = 64;
    cfg.z_dim = 16;
    return cfg;
}

std::vector<float> random_window(std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> w(len);
    for (auto& v : w) v = dist(rng);
    return w;
}

// A small in-memory pairing workload: n anchors, n partners.
struct Workload {
    SegmentStore store;
    std::vector<QualityPair> pairs;
    CurriculumSchedule schedule;
};

Workload make_workload(std::size_t n, std::size_t len, std::size_t stages,
                       std::size_t epochs) {
    Workload w;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string a = "good" + std::to_string(i);
        const std::string p = "bad" + std::to_string(i);
        w.store[a] = random_window(len, 100 + i);
        w.store[p] = random_window(len, 200 + i);
        w.pairs.push_back({a, p, 0.2 + 0.01 * static_cast<double>(i)});
    }
    w.pairs = sort_curriculum(w.pairs);
    w.schedule = make_schedule(w.pairs, stages, epochs);
    return w;
}

bool bundles_bitwise_equal(const ModelBundle& a, const ModelBundle& b) {
    if (a.names != b.names) return false;
    for (std::size_t i = 0; i < a.tensors.size(); ++i)
        if (a.tensors[i].data != b.tensors[i].data) return false;
    return true;
}

}  // namespace

TEST_CASE("optimizer with zero learning rate leaves parameters bit-identical") {
    const auto cfg = tiny_config();
    auto m = init_model<float>(cfg, 1);
    const auto before = m;
    TrainConfig tc;
    tc.learning_rate = 0.0;
    SgdOptimizer opt(m, tc);
    std::vector<ad::TensorF> grads;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (const auto& t : m.tensors) {
        ad::TensorF g(t.shape);
        for (auto& v : g.data) v = dist(rng);
        grads.push_back(std::move(g));
    }
    opt.step(m, grads, mask_all(m));
    CHECK(bundles_bitwise_equal(m, before));
}

TEST_CASE("weight decay touches weight tensors only") {
    const auto cfg = tiny_config();
    auto m = init_model<float>(cfg, 1);
    // make the biases nonzero so a decay bug would be visible
    for (std::size_t i = 0; i < m.names.size(); ++i)
        if (m.names[i].ends_with(".b"))
            for (auto& v : m.tensors[i].data) v = 0.5f;
    const auto before = m;

    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.momentum = 0.0;
    tc.weight_decay = 1e-2;
    SgdOptimizer opt(m, tc);
    std::vector<ad::TensorF> zero_grads;
    for (const auto& t : m.tensors) zero_grads.emplace_back(t.shape);
    opt.step(m, zero_grads, mask_all(m));

    for (std::size_t i = 0; i < m.names.size(); ++i) {
        if (m.names[i].ends_with(".b")) {
            CHECK(m.tensors[i].data == before.tensors[i].data);
        } else {
            CHECK(m.tensors[i].data != before.tensors[i].data);
        }
    }
}

TEST_CASE("head masks partition the parameter list") {
    auto cfg = tiny_config();
    cfg.head = HeadKind::Regression;
    const auto m = init_model<float>(cfg, 1);
    const auto head = mask_head_only(m);
    const auto rest = mask_non_head(m);
    std::size_t head_n = 0;
    for (std::size_t i = 0; i < m.names.size(); ++i) {
        CHECK(head[i] != rest[i]);
        if (head[i]) {
            ++head_n;
            CHECK(m.names[i].rfind("head.", 0) == 0);
        }
    }
    CHECK(head_n == 2);  // head.w + head.b
}

TEST_CASE("pretraining for zero epochs returns the model unchanged") {
    const auto cfg = tiny_config();
    const auto w = make_workload(4, cfg.input_length, 2, 1);
    auto m = init_model<float>(cfg, 7);
    const auto before = m;
    TrainConfig tc;
    tc.epochs_per_stage = 0;
    const auto result = pretrain(std::move(m), w.pairs, w.schedule, w.store, tc);
    CHECK(bundles_bitwise_equal(result.model, before));
    CHECK(result.loss_log.empty());
}

TEST_CASE("pretraining is bit-deterministic and logs losses in [-1, 1]") {
    const auto cfg = tiny_config();
    const auto w = make_workload(6, cfg.input_length, 3, 2);
    TrainConfig tc;
    tc.batch_size = 4;
    tc.learning_rate = 0.02;
    tc.epochs_per_stage = 2;
    tc.seed = 123;

    const auto r1 = pretrain(init_model<float>(cfg, 9), w.pairs, w.schedule, w.store, tc);
    const auto r2 = pretrain(init_model<float>(cfg, 9), w.pairs, w.schedule, w.store, tc);
    CHECK(bundles_bitwise_equal(r1.model, r2.model));
    REQUIRE(r1.loss_log.size() == 6);  // 3 stages x 2 epochs
    for (std::size_t i = 0; i < r1.loss_log.size(); ++i) {
        CHECK(r1.loss_log[i].mean_loss >= -1.0);
        CHECK(r1.loss_log[i].mean_loss <= 1.0);
        CHECK(r1.loss_log[i].mean_loss == r2.loss_log[i].mean_loss);
    }

    // a different seed shuffles differently and lands elsewhere
    tc.seed = 124;
    const auto r3 = pretrain(init_model<float>(cfg, 9), w.pairs, w.schedule, w.store, tc);
    CHECK_FALSE(bundles_bitwise_equal(r1.model, r3.model));
}

TEST_CASE("pretraining drives the alignment loss down") {
    const auto cfg = tiny_config();
    const auto w = make_workload(8, cfg.input_length, 2, 4);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.learning_rate = 0.05;
    tc.epochs_per_stage = 4;
    const auto r = pretrain(init_model<float>(cfg, 5), w.pairs, w.schedule, w.store, tc);
    REQUIRE(!r.loss_log.empty());
    CHECK(r.loss_log.back().mean_loss < r.loss_log.front().mean_loss);
}

TEST_CASE("pretraining rejects unresolvable segment ids") {
    const auto cfg = tiny_config();
    auto w = make_workload(2, cfg.input_length, 1, 1);
    w.store.erase("bad0");
    CHECK_THROWS_AS(
        pretrain(init_model<float>(cfg, 1), w.pairs, w.schedule, w.store, TrainConfig{}),
        DataError);
}

TEST_CASE("with_head keeps the shared parameters bitwise") {
    const auto cfg = tiny_config();
    const auto m = init_model<float>(cfg, 3);
    const auto h = with_head(m, HeadKind::Regression, 99);
    CHECK(h.config.head == HeadKind::Regression);
    CHECK(h.names.size() == m.names.size() + 2);
    for (std::size_t i = 0; i < m.names.size(); ++i)
        CHECK(h.at(m.names[i]).data == m.tensors[i].data);
    CHECK(h.at("head.w").data != std::vector<float>(h.at("head.w").size(), 0.0f));
    CHECK(h.at("head.b").data == std::vector<float>(h.at("head.b").size(), 0.0f));
}

TEST_CASE("head-only fine-tuning leaves the encoder bytes frozen") {
    const auto cfg = tiny_config();
    const auto pre = init_model<float>(cfg, 3);
    std::vector<LabeledSegment> data;
    for (std::size_t i = 0; i < 6; ++i)
        data.push_back({"s" + std::to_string(i), random_window(cfg.input_length, i),
                        60.0 + static_cast<double>(i)});
    FinetuneOptions opts;
    opts.mode = FineTuneMode::FineTuneLast;
    opts.epochs = 3;
    opts.head_seed = 11;
    TrainConfig tc;
    tc.learning_rate = 0.01;
    const auto r = finetune(pre, data, opts, tc);

    for (std::size_t i = 0; i < pre.names.size(); ++i)
        CHECK(r.model.at(pre.names[i]).data == pre.tensors[i].data);
    // the head itself must have moved
    const auto fresh = with_head(pre, HeadKind::Regression, opts.head_seed);
    CHECK(r.model.at("head.w").data != fresh.at("head.w").data);
}

TEST_CASE("full fine-tuning memorizes a single example") {
    const auto cfg = tiny_config();
    const auto pre = init_model<float>(cfg, 3);
    std::vector<LabeledSegment> data = {
        {"only", random_window(cfg.input_length, 42), 0.5}};
    FinetuneOptions opts;
    opts.mode = FineTuneMode::FineTuneAll;
    opts.epochs = 150;
    opts.head_seed = 1;
    TrainConfig tc;
    tc.learning_rate = 0.02;
    tc.batch_size = 1;
    const auto r = finetune(pre, data, opts, tc);
    // the final logged train loss is the squared error on that example
    double final_loss = 1e9;
    for (const auto& row : r.metric_log)
        if (row.metric == "loss") final_loss = row.value;
    CHECK(final_loss < 1e-3);
}

TEST_CASE("in-domain mode with zero self-supervised epochs equals head-only tuning") {
    const auto cfg = tiny_config();
    const auto pre = init_model<float>(cfg, 3);
    const auto w = make_workload(4, cfg.input_length, 2, 1);
    std::vector<LabeledSegment> data;
    for (std::size_t i = 0; i < 4; ++i)
        data.push_back({"s" + std::to_string(i), random_window(cfg.input_length, i), 70.0});

    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.seed = 5;

    FinetuneOptions last;
    last.mode = FineTuneMode::FineTuneLast;
    last.epochs = 2;
    last.head_seed = 8;

    FinetuneOptions indomain = last;
    indomain.mode = FineTuneMode::InDomainPretrainThenLast;
    indomain.in_domain_pairs = &w.pairs;
    indomain.in_domain_schedule = &w.schedule;
    indomain.in_domain_store = &w.store;
    indomain.in_domain_config = tc;
    indomain.in_domain_config.epochs_per_stage = 0;

    const auto a = finetune(pre, data, last, tc);
    const auto b = finetune(pre, data, indomain, tc);
    CHECK(bundles_bitwise_equal(a.model, b.model));
}

TEST_CASE("fine-tuning validates its inputs") {
    const auto cfg = tiny_config();
    const auto pre = init_model<float>(cfg, 3);
    FinetuneOptions opts;
    CHECK_THROWS_AS(finetune(pre, {}, opts, TrainConfig{}), DataError);

    opts.task = TaskKind::Binary;
    std::vector<LabeledSegment> data = {
        {"s0", random_window(cfg.input_length, 0), 2.0}};
    CHECK_THROWS_AS(finetune(pre, data, opts, TrainConfig{}), DataError);

    opts.mode = FineTuneMode::InDomainPretrainThenLast;
    data[0].target = 1.0;
    CHECK_THROWS_AS(finetune(pre, data, opts, TrainConfig{}), DataError);
}

TEST_CASE("binary fine-tuning logs an error rate that reaches zero on separable data") {
    const auto cfg = tiny_config();
    const auto pre = init_model<float>(cfg, 3);
    std::vector<LabeledSegment> data;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<float> w(cfg.input_length, i < 2 ? 0.1f : 0.9f);
        w[0] = 0.0f;
        w[1] = 1.0f;  // non-constant so normalization stays meaningful
        data.push_back({"s" + std::to_string(i), std::move(w), i < 2 ? 0.0 : 1.0});
    }
    FinetuneOptions opts;
    opts.task = TaskKind::Binary;
    opts.mode = FineTuneMode::FineTuneAll;
    opts.epochs = 60;
    TrainConfig tc;
    tc.learning_rate = 0.02;
    const auto r = finetune(pre, data, opts, tc);
    double final_err = 1.0;
    for (const auto& row : r.metric_log)
        if (row.metric == "error_rate") final_err = row.value;
    CHECK(final_err == 0.0);
}

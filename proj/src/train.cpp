#include "siamq/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "siamq/errors.hpp"
#include "siamq/seeds.hpp"
#include "siamq/signal.hpp"

namespace siamq {

namespace {

// Stacks normalized sample windows into a [B, 1, L] input tensor.
ad::TensorF stack_batch(const std::vector<const std::vector<float>*>& windows,
                        std::size_t len) {
    ad::TensorF x({windows.size(), 1, len});
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i]->size() != len)
            throw DataError("segment length does not match model input length");
        std::copy(windows[i]->begin(), windows[i]->end(), x.data.begin() + i * len);
    }
    return x;
}

const std::vector<float>& resolve(const SegmentStore& store, const std::string& id) {
    auto it = store.find(id);
    if (it == store.end()) throw DataError("unresolvable segment id: " + id);
    return it->second;
}

std::vector<ad::TensorF> collect_grads(ad::GraphF& g, const ModelBundle& m,
                                       const ParamIds<float>& ids) {
    std::vector<ad::TensorF> grads;
    grads.reserve(m.names.size());
    for (const auto& name : m.names) grads.push_back(g.grad(ids.at(name)));
    return grads;
}

}  // namespace

SegmentStore load_segment_store(const std::vector<ManifestRow>& rows,
                                const std::string& data_dir,
                                std::size_t expected_len) {
    SegmentStore store;
    for (const auto& r : rows) {
        if (r.n_samples != expected_len)
            throw DataError("segment " + r.segment_id +
                            " length does not match model input length");
        const auto path = (std::filesystem::path(data_dir) / r.file).string();
        store[r.segment_id] =
            minmax_normalize(read_ppgs_window(path, r.offset_samples, r.n_samples));
    }
    return store;
}

void write_loss_log(const std::string& path, const std::vector<LossLogRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "stage,epoch,mean_loss\n";
    for (const auto& r : rows)
        os << r.stage << ',' << r.epoch << ',' << format_double(r.mean_loss) << '\n';
}

void write_metric_log(const std::string& path, const std::vector<MetricLogRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "epoch,split,metric,value\n";
    for (const auto& r : rows)
        os << r.epoch << ',' << r.split << ',' << r.metric << ','
           << format_double(r.value) << '\n';
}

SgdOptimizer::SgdOptimizer(const ModelBundle& model, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      momentum_(cfg.momentum),
      weight_decay_(cfg.weight_decay) {
    for (const auto& t : model.tensors) velocity_.emplace_back(t.shape);
}

void SgdOptimizer::step(ModelBundle& model, const std::vector<ad::TensorF>& grads,
                        const std::vector<bool>& mask) {
    if (grads.size() != model.tensors.size() || mask.size() != model.tensors.size())
        throw DataError("optimizer step: parameter count mismatch");
    for (std::size_t i = 0; i < model.tensors.size(); ++i) {
        if (!mask[i]) continue;
        auto& p = model.tensors[i];
        auto& v = velocity_[i];
        const bool decay = model.names[i].ends_with(".w");
        for (std::size_t j = 0; j < p.size(); ++j) {
            float g = grads[i].data[j];
            if (decay) g += static_cast<float>(weight_decay_) * p.data[j];
            v.data[j] = static_cast<float>(momentum_) * v.data[j] + g;
            if (lr_ != 0.0) p.data[j] -= static_cast<float>(lr_) * v.data[j];
        }
    }
}

std::vector<bool> mask_all(const ModelBundle& m) {
    return std::vector<bool>(m.names.size(), true);
}

std::vector<bool> mask_head_only(const ModelBundle& m) {
    std::vector<bool> mask(m.names.size());
    for (std::size_t i = 0; i < m.names.size(); ++i)
        mask[i] = m.names[i].rfind("head.", 0) == 0;
    return mask;
}

std::vector<bool> mask_non_head(const ModelBundle& m) {
    auto mask = mask_head_only(m);
    mask.flip();
    return mask;
}

PretrainResult pretrain(ModelBundle model, const std::vector<QualityPair>& sorted_pairs,
                        const CurriculumSchedule& schedule, const SegmentStore& store,
                        const TrainConfig& cfg) {
    cfg.validate();
    // Resolve every referenced segment up front.
    for (const auto& stage : schedule.stages)
        for (std::size_t idx : stage) {
            if (idx >= sorted_pairs.size())
                throw DataError("schedule references pair row out of range");
            resolve(store, sorted_pairs[idx].anchor_id);
            resolve(store, sorted_pairs[idx].partner_id);
        }

    const std::size_t len = model.config.input_length;
    SgdOptimizer opt(model, cfg);
    const std::vector<bool> mask = mask_non_head(model);

    PretrainResult result;
    for (std::size_t s = 0; s < schedule.stages.size(); ++s) {
        for (std::size_t e = 0; e < cfg.epochs_per_stage; ++e) {
            std::vector<std::size_t> order = schedule.stages[s];
            std::mt19937_64 shuffle_rng(
                derive_seed(cfg.seed, "shuffle", s * 1000003 + e));
            std::shuffle(order.begin(), order.end(), shuffle_rng);

            double loss_sum = 0.0;
            std::size_t n_pairs = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
                std::vector<const std::vector<float>*> anchors, partners;
                for (std::size_t i = start; i < stop; ++i) {
                    anchors.push_back(&resolve(store, sorted_pairs[order[i]].anchor_id));
                    partners.push_back(&resolve(store, sorted_pairs[order[i]].partner_id));
                }

                ad::GraphF g;
                const auto ids = register_params(g, model);
                const int x1 = g.value(stack_batch(anchors, len));
                const int x2 = g.value(stack_batch(partners, len));
                const int z1 = project(g, ids, encode(g, ids, model.config, x1));
                const int z2 = project(g, ids, encode(g, ids, model.config, x2));
                const int p1 = predict(g, ids, z1);
                const int p2 = predict(g, ids, z2);
                const int loss = ad::pair_loss(g, p1, z1, p2, z2);

                const double loss_val = g.val(loss).data[0];
                if (!std::isfinite(loss_val))
                    throw NumericError("non-finite loss during pretraining (stage " +
                                       std::to_string(s) + ")");
                g.backward(loss);
                opt.step(model, collect_grads(g, model, ids), mask);

                loss_sum += loss_val * static_cast<double>(stop - start);
                n_pairs += stop - start;
            }
            result.loss_log.push_back(
                {s, e, n_pairs ? loss_sum / static_cast<double>(n_pairs) : 0.0});
        }
    }
    result.model = std::move(model);
    return result;
}

ModelBundle with_head(const ModelBundle& m, HeadKind kind, std::uint64_t seed) {
    if (kind == HeadKind::None) throw DataError("with_head requires a task head");
    EncoderConfig cfg = m.config;
    cfg.head = kind;
    ModelBundle out = init_model<float>(cfg, seed);
    for (std::size_t i = 0; i < m.names.size(); ++i) out.at(m.names[i]) = m.tensors[i];
    return out;
}

FinetuneResult finetune(const ModelBundle& pretrained,
                        const std::vector<LabeledSegment>& train_data,
                        const FinetuneOptions& options, const TrainConfig& cfg) {
    cfg.validate();
    if (train_data.empty()) throw DataError("empty fine-tuning dataset");
    const HeadKind head = options.task == TaskKind::Regression
                              ? HeadKind::Regression
                              : HeadKind::BinaryClassification;
    if (options.task == TaskKind::Binary)
        for (const auto& d : train_data)
            if (d.target != 0.0 && d.target != 1.0)
                throw DataError("binary task requires 0/1 labels");

    ModelBundle base = pretrained;
    if (options.mode == FineTuneMode::InDomainPretrainThenLast) {
        if (!options.in_domain_pairs || !options.in_domain_schedule ||
            !options.in_domain_store)
            throw DataError("in-domain pretraining inputs missing");
        base = pretrain(std::move(base), *options.in_domain_pairs,
                        *options.in_domain_schedule, *options.in_domain_store,
                        options.in_domain_config)
                   .model;
    }

    ModelBundle model = pretrained.config.head == head
                            ? std::move(base)
                            : with_head(base, head, options.head_seed);
    const std::vector<bool> mask = options.mode == FineTuneMode::FineTuneAll
                                       ? mask_all(model)
                                       : mask_head_only(model);
    SgdOptimizer opt(model, cfg);
    const std::size_t len = model.config.input_length;

    FinetuneResult result;
    std::vector<std::size_t> order(train_data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "finetune-shuffle", epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0, err_sum = 0.0;
        std::size_t n = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::size_t b = stop - start;
            std::vector<const std::vector<float>*> windows;
            for (std::size_t i = start; i < stop; ++i)
                windows.push_back(&train_data[order[i]].samples);

            ad::GraphF g;
            const auto ids = register_params(g, model);
            const int x = g.value(stack_batch(windows, len));
            const int h = encode(g, ids, model.config, x);
            const int out = head_forward(g, ids, model.config, h);

            int loss;
            if (options.task == TaskKind::Regression) {
                ad::TensorF target({b, 1});
                for (std::size_t i = 0; i < b; ++i)
                    target.data[i] = static_cast<float>(train_data[order[start + i]].target);
                loss = g.mean_squared_error(out, target);
                for (std::size_t i = 0; i < b; ++i)
                    err_sum += std::abs(g.val(out).data[i] -
                                        static_cast<double>(target.data[i]));
            } else {
                std::vector<std::size_t> labels(b);
                for (std::size_t i = 0; i < b; ++i)
                    labels[i] = static_cast<std::size_t>(train_data[order[start + i]].target);
                loss = g.softmax_cross_entropy(out, labels);
                for (std::size_t i = 0; i < b; ++i) {
                    const float* row = &g.val(out).data[i * 2];
                    const std::size_t pred = row[1] > row[0] ? 1 : 0;
                    err_sum += pred == labels[i] ? 0.0 : 1.0;
                }
            }
            const double loss_val = g.val(loss).data[0];
            if (!std::isfinite(loss_val))
                throw NumericError("non-finite loss during fine-tuning");
            g.backward(loss);
            opt.step(model, collect_grads(g, model, ids), mask);
            loss_sum += loss_val * static_cast<double>(b);
            n += b;
        }
        result.metric_log.push_back(
            {epoch, "train", "loss", loss_sum / static_cast<double>(n)});
        result.metric_log.push_back(
            {epoch, "train",
             options.task == TaskKind::Regression ? "mae" : "error_rate",
             err_sum / static_cast<double>(n)});
    }
    result.model = std::move(model);
    return result;
}

}  // namespace siamq

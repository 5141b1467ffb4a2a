#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "siamq/model.hpp"
#include "siamq/pairing.hpp"
#include "siamq/ppgs_io.hpp"

namespace siamq {

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs_per_stage = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size == 0) throw DataError("batch_size must be positive");
        if (learning_rate < 0.0) throw DataError("learning_rate must be >= 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw DataError("momentum outside [0, 1)");
        if (weight_decay < 0.0) throw DataError("weight_decay must be >= 0");
    }
};

enum class FineTuneMode { FineTuneAll, FineTuneLast, InDomainPretrainThenLast };
enum class TaskKind { Regression, Binary };

// segment_id -> min-max normalized samples, model-input length.
using SegmentStore = std::unordered_map<std::string, std::vector<float>>;

// Loads every manifest window from its PPGS file and normalizes it.
SegmentStore load_segment_store(const std::vector<ManifestRow>& rows,
                                const std::string& data_dir,
                                std::size_t expected_len);

struct LossLogRow {
    std::size_t stage = 0;
    std::size_t epoch = 0;
    double mean_loss = 0.0;
};

struct MetricLogRow {
    std::size_t epoch = 0;
    std::string split;
    std::string metric;
    double value = 0.0;
};

void write_loss_log(const std::string& path, const std::vector<LossLogRow>& rows);
void write_metric_log(const std::string& path, const std::vector<MetricLogRow>& rows);

// SGD with momentum; weight decay applies to weight tensors only (names
// ending in ".w"). An update restricted to `mask` leaves every other tensor
// bit-untouched, as does learning_rate 0.
class SgdOptimizer {
  public:
    SgdOptimizer(const ModelBundle& model, const TrainConfig& cfg);
    void step(ModelBundle& model, const std::vector<ad::TensorF>& grads,
              const std::vector<bool>& mask);

  private:
    double lr_, momentum_, weight_decay_;
    std::vector<ad::TensorF> velocity_;
};

// Parameter masks for the fine-tuning configurations.
std::vector<bool> mask_all(const ModelBundle& m);
std::vector<bool> mask_head_only(const ModelBundle& m);
std::vector<bool> mask_non_head(const ModelBundle& m);

struct PretrainResult {
    ModelBundle model;
    std::vector<LossLogRow> loss_log;
};

// Curriculum-driven SimSiam pretraining. For each stage, for
// cfg.epochs_per_stage epochs: seeded shuffle of the stage's pairs, batched
// forward of both segments through shared E/P/D, symmetric stop-gradient
// cosine loss, SGD update of every non-head parameter. Single-threaded and
// bit-deterministic for a fixed seed.
PretrainResult pretrain(ModelBundle model, const std::vector<QualityPair>& sorted_pairs,
                        const CurriculumSchedule& schedule, const SegmentStore& store,
                        const TrainConfig& cfg);

struct LabeledSegment {
    std::string segment_id;
    std::vector<float> samples;  // normalized, model-input length
    double target = 0.0;         // regression value or class index
};

// Re-allocates the bundle with a task head attached; shared parameters are
// copied over, the head is freshly initialized from `seed`.
ModelBundle with_head(const ModelBundle& m, HeadKind kind, std::uint64_t seed);

struct FinetuneResult {
    ModelBundle model;
    std::vector<MetricLogRow> metric_log;
};

struct FinetuneOptions {
    FineTuneMode mode = FineTuneMode::FineTuneAll;
    TaskKind task = TaskKind::Regression;
    std::size_t epochs = 10;
    std::uint64_t head_seed = 0;
    // InDomainPretrainThenLast only: self-supervised pass over the target
    // dataset's own pairs before the head is tuned.
    const std::vector<QualityPair>* in_domain_pairs = nullptr;
    const CurriculumSchedule* in_domain_schedule = nullptr;
    const SegmentStore* in_domain_store = nullptr;
    TrainConfig in_domain_config;
};

FinetuneResult finetune(const ModelBundle& pretrained,
                        const std::vector<LabeledSegment>& train_data,
                        const FinetuneOptions& options, const TrainConfig& cfg);

}  // namespace siamq

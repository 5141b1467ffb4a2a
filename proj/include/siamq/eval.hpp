#pragma once

#include <optional>
#include <string>
#include <vector>

#include "siamq/model.hpp"
#include "siamq/ppgs_io.hpp"

namespace siamq {

struct EvalRecord {
    std::string segment_id;
    double quality_y = 0.0;  // [0, 1]
    double target = 0.0;     // regression value or class index
    double prediction = 0.0;
};

enum class MetricKind { Mae, F1 };

double mae(const std::vector<EvalRecord>& records);
// Binary F1 with the given positive class; 0 by convention when
// precision + recall is 0.
double f1(const std::vector<EvalRecord>& records, int positive_class = 1);

struct ATCurve {
    std::vector<double> upper;           // u_b = b / n_bins
    std::vector<std::size_t> bin_count;  // per-interval histogram
    std::vector<std::size_t> cum_count;  // cumulative subgroup sizes
    std::vector<std::optional<double>> metric;  // m(u_b) over {y <= u_b}
};

// Bars are per-interval ((b-1)/n, b/n] with y = 0 in bin 1; the metric line
// is cumulative over {quality_y <= u_b}, so m(1.0) is the whole-set metric.
ATCurve at_curve(const std::vector<EvalRecord>& records, std::size_t n_bins,
                 MetricKind kind);

// Report CSV columns: u,count,metric,cum_count (metric empty for empty
// cumulative subgroups).
void write_at_curve_csv(const std::string& path, const ATCurve& curve);
ATCurve read_at_curve_csv(const std::string& path);
// Bars for per-bin counts, line for the cumulative metric.
void write_at_curve_svg(const std::string& path, const ATCurve& curve);

// Records CSV: segment_id,quality_y,target,prediction
void write_records(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(const std::string& path);

// Batched encoder forward h = E(x) outside any training graph.
std::vector<std::vector<float>> compute_embeddings(
    const ModelBundle& model, const std::vector<std::vector<float>>& windows,
    std::size_t batch_size = 64);

struct EmbeddingRow {
    std::string segment_id;
    std::string patient_id;
    double quality_y = 0.0;
    std::vector<float> h;
};

// CSV header: segment_id,patient_id,quality_y,h0..h{d-1}
void write_embeddings_csv(const std::string& path,
                          const std::vector<EmbeddingRow>& rows);

// Leave-one-out 1-nearest-neighbor accuracy under Euclidean distance.
double knn_accuracy(const std::vector<std::vector<float>>& points,
                    const std::vector<int>& labels);

}  // namespace siamq

#include "siamq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "siamq/errors.hpp"

namespace siamq {

double mae(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw DataError("mae over empty record set");
    double acc = 0.0;
    for (const auto& r : records) acc += std::abs(r.prediction - r.target);
    return acc / static_cast<double>(records.size());
}

double f1(const std::vector<EvalRecord>& records, int positive_class) {
    if (records.empty()) throw DataError("f1 over empty record set");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        const bool pred_pos = static_cast<int>(r.prediction) == positive_class;
        const bool true_pos = static_cast<int>(r.target) == positive_class;
        if (pred_pos && true_pos) ++tp;
        else if (pred_pos) ++fp;
        else if (true_pos) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

namespace {

double metric_of(const std::vector<EvalRecord>& records, MetricKind kind) {
    return kind == MetricKind::Mae ? mae(records) : f1(records);
}

}  // namespace

ATCurve at_curve(const std::vector<EvalRecord>& records, std::size_t n_bins,
                 MetricKind kind) {
    if (n_bins == 0) throw DataError("at_curve needs at least one bin");
    for (const auto& r : records)
        if (r.quality_y < 0.0 || r.quality_y > 1.0)
            throw DataError("quality_y outside [0,1] for " + r.segment_id);

    ATCurve curve;
    curve.upper.resize(n_bins);
    curve.bin_count.assign(n_bins, 0);
    curve.cum_count.assign(n_bins, 0);
    curve.metric.assign(n_bins, std::nullopt);

    for (std::size_t b = 0; b < n_bins; ++b)
        curve.upper[b] = static_cast<double>(b + 1) / static_cast<double>(n_bins);

    for (const auto& r : records) {
        // y = 0 counts in bin 1; otherwise bin b covers ((b-1)/n, b/n].
        std::size_t b = 0;
        if (r.quality_y > 0.0) {
            b = static_cast<std::size_t>(
                std::ceil(r.quality_y * static_cast<double>(n_bins))) - 1;
            b = std::min(b, n_bins - 1);
        }
        ++curve.bin_count[b];
    }

    for (std::size_t b = 0; b < n_bins; ++b) {
        std::vector<EvalRecord> subgroup;
        for (const auto& r : records)
            if (r.quality_y <= curve.upper[b]) subgroup.push_back(r);
        curve.cum_count[b] = subgroup.size();
        if (!subgroup.empty()) curve.metric[b] = metric_of(subgroup, kind);
    }
    return curve;
}

void write_at_curve_csv(const std::string& path, const ATCurve& curve) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "u,count,metric,cum_count\n";
    for (std::size_t b = 0; b < curve.upper.size(); ++b) {
        os << format_double(curve.upper[b]) << ',' << curve.bin_count[b] << ',';
        if (curve.metric[b]) os << format_double(*curve.metric[b]);
        os << ',' << curve.cum_count[b] << '\n';
    }
    if (!os) throw DataError("write failed: " + path);
}

ATCurve read_at_curve_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("u,count,metric,cum_count", 0) != 0)
        throw DataError("bad AT-curve header in " + path);
    ATCurve curve;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string u, count, metric, cum;
        std::getline(ls, u, ',');
        std::getline(ls, count, ',');
        std::getline(ls, metric, ',');
        std::getline(ls, cum, ',');
        curve.upper.push_back(std::stod(u));
        curve.bin_count.push_back(std::stoull(count));
        curve.cum_count.push_back(std::stoull(cum));
        curve.metric.push_back(metric.empty()
                                   ? std::optional<double>{}
                                   : std::optional<double>{std::stod(metric)});
    }
    return curve;
}

void write_at_curve_svg(const std::string& path, const ATCurve& curve) {
    const int width = 640, height = 400, margin = 50;
    const int plot_w = width - 2 * margin, plot_h = height - 2 * margin;
    const std::size_t n = curve.upper.size();

    std::size_t max_count = 1;
    double max_metric = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        max_count = std::max(max_count, curve.bin_count[b]);
        if (curve.metric[b]) max_metric = std::max(max_metric, *curve.metric[b]);
    }
    if (max_metric == 0.0) max_metric = 1.0;

    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\">\n"
       << "<rect width=\"" << width << "\" height=\"" << height
       << "\" fill=\"white\"/>\n";

    const double bar_w = static_cast<double>(plot_w) / static_cast<double>(n);
    for (std::size_t b = 0; b < n; ++b) {
        const double h = static_cast<double>(plot_h) *
                         static_cast<double>(curve.bin_count[b]) /
                         static_cast<double>(max_count);
        os << "<rect x=\"" << margin + bar_w * static_cast<double>(b) + 2 << "\" y=\""
           << margin + plot_h - h << "\" width=\"" << bar_w - 4 << "\" height=\"" << h
           << "\" fill=\"#9ecae1\"/>\n";
    }

    os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
    for (std::size_t b = 0; b < n; ++b) {
        if (!curve.metric[b]) continue;
        const double x = margin + bar_w * (static_cast<double>(b) + 0.5);
        const double y = margin + plot_h - plot_h * (*curve.metric[b] / max_metric);
        os << x << ',' << y << ' ';
    }
    os << "\"/>\n";

    os << "<line x1=\"" << margin << "\" y1=\"" << margin + plot_h << "\" x2=\""
       << margin + plot_w << "\" y2=\"" << margin + plot_h
       << "\" stroke=\"black\"/>\n";
    for (std::size_t b = 0; b < n; ++b) {
        os << "<text x=\"" << margin + bar_w * (static_cast<double>(b) + 0.5)
           << "\" y=\"" << margin + plot_h + 16
           << "\" font-size=\"10\" text-anchor=\"middle\">"
           << format_double(curve.upper[b]) << "</text>\n";
    }
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
       << "\" font-size=\"12\" text-anchor=\"middle\">quality upper limit</text>\n"
       << "</svg>\n";
    if (!os) throw DataError("write failed: " + path);
}

void write_records(const std::string& path, const std::vector<EvalRecord>& records) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "segment_id,quality_y,target,prediction\n";
    for (const auto& r : records)
        os << r.segment_id << ',' << format_double(r.quality_y) << ','
           << format_double(r.target) << ',' << format_double(r.prediction) << '\n';
    if (!os) throw DataError("write failed: " + path);
}

std::vector<EvalRecord> read_records(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) ||
        line.rfind("segment_id,quality_y,target,prediction", 0) != 0)
        throw DataError("bad records header in " + path);
    std::vector<EvalRecord> records;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        EvalRecord r;
        std::string field;
        std::getline(ls, r.segment_id, ',');
        std::getline(ls, field, ',');
        r.quality_y = std::stod(field);
        std::getline(ls, field, ',');
        r.target = std::stod(field);
        std::getline(ls, field, ',');
        r.prediction = std::stod(field);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<std::vector<float>> compute_embeddings(
    const ModelBundle& model, const std::vector<std::vector<float>>& windows,
    std::size_t batch_size) {
    const std::size_t len = model.config.input_length;
    const std::size_t d = model.config.embedding_dim;
    std::vector<std::vector<float>> out;
    out.reserve(windows.size());
    for (std::size_t start = 0; start < windows.size(); start += batch_size) {
        const std::size_t stop = std::min(windows.size(), start + batch_size);
        const std::size_t b = stop - start;
        ad::TensorF x({b, 1, len});
        for (std::size_t i = 0; i < b; ++i) {
            if (windows[start + i].size() != len)
                throw DataError("embedding input length mismatch");
            std::copy(windows[start + i].begin(), windows[start + i].end(),
                      x.data.begin() + i * len);
        }
        ad::GraphF g;
        const auto ids = register_params(g, model);
        const int h = encode(g, ids, model.config, g.value(std::move(x)));
        const auto& hv = g.val(h);
        for (std::size_t i = 0; i < b; ++i)
            out.emplace_back(hv.data.begin() + i * d, hv.data.begin() + (i + 1) * d);
    }
    return out;
}

void write_embeddings_csv(const std::string& path,
                          const std::vector<EmbeddingRow>& rows) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "segment_id,patient_id,quality_y";
    const std::size_t d = rows.empty() ? 0 : rows.front().h.size();
    for (std::size_t i = 0; i < d; ++i) os << ",h" << i;
    os << '\n';
    for (const auto& r : rows) {
        os << r.segment_id << ',' << r.patient_id << ',' << format_double(r.quality_y);
        for (float v : r.h) os << ',' << format_double(v);
        os << '\n';
    }
    if (!os) throw DataError("write failed: " + path);
}

double knn_accuracy(const std::vector<std::vector<float>>& points,
                    const std::vector<int>& labels) {
    if (points.size() != labels.size() || points.size() < 2)
        throw DataError("knn_accuracy needs at least two labeled points");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t k = 0; k < points[i].size(); ++k) {
                const double diff = points[i][k] - points[j][k];
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        if (labels[best_j] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(points.size());
}

}  // namespace siamq

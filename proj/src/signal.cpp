#include "siamq/signal.hpp"

#include <algorithm>
#include <cmath>

#include "siamq/errors.hpp"

namespace siamq {

std::vector<Segment> segment_recording(const SampleSeries& series,
                                       const std::string& patient_id,
                                       double duration_s) {
    if (series.sample_rate_hz < 1) throw DataError("invalid sample rate");
    if (duration_s <= 0.0) throw DataError("invalid segment duration");
    const auto window = static_cast<std::size_t>(
        std::llround(duration_s * series.sample_rate_hz));
    if (window == 0 || series.samples.size() < window)
        throw DataError("recording too short");

    const std::size_t n_windows = series.samples.size() / window;
    std::vector<Segment> out;
    out.reserve(n_windows);
    for (std::size_t k = 0; k < n_windows; ++k) {
        Segment seg;
        seg.segment_id = patient_id + "_s" + std::to_string(k);
        seg.patient_id = patient_id;
        seg.t_start_s = static_cast<double>(k) * duration_s;
        seg.sample_rate_hz = series.sample_rate_hz;
        seg.samples.assign(series.samples.begin() + static_cast<std::ptrdiff_t>(k * window),
                           series.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * window));
        out.push_back(std::move(seg));
    }
    return out;
}

SampleSeries downsample(const SampleSeries& series, std::uint32_t target_hz) {
    if (target_hz < 1 || series.sample_rate_hz < 1 ||
        series.sample_rate_hz % target_hz != 0)
        throw DataError("unsupported resample ratio");

    const std::size_t factor = series.sample_rate_hz / target_hz;
    SampleSeries out;
    out.sample_rate_hz = target_hz;
    const std::size_t n_out = series.samples.size() / factor;
    out.samples.reserve(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < factor; ++j)
            acc += series.samples[i * factor + j];
        out.samples.push_back(static_cast<float>(acc / static_cast<double>(factor)));
    }
    return out;
}

std::vector<float> minmax_normalize(const std::vector<float>& samples) {
    if (samples.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const float lo = *lo_it, hi = *hi_it;
    std::vector<float> out(samples.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.0f);
        return out;
    }
    const float inv = 1.0f / (hi - lo);
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = (samples[i] - lo) * inv;
    return out;
}

Segment minmax_normalize(const Segment& segment) {
    Segment out = segment;
    out.samples = minmax_normalize(segment.samples);
    return out;
}

}  // namespace siamq

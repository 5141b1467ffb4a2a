#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace siamq {

struct SampleSeries {
    std::vector<float> samples;
    std::uint32_t sample_rate_hz = 0;
};

struct Segment {
    std::string segment_id;
    std::string patient_id;
    double t_start_s = 0.0;
    std::vector<float> samples;
    std::uint32_t sample_rate_hz = 0;
    double quality_y = 0.0;
    std::optional<std::vector<bool>> artifact_mask;
};

// Splits a recording into consecutive non-overlapping fixed-duration windows.
// The trailing partial window is dropped. Throws DataError("recording too
// short") if the series does not cover one full window.
std::vector<Segment> segment_recording(const SampleSeries& series,
                                       const std::string& patient_id,
                                       double duration_s);

// Box-filter decimation: each output sample is the mean of one contiguous
// block of (rate / target_hz) input samples. The input rate must be an
// integer multiple of target_hz.
SampleSeries downsample(const SampleSeries& series, std::uint32_t target_hz);

// Rescales samples to [0, 1]; a constant segment maps to all zeros.
Segment minmax_normalize(const Segment& segment);

// Same normalization on a bare sample buffer (used when loading training
// windows straight from a PPGS file).
std::vector<float> minmax_normalize(const std::vector<float>& samples);

}  // namespace siamq

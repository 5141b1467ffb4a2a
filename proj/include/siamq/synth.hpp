#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siamq/ppgs_io.hpp"
#include "siamq/signal.hpp"

namespace siamq {

struct PpgSimParams {
    double hr_bpm = 60.0;          // [30, 220]
    double duration_s = 30.0;
    std::uint32_t sample_rate_hz = 40;
    std::uint64_t seed = 0;
};

struct NoiseSpec {
    double drift_level = 0.0;      // [0, 0.7], slow baseline wander, unflagged
    double motion_level = 0.0;     // [0, 0.7], corrupted-time fraction, flagged
    double powerline_level = 0.0;  // [0, 0.7], 50 Hz tone, flagged above 0.05
    std::uint64_t seed = 0;
};

struct NoisySeries {
    SampleSeries series;
    std::vector<bool> artifact_mask;
};

// Quasi-periodic clean pulse train: per beat a systolic Gaussian bump plus a
// smaller delayed dicrotic bump, with seeded +-2% per-beat period jitter.
// Output amplitude is min-max scaled to [0, 1].
SampleSeries simulate_clean(const PpgSimParams& params);

// Adds drift / powerline / motion-burst artifacts and returns the ground
// truth mask. Level 0 for every component is the identity.
NoisySeries inject_noise(const SampleSeries& series, const NoiseSpec& spec);

struct CorpusParams {
    std::size_t n_patients = 2;
    std::size_t segments_per_patient = 10;
    double hr_min_bpm = 50.0;
    double hr_max_bpm = 130.0;
    std::string noise_policy = "default";  // "default" | "clean"
    std::uint64_t seed = 0;
    std::uint32_t sample_rate_hz = 40;
    double segment_s = 30.0;
};

struct CorpusOutput {
    std::vector<ManifestRow> manifest;
    std::vector<std::pair<std::string, double>> hr_labels;  // segment_id -> hr_bpm
};

// Writes one PPGS file per patient into out_dir plus manifest.csv and
// labels.csv. Patients carry a fixed heart rate; segments alternate clean /
// noisy so every clean anchor has a noisy candidate within the 5-minute
// pairing window.
CorpusOutput build_synthetic_corpus(const CorpusParams& params,
                                    const std::string& out_dir);

}  // namespace siamq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siamq/signal.hpp"

namespace siamq {

// "PPGS v1": magic 'P''P''G''S', u16 LE version = 1, u32 LE sample_rate_hz,
// u64 LE n_samples, then n_samples float32 LE values.
void write_ppgs(const std::string& path, const SampleSeries& series);
SampleSeries read_ppgs(const std::string& path);

// Reads a sample window without loading the whole file.
std::vector<float> read_ppgs_window(const std::string& path,
                                    std::uint64_t offset_samples,
                                    std::uint64_t n_samples);

struct ManifestRow {
    std::string segment_id;
    std::string patient_id;
    double t_start_s = 0.0;
    double quality_y = 0.0;
    std::string file;
    std::uint64_t offset_samples = 0;
    std::uint64_t n_samples = 0;
};

// Segment manifest CSV, header:
//   segment_id,patient_id,t_start_s,quality_y,file,offset_samples,n_samples
void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::string& path);

// Labels CSV, header: segment_id,target
void write_labels(const std::string& path,
                  const std::vector<std::pair<std::string, double>>& rows);
std::vector<std::pair<std::string, double>> read_labels(const std::string& path);

// Formats a double so that parsing it back is lossless (shortest round-trip).
std::string format_double(double v);

}  // namespace siamq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace siamq {

struct SegmentIndexEntry {
    std::string segment_id;
    std::string patient_id;
    double t_start_s = 0.0;
    double y = 0.0;  // artifact fraction in [0,1]
};

struct QualityPair {
    std::string anchor_id;   // good segment, y <= eps_good
    std::string partner_id;  // bad segment, y > bad_threshold
    double c = 0.0;          // difficulty |y_partner - y_anchor|
};

struct PairingRules {
    double window_s = 300.0;     // |t_partner - t_anchor| < window_s
    double bad_threshold = 0.2;  // candidate rule y > bad_threshold
    double eps_good = 0.0;       // anchor rule y <= eps_good
};

// For every anchor, picks the same-patient candidate inside the temporal
// window that maximizes |dt|; ties go to the later timestamp, then the
// lexicographically smaller segment_id. At most one pair per anchor.
// Output is canonically ordered by anchor_id. Duplicate segment_ids in the
// index raise DataError("corrupt index").
std::vector<QualityPair> build_pairs(const std::vector<SegmentIndexEntry>& index,
                                     const PairingRules& rules = {});

double difficulty(double y_anchor, double y_partner);

// Non-decreasing c, ties broken by anchor_id.
std::vector<QualityPair> sort_curriculum(std::vector<QualityPair> pairs);

struct CurriculumSchedule {
    // stages[s] holds row indices into the sorted pair list; stage s+1 is a
    // superset of stage s (cumulative membership).
    std::vector<std::vector<std::size_t>> stages;
    std::size_t epochs_per_stage = 1;
};

// Splits the sorted order into n_stages contiguous quantile blocks
// (ceiling-first for non-divisible counts); stage s is the union of blocks
// 1..s.
CurriculumSchedule make_schedule(const std::vector<QualityPair>& sorted_pairs,
                                 std::size_t n_stages,
                                 std::size_t epochs_per_stage);

// Pair manifest CSV: anchor_id,partner_id,c. Schedule CSV: stage,pair_row_index.
void write_pairs(const std::string& path, const std::vector<QualityPair>& pairs);
std::vector<QualityPair> read_pairs(const std::string& path);
void write_schedule(const std::string& path, const CurriculumSchedule& schedule);
CurriculumSchedule read_schedule(const std::string& path, std::size_t epochs_per_stage);

}  // namespace siamq

#include "siamq/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "siamq/errors.hpp"
#include "siamq/ppgs_io.hpp"

namespace siamq {

double difficulty(double y_anchor, double y_partner) {
    return std::abs(y_partner - y_anchor);
}

std::vector<QualityPair> build_pairs(const std::vector<SegmentIndexEntry>& index,
                                     const PairingRules& rules) {
    std::unordered_set<std::string> seen;
    for (const auto& e : index)
        if (!seen.insert(e.segment_id).second) throw DataError("corrupt index");

    std::unordered_map<std::string, std::vector<const SegmentIndexEntry*>> by_patient;
    for (const auto& e : index) by_patient[e.patient_id].push_back(&e);

    std::vector<QualityPair> pairs;
    for (const auto& anchor : index) {
        if (anchor.y > rules.eps_good) continue;
        const SegmentIndexEntry* best = nullptr;
        for (const auto* cand : by_patient[anchor.patient_id]) {
            if (cand->segment_id == anchor.segment_id) continue;
            if (cand->y <= rules.bad_threshold) continue;
            if (std::abs(cand->t_start_s - anchor.t_start_s) >= rules.window_s) continue;
            if (!best) {
                best = cand;
                continue;
            }
            const double dt_best = std::abs(best->t_start_s - anchor.t_start_s);
            const double dt_cand = std::abs(cand->t_start_s - anchor.t_start_s);
            if (dt_cand > dt_best ||
                (dt_cand == dt_best && (cand->t_start_s > best->t_start_s ||
                                        (cand->t_start_s == best->t_start_s &&
                                         cand->segment_id < best->segment_id))))
                best = cand;
        }
        if (best)
            pairs.push_back({anchor.segment_id, best->segment_id,
                             difficulty(anchor.y, best->y)});
    }

    std::sort(pairs.begin(), pairs.end(),
              [](const QualityPair& a, const QualityPair& b) {
                  return a.anchor_id < b.anchor_id;
              });
    return pairs;
}

std::vector<QualityPair> sort_curriculum(std::vector<QualityPair> pairs) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const QualityPair& a, const QualityPair& b) {
                         if (a.c != b.c) return a.c < b.c;
                         return a.anchor_id < b.anchor_id;
                     });
    return pairs;
}

CurriculumSchedule make_schedule(const std::vector<QualityPair>& sorted_pairs,
                                 std::size_t n_stages,
                                 std::size_t epochs_per_stage) {
    if (n_stages == 0) throw DataError("n_stages must be positive");
    if (epochs_per_stage == 0) throw DataError("epochs_per_stage must be positive");
    if (n_stages > sorted_pairs.size())
        throw DataError("more curriculum stages than pairs");

    const std::size_t n = sorted_pairs.size();
    const std::size_t base = n / n_stages;
    const std::size_t rem = n % n_stages;

    CurriculumSchedule sched;
    sched.epochs_per_stage = epochs_per_stage;
    std::size_t next = 0;
    for (std::size_t s = 0; s < n_stages; ++s) {
        const std::size_t block = base + (s < rem ? 1 : 0);
        next += block;
        std::vector<std::size_t> stage(next);
        for (std::size_t i = 0; i < next; ++i) stage[i] = i;
        sched.stages.push_back(std::move(stage));
    }
    return sched;
}

void write_pairs(const std::string& path, const std::vector<QualityPair>& pairs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "anchor_id,partner_id,c\n";
    for (const auto& p : pairs)
        os << p.anchor_id << ',' << p.partner_id << ',' << format_double(p.c) << '\n';
    if (!os) throw DataError("write failed: " + path);
}

std::vector<QualityPair> read_pairs(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("anchor_id,partner_id,c", 0) != 0)
        throw DataError("bad pair manifest header in " + path);
    std::vector<QualityPair> pairs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("bad pair row in " + path);
        QualityPair p;
        p.anchor_id = line.substr(0, c1);
        p.partner_id = line.substr(c1 + 1, c2 - c1 - 1);
        p.c = std::stod(line.substr(c2 + 1));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void write_schedule(const std::string& path, const CurriculumSchedule& schedule) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "stage,pair_row_index\n";
    for (std::size_t s = 0; s < schedule.stages.size(); ++s)
        for (std::size_t idx : schedule.stages[s]) os << s << ',' << idx << '\n';
    if (!os) throw DataError("write failed: " + path);
}

CurriculumSchedule read_schedule(const std::string& path,
                                 std::size_t epochs_per_stage) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("stage,pair_row_index", 0) != 0)
        throw DataError("bad schedule header in " + path);
    CurriculumSchedule sched;
    sched.epochs_per_stage = epochs_per_stage;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("bad schedule row in " + path);
        const auto stage = static_cast<std::size_t>(std::stoull(line.substr(0, comma)));
        const auto idx = static_cast<std::size_t>(std::stoull(line.substr(comma + 1)));
        if (stage >= sched.stages.size()) sched.stages.resize(stage + 1);
        sched.stages[stage].push_back(idx);
    }
    return sched;
}

}  // namespace siamq

#include "siamq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "siamq/errors.hpp"
#include "siamq/seeds.hpp"

namespace siamq {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_level(double v, const char* name) {
    if (v < 0.0 || v > 0.7)
        throw DataError(std::string(name) + " outside [0, 0.7]");
}

std::string patient_name(std::size_t p) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%04zu", p);
    return buf;
}

std::string segment_name(std::size_t p, std::size_t k) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "p%04zu_s%04zu", p, k);
    return buf;
}

}  // namespace

SampleSeries simulate_clean(const PpgSimParams& params) {
    if (params.hr_bpm < 30.0 || params.hr_bpm > 220.0)
        throw DataError("hr_bpm outside [30, 220]");
    if (params.duration_s <= 0.0 || params.sample_rate_hz < 1)
        throw DataError("invalid simulation parameters");
    const double period_samples = 60.0 * params.sample_rate_hz / params.hr_bpm;
    if (period_samples <= 4.0)
        throw DataError("beat period too short for sample rate");

    const auto n = static_cast<std::size_t>(
        std::llround(params.duration_s * params.sample_rate_hz));
    const double rate = params.sample_rate_hz;
    const double base_period = 60.0 / params.hr_bpm;

    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);

    // Beat onsets with per-beat period jitter, extended one beat past the end
    // so bump tails cover the boundary.
    std::vector<std::pair<double, double>> beats;  // (onset_s, period_s)
    double t = -base_period;
    while (t < params.duration_s + base_period) {
        const double period = base_period * (1.0 + jitter(rng));
        beats.emplace_back(t, period);
        t += period;
    }

    std::vector<double> acc(n, 0.0);
    for (const auto& [onset, period] : beats) {
        const double sys_c = onset + 0.30 * period;
        const double sys_s = 0.12 * period;
        const double dic_c = onset + 0.65 * period;
        const double dic_s = 0.14 * period;
        // Bumps are negligible past 5 sigma; restrict the sample range.
        const double lo_t = onset - 0.7 * period;
        const double hi_t = onset + 1.7 * period;
        const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(lo_t * rate)));
        const auto hi = std::min<std::size_t>(n, static_cast<std::size_t>(
                                                     std::max(0.0, std::ceil(hi_t * rate))));
        for (std::size_t i = lo; i < hi; ++i) {
            const double ti = static_cast<double>(i) / rate;
            const double ds = (ti - sys_c) / sys_s;
            const double dd = (ti - dic_c) / dic_s;
            acc[i] += std::exp(-0.5 * ds * ds) + 0.35 * std::exp(-0.5 * dd * dd);
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(acc.begin(), acc.end());
    const double lo = *lo_it, span = *hi_it - *lo_it;
    SampleSeries out;
    out.sample_rate_hz = params.sample_rate_hz;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = span > 0.0
                             ? static_cast<float>((acc[i] - lo) / span)
                             : 0.0f;
    return out;
}

NoisySeries inject_noise(const SampleSeries& series, const NoiseSpec& spec) {
    check_level(spec.drift_level, "drift_level");
    check_level(spec.motion_level, "motion_level");
    check_level(spec.powerline_level, "powerline_level");
    if (series.samples.empty()) throw DataError("empty input series");

    const std::size_t n = series.samples.size();
    const double rate = series.sample_rate_hz;
    NoisySeries out;
    out.series = series;
    out.artifact_mask.assign(n, false);

    if (spec.drift_level > 0.0) {
        std::mt19937_64 rng(derive_seed(spec.seed, "drift"));
        std::uniform_real_distribution<double> period_dist(10.0, 20.0);
        std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
        const double period = period_dist(rng);
        const double phase = phase_dist(rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double ti = static_cast<double>(i) / rate;
            out.series.samples[i] += static_cast<float>(
                spec.drift_level * std::sin(2.0 * kPi * ti / period + phase));
        }
    }

    if (spec.powerline_level > 0.0) {
        const bool flag = spec.powerline_level > 0.05;
        for (std::size_t i = 0; i < n; ++i) {
            const double ti = static_cast<double>(i) / rate;
            out.series.samples[i] += static_cast<float>(
                spec.powerline_level * std::sin(2.0 * kPi * 50.0 * ti));
            if (flag) out.artifact_mask[i] = true;
        }
    }

    if (spec.motion_level > 0.0) {
        std::mt19937_64 rng(derive_seed(spec.seed, "motion"));
        const auto target = static_cast<std::size_t>(
            std::llround(spec.motion_level * static_cast<double>(n)));
        std::vector<bool> burst(n, false);
        std::size_t placed = 0;
        const auto min_len = std::max<std::size_t>(1, static_cast<std::size_t>(rate / 2));
        const auto max_len = std::max<std::size_t>(min_len, static_cast<std::size_t>(2 * rate));
        std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
        for (int attempt = 0; attempt < 10000 && placed < target; ++attempt) {
            std::size_t len = std::min(len_dist(rng), target - placed);
            if (len == 0 || len > n) break;
            std::uniform_int_distribution<std::size_t> start_dist(0, n - len);
            const std::size_t start = start_dist(rng);
            bool overlaps = false;
            for (std::size_t i = start; i < start + len; ++i)
                if (burst[i]) { overlaps = true; break; }
            if (overlaps) continue;
            for (std::size_t i = start; i < start + len; ++i) burst[i] = true;
            placed += len;
        }
        // Fallback fill so the burst fraction hits the target exactly.
        for (std::size_t i = 0; i < n && placed < target; ++i) {
            if (!burst[i]) { burst[i] = true; ++placed; }
        }

        std::normal_distribution<double> white(0.0, 1.0);
        double colored = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            colored = 0.92 * colored + 0.4 * white(rng);
            if (burst[i]) {
                out.series.samples[i] = static_cast<float>(0.5 + 1.5 * colored);
                out.artifact_mask[i] = true;
            }
        }
    }

    return out;
}

CorpusOutput build_synthetic_corpus(const CorpusParams& params,
                                    const std::string& out_dir) {
    if (params.n_patients == 0 || params.segments_per_patient == 0)
        throw DataError("corpus counts must be positive");
    if (params.noise_policy != "default" && params.noise_policy != "clean")
        throw DataError("unknown noise_policy: " + params.noise_policy);
    std::filesystem::create_directories(out_dir);

    const auto seg_len = static_cast<std::size_t>(
        std::llround(params.segment_s * params.sample_rate_hz));

    CorpusOutput out;
    for (std::size_t p = 0; p < params.n_patients; ++p) {
        const std::uint64_t pseed = derive_seed(params.seed, "patient", p);
        std::mt19937_64 rng(pseed);
        std::uniform_real_distribution<double> hr_dist(params.hr_min_bpm,
                                                       params.hr_max_bpm);
        const double hr = hr_dist(rng);

        PpgSimParams sim;
        sim.hr_bpm = hr;
        sim.duration_s = params.segment_s * static_cast<double>(params.segments_per_patient);
        sim.sample_rate_hz = params.sample_rate_hz;
        sim.seed = derive_seed(pseed, "clean");
        const SampleSeries clean = simulate_clean(sim);

        SampleSeries recording;
        recording.sample_rate_hz = params.sample_rate_hz;
        recording.samples.reserve(clean.samples.size());

        const std::string pid = patient_name(p);
        const std::string file = pid + ".ppgs";
        std::uniform_real_distribution<double> motion_dist(0.25, 0.7);
        std::uniform_real_distribution<double> drift_dist(0.0, 0.3);

        for (std::size_t k = 0; k < params.segments_per_patient; ++k) {
            SampleSeries window;
            window.sample_rate_hz = params.sample_rate_hz;
            window.samples.assign(
                clean.samples.begin() + static_cast<std::ptrdiff_t>(k * seg_len),
                clean.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * seg_len));

            // Odd segments get artifacts under the default policy, so every
            // clean anchor has a bad neighbor one segment away.
            const bool noisy = params.noise_policy == "default" && (k % 2 == 1);
            double quality_y = 0.0;
            if (noisy) {
                NoiseSpec spec;
                spec.motion_level = motion_dist(rng);
                spec.drift_level = drift_dist(rng);
                spec.powerline_level = 0.0;
                spec.seed = derive_seed(pseed, "noise", k);
                NoisySeries res = inject_noise(window, spec);
                window = std::move(res.series);
                const auto n_true = static_cast<double>(
                    std::count(res.artifact_mask.begin(), res.artifact_mask.end(), true));
                quality_y = n_true / static_cast<double>(res.artifact_mask.size());
            }

            ManifestRow row;
            row.segment_id = segment_name(p, k);
            row.patient_id = pid;
            row.t_start_s = static_cast<double>(k) * params.segment_s;
            row.quality_y = quality_y;
            row.file = file;
            row.offset_samples = k * seg_len;
            row.n_samples = seg_len;
            out.manifest.push_back(row);
            out.hr_labels.emplace_back(row.segment_id, hr);

            recording.samples.insert(recording.samples.end(), window.samples.begin(),
                                     window.samples.end());
        }

        write_ppgs((std::filesystem::path(out_dir) / file).string(), recording);
    }

    write_manifest((std::filesystem::path(out_dir) / "manifest.csv").string(),
                   out.manifest);
    write_labels((std::filesystem::path(out_dir) / "labels.csv").string(),
                 out.hr_labels);
    return out;
}

}  // namespace siamq

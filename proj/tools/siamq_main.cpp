// siamq: batch front-end for the quality-paired SimSiam pipeline.
//
//   synth     generate a synthetic PPG corpus (PPGS files + manifest + labels)
//   ingest    validate an external manifest + PPGS files
//   pair      build quality pairs and the curriculum schedule
//   pretrain  curriculum SimSiam pretraining -> SQCK checkpoint + loss log
//   finetune  supervised fine-tuning -> tuned checkpoint + metric log
//   eval      per-segment predictions + metrics CSV
//   atcurve   artifact-tolerance report (CSV + SVG)
//   embed     encoder embeddings CSV
//   gradcheck finite-difference gradient suite
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include <CLI11.hpp>

#include "siamq/checkpoint.hpp"
#include "siamq/errors.hpp"
#include "siamq/eval.hpp"
#include "siamq/gradcheck.hpp"
#include "siamq/pairing.hpp"
#include "siamq/ppgs_io.hpp"
#include "siamq/seeds.hpp"
#include "siamq/synth.hpp"
#include "siamq/train.hpp"

namespace {

using namespace siamq;

void log_resolved_config(const CLI::App* cmd) {
    std::cerr << "[siamq] resolved config for '" << cmd->get_name() << "':\n";
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name().empty() || opt->get_name() == "--help") continue;
        std::string value;
        if (!opt->results().empty()) {
            for (const auto& r : opt->results())
                value += (value.empty() ? "" : " ") + r;
        } else {
            value = opt->get_default_str();
        }
        std::cerr << "  " << opt->get_name() << "=" << value << "\n";
    }
}

HeadKind parse_task_head(const std::string& task) {
    if (task == "regression") return HeadKind::Regression;
    if (task == "binary") return HeadKind::BinaryClassification;
    throw UsageError("unknown task: " + task);
}

TaskKind parse_task(const std::string& task) {
    if (task == "regression") return TaskKind::Regression;
    if (task == "binary") return TaskKind::Binary;
    throw UsageError("unknown task: " + task);
}

std::vector<SegmentIndexEntry> manifest_index(const std::vector<ManifestRow>& rows) {
    std::vector<SegmentIndexEntry> index;
    index.reserve(rows.size());
    for (const auto& r : rows)
        index.push_back({r.segment_id, r.patient_id, r.t_start_s, r.quality_y});
    return index;
}

// Joins manifest windows against the labels file; every manifest segment
// must carry a label.
std::vector<LabeledSegment> labeled_segments(const std::vector<ManifestRow>& rows,
                                             const SegmentStore& store,
                                             const std::string& labels_path) {
    std::unordered_map<std::string, double> labels;
    for (const auto& [id, target] : read_labels(labels_path)) labels[id] = target;
    std::vector<LabeledSegment> out;
    for (const auto& r : rows) {
        auto it = labels.find(r.segment_id);
        if (it == labels.end())
            throw DataError("no label for segment " + r.segment_id);
        out.push_back({r.segment_id, store.at(r.segment_id), it->second});
    }
    return out;
}

// Batched head predictions for eval.
std::vector<double> predict_task(const ModelBundle& model,
                                 const std::vector<std::vector<float>>& windows,
                                 TaskKind task) {
    const std::size_t len = model.config.input_length;
    std::vector<double> preds;
    preds.reserve(windows.size());
    constexpr std::size_t kBatch = 64;
    for (std::size_t start = 0; start < windows.size(); start += kBatch) {
        const std::size_t stop = std::min(windows.size(), start + kBatch);
        const std::size_t b = stop - start;
        ad::TensorF x({b, 1, len});
        for (std::size_t i = 0; i < b; ++i)
            std::copy(windows[start + i].begin(), windows[start + i].end(),
                      x.data.begin() + i * len);
        ad::GraphF g;
        const auto ids = register_params(g, model);
        const int out =
            head_forward(g, ids, model.config, encode(g, ids, model.config, g.value(std::move(x))));
        const auto& ov = g.val(out);
        for (std::size_t i = 0; i < b; ++i) {
            if (task == TaskKind::Regression)
                preds.push_back(ov.data[i]);
            else
                preds.push_back(ov.data[i * 2 + 1] > ov.data[i * 2] ? 1.0 : 0.0);
        }
    }
    return preds;
}

struct ModelFlags {
    std::size_t n_blocks = 2;
    std::size_t base_channels = 8;
    std::size_t embedding_dim = 64;
    std::size_t input_length = 1200;
    std::size_t z_dim = 128;

    EncoderConfig to_config() const {
        EncoderConfig c;
        c.n_blocks = n_blocks;
        c.base_channels = base_channels;
        c.embedding_dim = embedding_dim;
        c.input_length = input_length;
        c.z_dim = z_dim;
        return c;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--n-blocks", f.n_blocks, "Residual blocks (2..8)")
        ->capture_default_str();
    cmd->add_option("--base-channels", f.base_channels, "Stem channel count")
        ->capture_default_str();
    cmd->add_option("--embedding-dim", f.embedding_dim, "Encoder output dim")
        ->capture_default_str();
    cmd->add_option("--input-length", f.input_length, "Model input samples")
        ->capture_default_str();
    cmd->add_option("--z-dim", f.z_dim, "Projector/predictor width")
        ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, TrainConfig& c) {
    cmd->add_option("--batch-size", c.batch_size, "Mini-batch size")
        ->capture_default_str();
    cmd->add_option("--lr", c.learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--momentum", c.momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--weight-decay", c.weight_decay, "L2 weight decay")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quality-paired SimSiam pretraining toolkit for 1D signals"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file (# comments)");

    int threads = 1;
    app.add_option("--threads", threads,
                   "Intra-command parallelism (1 = bit-deterministic)")
        ->capture_default_str();

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic PPG corpus");
    CorpusParams corpus;
    std::string synth_out;
    synth->add_option("--out-dir", synth_out, "Output directory")->required();
    synth->add_option("--patients", corpus.n_patients, "Number of patients")
        ->capture_default_str();
    synth->add_option("--segments-per-patient", corpus.segments_per_patient,
                      "30 s segments per patient")
        ->capture_default_str();
    synth->add_option("--hr-min", corpus.hr_min_bpm, "Heart rate lower bound")
        ->capture_default_str();
    synth->add_option("--hr-max", corpus.hr_max_bpm, "Heart rate upper bound")
        ->capture_default_str();
    synth->add_option("--policy", corpus.noise_policy, "Noise policy: default|clean")
        ->capture_default_str();
    synth->add_option("--seed", corpus.seed, "Root seed")->capture_default_str();
    synth->add_option("--rate", corpus.sample_rate_hz, "Sample rate (Hz)")
        ->capture_default_str();

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "Validate an external manifest");
    std::string ingest_manifest, ingest_data_dir, ingest_out;
    ingest->add_option("--manifest", ingest_manifest, "Input manifest CSV")->required();
    ingest->add_option("--data-dir", ingest_data_dir, "PPGS file directory");
    ingest->add_option("--out", ingest_out, "Validated manifest output")->required();

    // ---- pair ----
    auto* pair = app.add_subcommand("pair", "Build quality pairs + schedule");
    std::string pair_manifest, pair_out, sched_out;
    PairingRules rules;
    std::size_t n_stages = 4, pair_eps = 1;
    pair->add_option("--manifest", pair_manifest, "Segment manifest CSV")->required();
    pair->add_option("--window-s", rules.window_s, "Temporal window (s)")
        ->capture_default_str();
    pair->add_option("--bad-threshold", rules.bad_threshold, "Candidate rule y > t")
        ->capture_default_str();
    pair->add_option("--eps-good", rules.eps_good, "Anchor rule y <= eps")
        ->capture_default_str();
    pair->add_option("--stages", n_stages, "Curriculum stages")->capture_default_str();
    pair->add_option("--epochs-per-stage", pair_eps, "Epochs per stage (metadata)")
        ->capture_default_str();
    pair->add_option("--out-pairs", pair_out, "Pair manifest output")->required();
    pair->add_option("--out-schedule", sched_out, "Schedule output")->required();

    // ---- pretrain ----
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Curriculum SimSiam pretraining");
    std::string pt_manifest, pt_data_dir, pt_pairs, pt_schedule, pt_ckpt, pt_loss_log;
    ModelFlags pt_model;
    TrainConfig pt_cfg;
    pretrain_cmd->add_option("--manifest", pt_manifest, "Segment manifest CSV")->required();
    pretrain_cmd->add_option("--data-dir", pt_data_dir, "PPGS file directory");
    pretrain_cmd->add_option("--pairs", pt_pairs, "Pair manifest CSV")->required();
    pretrain_cmd->add_option("--schedule", pt_schedule, "Schedule CSV")->required();
    pretrain_cmd->add_option("--epochs-per-stage", pt_cfg.epochs_per_stage,
                             "Epochs per curriculum stage")
        ->capture_default_str();
    pretrain_cmd->add_option("--seed", pt_cfg.seed, "Root seed")->capture_default_str();
    add_model_flags(pretrain_cmd, pt_model);
    add_train_flags(pretrain_cmd, pt_cfg);
    pretrain_cmd->add_option("--out-checkpoint", pt_ckpt, "SQCK checkpoint output")
        ->required();
    pretrain_cmd->add_option("--loss-log", pt_loss_log, "Loss log CSV output");

    // ---- finetune ----
    auto* ft = app.add_subcommand("finetune", "Fine-tune on a labeled dataset");
    std::string ft_ckpt, ft_manifest, ft_data_dir, ft_labels, ft_task = "regression";
    std::string ft_mode = "all", ft_out, ft_metric_log;
    TrainConfig ft_cfg;
    std::size_t ft_epochs = 10, ft_indomain_eps = 0, ft_indomain_stages = 4;
    ft_cfg.learning_rate = 0.01;
    ft->add_option("--checkpoint", ft_ckpt, "Pretrained SQCK checkpoint")->required();
    ft->add_option("--manifest", ft_manifest, "Segment manifest CSV")->required();
    ft->add_option("--data-dir", ft_data_dir, "PPGS file directory");
    ft->add_option("--labels", ft_labels, "Labels CSV (segment_id,target)")->required();
    ft->add_option("--task", ft_task, "regression|binary")->capture_default_str();
    ft->add_option("--mode", ft_mode, "all|last|indomain")->capture_default_str();
    ft->add_option("--epochs", ft_epochs, "Fine-tuning epochs")->capture_default_str();
    ft->add_option("--seed", ft_cfg.seed, "Root seed")->capture_default_str();
    ft->add_option("--in-domain-epochs-per-stage", ft_indomain_eps,
                   "Self-supervised epochs per stage before head tuning")
        ->capture_default_str();
    ft->add_option("--in-domain-stages", ft_indomain_stages,
                   "Curriculum stages for in-domain pretraining")
        ->capture_default_str();
    add_train_flags(ft, ft_cfg);
    ft->add_option("--out-checkpoint", ft_out, "Tuned checkpoint output")->required();
    ft->add_option("--metric-log", ft_metric_log, "Metric log CSV output");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Predictions + metrics");
    std::string ev_ckpt, ev_manifest, ev_data_dir, ev_labels, ev_task = "regression";
    std::string ev_records, ev_metrics;
    eval_cmd->add_option("--checkpoint", ev_ckpt, "Tuned SQCK checkpoint")->required();
    eval_cmd->add_option("--manifest", ev_manifest, "Segment manifest CSV")->required();
    eval_cmd->add_option("--data-dir", ev_data_dir, "PPGS file directory");
    eval_cmd->add_option("--labels", ev_labels, "Labels CSV")->required();
    eval_cmd->add_option("--task", ev_task, "regression|binary")->capture_default_str();
    eval_cmd->add_option("--out-records", ev_records, "Per-segment records CSV")
        ->required();
    eval_cmd->add_option("--out-metrics", ev_metrics, "Metrics CSV output");

    // ---- atcurve ----
    auto* at = app.add_subcommand("atcurve", "Artifact-tolerance report");
    std::string at_records, at_metric = "mae", at_csv, at_svg;
    std::size_t at_bins = 10;
    at->add_option("--records", at_records, "Records CSV from eval")->required();
    at->add_option("--metric", at_metric, "mae|f1")->capture_default_str();
    at->add_option("--bins", at_bins, "Quality bins")->capture_default_str();
    at->add_option("--out-csv", at_csv, "Report CSV output")->required();
    at->add_option("--out-svg", at_svg, "Report SVG output");

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "Export encoder embeddings");
    std::string em_ckpt, em_manifest, em_data_dir, em_out;
    embed->add_option("--checkpoint", em_ckpt, "SQCK checkpoint")->required();
    embed->add_option("--manifest", em_manifest, "Segment manifest CSV")->required();
    embed->add_option("--data-dir", em_data_dir, "PPGS file directory");
    embed->add_option("--out", em_out, "Embeddings CSV output")->required();

    // ---- gradcheck ----
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    std::size_t gc_cases = 100;
    std::uint64_t gc_seed = 0;
    double gc_tol = 1e-4;
    gc->add_option("--cases", gc_cases, "Random cases per operation")
        ->capture_default_str();
    gc->add_option("--seed", gc_seed, "Root seed")->capture_default_str();
    gc->add_option("--tolerance", gc_tol, "Max relative error allowed")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const CLI::App* active = app.get_subcommands().front();
    log_resolved_config(active);

    try {
        if (*synth) {
            build_synthetic_corpus(corpus, synth_out);
            std::cerr << "[siamq] corpus written to " << synth_out << "\n";
        } else if (*ingest) {
            const auto rows = read_manifest(ingest_manifest);
            const std::string data_dir =
                ingest_data_dir.empty()
                    ? std::filesystem::path(ingest_manifest).parent_path().string()
                    : ingest_data_dir;
            std::unordered_map<std::string, bool> ids;
            for (const auto& r : rows) {
                if (!ids.emplace(r.segment_id, true).second)
                    throw DataError("duplicate segment_id: " + r.segment_id);
                // Confirms the file exists and the window is in range.
                read_ppgs_window((std::filesystem::path(data_dir) / r.file).string(),
                                 r.offset_samples, r.n_samples);
            }
            write_manifest(ingest_out, rows);
            std::cerr << "[siamq] validated " << rows.size() << " segments\n";
        } else if (*pair) {
            const auto rows = read_manifest(pair_manifest);
            auto pairs = sort_curriculum(build_pairs(manifest_index(rows), rules));
            write_pairs(pair_out, pairs);
            const auto schedule = make_schedule(pairs, n_stages, pair_eps);
            write_schedule(sched_out, schedule);
            std::cerr << "[siamq] " << pairs.size() << " pairs, "
                      << schedule.stages.size() << " stages\n";
        } else if (*pretrain_cmd) {
            const auto rows = read_manifest(pt_manifest);
            const std::string data_dir =
                pt_data_dir.empty()
                    ? std::filesystem::path(pt_manifest).parent_path().string()
                    : pt_data_dir;
            const EncoderConfig cfg = pt_model.to_config();
            const auto store = load_segment_store(rows, data_dir, cfg.input_length);
            const auto pairs = read_pairs(pt_pairs);
            const auto schedule = read_schedule(pt_schedule, pt_cfg.epochs_per_stage);
            ModelBundle model =
                init_model<float>(cfg, derive_seed(pt_cfg.seed, "init"));
            auto result = pretrain(std::move(model), pairs, schedule, store, pt_cfg);
            save_checkpoint(result.model, pt_ckpt);
            if (!pt_loss_log.empty()) write_loss_log(pt_loss_log, result.loss_log);
            std::cerr << "[siamq] checkpoint written to " << pt_ckpt << "\n";
        } else if (*ft) {
            const auto rows = read_manifest(ft_manifest);
            const std::string data_dir =
                ft_data_dir.empty()
                    ? std::filesystem::path(ft_manifest).parent_path().string()
                    : ft_data_dir;
            const ModelBundle pretrained = load_checkpoint(ft_ckpt);
            const auto store =
                load_segment_store(rows, data_dir, pretrained.config.input_length);
            const auto data = labeled_segments(rows, store, ft_labels);

            FinetuneOptions options;
            options.task = parse_task(ft_task);
            options.epochs = ft_epochs;
            options.head_seed = derive_seed(ft_cfg.seed, "head-init");
            std::vector<QualityPair> indomain_pairs;
            CurriculumSchedule indomain_schedule;
            if (ft_mode == "all") {
                options.mode = FineTuneMode::FineTuneAll;
            } else if (ft_mode == "last") {
                options.mode = FineTuneMode::FineTuneLast;
            } else if (ft_mode == "indomain") {
                options.mode = FineTuneMode::InDomainPretrainThenLast;
                indomain_pairs = sort_curriculum(build_pairs(manifest_index(rows)));
                if (!indomain_pairs.empty())
                    indomain_schedule = make_schedule(
                        indomain_pairs,
                        std::min(ft_indomain_stages, indomain_pairs.size()), 1);
                options.in_domain_pairs = &indomain_pairs;
                options.in_domain_schedule = &indomain_schedule;
                options.in_domain_store = &store;
                options.in_domain_config = ft_cfg;
                options.in_domain_config.epochs_per_stage = ft_indomain_eps;
            } else {
                throw UsageError("unknown mode: " + ft_mode);
            }

            auto result = finetune(pretrained, data, options, ft_cfg);
            save_checkpoint(result.model, ft_out);
            if (!ft_metric_log.empty())
                write_metric_log(ft_metric_log, result.metric_log);
            std::cerr << "[siamq] tuned checkpoint written to " << ft_out << "\n";
        } else if (*eval_cmd) {
            const auto rows = read_manifest(ev_manifest);
            const std::string data_dir =
                ev_data_dir.empty()
                    ? std::filesystem::path(ev_manifest).parent_path().string()
                    : ev_data_dir;
            const ModelBundle model = load_checkpoint(ev_ckpt);
            const TaskKind task = parse_task(ev_task);
            if (model.config.head != parse_task_head(ev_task))
                throw DataError("checkpoint head does not match task");
            const auto store =
                load_segment_store(rows, data_dir, model.config.input_length);
            const auto data = labeled_segments(rows, store, ev_labels);
            std::vector<std::vector<float>> windows;
            for (const auto& d : data) windows.push_back(d.samples);
            const auto preds = predict_task(model, windows, task);

            std::vector<EvalRecord> records;
            for (std::size_t i = 0; i < data.size(); ++i)
                records.push_back({data[i].segment_id, rows[i].quality_y,
                                   data[i].target, preds[i]});
            write_records(ev_records, records);
            if (!ev_metrics.empty()) {
                std::ofstream os(ev_metrics);
                os << "metric,value\n";
                if (task == TaskKind::Regression)
                    os << "mae," << format_double(mae(records)) << "\n";
                else
                    os << "f1," << format_double(f1(records)) << "\n";
            }
            std::cerr << "[siamq] " << records.size() << " records evaluated\n";
        } else if (*at) {
            const auto records = read_records(at_records);
            MetricKind kind;
            if (at_metric == "mae") kind = MetricKind::Mae;
            else if (at_metric == "f1") kind = MetricKind::F1;
            else throw UsageError("unknown metric: " + at_metric);
            const ATCurve curve = at_curve(records, at_bins, kind);
            write_at_curve_csv(at_csv, curve);
            if (!at_svg.empty()) write_at_curve_svg(at_svg, curve);
            std::cerr << "[siamq] AT-curve written to " << at_csv << "\n";
        } else if (*embed) {
            const auto rows = read_manifest(em_manifest);
            const std::string data_dir =
                em_data_dir.empty()
                    ? std::filesystem::path(em_manifest).parent_path().string()
                    : em_data_dir;
            const ModelBundle model = load_checkpoint(em_ckpt);
            const auto store =
                load_segment_store(rows, data_dir, model.config.input_length);
            std::vector<std::vector<float>> windows;
            for (const auto& r : rows) windows.push_back(store.at(r.segment_id));
            const auto hs = compute_embeddings(model, windows);
            std::vector<EmbeddingRow> out;
            for (std::size_t i = 0; i < rows.size(); ++i)
                out.push_back({rows[i].segment_id, rows[i].patient_id,
                               rows[i].quality_y, hs[i]});
            write_embeddings_csv(em_out, out);
            std::cerr << "[siamq] " << out.size() << " embeddings written\n";
        } else if (*gc) {
            const auto results = ad::run_gradcheck_suite(gc_cases, gc_seed, gc_tol);
            double worst = 0.0;
            bool ok = true;
            for (const auto& r : results) {
                std::cout << (r.passed ? "pass" : "FAIL") << "  " << r.name
                          << "  max_rel_err=" << format_double(r.max_rel_err) << "\n";
                worst = std::max(worst, r.max_rel_err);
                ok = ok && r.passed;
            }
            std::cout << "overall max_rel_err=" << format_double(worst) << "\n";
            if (!ok) throw NumericError("gradient check failed");
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

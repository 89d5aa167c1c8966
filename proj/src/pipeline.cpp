#include "fvgenre/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

namespace fvgenre {

namespace {

namespace fs = std::filesystem;

std::string safe_id(const std::string& video_id) {
    if (video_id.empty() || video_id.find('/') != std::string::npos ||
        video_id.find('\\') != std::string::npos || video_id == "." || video_id == "..") {
        throw Error("video_id \"" + video_id + "\" is not usable as a file name");
    }
    return video_id;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void require_file(const std::string& path, const std::string& hint) {
    if (!fs::exists(path)) throw Error(path + " not found; run " + hint + " first");
}

/// Resolves where a video's descriptors for one modality live: an explicit
/// manifest path wins, then the workdir extraction output. Empty = absent.
std::string resolve_descriptor_path(const PipelineConfig& cfg, const VideoEntry& entry,
                                    const std::string& modality_name) {
    const auto it = entry.descriptor_paths.find(modality_name);
    if (it != entry.descriptor_paths.end()) return it->second;
    const std::string extracted = cfg.descriptor_path(entry.video_id, modality_name);
    if (fs::exists(extracted)) return extracted;
    return {};
}

/// Runs fn(0..n-1) across up to thread_count() workers, rethrowing the first
/// failure. Work item i always writes only slot i of its output, so results
/// are deterministic regardless of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(thread_count()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string PipelineConfig::descriptors_dir() const { return workdir + "/descriptors"; }

std::string PipelineConfig::descriptor_path(const std::string& video_id,
                                            const std::string& modality_name) const {
    return descriptors_dir() + "/" + safe_id(video_id) + "." + modality_name + ".fvd";
}

std::string PipelineConfig::gmm_path(const std::string& modality_name) const {
    return workdir + "/gmm_" + modality_name + ".bin";
}

std::string PipelineConfig::fv_dir(const std::string& modality_name) const {
    return workdir + "/fv_" + modality_name;
}

std::string PipelineConfig::fv_path(const std::string& modality_name,
                                    const std::string& video_id) const {
    return fv_dir(modality_name) + "/" + safe_id(video_id) + ".fv";
}

std::string PipelineConfig::fv_index_path(const std::string& modality_name) const {
    return fv_dir(modality_name) + "/index.jsonl";
}

std::string PipelineConfig::text_model_path() const { return workdir + "/text_model.json"; }

std::string PipelineConfig::svm_path(const std::string& modality_name) const {
    return workdir + "/svm_" + modality_name + ".bin";
}

std::string PipelineConfig::scores_path(const std::string& table_name) const {
    return workdir + "/scores_" + table_name + ".tsv";
}

std::string PipelineConfig::report_tsv_path(const std::string& table_name) const {
    return workdir + "/report_" + table_name + ".tsv";
}

std::string PipelineConfig::report_jsonl_path(const std::string& table_name) const {
    return workdir + "/report_" + table_name + ".jsonl";
}

std::string PipelineConfig::sweep_path() const { return workdir + "/sweep.tsv"; }

DatasetManifest PipelineConfig::load() const {
    if (manifest_path.empty()) throw Error("no manifest given (--manifest)");
    return load_manifest(manifest_path, genre_list_path);
}

int thread_count() {
    if (const char* env = std::getenv("FVGENRE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<std::string> run_extract_visual(const PipelineConfig& cfg) {
    const DatasetManifest manifest = cfg.load();
    ensure_dir(cfg.descriptors_dir());

    std::vector<std::string> warnings(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        const VideoEntry& e = manifest.entries[i];
        if (e.frames_dir.empty()) {
            warnings[i] = "skipping video \"" + e.video_id + "\": no frames_dir";
            return;
        }
        DescriptorSequence seq = extract_visual_sequence(e.frames_dir, cfg.n_keyframes);
        seq.video_id = e.video_id;
        write_descriptors(seq, cfg.descriptor_path(e.video_id, "visual"));
    });

    std::vector<std::string> out;
    for (std::string& w : warnings) {
        if (!w.empty()) out.push_back(std::move(w));
    }
    return out;
}

std::vector<std::string> run_train_gmm(const PipelineConfig& cfg, GmmTrainLog* log) {
    const DatasetManifest manifest = cfg.load();
    std::vector<std::string> warnings;

    std::vector<Mat> blocks;
    Eigen::Index total_rows = 0;
    Eigen::Index dim = -1;
    for (const VideoEntry& e : manifest.entries) {
        if (e.split != Split::Train) continue;
        const std::string path = resolve_descriptor_path(cfg, e, cfg.modality);
        if (path.empty()) {
            warnings.push_back("skipping train video \"" + e.video_id + "\": no " + cfg.modality +
                               " descriptors");
            continue;
        }
        DescriptorSequence seq = read_descriptors(path);
        if (dim < 0) {
            dim = seq.d();
        } else if (seq.d() != dim) {
            throw Error("descriptor dimensionality mismatch for video \"" + e.video_id + "\": got " +
                        std::to_string(seq.d()) + ", expected " + std::to_string(dim));
        }
        total_rows += seq.t();
        blocks.push_back(std::move(seq.data));
    }
    if (blocks.empty()) {
        throw Error("no train video has " + cfg.modality + " descriptors; run extract-visual first");
    }

    Mat pooled(total_rows, dim);
    Eigen::Index row = 0;
    for (const Mat& b : blocks) {
        pooled.middleRows(row, b.rows()) = b;
        row += b.rows();
    }

    GmmTrainLog local_log;
    GmmTrainLog* use_log = log ? log : &local_log;
    const DiagonalGmm model = train_gmm(pooled, cfg.gmm, use_log);
    ensure_dir(cfg.workdir);
    save_gmm(model, cfg.gmm_path(cfg.modality));
    for (const std::string& w : use_log->warnings) warnings.push_back(w);
    return warnings;
}

std::vector<std::string> run_encode_fv(const PipelineConfig& cfg) {
    const DatasetManifest manifest = cfg.load();
    require_file(cfg.gmm_path(cfg.modality), "train-gmm");
    const DiagonalGmm model = load_gmm(cfg.gmm_path(cfg.modality));
    const NormalizationSpec spec = normalization_by_name(cfg.norm_name, cfg.alpha);
    ensure_dir(cfg.fv_dir(cfg.modality));

    std::vector<std::string> warnings(manifest.entries.size());
    std::vector<std::string> index_lines(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        const VideoEntry& e = manifest.entries[i];
        const std::string path = resolve_descriptor_path(cfg, e, cfg.modality);
        if (path.empty()) {
            warnings[i] = "skipping video \"" + e.video_id + "\": no " + cfg.modality +
                          " descriptors";
            return;
        }
        DescriptorSequence seq = read_descriptors(path);
        seq.video_id = e.video_id;
        seq.modality = cfg.modality;
        const FisherVector fv = normalize(encode_fisher(model, seq), spec);

        DescriptorSequence flat;
        flat.video_id = e.video_id;
        flat.modality = cfg.modality + "-fv";
        flat.data = fv.values.transpose();
        const std::string fv_file = cfg.fv_path(cfg.modality, e.video_id);
        write_descriptors(flat, fv_file);

        nlohmann::json j;
        j["video_id"] = e.video_id;
        j["k"] = fv.k;
        j["d"] = fv.d;
        j["fv_dim"] = fv.values.size();
        j["normalization"] = cfg.norm_name;
        j["alpha"] = cfg.alpha;
        j["path"] = fv_file;
        index_lines[i] = j.dump();
    });

    std::ofstream index(cfg.fv_index_path(cfg.modality), std::ios::trunc);
    if (!index) throw Error("cannot write " + cfg.fv_index_path(cfg.modality));
    for (const std::string& line : index_lines) {
        if (!line.empty()) index << line << '\n';
    }

    std::vector<std::string> out;
    for (std::string& w : warnings) {
        if (!w.empty()) out.push_back(std::move(w));
    }
    return out;
}

namespace {

/// Loads Fisher vectors for one split; rows align with the returned ids.
struct FvSet {
    std::vector<std::string> ids;
    std::vector<int> labels;
    Mat features;
};

FvSet load_fv_split(const PipelineConfig& cfg, const DatasetManifest& manifest, Split split,
                    std::vector<std::string>& warnings) {
    std::vector<Vec> rows;
    FvSet set;
    for (const VideoEntry& e : manifest.entries) {
        if (e.split != split) continue;
        const std::string path = cfg.fv_path(cfg.modality, e.video_id);
        if (!fs::exists(path)) {
            warnings.push_back("skipping " + std::string(split_name(split)) + " video \"" +
                               e.video_id + "\": no Fisher vector");
            continue;
        }
        const DescriptorSequence flat = read_descriptors(path);
        if (flat.t() != 1) {
            throw Error(path + ": Fisher vector file must have T=1, got T=" +
                        std::to_string(flat.t()));
        }
        if (!rows.empty() && flat.d() != rows.front().size()) {
            throw Error(path + ": Fisher vector dimensionality mismatch");
        }
        rows.push_back(flat.data.row(0).transpose());
        set.ids.push_back(e.video_id);
        set.labels.push_back(e.genre);
    }
    set.features.resize(static_cast<Eigen::Index>(rows.size()),
                        rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        set.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return set;
}

std::vector<TrainDoc> load_text_split(const DatasetManifest& manifest, Split split,
                                      std::vector<std::string>& warnings,
                                      std::vector<std::string>* ids) {
    std::vector<TrainDoc> docs;
    for (const VideoEntry& e : manifest.entries) {
        if (e.split != split) continue;
        if (e.metadata_path.empty()) {
            warnings.push_back("skipping " + std::string(split_name(split)) + " video \"" +
                               e.video_id + "\": no metadata");
            continue;
        }
        TrainDoc doc;
        doc.tokens = tokenize(read_text_file(e.metadata_path));
        doc.genre = e.genre;
        docs.push_back(std::move(doc));
        if (ids) ids->push_back(e.video_id);
    }
    return docs;
}

}  // namespace

std::vector<std::string> run_train_svm(const PipelineConfig& cfg, SvmTrainLog* log) {
    const DatasetManifest manifest = cfg.load();
    if (!fs::exists(cfg.fv_dir(cfg.modality))) {
        throw Error(cfg.fv_dir(cfg.modality) + " not found; run encode-fv first");
    }
    std::vector<std::string> warnings;
    const FvSet train = load_fv_split(cfg, manifest, Split::Train, warnings);
    if (train.ids.empty()) {
        throw Error("no train video has a Fisher vector; run encode-fv first");
    }
    const LinearSvmModel model =
        train_svm(train.features, train.labels, manifest.genres.size(), cfg.svm, log);
    save_svm(model, cfg.svm_path(cfg.modality));
    if (log) {
        for (const std::string& w : log->warnings) warnings.push_back(w);
    }
    return warnings;
}

std::vector<std::string> run_train_text(const PipelineConfig& cfg, SvmTrainLog* log) {
    const DatasetManifest manifest = cfg.load();
    std::vector<std::string> warnings;
    const std::vector<TrainDoc> docs = load_text_split(manifest, Split::Train, warnings, nullptr);
    if (docs.empty()) throw Error("no train video has metadata; nothing to fit TF-IDF on");

    const TfIdfModel model = fit_tfidf(docs, manifest.genres.size(), cfg.terms_per_genre);
    ensure_dir(cfg.workdir);
    save_tfidf(model, cfg.text_model_path());

    Mat features(static_cast<Eigen::Index>(docs.size()),
                 static_cast<Eigen::Index>(model.selected_terms.size()));
    std::vector<int> labels(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        features.row(static_cast<Eigen::Index>(i)) = encode_tfidf(model, docs[i].tokens).transpose();
        labels[i] = docs[i].genre;
    }
    const LinearSvmModel svm = train_svm(features, labels, manifest.genres.size(), cfg.svm, log);
    save_svm(svm, cfg.svm_path("text"));
    if (log) {
        for (const std::string& w : log->warnings) warnings.push_back(w);
    }
    return warnings;
}

std::vector<std::string> run_predict(const PipelineConfig& cfg, const std::string& modality_name) {
    const DatasetManifest manifest = cfg.load();
    std::vector<std::string> warnings;

    ScoreTable table;
    table.modality = modality_name;
    table.genres = manifest.genres;

    if (modality_name == "text") {
        require_file(cfg.text_model_path(), "train-text");
        require_file(cfg.svm_path("text"), "train-text");
        const TfIdfModel text_model = load_tfidf(cfg.text_model_path());
        const LinearSvmModel svm = load_svm(cfg.svm_path("text"));
        std::vector<Vec> rows;
        for (const VideoEntry& e : manifest.entries) {
            if (e.split != Split::Test) continue;
            if (e.metadata_path.empty()) {
                warnings.push_back("skipping test video \"" + e.video_id + "\": no metadata");
                continue;
            }
            const Vec features = encode_tfidf(text_model, tokenize(read_text_file(e.metadata_path)));
            rows.push_back(decision_scores(svm, features));
            table.video_ids.push_back(e.video_id);
        }
        table.scores.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(manifest.genres.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            table.scores.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        }
    } else {
        require_file(cfg.svm_path(modality_name), "train-svm");
        const LinearSvmModel svm = load_svm(cfg.svm_path(modality_name));
        PipelineConfig sub = cfg;
        sub.modality = modality_name;
        if (!fs::exists(sub.fv_dir(modality_name))) {
            throw Error(sub.fv_dir(modality_name) + " not found; run encode-fv first");
        }
        const FvSet test = load_fv_split(sub, manifest, Split::Test, warnings);
        if (test.features.cols() != svm.weights.cols()) {
            throw Error("Fisher vector dimensionality " + std::to_string(test.features.cols()) +
                        " does not match SVM feature dimensionality " +
                        std::to_string(svm.weights.cols()) +
                        "; re-run encode-fv and train-svm with matching settings");
        }
        table.video_ids = test.ids;
        table.scores.resize(test.features.rows(),
                            static_cast<Eigen::Index>(manifest.genres.size()));
        for (Eigen::Index i = 0; i < test.features.rows(); ++i) {
            table.scores.row(i) = decision_scores(svm, test.features.row(i).transpose()).transpose();
        }
    }

    if (table.video_ids.empty()) {
        throw Error("no test video could be scored for modality \"" + modality_name + "\"");
    }
    write_score_table(table, cfg.scores_path(modality_name));
    return warnings;
}

ScoreTable run_fuse(const PipelineConfig& cfg, const std::vector<std::string>& table_names,
                    FusionMode mode) {
    if (table_names.empty()) throw Error("fuse: no score tables given");
    std::vector<ScoreTable> calibrated;
    for (const std::string& name : table_names) {
        const std::string path = cfg.scores_path(name);
        require_file(path, "predict");
        calibrated.push_back(minmax_calibrate(read_score_table(path)));
        calibrated.back().modality = name;
    }
    const ScoreTable fused = fuse(calibrated, mode);
    write_score_table(fused, cfg.scores_path(fused.modality));
    return fused;
}

EvalReport run_evaluate(const PipelineConfig& cfg, const std::string& table_name) {
    const DatasetManifest manifest = cfg.load();
    const std::string path = cfg.scores_path(table_name);
    require_file(path, "predict");
    const ScoreTable table = read_score_table(path);
    const EvalReport report = evaluate(table, manifest);
    write_report_tsv(report, cfg.report_tsv_path(table_name));
    write_report_jsonl(report, cfg.report_jsonl_path(table_name));
    return report;
}

TimingReport run_timing(const PipelineConfig& cfg) {
    const DatasetManifest manifest = cfg.load();
    bool any_frames = false;
    bool train_metadata = false;
    bool test_metadata = false;
    for (const VideoEntry& e : manifest.entries) {
        any_frames |= !e.frames_dir.empty();
        if (e.split == Split::Train) {
            train_metadata |= !e.metadata_path.empty();
        } else {
            test_metadata |= !e.metadata_path.empty();
        }
    }
    const bool text_possible = train_metadata && test_metadata;

    TimingReport report;
    auto timed = [&](const std::string& name, bool enabled, const std::function<void()>& stage) {
        TimingStage entry;
        entry.name = name;
        if (enabled) {
            const auto start = std::chrono::steady_clock::now();
            stage();
            entry.seconds = seconds_since(start);
        }
        report.stages.push_back(entry);
    };

    timed("visual-features", any_frames, [&] { run_extract_visual(cfg); });
    timed("gmm-train", true, [&] { run_train_gmm(cfg); });
    timed("fv-encode", true, [&] { run_encode_fv(cfg); });
    timed("text", text_possible, [&] {
        run_train_text(cfg);
        run_predict(cfg, "text");
    });
    timed("svm", true, [&] {
        run_train_svm(cfg);
        run_predict(cfg, cfg.modality);
    });
    timed("fuse", text_possible,
          [&] { run_fuse(cfg, {cfg.modality, "text"}, cfg.fusion_mode); });
    const std::string eval_table =
        text_possible ? std::string("fusion-") + fusion_mode_name(cfg.fusion_mode) : cfg.modality;
    timed("evaluate", true, [&] { run_evaluate(cfg, eval_table); });

    for (const TimingStage& s : report.stages) report.total_seconds += s.seconds;
    if (report.total_seconds > 0.0) {
        for (TimingStage& s : report.stages) s.percent = 100.0 * s.seconds / report.total_seconds;
    }
    return report;
}

std::vector<SweepRow> run_sweep(const PipelineConfig& cfg, const std::vector<int>& k_list,
                                const std::vector<std::string>& norm_names) {
    if (k_list.empty()) throw Error("sweep: empty K list");
    if (norm_names.empty()) throw Error("sweep: empty normalization list");
    std::vector<SweepRow> rows;
    for (const int k : k_list) {
        PipelineConfig cell = cfg;
        cell.gmm.k = k;
        run_train_gmm(cell);
        for (const std::string& norm : norm_names) {
            cell.norm_name = norm;
            run_encode_fv(cell);
            run_train_svm(cell);
            run_predict(cell, cell.modality);
            const EvalReport report = run_evaluate(cell, cell.modality);
            rows.push_back({k, norm, report.map});
        }
    }
    std::ofstream out(cfg.sweep_path(), std::ios::trunc);
    if (!out) throw Error("cannot write " + cfg.sweep_path());
    out << "k\tnormalization\tmap\n";
    char buf[40];
    for (const SweepRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", row.map);
        out << row.k << '\t' << row.normalization << '\t' << buf << '\n';
    }
    return rows;
}

}  // namespace fvgenre

#pragma once

#include "fvgenre/dataset.hpp"
#include "fvgenre/eval.hpp"
#include "fvgenre/fisher.hpp"
#include "fvgenre/fusion.hpp"
#include "fvgenre/gmm.hpp"
#include "fvgenre/svm.hpp"
#include "fvgenre/text.hpp"
#include "fvgenre/visual.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fvgenre {

/// Everything a pipeline command needs. The CLI populates this from flags and
/// an optional config file; tests build it directly.
struct PipelineConfig {
    std::string manifest_path;
    std::string genre_list_path;  // optional explicit genre ordering
    std::string workdir;
    std::string modality = "visual";
    int n_keyframes = 32;
    GmmTrainConfig gmm{.k = 64};
    std::string norm_name = "PN + L2 Norm";
    double alpha = 0.5;
    SvmTrainConfig svm;
    int terms_per_genre = 20;  // chi-square m
    FusionMode fusion_mode = FusionMode::Max;

    // Artifact layout inside workdir.
    std::string descriptors_dir() const;
    std::string descriptor_path(const std::string& video_id, const std::string& modality_name) const;
    std::string gmm_path(const std::string& modality_name) const;
    std::string fv_dir(const std::string& modality_name) const;
    std::string fv_path(const std::string& modality_name, const std::string& video_id) const;
    std::string fv_index_path(const std::string& modality_name) const;
    std::string text_model_path() const;
    std::string svm_path(const std::string& modality_name) const;  // modality or "text"
    std::string scores_path(const std::string& table_name) const;  // scores_<name>.tsv
    std::string report_tsv_path(const std::string& table_name) const;
    std::string report_jsonl_path(const std::string& table_name) const;
    std::string sweep_path() const;

    DatasetManifest load() const;
};

/// Worker cap: FVGENRE_THREADS when set to a positive integer, otherwise the
/// logical CPU count.
int thread_count();

/// Extracts 92-dim visual descriptors for every manifest video with a
/// frames_dir; videos without one are skipped with a warning. Returns the
/// warnings.
std::vector<std::string> run_extract_visual(const PipelineConfig& cfg);

/// Pools train-split descriptors of cfg.modality and trains the GMM.
std::vector<std::string> run_train_gmm(const PipelineConfig& cfg, GmmTrainLog* log = nullptr);

/// Encodes every video's descriptor sequence into a normalized Fisher vector
/// (FVD1 with T=1) plus a JSON-lines index recording the normalization.
std::vector<std::string> run_encode_fv(const PipelineConfig& cfg);

/// Trains the one-vs-rest SVM on train-split Fisher vectors.
std::vector<std::string> run_train_svm(const PipelineConfig& cfg, SvmTrainLog* log = nullptr);

/// Fits the TF-IDF model on train-split metadata and trains the text SVM on
/// the encoded training documents.
std::vector<std::string> run_train_text(const PipelineConfig& cfg, SvmTrainLog* log = nullptr);

/// Scores the test split under one modality ("text" uses the TF-IDF model,
/// anything else the corresponding Fisher vectors) and writes
/// scores_<modality>.tsv.
std::vector<std::string> run_predict(const PipelineConfig& cfg, const std::string& modality_name);

/// Min-max calibrates the named score tables and fuses them; writes
/// scores_fusion-<mode>.tsv.
ScoreTable run_fuse(const PipelineConfig& cfg, const std::vector<std::string>& table_names,
                    FusionMode mode);

/// Evaluates a written score table against the manifest and writes the TSV
/// and JSON-lines reports.
EvalReport run_evaluate(const PipelineConfig& cfg, const std::string& table_name);

struct TimingStage {
    std::string name;
    double seconds = 0.0;
    double percent = 0.0;
};

struct TimingReport {
    std::vector<TimingStage> stages;  // fixed order, skipped stages at 0
    double total_seconds = 0.0;
};

/// Runs the full pipeline once, timing each stage: visual-features,
/// gmm-train, fv-encode, text, svm, fuse, evaluate. Stages that do not apply
/// to the manifest (no frames, no metadata) are reported at 0%.
TimingReport run_timing(const PipelineConfig& cfg);

struct SweepRow {
    int k = 0;
    std::string normalization;
    double map = 0.0;
};

/// Re-runs train-gmm / encode-fv / train-svm / predict / evaluate for every
/// (K, normalization) cell and writes sweep.tsv.
std::vector<SweepRow> run_sweep(const PipelineConfig& cfg, const std::vector<int>& k_list,
                                const std::vector<std::string>& norm_names);

}  // namespace fvgenre

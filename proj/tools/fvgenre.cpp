#include "fvgenre/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace fvgenre;

struct CliState {
    PipelineConfig cfg;
    std::uint64_t seed = 42;
    std::string fusion_mode = "max";
    std::string tables = "visual,text";  // fuse inputs
    std::string scores_name;             // evaluate input; defaults to modality
    std::string predict_modality;        // defaults to cfg.modality
    std::string k_list;                  // sweep
    std::string norms;                   // sweep; "all" = full menu
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_report(const EvalReport& report) {
    std::printf("genre\trelevant\tap\n");
    for (const GenreResult& r : report.per_genre) {
        if (std::isnan(r.ap)) {
            std::printf("%s\t%zu\tNA\n", r.genre.c_str(), r.relevant_count);
        } else {
            std::printf("%s\t%zu\t%.6f\n", r.genre.c_str(), r.relevant_count, r.ap);
        }
    }
    std::printf("MAP\t%zu\t%.6f\n", report.genres_evaluated, report.map);
}

// Derives all per-stage seeds from the single --seed value.
void apply_seed(CliState& s) {
    s.cfg.gmm.seed = s.seed;
    s.cfg.svm.seed = s.seed + 1;
}

void add_common(CLI::App* sub, CliState& s) {
    sub->add_option("--manifest", s.cfg.manifest_path, "dataset manifest TSV");
    sub->add_option("--genre-list", s.cfg.genre_list_path,
                    "explicit genre ordering, one name per line");
    sub->add_option("--workdir", s.cfg.workdir, "artifact directory")->required();
    sub->add_option("--modality", s.cfg.modality, "descriptor modality (default visual)");
    sub->add_option("--seed", s.seed, "master seed for all randomness");
}

void add_gmm_options(CLI::App* sub, CliState& s) {
    sub->add_option("--k", s.cfg.gmm.k, "GMM centroid count");
    sub->add_option("--max-iters", s.cfg.gmm.max_iters, "EM iteration cap");
    sub->add_option("--rel-tol", s.cfg.gmm.rel_tol, "EM relative tolerance");
    sub->add_option("--variance-floor", s.cfg.gmm.variance_floor, "floor on sigma^2");
    sub->add_option("--sample-cap", s.cfg.gmm.sample_cap, "max descriptors used for training");
}

void add_norm_options(CLI::App* sub, CliState& s) {
    sub->add_option("--norm", s.cfg.norm_name,
                    "normalization name, e.g. \"PN + L2 Norm\" (see README)");
    sub->add_option("--alpha", s.cfg.alpha, "alpha for PN / Log Norm");
}

void add_svm_options(CLI::App* sub, CliState& s) {
    sub->add_option("--c", s.cfg.svm.c, "SVM regularization C");
    sub->add_option("--svm-max-epochs", s.cfg.svm.max_epochs, "SVM epoch cap");
    sub->add_option("--svm-tol", s.cfg.svm.tolerance, "SVM projected-gradient tolerance");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher vector video genre classification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags override it");

    CliState s;

    CLI::App* extract = app.add_subcommand("extract-visual", "extract 92-dim visual descriptors");
    add_common(extract, s);
    extract->add_option("--keyframes", s.cfg.n_keyframes, "keyframes per video (default 32)");

    CLI::App* train_gmm_cmd = app.add_subcommand("train-gmm", "train the diagonal GMM");
    add_common(train_gmm_cmd, s);
    add_gmm_options(train_gmm_cmd, s);

    CLI::App* encode = app.add_subcommand("encode-fv", "encode Fisher vectors");
    add_common(encode, s);
    add_norm_options(encode, s);

    CLI::App* train_text_cmd =
        app.add_subcommand("train-text", "fit TF-IDF + chi-square selection and the text SVM");
    add_common(train_text_cmd, s);
    add_svm_options(train_text_cmd, s);
    train_text_cmd->add_option("--m", s.cfg.terms_per_genre, "chi-square terms per genre");

    CLI::App* train_svm_cmd = app.add_subcommand("train-svm", "train the one-vs-rest linear SVM");
    add_common(train_svm_cmd, s);
    add_svm_options(train_svm_cmd, s);

    CLI::App* predict = app.add_subcommand("predict", "score the test split");
    add_common(predict, s);
    predict->add_option("--predict-modality", s.predict_modality,
                        "modality to score: a descriptor modality or \"text\"");

    CLI::App* fuse_cmd = app.add_subcommand("fuse", "late-fuse score tables");
    add_common(fuse_cmd, s);
    fuse_cmd->add_option("--tables", s.tables, "comma-separated score table names");
    fuse_cmd->add_option("--mode", s.fusion_mode, "max or sum");

    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "AP per genre + MAP");
    add_common(evaluate_cmd, s);
    evaluate_cmd->add_option("--scores", s.scores_name,
                             "score table name (default: the modality)");

    CLI::App* timing_cmd = app.add_subcommand("timing", "run the pipeline, timing each stage");
    add_common(timing_cmd, s);
    timing_cmd->add_option("--keyframes", s.cfg.n_keyframes, "keyframes per video");
    add_gmm_options(timing_cmd, s);
    add_norm_options(timing_cmd, s);
    add_svm_options(timing_cmd, s);
    timing_cmd->add_option("--m", s.cfg.terms_per_genre, "chi-square terms per genre");
    timing_cmd->add_option("--mode", s.fusion_mode, "fusion mode: max or sum");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "repeat the pipeline over K and normalization choices");
    add_common(sweep_cmd, s);
    add_gmm_options(sweep_cmd, s);
    add_norm_options(sweep_cmd, s);
    add_svm_options(sweep_cmd, s);
    sweep_cmd->add_option("--k-list", s.k_list, "comma-separated centroid counts");
    sweep_cmd->add_option("--norms", s.norms,
                          "comma-separated normalization names, or \"all\" for the full menu");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_seed(s);
        s.cfg.fusion_mode = fusion_mode_from_name(s.fusion_mode);

        if (extract->parsed()) {
            print_warnings(run_extract_visual(s.cfg));
        } else if (train_gmm_cmd->parsed()) {
            GmmTrainLog log;
            print_warnings(run_train_gmm(s.cfg, &log));
            std::printf("trained K=%d GMM on %zu descriptors, %zu EM iterations%s\n", s.cfg.gmm.k,
                        log.sampled_count, log.iteration_log_likelihood.size(),
                        log.converged ? " (converged)" : "");
            if (!log.iteration_log_likelihood.empty()) {
                std::printf("final mean log-likelihood: %.6f\n",
                            log.iteration_log_likelihood.back());
            }
        } else if (encode->parsed()) {
            print_warnings(run_encode_fv(s.cfg));
        } else if (train_text_cmd->parsed()) {
            print_warnings(run_train_text(s.cfg));
        } else if (train_svm_cmd->parsed()) {
            print_warnings(run_train_svm(s.cfg));
        } else if (predict->parsed()) {
            const std::string modality =
                s.predict_modality.empty() ? s.cfg.modality : s.predict_modality;
            print_warnings(run_predict(s.cfg, modality));
        } else if (fuse_cmd->parsed()) {
            run_fuse(s.cfg, split_csv(s.tables), s.cfg.fusion_mode);
        } else if (evaluate_cmd->parsed()) {
            const std::string table = s.scores_name.empty() ? s.cfg.modality : s.scores_name;
            print_report(run_evaluate(s.cfg, table));
        } else if (timing_cmd->parsed()) {
            const TimingReport report = run_timing(s.cfg);
            std::printf("stage\tseconds\tpercent\n");
            for (const TimingStage& stage : report.stages) {
                std::printf("%s\t%.3f\t%.2f\n", stage.name.c_str(), stage.seconds, stage.percent);
            }
            std::printf("total\t%.3f\t100.00\n", report.total_seconds);
        } else if (sweep_cmd->parsed()) {
            std::vector<int> ks;
            for (const std::string& tok : split_csv(s.k_list)) ks.push_back(std::stoi(tok));
            std::vector<std::string> norm_names;
            if (s.norms == "all") {
                for (const NamedNormalization& n : normalization_menu(s.cfg.alpha)) {
                    norm_names.push_back(n.name);
                }
            } else if (!s.norms.empty()) {
                norm_names = split_csv(s.norms);
            } else {
                norm_names = {s.cfg.norm_name};
            }
            std::printf("k\tnormalization\tmap\n");
            for (const SweepRow& row : run_sweep(s.cfg, ks, norm_names)) {
                std::printf("%d\t%s\t%.6f\n", row.k, row.normalization.c_str(), row.map);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

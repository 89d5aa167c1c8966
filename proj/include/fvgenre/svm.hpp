#pragma once

#include "fvgenre/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fvgenre {

struct SvmTrainConfig {
    double c = 1.0;
    int max_epochs = 1000;
    double tolerance = 1e-4;  // on the maximal projected gradient per epoch
    std::uint64_t seed = 0;   // epoch-order shuffling
};

/// One-vs-rest linear model: one (w, b) pair per genre.
struct LinearSvmModel {
    Mat weights;  // G x F
    Vec bias;     // G
    double c = 1.0;  // training-time C; 0 when loaded from file (not stored)

    int n_genres() const { return static_cast<int>(weights.rows()); }
    int feature_dim() const { return static_cast<int>(weights.cols()); }
};

struct SvmTrainLog {
    std::vector<std::vector<double>> epoch_dual;  // per genre, per epoch
    std::vector<std::string> warnings;
};

/// Binary L1-loss subproblem as seen by the dual solver; the bias is handled
/// by an implicit constant-1 feature appended to each row.
struct SvmProblem {
    Mat x;                  // N x F
    std::vector<double> y;  // +1 / -1
    double c = 1.0;
};

/// Trains one L1-loss L2-regularized binary SVM per genre (labels +1 for the
/// genre, -1 otherwise) by dual coordinate descent with a seeded per-epoch
/// visit order. Genres without a positive example get w = 0, b = -1 and a
/// warning. Deterministic given (features, labels, cfg).
LinearSvmModel train_svm(const Mat& features, const std::vector<int>& labels,
                         std::size_t n_genres, const SvmTrainConfig& cfg,
                         SvmTrainLog* log = nullptr);

/// score_g = w_g . x + b_g for every genre.
Vec decision_scores(const LinearSvmModel& model, const Eigen::Ref<const Vec>& x);

/// Dual value sum(alpha) - 0.5 ||sum alpha_i y_i x~_i||^2 for the augmented
/// problem; throws if alpha leaves the box [0, C].
double dual_objective(const SvmProblem& problem, const std::vector<double>& alpha);

/// SVM1 file: magic "SVM1", u32 genre count, u32 F, then per genre binary64
/// w (F values) and b, little-endian.
void save_svm(const LinearSvmModel& model, const std::string& path);
LinearSvmModel load_svm(const std::string& path);

}  // namespace fvgenre

#pragma once

#include "fvgenre/common.hpp"
#include "fvgenre/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fvgenre {

/// Gaussian mixture with diagonal covariances: K weights, K x D means,
/// K x D per-dimension standard deviations.
struct DiagonalGmm {
    int k = 0;
    int d = 0;
    Vec weights;  // K, positive, sums to 1
    Mat means;    // K x D
    Mat stddevs;  // K x D, >= sqrt(variance floor)

    /// Throws on any invariant violation.
    void validate() const;
};

struct GmmTrainConfig {
    int k = 1;
    std::uint64_t seed = 0;
    int max_iters = 200;
    double rel_tol = 1e-6;
    double variance_floor = 1e-4;    // floor on sigma^2
    std::size_t sample_cap = 200000;  // max descriptors used for training
};

struct GmmTrainLog {
    /// Mean log-likelihood of the parameters entering each EM iteration.
    std::vector<double> iteration_log_likelihood;
    std::size_t sampled_count = 0;  // descriptors actually used
    bool converged = false;
    std::vector<std::string> warnings;
};

/// log sum_i w_i N(x; mu_i, diag(sigma_i^2)) via log-sum-exp; finite for all
/// finite x because sigma is floored.
double log_density(const DiagonalGmm& model, const Eigen::Ref<const Vec>& x);

/// Soft assignments gamma_i = w_i N_i(x) / sum_j w_j N_j(x); sums to 1.
Vec posteriors(const DiagonalGmm& model, const Eigen::Ref<const Vec>& x);

/// Seeded k-means++ (10 Lloyd refinement steps) followed by EM with
/// closed-form M-steps and a variance floor. Deterministic: identical
/// (descriptors, cfg) give bitwise-identical models. When the pool exceeds
/// cfg.sample_cap a seeded uniform subsample is trained on instead.
DiagonalGmm train_gmm(const Mat& descriptors, const GmmTrainConfig& cfg,
                      GmmTrainLog* log = nullptr);

/// Mean per-descriptor log-density: (1/T) sum_t log_density(x_t).
double sequence_log_likelihood(const DiagonalGmm& model, const DescriptorSequence& x);

/// GMM1 file: magic "GMM1", u32 K, u32 D, then weights (K), means (K*D),
/// stddevs (K*D) as binary64 little-endian.
void save_gmm(const DiagonalGmm& model, const std::string& path);
DiagonalGmm load_gmm(const std::string& path);

}  // namespace fvgenre

#pragma once

#include "fvgenre/common.hpp"
#include "fvgenre/dataset.hpp"
#include "fvgenre/gmm.hpp"

#include <string>
#include <vector>

namespace fvgenre {

enum class NormStep {
    L1,        // divide by sum |x_j|
    L2,        // divide by sqrt(sum x_j^2)
    Power,     // sign(x) * sqrt(alpha * |x|)
    Log,       // sign(x) * ln(1 + alpha * |x|)
    PowerExp,  // sign(x) * |x|^alpha; conventional power norm, kept as an extra
};

struct NormalizationStep {
    NormStep kind = NormStep::L2;
    double alpha = 0.5;  // ignored for L1/L2
};

/// Ordered list of steps applied left to right; empty = no normalization.
struct NormalizationSpec {
    std::vector<NormalizationStep> steps;
};

struct NamedNormalization {
    std::string name;
    NormalizationSpec spec;
};

/// 2KD-dimensional Fisher encoding of one descriptor sequence. Layout is all
/// mean-gradient blocks then all stddev-gradient blocks, each block D values:
/// [G_mu,1 .. G_mu,K, G_sigma,1 .. G_sigma,K].
struct FisherVector {
    Vec values;
    int k = 0;
    int d = 0;
    NormalizationSpec normalization;  // every step applied so far
};

/// Unnormalized Fisher vector:
///   G_mu,i    = 1/(T sqrt(w_i))   sum_t gamma_t(i) (x_t - mu_i) / sigma_i
///   G_sigma,i = 1/(T sqrt(2 w_i)) sum_t gamma_t(i) [ (x_t - mu_i)^2 / sigma_i^2 - 1 ]
/// with element-wise vector division.
FisherVector encode_fisher(const DiagonalGmm& model, const DescriptorSequence& x);

/// Applies spec.steps left to right. L1/L2 are no-ops on the zero vector.
FisherVector normalize(const FisherVector& v, const NormalizationSpec& spec);

/// The seven named strategies evaluated in the experiments:
/// "Without normalization", "L1", "L2", "Log Norm", "PN", "PN + L2 Norm",
/// "PN + L1 Norm". Combination rows apply PN first.
std::vector<NamedNormalization> normalization_menu(double alpha = 0.5);

/// Looks up a menu entry by exact name; throws listing the valid names.
NormalizationSpec normalization_by_name(const std::string& name, double alpha = 0.5);

}  // namespace fvgenre

#include "fvgenre/svm.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

namespace fvgenre {

namespace {

constexpr char kSvmMagic[4] = {'S', 'V', 'M', '1'};

void write_raw(std::ostream& out, const void* data, std::size_t bytes) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

// Dual coordinate descent for one binary L1-loss problem. Maintains
// w~ = sum alpha_i y_i x~_i incrementally; the augmented bias feature is the
// last component of w~.
void solve_binary(const Mat& x, const std::vector<double>& y, const SvmTrainConfig& cfg,
                  std::uint64_t seed, Eigen::Ref<Eigen::RowVectorXd> w_out, double& b_out,
                  std::vector<double>* epoch_dual) {
    const Eigen::Index n = x.rows();
    const Eigen::Index f = x.cols();
    Vec w_aug = Vec::Zero(f + 1);
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);

    Vec q_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) q_diag[i] = x.row(i).squaredNorm() + 1.0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double max_pg = 0.0;
        for (const Eigen::Index i : order) {
            const double yi = y[static_cast<std::size_t>(i)];
            const double margin = x.row(i).dot(w_aug.head(f)) + w_aug[f];
            const double g = yi * margin - 1.0;
            double pg = g;
            double& a = alpha[static_cast<std::size_t>(i)];
            if (a <= 0.0) {
                pg = std::min(g, 0.0);
            } else if (a >= cfg.c) {
                pg = std::max(g, 0.0);
            }
            max_pg = std::max(max_pg, std::abs(pg));
            if (std::abs(pg) > 1e-12) {
                const double a_new = std::clamp(a - g / q_diag[i], 0.0, cfg.c);
                const double delta = a_new - a;
                if (delta != 0.0) {
                    w_aug.head(f) += delta * yi * x.row(i).transpose();
                    w_aug[f] += delta * yi;
                    a = a_new;
                }
            }
        }
        if (epoch_dual) {
            double alpha_sum = 0.0;
            for (const double a : alpha) alpha_sum += a;
            epoch_dual->push_back(alpha_sum - 0.5 * w_aug.squaredNorm());
        }
        if (max_pg < cfg.tolerance) break;
    }
    w_out = w_aug.head(f).transpose();
    b_out = w_aug[f];
}

}  // namespace

LinearSvmModel train_svm(const Mat& features, const std::vector<int>& labels,
                         std::size_t n_genres, const SvmTrainConfig& cfg, SvmTrainLog* log) {
    if (!(cfg.c > 0.0)) throw Error("train_svm: C must be > 0");
    if (cfg.max_epochs < 1) throw Error("train_svm: max_epochs must be >= 1");
    if (features.rows() < 2) throw Error("train_svm: need at least 2 training points");
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error("train_svm: feature/label count mismatch");
    }
    if (!features.allFinite()) throw Error("train_svm: non-finite feature value");
    for (const int g : labels) {
        if (g < 0 || static_cast<std::size_t>(g) >= n_genres) {
            throw Error("train_svm: label out of range");
        }
    }

    const Eigen::Index n = features.rows();
    const Eigen::Index f = features.cols();
    LinearSvmModel model;
    model.c = cfg.c;
    model.weights = Mat::Zero(static_cast<Eigen::Index>(n_genres), f);
    model.bias = Vec::Zero(static_cast<Eigen::Index>(n_genres));
    if (log) {
        log->epoch_dual.assign(n_genres, {});
        log->warnings.clear();
    }

    std::vector<double> y(static_cast<std::size_t>(n));
    for (std::size_t g = 0; g < n_genres; ++g) {
        bool any_positive = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == static_cast<int>(g) ? 1.0 : -1.0;
            any_positive |= y[static_cast<std::size_t>(i)] > 0.0;
        }
        if (!any_positive) {
            model.bias[static_cast<Eigen::Index>(g)] = -1.0;
            if (log) {
                log->warnings.push_back("genre " + std::to_string(g) +
                                        " has no positive training examples; using w=0, b=-1");
            }
            continue;
        }
        double b = 0.0;
        solve_binary(features, y, cfg, cfg.seed + g, model.weights.row(static_cast<Eigen::Index>(g)),
                     b, log ? &log->epoch_dual[g] : nullptr);
        model.bias[static_cast<Eigen::Index>(g)] = b;
    }
    return model;
}

Vec decision_scores(const LinearSvmModel& model, const Eigen::Ref<const Vec>& x) {
    if (x.size() != model.weights.cols()) {
        throw Error("decision_scores: dimension mismatch: model F=" +
                    std::to_string(model.weights.cols()) + ", input F=" + std::to_string(x.size()));
    }
    return model.weights * x + model.bias;
}

double dual_objective(const SvmProblem& problem, const std::vector<double>& alpha) {
    const Eigen::Index n = problem.x.rows();
    const Eigen::Index f = problem.x.cols();
    if (static_cast<std::size_t>(n) != alpha.size() || static_cast<std::size_t>(n) != problem.y.size()) {
        throw Error("dual_objective: size mismatch");
    }
    double alpha_sum = 0.0;
    Vec v = Vec::Zero(f + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = alpha[static_cast<std::size_t>(i)];
        if (a < 0.0 || a > problem.c) {
            throw Error("dual_objective: alpha[" + std::to_string(i) + "] outside [0, C]");
        }
        alpha_sum += a;
        v.head(f) += a * problem.y[static_cast<std::size_t>(i)] * problem.x.row(i).transpose();
        v[f] += a * problem.y[static_cast<std::size_t>(i)];
    }
    return alpha_sum - 0.5 * v.squaredNorm();
}

void save_svm(const LinearSvmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write SVM file: " + path);
    out.write(kSvmMagic, 4);
    const std::uint32_t g = static_cast<std::uint32_t>(model.weights.rows());
    const std::uint32_t f = static_cast<std::uint32_t>(model.weights.cols());
    const unsigned char hdr[8] = {
        static_cast<unsigned char>(g),       static_cast<unsigned char>(g >> 8),
        static_cast<unsigned char>(g >> 16), static_cast<unsigned char>(g >> 24),
        static_cast<unsigned char>(f),       static_cast<unsigned char>(f >> 8),
        static_cast<unsigned char>(f >> 16), static_cast<unsigned char>(f >> 24)};
    write_raw(out, hdr, 8);
    for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
        write_raw(out, model.weights.row(i).data(), sizeof(double) * static_cast<std::size_t>(model.weights.cols()));
        const double b = model.bias[i];
        write_raw(out, &b, sizeof(double));
    }
    if (!out) throw Error("I/O failure writing " + path);
}

LinearSvmModel load_svm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open SVM file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kSvmMagic, 4) != 0) {
        throw Error(path + ": magic mismatch: expected \"SVM1\"");
    }
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) throw Error(path + ": truncated SVM header");
    const std::uint32_t g = static_cast<std::uint32_t>(hdr[0]) | hdr[1] << 8 | hdr[2] << 16 |
                            static_cast<std::uint32_t>(hdr[3]) << 24;
    const std::uint32_t f = static_cast<std::uint32_t>(hdr[4]) | hdr[5] << 8 | hdr[6] << 16 |
                            static_cast<std::uint32_t>(hdr[7]) << 24;
    if (g == 0) throw Error(path + ": SVM requires at least one genre");
    LinearSvmModel model;
    model.c = 0.0;
    model.weights.resize(g, f);
    model.bias.resize(g);
    for (std::uint32_t i = 0; i < g; ++i) {
        in.read(reinterpret_cast<char*>(model.weights.row(i).data()),
                static_cast<std::streamsize>(sizeof(double) * f));
        double b = 0.0;
        in.read(reinterpret_cast<char*>(&b), sizeof(double));
        model.bias[i] = b;
    }
    if (!in) throw Error(path + ": truncated SVM payload");
    return model;
}

}  // namespace fvgenre

#include "fvgenre/gmm.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

namespace fvgenre {

namespace {

constexpr char kGmmMagic[4] = {'G', 'M', 'M', '1'};
constexpr double kWeightFloorScale = 1e-8;  // component dies below 1e-8 / K

// Per-component log of the Gaussian normalizer plus log weight:
// log w_i - D/2 log(2 pi) - sum_d log sigma_id.
Vec log_component_consts(const DiagonalGmm& m) {
    Vec consts(m.k);
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (int i = 0; i < m.k; ++i) {
        double s = std::log(m.weights[i]) - m.d * half_log_2pi;
        for (int d = 0; d < m.d; ++d) s -= std::log(m.stddevs(i, d));
        consts[i] = s;
    }
    return consts;
}

// log w_i + log N_i(x) for every component.
Vec component_log_terms(const DiagonalGmm& m, const Vec& consts, const Eigen::Ref<const Vec>& x) {
    Vec terms(m.k);
    for (int i = 0; i < m.k; ++i) {
        double q = 0.0;
        for (int d = 0; d < m.d; ++d) {
            const double z = (x[d] - m.means(i, d)) / m.stddevs(i, d);
            q += z * z;
        }
        terms[i] = consts[i] - 0.5 * q;
    }
    return terms;
}

double log_sum_exp(const Vec& v) {
    const double mx = v.maxCoeff();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
    return mx + std::log(s);
}

void check_dim(const DiagonalGmm& m, Eigen::Index dim, const char* who) {
    if (dim != m.d) {
        throw Error(std::string(who) + ": dimension mismatch: model D=" + std::to_string(m.d) +
                    ", input D=" + std::to_string(dim));
    }
}

// Seeded uniform subsample without replacement; chosen indices are sorted so
// accumulation order stays ascending over the original pool.
Mat subsample_rows(const Mat& x, std::size_t cap, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + rng.uniform_int(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    Mat out(static_cast<Eigen::Index>(cap), x.cols());
    for (std::size_t i = 0; i < cap; ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

// k-means++ seeding followed by a fixed number of Lloyd steps. Empty clusters
// are re-seeded with the point farthest from its assigned center.
Mat kmeans_centers(const Mat& x, int k, int lloyd_steps, Rng& rng) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Mat centers(k, d);

    centers.row(0) = x.row(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    Vec dist2(n);
    for (Eigen::Index t = 0; t < n; ++t) dist2[t] = (x.row(t) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) total += dist2[t];
        Eigen::Index chosen;
        if (total > 0.0) {
            const double r = rng.uniform01() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Eigen::Index t = 0; t < n; ++t) {
                acc += dist2[t];
                if (acc >= r) {
                    chosen = t;
                    break;
                }
            }
        } else {
            // All points coincide with some center already.
            chosen = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = x.row(chosen);
        for (Eigen::Index t = 0; t < n; ++t) {
            dist2[t] = std::min(dist2[t], (x.row(t) - centers.row(c)).squaredNorm());
        }
    }

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    for (int step = 0; step < lloyd_steps; ++step) {
        for (Eigen::Index t = 0; t < n; ++t) {
            int best = 0;
            double best_d2 = (x.row(t) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (x.row(t) - centers.row(c)).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            assign[static_cast<std::size_t>(t)] = best;
            dist2[t] = best_d2;
        }
        Mat sums = Mat::Zero(k, d);
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index t = 0; t < n; ++t) {
            sums.row(assign[static_cast<std::size_t>(t)]) += x.row(t);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(t)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                Eigen::Index far = 0;
                for (Eigen::Index t = 1; t < n; ++t) {
                    if (dist2[t] > dist2[far]) far = t;
                }
                centers.row(c) = x.row(far);
            }
        }
    }
    return centers;
}

}  // namespace

void DiagonalGmm::validate() const {
    if (k < 1 || d < 1) throw Error("gmm: K and D must be >= 1");
    if (weights.size() != k || means.rows() != k || means.cols() != d || stddevs.rows() != k ||
        stddevs.cols() != d) {
        throw Error("gmm: parameter shapes do not match K, D");
    }
    double wsum = 0.0;
    for (int i = 0; i < k; ++i) {
        if (!(weights[i] > 0.0)) throw Error("gmm: weights must be positive");
        wsum += weights[i];
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw Error("gmm: weights must sum to 1");
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < d; ++j) {
            if (!std::isfinite(means(i, j)) || !std::isfinite(stddevs(i, j)) || stddevs(i, j) <= 0.0) {
                throw Error("gmm: means/stddevs must be finite with positive stddevs");
            }
        }
    }
}

double log_density(const DiagonalGmm& model, const Eigen::Ref<const Vec>& x) {
    check_dim(model, x.size(), "log_density");
    const Vec consts = log_component_consts(model);
    return log_sum_exp(component_log_terms(model, consts, x));
}

Vec posteriors(const DiagonalGmm& model, const Eigen::Ref<const Vec>& x) {
    check_dim(model, x.size(), "posteriors");
    const Vec consts = log_component_consts(model);
    const Vec terms = component_log_terms(model, consts, x);
    const double mx = terms.maxCoeff();
    Vec g(model.k);
    double s = 0.0;
    for (int i = 0; i < model.k; ++i) {
        g[i] = std::exp(terms[i] - mx);
        s += g[i];
    }
    g /= s;
    return g;
}

DiagonalGmm train_gmm(const Mat& descriptors, const GmmTrainConfig& cfg, GmmTrainLog* log) {
    if (cfg.k < 1) throw Error("train_gmm: K must be >= 1");
    if (cfg.max_iters < 1) throw Error("train_gmm: max_iters must be >= 1");
    if (!(cfg.rel_tol > 0.0)) throw Error("train_gmm: rel_tol must be > 0");
    if (!(cfg.variance_floor > 0.0)) throw Error("train_gmm: variance_floor must be > 0");
    if (descriptors.rows() < cfg.k) {
        throw Error("train_gmm: " + std::to_string(descriptors.rows()) + " descriptors but K=" +
                    std::to_string(cfg.k));
    }
    if (descriptors.cols() < 1) throw Error("train_gmm: D must be >= 1");
    if (!descriptors.allFinite()) throw Error("train_gmm: non-finite descriptor value");

    Rng rng(cfg.seed);
    Mat x;
    if (static_cast<std::size_t>(descriptors.rows()) > cfg.sample_cap) {
        if (cfg.sample_cap < static_cast<std::size_t>(cfg.k)) {
            throw Error("train_gmm: sample_cap smaller than K");
        }
        x = subsample_rows(descriptors, cfg.sample_cap, rng);
    } else {
        x = descriptors;
    }
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (log) {
        log->iteration_log_likelihood.clear();
        log->warnings.clear();
        log->sampled_count = static_cast<std::size_t>(n);
        log->converged = false;
        if (n < descriptors.rows()) {
            log->warnings.push_back("subsampled " + std::to_string(n) + " of " +
                                    std::to_string(descriptors.rows()) + " descriptors");
        }
    }

    // Global per-dimension spread used for the initial (and any re-seeded)
    // component scales.
    Vec global_sd(d);
    {
        const Vec mean = x.colwise().mean().transpose();
        for (Eigen::Index j = 0; j < d; ++j) {
            double acc = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                const double dv = x(t, j) - mean[j];
                acc += dv * dv;
            }
            global_sd[j] = std::sqrt(std::max(cfg.variance_floor, acc / static_cast<double>(n)));
        }
    }

    DiagonalGmm m;
    m.k = cfg.k;
    m.d = static_cast<int>(d);
    m.means = kmeans_centers(x, cfg.k, 10, rng);
    m.weights = Vec::Constant(cfg.k, 1.0 / cfg.k);
    m.stddevs.resize(cfg.k, d);
    for (int i = 0; i < cfg.k; ++i) m.stddevs.row(i) = global_sd.transpose();

    const double sd_floor = std::sqrt(cfg.variance_floor);
    const double weight_floor = kWeightFloorScale / cfg.k;
    double prev_ll = 0.0;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // E-step; reductions accumulate over t in fixed ascending order.
        const Vec consts = log_component_consts(m);
        Vec nk = Vec::Zero(cfg.k);
        Mat sk = Mat::Zero(cfg.k, d);
        Mat qk = Mat::Zero(cfg.k, d);
        double ll_sum = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const Vec terms = component_log_terms(m, consts, x.row(t).transpose());
            const double mx = terms.maxCoeff();
            double s = 0.0;
            Vec g(cfg.k);
            for (int i = 0; i < cfg.k; ++i) {
                g[i] = std::exp(terms[i] - mx);
                s += g[i];
            }
            ll_sum += mx + std::log(s);
            g /= s;
            for (int i = 0; i < cfg.k; ++i) {
                nk[i] += g[i];
                for (Eigen::Index j = 0; j < d; ++j) {
                    sk(i, j) += g[i] * x(t, j);
                    qk(i, j) += g[i] * x(t, j) * x(t, j);
                }
            }
        }
        const double ll = ll_sum / static_cast<double>(n);
        if (log) log->iteration_log_likelihood.push_back(ll);

        // M-step, closed form with the variance floor.
        for (int i = 0; i < cfg.k; ++i) {
            if (nk[i] > 0.0) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double mu = sk(i, j) / nk[i];
                    m.means(i, j) = mu;
                    const double var = std::max(cfg.variance_floor, qk(i, j) / nk[i] - mu * mu);
                    m.stddevs(i, j) = std::sqrt(var);
                }
            }
            m.weights[i] = nk[i] / static_cast<double>(n);
        }

        // Dead components get re-seeded on the descriptor farthest from its
        // nearest mean (ties to the first such index).
        bool reseeded = false;
        for (int i = 0; i < cfg.k; ++i) {
            if (m.weights[i] >= weight_floor) continue;
            Eigen::Index far = 0;
            double far_d2 = -1.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                double best = (x.row(t) - m.means.row(0)).squaredNorm();
                for (int c = 1; c < cfg.k; ++c) {
                    best = std::min(best, (x.row(t) - m.means.row(c)).squaredNorm());
                }
                if (best > far_d2) {
                    far_d2 = best;
                    far = t;
                }
            }
            m.means.row(i) = x.row(far);
            m.stddevs.row(i) = global_sd.transpose();
            m.weights[i] = 1.0 / cfg.k;
            reseeded = true;
            if (log) {
                log->warnings.push_back("re-seeded dead component " + std::to_string(i) +
                                        " at iteration " + std::to_string(iter));
            }
        }
        if (reseeded) m.weights /= m.weights.sum();
        for (int i = 0; i < cfg.k; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                m.stddevs(i, j) = std::max(m.stddevs(i, j), sd_floor);
            }
        }
        // Keep weights strictly positive and normalized after flooring.
        double wsum = 0.0;
        for (int i = 0; i < cfg.k; ++i) {
            m.weights[i] = std::max(m.weights[i], weight_floor);
            wsum += m.weights[i];
        }
        m.weights /= wsum;

        if (iter > 0 && !reseeded &&
            ll - prev_ll <= cfg.rel_tol * std::max(1.0, std::abs(prev_ll))) {
            if (log) log->converged = true;
            break;
        }
        prev_ll = ll;
    }

    m.validate();
    return m;
}

double sequence_log_likelihood(const DiagonalGmm& model, const DescriptorSequence& x) {
    check_dim(model, x.d(), "sequence_log_likelihood");
    if (x.t() < 1) throw Error("sequence_log_likelihood: empty sequence");
    const Vec consts = log_component_consts(model);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < x.t(); ++t) {
        acc += log_sum_exp(component_log_terms(model, consts, x.data.row(t).transpose()));
    }
    return acc / static_cast<double>(x.t());
}

void save_gmm(const DiagonalGmm& model, const std::string& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write GMM file: " + path);
    out.write(kGmmMagic, 4);
    const std::uint32_t k = static_cast<std::uint32_t>(model.k);
    const std::uint32_t d = static_cast<std::uint32_t>(model.d);
    unsigned char hdr[8] = {
        static_cast<unsigned char>(k),       static_cast<unsigned char>(k >> 8),
        static_cast<unsigned char>(k >> 16), static_cast<unsigned char>(k >> 24),
        static_cast<unsigned char>(d),       static_cast<unsigned char>(d >> 8),
        static_cast<unsigned char>(d >> 16), static_cast<unsigned char>(d >> 24)};
    out.write(reinterpret_cast<const char*>(hdr), 8);
    out.write(reinterpret_cast<const char*>(model.weights.data()),
              static_cast<std::streamsize>(sizeof(double) * model.k));
    out.write(reinterpret_cast<const char*>(model.means.data()),
              static_cast<std::streamsize>(sizeof(double) * model.k * model.d));
    out.write(reinterpret_cast<const char*>(model.stddevs.data()),
              static_cast<std::streamsize>(sizeof(double) * model.k * model.d));
    if (!out) throw Error("I/O failure writing " + path);
}

DiagonalGmm load_gmm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open GMM file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kGmmMagic, 4) != 0) {
        throw Error(path + ": magic mismatch: expected \"GMM1\"");
    }
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) throw Error(path + ": truncated GMM header");
    const std::uint32_t k = static_cast<std::uint32_t>(hdr[0]) | hdr[1] << 8 | hdr[2] << 16 |
                            static_cast<std::uint32_t>(hdr[3]) << 24;
    const std::uint32_t d = static_cast<std::uint32_t>(hdr[4]) | hdr[5] << 8 | hdr[6] << 16 |
                            static_cast<std::uint32_t>(hdr[7]) << 24;
    if (k == 0 || d == 0) throw Error(path + ": GMM requires K >= 1 and D >= 1");
    DiagonalGmm m;
    m.k = static_cast<int>(k);
    m.d = static_cast<int>(d);
    m.weights.resize(m.k);
    m.means.resize(m.k, m.d);
    m.stddevs.resize(m.k, m.d);
    in.read(reinterpret_cast<char*>(m.weights.data()),
            static_cast<std::streamsize>(sizeof(double) * m.k));
    in.read(reinterpret_cast<char*>(m.means.data()),
            static_cast<std::streamsize>(sizeof(double) * m.k * m.d));
    in.read(reinterpret_cast<char*>(m.stddevs.data()),
            static_cast<std::streamsize>(sizeof(double) * m.k * m.d));
    if (!in) throw Error(path + ": truncated GMM payload");
    m.validate();
    return m;
}

}  // namespace fvgenre

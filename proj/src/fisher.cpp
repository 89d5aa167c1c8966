#include "fvgenre/fisher.hpp"

#include <cmath>

namespace fvgenre {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void apply_step(Vec& v, const NormalizationStep& step) {
    switch (step.kind) {
        case NormStep::L1: {
            const double s = v.cwiseAbs().sum();
            if (s > 0.0) v /= s;
            break;
        }
        case NormStep::L2: {
            const double s = v.norm();
            if (s > 0.0) v /= s;
            break;
        }
        case NormStep::Power: {
            if (!(step.alpha > 0.0)) throw Error("normalize: Power alpha must be > 0");
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                v[i] = sign_of(v[i]) * std::sqrt(step.alpha * std::abs(v[i]));
            }
            break;
        }
        case NormStep::Log: {
            if (!(step.alpha > 0.0)) throw Error("normalize: Log alpha must be > 0");
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                v[i] = sign_of(v[i]) * std::log1p(step.alpha * std::abs(v[i]));
            }
            break;
        }
        case NormStep::PowerExp: {
            if (!(step.alpha > 0.0)) throw Error("normalize: PowerExp alpha must be > 0");
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                v[i] = sign_of(v[i]) * std::pow(std::abs(v[i]), step.alpha);
            }
            break;
        }
    }
}

}  // namespace

FisherVector encode_fisher(const DiagonalGmm& model, const DescriptorSequence& x) {
    if (x.d() != model.d) {
        throw Error("encode_fisher: dimension mismatch: model D=" + std::to_string(model.d) +
                    ", sequence D=" + std::to_string(x.d()));
    }
    if (x.t() < 1) throw Error("encode_fisher: empty sequence");

    const int k = model.k;
    const int d = model.d;
    Mat g_mu = Mat::Zero(k, d);
    Mat g_sigma = Mat::Zero(k, d);
    for (Eigen::Index t = 0; t < x.t(); ++t) {
        const Vec gamma = posteriors(model, x.data.row(t).transpose());
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < d; ++j) {
                const double z = (x.data(t, j) - model.means(i, j)) / model.stddevs(i, j);
                g_mu(i, j) += gamma[i] * z;
                g_sigma(i, j) += gamma[i] * (z * z - 1.0);
            }
        }
    }

    const double inv_t = 1.0 / static_cast<double>(x.t());
    FisherVector fv;
    fv.k = k;
    fv.d = d;
    fv.values.resize(2 * static_cast<Eigen::Index>(k) * d);
    for (int i = 0; i < k; ++i) {
        const double mu_scale = inv_t / std::sqrt(model.weights[i]);
        const double sigma_scale = inv_t / std::sqrt(2.0 * model.weights[i]);
        for (int j = 0; j < d; ++j) {
            fv.values[static_cast<Eigen::Index>(i) * d + j] = mu_scale * g_mu(i, j);
            fv.values[static_cast<Eigen::Index>(k) * d + static_cast<Eigen::Index>(i) * d + j] =
                sigma_scale * g_sigma(i, j);
        }
    }
    return fv;
}

FisherVector normalize(const FisherVector& v, const NormalizationSpec& spec) {
    if (!v.values.allFinite()) throw Error("normalize: non-finite Fisher vector");
    FisherVector out = v;
    for (const NormalizationStep& step : spec.steps) {
        apply_step(out.values, step);
        out.normalization.steps.push_back(step);
    }
    return out;
}

std::vector<NamedNormalization> normalization_menu(double alpha) {
    if (!(alpha > 0.0)) throw Error("normalization_menu: alpha must be > 0");
    const NormalizationStep l1{NormStep::L1, alpha};
    const NormalizationStep l2{NormStep::L2, alpha};
    const NormalizationStep pn{NormStep::Power, alpha};
    const NormalizationStep log_step{NormStep::Log, alpha};
    return {
        {"Without normalization", {}},
        {"L1", {{l1}}},
        {"L2", {{l2}}},
        {"Log Norm", {{log_step}}},
        {"PN", {{pn}}},
        {"PN + L2 Norm", {{pn, l2}}},
        {"PN + L1 Norm", {{pn, l1}}},
    };
}

NormalizationSpec normalization_by_name(const std::string& name, double alpha) {
    const std::vector<NamedNormalization> menu = normalization_menu(alpha);
    for (const NamedNormalization& entry : menu) {
        if (entry.name == name) return entry.spec;
    }
    std::string valid;
    for (const NamedNormalization& entry : menu) {
        if (!valid.empty()) valid += ", ";
        valid += "\"" + entry.name + "\"";
    }
    throw Error("unknown normalization \"" + name + "\"; valid names: " + valid);
}

}  // namespace fvgenre

#include "fvgenre/svm.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace fvgenre;
using fvtest::TempDir;

namespace {

// Linearly separable 3-genre point cloud around well-spread centers.
void separable_problem(Rng& rng, int per_genre, Mat& features, std::vector<int>& labels) {
    const double centers[3][2] = {{0.0, 6.0}, {-6.0, -4.0}, {6.0, -4.0}};
    features.resize(3 * per_genre, 2);
    labels.assign(static_cast<std::size_t>(3 * per_genre), 0);
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < per_genre; ++i) {
            const int row = g * per_genre + i;
            features(row, 0) = centers[g][0] + 0.5 * rng.normal();
            features(row, 1) = centers[g][1] + 0.5 * rng.normal();
            labels[static_cast<std::size_t>(row)] = g;
        }
    }
}

int argmax_genre(const LinearSvmModel& model, const Eigen::Ref<const Vec>& x) {
    const Vec s = decision_scores(model, x);
    int best = 0;
    for (int g = 1; g < s.size(); ++g) {
        if (s[g] > s[best]) best = g;
    }
    return best;
}

}  // namespace

TEST_CASE("train_svm separates two 1-D points") {
    Mat x(2, 1);
    x << -1.0, 1.0;
    const std::vector<int> labels = {0, 1};
    SvmTrainConfig cfg;
    cfg.c = 1.0;
    const LinearSvmModel model = train_svm(x, labels, 2, cfg);
    CHECK(argmax_genre(model, x.row(0).transpose()) == 0);
    CHECK(argmax_genre(model, x.row(1).transpose()) == 1);
}

TEST_CASE("train_svm with a single represented genre") {
    Rng rng(1);
    Mat x(6, 2);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
    }
    const std::vector<int> labels(6, 0);  // all genre 0 of 3
    SvmTrainConfig cfg;
    SvmTrainLog log;
    const LinearSvmModel model = train_svm(x, labels, 3, cfg, &log);
    // Untrained genres got the constant -1 scorer; the trained genre must
    // beat them on every training point.
    for (int i = 0; i < 6; ++i) {
        const Vec s = decision_scores(model, x.row(i).transpose());
        CHECK(s[0] > s[1]);
        CHECK(s[0] > s[2]);
        CHECK(s[1] == -1.0);
    }
    CHECK(log.warnings.size() == 2);
}

TEST_CASE("train_svm is deterministic") {
    Rng rng(2);
    Mat x;
    std::vector<int> labels;
    separable_problem(rng, 10, x, labels);
    SvmTrainConfig cfg;
    cfg.seed = 9;
    const LinearSvmModel a = train_svm(x, labels, 3, cfg);
    const LinearSvmModel b = train_svm(x, labels, 3, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
}

TEST_CASE("decision_scores") {
    SUBCASE("zero model scores zero") {
        LinearSvmModel model;
        model.weights = Mat::Zero(3, 4);
        model.bias = Vec::Zero(3);
        const Vec s = decision_scores(model, Vec::Constant(4, 2.0));
        CHECK(s.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("unit weight picks out a coordinate") {
        LinearSvmModel model;
        model.weights = Mat::Zero(1, 3);
        model.weights(0, 0) = 1.0;
        model.bias = Vec::Zero(1);
        Vec x(3);
        x << 2.0, -5.0, 9.0;
        CHECK(decision_scores(model, x)[0] == 2.0);
    }
    SUBCASE("matches a naive loop") {
        Rng rng(3);
        LinearSvmModel model;
        model.weights.resize(4, 5);
        model.bias.resize(4);
        for (int g = 0; g < 4; ++g) {
            model.bias[g] = rng.normal();
            for (int j = 0; j < 5; ++j) model.weights(g, j) = rng.normal();
        }
        Vec x(5);
        for (int j = 0; j < 5; ++j) x[j] = rng.normal();
        const Vec s = decision_scores(model, x);
        for (int g = 0; g < 4; ++g) {
            double acc = model.bias[g];
            for (int j = 0; j < 5; ++j) acc += model.weights(g, j) * x[j];
            CHECK(s[g] == doctest::Approx(acc).epsilon(1e-12));
        }
    }
    SUBCASE("dimension mismatch") {
        LinearSvmModel model;
        model.weights = Mat::Zero(1, 3);
        model.bias = Vec::Zero(1);
        CHECK_THROWS_AS(decision_scores(model, Vec::Zero(2)), Error);
    }
}

TEST_CASE("dual_objective") {
    Rng rng(4);
    SvmProblem p;
    p.c = 2.0;
    p.x.resize(5, 3);
    p.y.resize(5);
    for (int i = 0; i < 5; ++i) {
        p.y[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1.0 : -1.0;
        for (int j = 0; j < 3; ++j) p.x(i, j) = rng.normal();
    }

    SUBCASE("alpha at the origin") {
        CHECK(dual_objective(p, std::vector<double>(5, 0.0)) == 0.0);
    }
    SUBCASE("single point at the box bound") {
        SvmProblem one;
        one.c = 2.0;
        one.x.resize(1, 2);
        one.x << 3.0, -1.0;
        one.y = {1.0};
        const double norm2 = 3.0 * 3.0 + 1.0 * 1.0 + 1.0;  // augmented with the bias 1
        CHECK(dual_objective(one, {2.0}) ==
              doctest::Approx(2.0 - 0.5 * 4.0 * norm2).epsilon(1e-12));
    }
    SUBCASE("matches the brute-force quadratic form") {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> alpha(5);
            for (double& a : alpha) a = p.c * rng.uniform01();
            double brute = 0.0;
            for (int i = 0; i < 5; ++i) brute += alpha[static_cast<std::size_t>(i)];
            for (int i = 0; i < 5; ++i) {
                for (int j = 0; j < 5; ++j) {
                    const double dot = p.x.row(i).dot(p.x.row(j)) + 1.0;
                    brute -= 0.5 * alpha[static_cast<std::size_t>(i)] *
                             alpha[static_cast<std::size_t>(j)] *
                             p.y[static_cast<std::size_t>(i)] * p.y[static_cast<std::size_t>(j)] *
                             dot;
                }
            }
            CHECK(dual_objective(p, alpha) == doctest::Approx(brute).epsilon(1e-10));
        }
    }
    SUBCASE("box violation rejected") {
        CHECK_THROWS_AS(dual_objective(p, std::vector<double>(5, 3.0)), Error);
        CHECK_THROWS_AS(dual_objective(p, std::vector<double>(5, -0.1)), Error);
    }
}

TEST_CASE("dual objective is non-decreasing across epochs") {
    Rng rng(5);
    Mat x;
    std::vector<int> labels;
    separable_problem(rng, 12, x, labels);
    SvmTrainConfig cfg;
    cfg.seed = 21;
    SvmTrainLog log;
    train_svm(x, labels, 3, cfg, &log);
    REQUIRE(log.epoch_dual.size() == 3);
    for (const std::vector<double>& duals : log.epoch_dual) {
        REQUIRE(!duals.empty());
        for (std::size_t e = 1; e < duals.size(); ++e) {
            CHECK(duals[e] >= duals[e - 1] - 1e-10);
        }
    }
}

TEST_CASE("separable data trains to perfect argmax accuracy") {
    Rng rng(6);
    Mat x;
    std::vector<int> labels;
    separable_problem(rng, 20, x, labels);
    SvmTrainConfig cfg;
    const LinearSvmModel model = train_svm(x, labels, 3, cfg);
    for (int i = 0; i < x.rows(); ++i) {
        CHECK(argmax_genre(model, x.row(i).transpose()) == labels[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("argmax predictions survive feature scaling with matched C") {
    Rng rng(7);
    Mat x;
    std::vector<int> labels;
    separable_problem(rng, 15, x, labels);

    SvmTrainConfig cfg;
    cfg.c = 1.0;
    const LinearSvmModel base = train_svm(x, labels, 3, cfg);

    const double scale = 10.0;
    SvmTrainConfig scaled_cfg;
    scaled_cfg.c = cfg.c / (scale * scale);
    const Mat scaled = x * scale;
    const LinearSvmModel rescaled = train_svm(scaled, labels, 3, scaled_cfg);

    for (int i = 0; i < x.rows(); ++i) {
        CHECK(argmax_genre(base, x.row(i).transpose()) ==
              argmax_genre(rescaled, scaled.row(i).transpose()));
    }
}

TEST_CASE("SVM1 file round trip") {
    TempDir tmp("svm");
    Rng rng(8);
    LinearSvmModel model;
    model.weights.resize(3, 4);
    model.bias.resize(3);
    for (int g = 0; g < 3; ++g) {
        model.bias[g] = rng.normal();
        for (int j = 0; j < 4; ++j) model.weights(g, j) = rng.normal();
    }
    const std::string path = tmp.file("model.bin");
    save_svm(model, path);
    const LinearSvmModel back = load_svm(path);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);

    fvtest::write_text(path, "XXXX????");
    CHECK_THROWS_WITH_AS(load_svm(path), doctest::Contains("magic"), Error);
}

TEST_CASE("train_svm input validation") {
    SvmTrainConfig cfg;
    Mat one = Mat::Zero(1, 2);
    CHECK_THROWS_AS(train_svm(one, {0}, 1, cfg), Error);

    Mat bad = Mat::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_svm(bad, {0, 1}, 2, cfg), Error);

    Mat ok = Mat::Zero(2, 2);
    CHECK_THROWS_AS(train_svm(ok, {0, 5}, 2, cfg), Error);  // label out of range

    cfg.c = -1.0;
    CHECK_THROWS_AS(train_svm(ok, {0, 1}, 2, cfg), Error);
}

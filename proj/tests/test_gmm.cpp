#include "fvgenre/gmm.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fvgenre;
using fvtest::TempDir;

namespace {

DiagonalGmm standard_normal_1d() {
    DiagonalGmm m;
    m.k = 1;
    m.d = 1;
    m.weights = Vec::Constant(1, 1.0);
    m.means = Mat::Zero(1, 1);
    m.stddevs = Mat::Constant(1, 1, 1.0);
    return m;
}

// Direct density evaluation without log-sum-exp, as the oracle.
double naive_log_density(const DiagonalGmm& m, const Vec& x) {
    double total = 0.0;
    for (int i = 0; i < m.k; ++i) {
        double dens = m.weights[i];
        for (int j = 0; j < m.d; ++j) {
            const double z = (x[j] - m.means(i, j)) / m.stddevs(i, j);
            dens *= std::exp(-0.5 * z * z) / (m.stddevs(i, j) * std::sqrt(2.0 * std::numbers::pi));
        }
        total += dens;
    }
    return std::log(total);
}

bool models_identical(const DiagonalGmm& a, const DiagonalGmm& b) {
    return a.k == b.k && a.d == b.d && a.weights == b.weights && a.means == b.means &&
           a.stddevs == b.stddevs;
}

}  // namespace

TEST_CASE("log_density") {
    SUBCASE("standard normal at its mode") {
        const DiagonalGmm m = standard_normal_1d();
        CHECK(log_density(m, Vec::Zero(1)) ==
              doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
    }
    SUBCASE("mixture of identical components equals the single component") {
        DiagonalGmm m2;
        m2.k = 2;
        m2.d = 1;
        m2.weights = Vec::Constant(2, 0.5);
        m2.means = Mat::Zero(2, 1);
        m2.stddevs = Mat::Constant(2, 1, 1.0);
        CHECK(log_density(m2, Vec::Zero(1)) ==
              doctest::Approx(log_density(standard_normal_1d(), Vec::Zero(1))).epsilon(1e-12));
    }
    SUBCASE("matches the naive evaluation on random models") {
        Rng rng(41);
        for (int trial = 0; trial < 50; ++trial) {
            const DiagonalGmm m = fvtest::random_gmm(rng, 2, 2);
            Vec x(2);
            x << 4.0 * rng.normal(), 4.0 * rng.normal();
            CHECK(log_density(m, x) == doctest::Approx(naive_log_density(m, x)).epsilon(1e-10));
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(log_density(standard_normal_1d(), Vec::Zero(3)), Error);
    }
}

TEST_CASE("posteriors") {
    SUBCASE("single component") {
        const Vec g = posteriors(standard_normal_1d(), Vec::Constant(1, 0.3));
        REQUIRE(g.size() == 1);
        CHECK(g[0] == 1.0);
    }
    SUBCASE("symmetric components split evenly at the midpoint") {
        DiagonalGmm m;
        m.k = 2;
        m.d = 1;
        m.weights = Vec::Constant(2, 0.5);
        m.means.resize(2, 1);
        m.means << -1.0, 1.0;
        m.stddevs = Mat::Constant(2, 1, 1.0);
        const Vec g = posteriors(m, Vec::Zero(1));
        CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("matches brute-force Bayes and sums to 1") {
        Rng rng(43);
        for (int trial = 0; trial < 50; ++trial) {
            const DiagonalGmm m = fvtest::random_gmm(rng, 3, 2);
            Vec x(2);
            x << 4.0 * rng.normal(), 4.0 * rng.normal();
            const Vec g = posteriors(m, x);
            CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(g.minCoeff() >= 0.0);

            // Brute force: un-logged densities normalized directly.
            Vec dens(3);
            for (int i = 0; i < 3; ++i) {
                double v = m.weights[i];
                for (int j = 0; j < 2; ++j) {
                    const double z = (x[j] - m.means(i, j)) / m.stddevs(i, j);
                    v *= std::exp(-0.5 * z * z) /
                         (m.stddevs(i, j) * std::sqrt(2.0 * std::numbers::pi));
                }
                dens[i] = v;
            }
            dens /= dens.sum();
            for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(dens[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("train_gmm on a point mass hits the variance floor") {
    Mat data = Mat::Constant(100, 2, 3.0);
    GmmTrainConfig cfg;
    cfg.k = 1;
    cfg.seed = 1;
    GmmTrainLog log;
    const DiagonalGmm m = train_gmm(data, cfg, &log);
    CHECK(m.weights[0] == 1.0);
    CHECK(m.means(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.means(0, 1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.stddevs(0, 0) == doctest::Approx(std::sqrt(cfg.variance_floor)).epsilon(1e-12));
    CHECK(log.sampled_count == 100);
}

TEST_CASE("train_gmm separates two clear clusters") {
    Rng rng(7);
    Mat data(200, 1);
    for (int i = 0; i < 120; ++i) data(i, 0) = 0.0 + 0.1 * rng.normal();
    for (int i = 120; i < 200; ++i) data(i, 0) = 100.0 + 0.1 * rng.normal();
    GmmTrainConfig cfg;
    cfg.k = 2;
    cfg.seed = 5;
    const DiagonalGmm m = train_gmm(data, cfg);

    const int low = m.means(0, 0) < m.means(1, 0) ? 0 : 1;
    const int high = 1 - low;
    CHECK(std::abs(m.means(low, 0) - 0.0) < 0.5);
    CHECK(std::abs(m.means(high, 0) - 100.0) < 0.5);
    CHECK(m.weights[low] == doctest::Approx(0.6).epsilon(0.1));
    CHECK(m.weights[high] == doctest::Approx(0.4).epsilon(0.1));
}

TEST_CASE("train_gmm is deterministic for a fixed seed") {
    Rng rng(13);
    Mat data(300, 3);
    for (int i = 0; i < data.rows(); ++i) {
        for (int j = 0; j < 3; ++j) data(i, j) = rng.normal() + (i % 3) * 4.0;
    }
    GmmTrainConfig cfg;
    cfg.k = 3;
    cfg.seed = 77;
    const DiagonalGmm a = train_gmm(data, cfg);
    const DiagonalGmm b = train_gmm(data, cfg);
    CHECK(models_identical(a, b));

    // Different seed gives a different initialization trajectory.
    cfg.seed = 78;
    const DiagonalGmm c = train_gmm(data, cfg);
    CHECK(c.k == a.k);
}

TEST_CASE("train_gmm log-likelihood is non-decreasing per iteration") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_int(4));
        const int d = 1 + static_cast<int>(rng.uniform_int(3));
        const int n = 50 + static_cast<int>(rng.uniform_int(200));
        Mat data(n, d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                data(i, j) = rng.normal() + static_cast<double>(i % k) * 3.0;
            }
        }
        GmmTrainConfig cfg;
        cfg.k = k;
        cfg.seed = 100 + static_cast<std::uint64_t>(trial);
        GmmTrainLog log;
        train_gmm(data, cfg, &log);
        REQUIRE(!log.iteration_log_likelihood.empty());
        for (std::size_t i = 1; i < log.iteration_log_likelihood.size(); ++i) {
            const double prev = log.iteration_log_likelihood[i - 1];
            const double cur = log.iteration_log_likelihood[i];
            CHECK(cur >= prev - 1e-9 * std::max(1.0, std::abs(prev)));
        }
    }
}

TEST_CASE("train_gmm subsamples above the cap") {
    Rng rng(29);
    Mat data(500, 2);
    for (int i = 0; i < 500; ++i) {
        data(i, 0) = rng.normal();
        data(i, 1) = rng.normal();
    }
    GmmTrainConfig cfg;
    cfg.k = 2;
    cfg.seed = 3;
    cfg.sample_cap = 100;
    GmmTrainLog log;
    train_gmm(data, cfg, &log);
    CHECK(log.sampled_count == 100);
    REQUIRE(!log.warnings.empty());
    CHECK(log.warnings.front().find("subsampled") != std::string::npos);

    // Still deterministic under subsampling.
    GmmTrainLog log2;
    const DiagonalGmm a = train_gmm(data, cfg, &log2);
    const DiagonalGmm b = train_gmm(data, cfg);
    CHECK(models_identical(a, b));
}

TEST_CASE("train_gmm input validation") {
    GmmTrainConfig cfg;
    cfg.k = 5;
    Mat tiny = Mat::Zero(3, 2);
    CHECK_THROWS_AS(train_gmm(tiny, cfg), Error);  // fewer points than K

    cfg.k = 1;
    Mat bad = Mat::Zero(3, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(train_gmm(bad, cfg), Error);
}

TEST_CASE("sequence_log_likelihood") {
    Rng rng(53);
    const DiagonalGmm m = fvtest::random_gmm(rng, 3, 2);

    SUBCASE("single point equals log_density") {
        DescriptorSequence seq = fvtest::random_sequence(rng, 1, 2);
        CHECK(sequence_log_likelihood(m, seq) ==
              doctest::Approx(log_density(m, seq.data.row(0).transpose())).epsilon(1e-14));
    }
    SUBCASE("duplicating the sequence leaves the mean unchanged") {
        DescriptorSequence seq = fvtest::random_sequence(rng, 7, 2);
        DescriptorSequence doubled;
        doubled.data.resize(14, 2);
        doubled.data.topRows(7) = seq.data;
        doubled.data.bottomRows(7) = seq.data;
        CHECK(sequence_log_likelihood(m, doubled) ==
              doctest::Approx(sequence_log_likelihood(m, seq)).epsilon(1e-12));
    }
    SUBCASE("matches an independent summation") {
        DescriptorSequence seq = fvtest::random_sequence(rng, 20, 2);
        double acc = 0.0;
        for (int t = 0; t < 20; ++t) acc += naive_log_density(m, seq.data.row(t).transpose());
        CHECK(sequence_log_likelihood(m, seq) == doctest::Approx(acc / 20.0).epsilon(1e-10));
    }
}

TEST_CASE("GMM1 file round trip") {
    TempDir tmp("gmm");
    Rng rng(61);
    const DiagonalGmm m = fvtest::random_gmm(rng, 4, 3);
    const std::string path = tmp.file("model.bin");
    save_gmm(m, path);
    const DiagonalGmm back = load_gmm(path);
    CHECK(models_identical(m, back));

    SUBCASE("magic is checked") {
        fvtest::write_text(path, "JUNKJUNKJUNK");
        CHECK_THROWS_WITH_AS(load_gmm(path), doctest::Contains("magic"), Error);
    }
}

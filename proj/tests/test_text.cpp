#include "fvgenre/text.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace fvgenre;
using fvtest::TempDir;

namespace {

TrainDoc doc(const std::string& text, int genre) {
    return TrainDoc{tokenize(text), genre};
}

// Brute-force re-derivation of the selection rule, counting A/B/C/D by
// scanning the documents directly and using floating-point frequency ratios.
std::vector<std::string> selection_oracle(const std::vector<TrainDoc>& docs, std::size_t n_genres,
                                          int m) {
    std::set<std::string> vocab;
    for (const TrainDoc& d : docs) {
        for (const auto& [term, count] : d.tokens) {
            (void)count;
            vocab.insert(term);
        }
    }
    std::set<std::string> selected;
    for (std::size_t g = 0; g < n_genres; ++g) {
        std::vector<std::pair<double, std::string>> ranked;
        for (const std::string& term : vocab) {
            double a = 0, b = 0, c = 0, d = 0;
            for (const TrainDoc& dd : docs) {
                const bool has = dd.tokens.count(term) > 0;
                const bool in_genre = dd.genre == static_cast<int>(g);
                if (in_genre && has) ++a;
                if (in_genre && !has) ++b;
                if (!in_genre && has) ++c;
                if (!in_genre && !has) ++d;
            }
            bool pass;
            if (c + d == 0) {
                pass = true;
            } else if (a + b == 0) {
                pass = false;
            } else {
                pass = a / (a + b) > c / (c + d);
            }
            if (!pass) continue;
            ranked.emplace_back(chi_square(a, b, c, d), term);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        for (std::size_t i = 0; i < std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(m)); ++i) {
            selected.insert(ranked[i].second);
        }
    }
    return {selected.begin(), selected.end()};
}

}  // namespace

TEST_CASE("tokenize") {
    SUBCASE("case folding and punctuation") {
        const TermCounts t = tokenize("Cooking, cooking!");
        REQUIRE(t.size() == 1);
        CHECK(t.at("cooking") == 2);
    }
    SUBCASE("empty input") { CHECK(tokenize("").empty()); }
    SUBCASE("short tokens dropped") {
        const TermCounts t = tokenize("a I x7 go");
        REQUIRE(t.size() == 2);
        CHECK(t.at("x7") == 1);
        CHECK(t.at("go") == 1);
    }
    SUBCASE("digits and mixed separators") {
        const TermCounts t = tokenize("re-mix\tre_mix 42!");
        CHECK(t.at("re") == 2);
        CHECK(t.at("mix") == 2);
        CHECK(t.at("42") == 1);
    }
}

TEST_CASE("chi_square") {
    SUBCASE("perfect discriminator") {
        CHECK(chi_square(5, 0, 0, 5) == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("independence gives zero") { CHECK(chi_square(5, 5, 5, 5) == 0.0); }
    SUBCASE("zero marginal guard") {
        CHECK(chi_square(0, 0, 3, 7) == 0.0);
        CHECK(chi_square(3, 7, 0, 0) == 0.0);
        CHECK(chi_square(0, 5, 0, 5) == 0.0);
    }
    SUBCASE("symmetric under genre/complement exchange") {
        Rng rng(2);
        for (int trial = 0; trial < 50; ++trial) {
            const double a = static_cast<double>(rng.uniform_int(20));
            const double b = static_cast<double>(rng.uniform_int(20));
            const double c = static_cast<double>(rng.uniform_int(20));
            const double d = static_cast<double>(rng.uniform_int(20));
            CHECK(chi_square(a, b, c, d) == doctest::Approx(chi_square(c, d, a, b)).epsilon(1e-12));
        }
    }
}

TEST_CASE("fit_tfidf selects discriminative terms") {
    SUBCASE("unique terms are perfect discriminators") {
        const std::vector<TrainDoc> docs = {doc("apple common", 0), doc("banana common", 1)};
        const TfIdfModel model = fit_tfidf(docs, 2, 1);
        REQUIRE(model.selected_terms.size() == 2);
        CHECK(model.selected_terms[0] == "apple");
        CHECK(model.selected_terms[1] == "banana");
    }
    SUBCASE("a term present in every document is never selected") {
        const std::vector<TrainDoc> docs = {doc("everywhere foo", 0), doc("everywhere bar", 1),
                                            doc("everywhere baz", 0)};
        const TfIdfModel model = fit_tfidf(docs, 2, 5);
        const std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(model.vocabulary.begin(), model.vocabulary.end(), "everywhere") -
            model.vocabulary.begin());
        CHECK(model.idf[idx] == 0.0);
        CHECK(std::find(model.selected_terms.begin(), model.selected_terms.end(), "everywhere") ==
              model.selected_terms.end());
    }
    SUBCASE("6-doc corpus equals the brute-force oracle") {
        const std::vector<TrainDoc> docs = {
            doc("goal match team", 0),       doc("goal stadium fans", 0),
            doc("recipe chef kitchen", 1),   doc("recipe oven goal", 1),
            doc("ballot senate law", 2),     doc("law court senate fans", 2),
        };
        for (const int m : {1, 2, 5}) {
            const TfIdfModel model = fit_tfidf(docs, 3, m);
            CHECK(model.selected_terms == selection_oracle(docs, 3, m));
        }
    }
    SUBCASE("selected term count is bounded by m * genres") {
        Rng rng(9);
        std::vector<TrainDoc> docs;
        const char* words[] = {"aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh"};
        for (int i = 0; i < 30; ++i) {
            std::string text;
            for (int w = 0; w < 4; ++w) {
                text += words[rng.uniform_int(8)];
                text += " ";
            }
            docs.push_back(doc(text, static_cast<int>(rng.uniform_int(3))));
        }
        for (const int m : {1, 2, 3}) {
            const TfIdfModel model = fit_tfidf(docs, 3, m);
            CHECK(model.selected_terms.size() <= static_cast<std::size_t>(m) * 3);
        }
    }
    SUBCASE("deterministic") {
        const std::vector<TrainDoc> docs = {doc("x1 x2 x3", 0), doc("x2 x4", 1), doc("x5 x1", 0)};
        const TfIdfModel a = fit_tfidf(docs, 2, 2);
        const TfIdfModel b = fit_tfidf(docs, 2, 2);
        CHECK(a.vocabulary == b.vocabulary);
        CHECK(a.idf == b.idf);
        CHECK(a.selected_terms == b.selected_terms);
    }
    SUBCASE("empty corpus rejected") {
        CHECK_THROWS_AS(fit_tfidf({}, 2, 1), Error);
    }
}

TEST_CASE("encode_tfidf") {
    const std::vector<TrainDoc> docs = {doc("apple apple pie", 0), doc("banana split", 1),
                                        doc("apple banana", 0), doc("cherry pie", 1)};
    const TfIdfModel model = fit_tfidf(docs, 2, 3);

    SUBCASE("document with no selected terms encodes to zero") {
        const Vec v = encode_tfidf(model, tokenize("unrelated words entirely"));
        CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single selected term gives a unit axis vector") {
        REQUIRE(!model.selected_terms.empty());
        const std::string term = model.selected_terms.front();
        const Vec v = encode_tfidf(model, tokenize(term + " " + term));
        CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("hand-computed tf-idf") {
        // Model built by hand: selected = {aa, bb, cc}, idf = {ln2, ln4, 1.0}.
        TfIdfModel hand;
        hand.vocabulary = {"aa", "bb", "cc"};
        hand.idf = {std::log(2.0), std::log(4.0), 1.0};
        hand.selected_terms = {"aa", "bb", "cc"};
        hand.terms_per_genre = 3;
        const Vec v = encode_tfidf(hand, tokenize("aa aa bb cc cc cc"));
        Vec raw(3);
        raw << 2.0 * std::log(2.0), 1.0 * std::log(4.0), 3.0 * 1.0;
        raw /= raw.norm();
        for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(raw[i]).epsilon(1e-12));
    }
    SUBCASE("nonzero encodings always have unit norm") {
        Rng rng(15);
        const char* words[] = {"apple", "banana", "pie", "cherry", "split"};
        for (int trial = 0; trial < 20; ++trial) {
            std::string text;
            for (int w = 0; w < 3; ++w) {
                text += words[rng.uniform_int(5)];
                text += " ";
            }
            const Vec v = encode_tfidf(model, tokenize(text));
            if (v.cwiseAbs().maxCoeff() > 0.0) {
                CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("tfidf model JSON round trip") {
    TempDir tmp("tfidf");
    const std::vector<TrainDoc> docs = {doc("alpha beta", 0), doc("gamma delta", 1)};
    const TfIdfModel model = fit_tfidf(docs, 2, 2);
    const std::string path = tmp.file("model.json");
    save_tfidf(model, path);
    const TfIdfModel back = load_tfidf(path);
    CHECK(back.vocabulary == model.vocabulary);
    CHECK(back.idf == model.idf);
    CHECK(back.selected_terms == model.selected_terms);
    CHECK(back.terms_per_genre == model.terms_per_genre);

    fvtest::write_text(path, "not json {{{");
    CHECK_THROWS_AS(load_tfidf(path), Error);
}

#include "fvgenre/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace fvgenre {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

TermCounts tokenize(const std::string& text) {
    TermCounts counts;
    std::string token;
    auto flush = [&] {
        if (token.size() >= 2) ++counts[token];
        token.clear();
    };
    for (const char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            token.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                 : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return counts;
}

double chi_square(double a, double b, double c, double d) {
    const double row1 = a + b;
    const double row2 = c + d;
    const double col1 = a + c;
    const double col2 = b + d;
    if (row1 <= 0.0 || row2 <= 0.0 || col1 <= 0.0 || col2 <= 0.0) return 0.0;
    const double n = a + b + c + d;
    const double det = a * d - b * c;
    return n * det * det / (row1 * row2 * col1 * col2);
}

TfIdfModel fit_tfidf(const std::vector<TrainDoc>& train_docs, std::size_t n_genres, int m) {
    if (train_docs.empty()) throw Error("fit_tfidf: empty corpus");
    if (m < 1) throw Error("fit_tfidf: m must be >= 1");
    for (const TrainDoc& doc : train_docs) {
        if (doc.genre < 0 || static_cast<std::size_t>(doc.genre) >= n_genres) {
            throw Error("fit_tfidf: genre index out of range");
        }
    }

    const double n = static_cast<double>(train_docs.size());

    // Document frequencies, global and per genre. std::map keeps everything
    // in lexicographic term order.
    std::map<std::string, int> df;
    std::map<std::string, std::vector<int>> df_genre;
    std::vector<int> genre_docs(n_genres, 0);
    for (const TrainDoc& doc : train_docs) {
        ++genre_docs[static_cast<std::size_t>(doc.genre)];
        for (const auto& [term, count] : doc.tokens) {
            (void)count;
            ++df[term];
            auto [it, inserted] = df_genre.try_emplace(term, std::vector<int>(n_genres, 0));
            ++it->second[static_cast<std::size_t>(doc.genre)];
        }
    }

    TfIdfModel model;
    model.terms_per_genre = m;
    model.vocabulary.reserve(df.size());
    model.idf.reserve(df.size());
    for (const auto& [term, count] : df) {
        model.vocabulary.push_back(term);
        model.idf.push_back(std::log(n / static_cast<double>(count)));
    }

    std::set<std::string> selected;
    for (std::size_t g = 0; g < n_genres; ++g) {
        const double in_genre = static_cast<double>(genre_docs[g]);
        const double out_genre = n - in_genre;
        // (chi^2, term) ranking restricted to terms that occur more
        // frequently in the genre than in its complement.
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [term, per_genre] : df_genre) {
            const double a = static_cast<double>(per_genre[g]);
            const double b = in_genre - a;
            const double c = static_cast<double>(df.at(term)) - a;
            const double d = out_genre - c;
            const bool more_frequent =
                (c + d <= 0.0) || (a + b > 0.0 && a * (c + d) > c * (a + b));
            if (!more_frequent) continue;
            ranked.emplace_back(chi_square(a, b, c, d), term);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& lhs, const auto& rhs) {
            if (lhs.first != rhs.first) return lhs.first > rhs.first;
            return lhs.second < rhs.second;
        });
        const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(m), ranked.size());
        for (std::size_t i = 0; i < keep; ++i) selected.insert(ranked[i].second);
    }
    model.selected_terms.assign(selected.begin(), selected.end());
    return model;
}

Vec encode_tfidf(const TfIdfModel& model, const TermCounts& tokens) {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(model.selected_terms.size()));
    for (std::size_t i = 0; i < model.selected_terms.size(); ++i) {
        const std::string& term = model.selected_terms[i];
        const auto tf_it = tokens.find(term);
        if (tf_it == tokens.end()) continue;
        const auto vocab_it =
            std::lower_bound(model.vocabulary.begin(), model.vocabulary.end(), term);
        if (vocab_it == model.vocabulary.end() || *vocab_it != term) {
            throw Error("encode_tfidf: selected term \"" + term + "\" missing from vocabulary");
        }
        const std::size_t idx = static_cast<std::size_t>(vocab_it - model.vocabulary.begin());
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(tf_it->second) * model.idf[idx];
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

void save_tfidf(const TfIdfModel& model, const std::string& path) {
    nlohmann::json j;
    j["vocabulary"] = model.vocabulary;
    j["idf"] = model.idf;
    j["selected_terms"] = model.selected_terms;
    j["m"] = model.terms_per_genre;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write TF-IDF model: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw Error("I/O failure writing " + path);
}

TfIdfModel load_tfidf(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open TF-IDF model: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": bad TF-IDF model JSON: " + e.what());
    }
    TfIdfModel model;
    try {
        model.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        model.idf = j.at("idf").get<std::vector<double>>();
        model.selected_terms = j.at("selected_terms").get<std::vector<std::string>>();
        model.terms_per_genre = j.at("m").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": bad TF-IDF model JSON: " + e.what());
    }
    if (model.vocabulary.size() != model.idf.size()) {
        throw Error(path + ": vocabulary/idf size mismatch");
    }
    return model;
}

}  // namespace fvgenre

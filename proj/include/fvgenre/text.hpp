#pragma once

#include "fvgenre/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace fvgenre {

using TermCounts = std::map<std::string, int>;

struct TrainDoc {
    TermCounts tokens;
    int genre = 0;
};

/// Fitted TF-IDF model with the chi-square-selected term set.
struct TfIdfModel {
    std::vector<std::string> vocabulary;      // sorted
    std::vector<double> idf;                  // aligned with vocabulary, ln(N/df)
    std::vector<std::string> selected_terms;  // sorted union of per-genre top-m
    int terms_per_genre = 20;                 // m
};

/// Lowercases, splits on any non-alphanumeric, drops tokens shorter than
/// 2 bytes. No stemming. Bytes >= 0x80 are treated as word characters so
/// UTF-8 words pass through intact.
TermCounts tokenize(const std::string& text);

/// chi^2 of the 2x2 contingency table (A,B,C,D):
///   N (AD - BC)^2 / ((A+B)(C+D)(A+C)(B+D)),
/// 0 when any marginal is 0.
double chi_square(double a, double b, double c, double d);

/// Fits idf over the training docs and selects, per genre, the m terms with
/// the highest chi^2 among terms occurring more frequently inside the genre
/// than in its complement (ties broken lexicographically); selected_terms is
/// the sorted union over genres.
TfIdfModel fit_tfidf(const std::vector<TrainDoc>& train_docs, std::size_t n_genres, int m);

/// tf * idf over selected_terms, L2-normalized (zero vector stays zero).
/// Terms outside selected_terms are ignored.
Vec encode_tfidf(const TfIdfModel& model, const TermCounts& tokens);

/// JSON model file (UTF-8).
void save_tfidf(const TfIdfModel& model, const std::string& path);
TfIdfModel load_tfidf(const std::string& path);

}  // namespace fvgenre

#include "fvgenre/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace fvgenre {

double average_precision(const RankedList& ranking) {
    if (ranking.video_ids.size() != ranking.relevant.size()) {
        throw Error("average_precision: ids/relevance size mismatch");
    }
    std::size_t total_relevant = 0;
    for (const std::uint8_t r : ranking.relevant) total_relevant += r ? 1 : 0;
    if (total_relevant == 0) {
        throw Error("average_precision: no relevant items for genre \"" + ranking.genre + "\"");
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < ranking.relevant.size(); ++rank) {
        if (ranking.relevant[rank]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

EvalReport evaluate(const ScoreTable& scores, const DatasetManifest& truth) {
    scores.validate();
    if (scores.video_ids.empty()) throw Error("evaluate: empty score table");

    // True genre name per scored video.
    std::map<std::string, std::string> label;
    for (const VideoEntry& e : truth.entries) {
        label[e.video_id] = truth.genres[static_cast<std::size_t>(e.genre)];
    }
    for (const std::string& id : scores.video_ids) {
        if (!label.count(id)) throw Error("evaluate: missing label for video \"" + id + "\"");
    }

    EvalReport report;
    double ap_sum = 0.0;
    for (std::size_t g = 0; g < scores.genres.size(); ++g) {
        // Rank rows by descending score, ties by ascending video_id.
        std::vector<std::size_t> order(scores.video_ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double sa = scores.scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(g));
            const double sb = scores.scores(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(g));
            if (sa != sb) return sa > sb;
            return scores.video_ids[a] < scores.video_ids[b];
        });

        RankedList ranking;
        ranking.genre = scores.genres[g];
        for (const std::size_t i : order) {
            ranking.video_ids.push_back(scores.video_ids[i]);
            ranking.relevant.push_back(label.at(scores.video_ids[i]) == scores.genres[g] ? 1 : 0);
        }

        GenreResult result;
        result.genre = scores.genres[g];
        for (const std::uint8_t r : ranking.relevant) result.relevant_count += r ? 1 : 0;
        if (result.relevant_count == 0) {
            result.ap = std::numeric_limits<double>::quiet_NaN();
            report.warnings.push_back("genre \"" + result.genre +
                                      "\" has no relevant test videos; excluded from MAP");
        } else {
            result.ap = average_precision(ranking);
            ap_sum += result.ap;
            ++report.genres_evaluated;
        }
        report.per_genre.push_back(std::move(result));
    }
    if (report.genres_evaluated == 0) {
        throw Error("evaluate: no genre has a relevant test video");
    }
    report.map = ap_sum / static_cast<double>(report.genres_evaluated);
    return report;
}

void write_report_tsv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write report: " + path);
    out << "genre\trelevant\tap\n";
    char buf[40];
    for (const GenreResult& r : report.per_genre) {
        out << r.genre << '\t' << r.relevant_count << '\t';
        if (std::isnan(r.ap)) {
            out << "NA";
        } else {
            std::snprintf(buf, sizeof buf, "%.6f", r.ap);
            out << buf;
        }
        out << '\n';
    }
    std::snprintf(buf, sizeof buf, "%.6f", report.map);
    out << "MAP\t" << report.genres_evaluated << '\t' << buf << '\n';
    if (!out) throw Error("I/O failure writing " + path);
}

void write_report_jsonl(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write report: " + path);
    for (const GenreResult& r : report.per_genre) {
        nlohmann::json j;
        j["genre"] = r.genre;
        j["relevant"] = r.relevant_count;
        if (std::isnan(r.ap)) {
            j["ap"] = nullptr;
        } else {
            j["ap"] = r.ap;
        }
        out << j.dump() << '\n';
    }
    nlohmann::json j;
    j["map"] = report.map;
    j["genres_evaluated"] = report.genres_evaluated;
    out << j.dump() << '\n';
    if (!out) throw Error("I/O failure writing " + path);
}

}  // namespace fvgenre

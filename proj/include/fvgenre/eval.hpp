#pragma once

#include "fvgenre/common.hpp"
#include "fvgenre/dataset.hpp"
#include "fvgenre/fusion.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fvgenre {

/// A genre's ranking of test videos: descending score, ties broken by
/// ascending video_id.
struct RankedList {
    std::string genre;
    std::vector<std::string> video_ids;
    std::vector<std::uint8_t> relevant;  // parallel to video_ids
};

struct GenreResult {
    std::string genre;
    std::size_t relevant_count = 0;
    double ap = 0.0;  // NaN when the genre has no relevant items
};

struct EvalReport {
    std::vector<GenreResult> per_genre;
    double map = 0.0;                 // mean AP over genres with >= 1 relevant item
    std::size_t genres_evaluated = 0;
    std::vector<std::string> warnings;
};

/// AP = (1/R) sum over relevant ranks r of (relevant in top r) / r.
/// Throws when the list has no relevant item.
double average_precision(const RankedList& ranking);

/// Ranks the scored videos per genre column and reports AP per genre plus
/// MAP. Genres with no relevant test item are excluded with a warning. Every
/// scored video must appear in the manifest.
EvalReport evaluate(const ScoreTable& scores, const DatasetManifest& truth);

/// TSV report: one "genre <tab> relevant <tab> ap" row per genre ("NA" for
/// excluded genres) and a final "MAP <tab> genres_evaluated <tab> value" row.
void write_report_tsv(const EvalReport& report, const std::string& path);

/// JSON-lines variant: one object per genre, then {"map":..., "genres_evaluated":...}.
void write_report_jsonl(const EvalReport& report, const std::string& path);

}  // namespace fvgenre

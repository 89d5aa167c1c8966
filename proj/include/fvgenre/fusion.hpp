#pragma once

#include "fvgenre/common.hpp"

#include <string>
#include <vector>

namespace fvgenre {

enum class FusionMode { Max, Sum };

FusionMode fusion_mode_from_name(const std::string& name);
const char* fusion_mode_name(FusionMode mode);

/// Per-genre scores for a set of test videos under one modality.
struct ScoreTable {
    std::string modality;
    std::vector<std::string> video_ids;  // row order
    std::vector<std::string> genres;     // column order
    Mat scores;                          // videos x genres

    void validate() const;
};

/// Per genre column, maps scores affinely onto [0,1]; a constant column maps
/// to all 0.5. Rank-preserving per column.
ScoreTable minmax_calibrate(const ScoreTable& table);

/// Element-wise max or sum across tables with identical video and genre
/// orderings. The result's modality is "fusion-max" / "fusion-sum".
ScoreTable fuse(const std::vector<ScoreTable>& tables, FusionMode mode);

/// Score table TSV: header "video_id" + genre names, one row per test video.
void write_score_table(const ScoreTable& table, const std::string& path);
ScoreTable read_score_table(const std::string& path);

}  // namespace fvgenre

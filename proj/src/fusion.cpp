#include "fvgenre/fusion.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace fvgenre {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string format_score(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

FusionMode fusion_mode_from_name(const std::string& name) {
    if (name == "max") return FusionMode::Max;
    if (name == "sum") return FusionMode::Sum;
    throw Error("unknown fusion mode \"" + name + "\" (want max or sum)");
}

const char* fusion_mode_name(FusionMode mode) {
    return mode == FusionMode::Max ? "max" : "sum";
}

void ScoreTable::validate() const {
    if (scores.rows() != static_cast<Eigen::Index>(video_ids.size()) ||
        scores.cols() != static_cast<Eigen::Index>(genres.size())) {
        throw Error("score table: matrix shape does not match ids/genres");
    }
    if (!scores.allFinite()) throw Error("score table: non-finite score");
    std::set<std::string> ids(video_ids.begin(), video_ids.end());
    if (ids.size() != video_ids.size()) throw Error("score table: duplicate video id");
}

ScoreTable minmax_calibrate(const ScoreTable& table) {
    table.validate();
    if (table.video_ids.empty()) throw Error("minmax_calibrate: empty table");
    ScoreTable out = table;
    for (Eigen::Index g = 0; g < out.scores.cols(); ++g) {
        const double lo = out.scores.col(g).minCoeff();
        const double hi = out.scores.col(g).maxCoeff();
        if (hi > lo) {
            out.scores.col(g) = (out.scores.col(g).array() - lo) / (hi - lo);
        } else {
            out.scores.col(g).setConstant(0.5);
        }
    }
    return out;
}

ScoreTable fuse(const std::vector<ScoreTable>& tables, FusionMode mode) {
    if (tables.empty()) throw Error("fuse: need at least one table");
    const ScoreTable& first = tables.front();
    first.validate();
    for (std::size_t i = 1; i < tables.size(); ++i) {
        tables[i].validate();
        if (tables[i].video_ids != first.video_ids) {
            throw Error("fuse: table \"" + tables[i].modality +
                        "\" has a different video ordering than \"" + first.modality + "\"");
        }
        if (tables[i].genres != first.genres) {
            throw Error("fuse: table \"" + tables[i].modality +
                        "\" has different genre columns than \"" + first.modality + "\"");
        }
    }
    ScoreTable out = first;
    for (std::size_t i = 1; i < tables.size(); ++i) {
        if (mode == FusionMode::Max) {
            out.scores = out.scores.cwiseMax(tables[i].scores);
        } else {
            out.scores += tables[i].scores;
        }
    }
    out.modality = mode == FusionMode::Max ? "fusion-max" : "fusion-sum";
    return out;
}

void write_score_table(const ScoreTable& table, const std::string& path) {
    table.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write score table: " + path);
    out << "video_id";
    for (const std::string& g : table.genres) out << '\t' << g;
    out << '\n';
    for (std::size_t r = 0; r < table.video_ids.size(); ++r) {
        out << table.video_ids[r];
        for (Eigen::Index c = 0; c < table.scores.cols(); ++c) {
            out << '\t' << format_score(table.scores(static_cast<Eigen::Index>(r), c));
        }
        out << '\n';
    }
    if (!out) throw Error("I/O failure writing " + path);
}

ScoreTable read_score_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open score table: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty score table");
    std::vector<std::string> header = split_tabs(line);
    if (header.empty() || header[0] != "video_id") {
        throw Error(path + ": score table header must start with video_id");
    }
    ScoreTable table;
    table.genres.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_tabs(line);
        if (cells.size() != header.size()) {
            throw Error(path + ": row width mismatch at line " + std::to_string(line_no));
        }
        table.video_ids.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            try {
                row.push_back(std::stod(cells[i]));
            } catch (const std::exception&) {
                throw Error(path + ": bad score at line " + std::to_string(line_no) + ": \"" +
                            cells[i] + "\"");
            }
        }
        rows.push_back(std::move(row));
    }
    table.scores.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.genres.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            table.scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    table.validate();
    return table;
}

}  // namespace fvgenre

#include "fvgenre/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace fvgenre {

namespace {

constexpr char kDescriptorMagic[4] = {'F', 'V', 'D', '1'};

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

DescriptorSequence read_descriptors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open descriptor file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& cell : split_on(line, ',')) {
            std::size_t consumed = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &consumed);
            } catch (const std::exception&) {
                throw Error(path + ": CSV parse error at line " + std::to_string(line_no) +
                            ": bad value \"" + cell + "\"");
            }
            if (consumed != cell.size()) {
                throw Error(path + ": CSV parse error at line " + std::to_string(line_no) +
                            ": trailing characters in \"" + cell + "\"");
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(path + ": CSV row width mismatch at line " + std::to_string(line_no) +
                        ": expected " + std::to_string(rows.front().size()) + " values, got " +
                        std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(path + ": empty descriptor file");

    DescriptorSequence seq;
    seq.data.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const double v = rows[r][c];
            if (!std::isfinite(v)) {
                throw Error(path + ": non-finite value at (" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
            }
            seq.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return seq;
}

}  // namespace

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

const VideoEntry* DatasetManifest::find(const std::string& video_id) const {
    for (const VideoEntry& e : entries) {
        if (e.video_id == video_id) return &e;
    }
    return nullptr;
}

DatasetManifest load_manifest(const std::string& path, const std::string& genre_list_path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);

    static const std::vector<std::string> kColumns = {"video_id", "split",       "genre",
                                                      "frames_dir", "descriptors", "metadata_path"};

    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": no entries");
    const std::vector<std::string> header = split_on(strip_cr(line), '\t');
    if (header.size() < 3) throw Error(path + ": manifest header must list at least video_id, split, genre");
    if (header.size() > kColumns.size()) {
        throw Error(path + ": manifest header has " + std::to_string(header.size()) +
                    " columns, expected at most " + std::to_string(kColumns.size()));
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] != kColumns[i]) {
            throw Error(path + ": unexpected manifest column " + std::to_string(i + 1) + ": \"" +
                        header[i] + "\" (expected \"" + kColumns[i] + "\")");
        }
    }

    struct RawEntry {
        VideoEntry entry;
        std::string genre_name;
    };
    std::vector<RawEntry> raw;
    std::set<std::string> seen_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cells = split_on(line, '\t');
        if (cells.size() > kColumns.size()) {
            throw Error(path + ": parse error at line " + std::to_string(line_no) + ": " +
                        std::to_string(cells.size()) + " cells, expected at most " +
                        std::to_string(kColumns.size()));
        }
        cells.resize(kColumns.size());  // missing trailing cells = absent

        RawEntry r;
        r.entry.video_id = cells[0];
        if (r.entry.video_id.empty()) {
            throw Error(path + ": parse error at line " + std::to_string(line_no) + ": empty video_id");
        }
        if (!seen_ids.insert(r.entry.video_id).second) {
            throw Error(path + ": duplicate video_id \"" + r.entry.video_id + "\" at line " +
                        std::to_string(line_no));
        }
        if (cells[1] == "train") {
            r.entry.split = Split::Train;
        } else if (cells[1] == "test") {
            r.entry.split = Split::Test;
        } else {
            throw Error(path + ": parse error at line " + std::to_string(line_no) +
                        ": unknown split token \"" + cells[1] + "\"");
        }
        r.genre_name = cells[2];
        if (r.genre_name.empty()) {
            throw Error(path + ": parse error at line " + std::to_string(line_no) + ": empty genre");
        }
        r.entry.frames_dir = cells[3];
        if (!cells[4].empty()) {
            for (const std::string& pair : split_on(cells[4], ';')) {
                if (pair.empty()) continue;
                const std::size_t eq = pair.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 >= pair.size()) {
                    throw Error(path + ": parse error at line " + std::to_string(line_no) +
                                ": descriptor cell must be modality=path, got \"" + pair + "\"");
                }
                r.entry.descriptor_paths[pair.substr(0, eq)] = pair.substr(eq + 1);
            }
        }
        r.entry.metadata_path = cells[5];
        if (!r.entry.has_content()) {
            throw Error(path + ": parse error at line " + std::to_string(line_no) + ": entry \"" +
                        r.entry.video_id +
                        "\" has none of frames_dir, descriptors, metadata_path");
        }
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw Error(path + ": no entries");

    DatasetManifest manifest;
    if (!genre_list_path.empty()) {
        std::ifstream gin(genre_list_path);
        if (!gin) throw Error("cannot open genre list: " + genre_list_path);
        std::string g;
        while (std::getline(gin, g)) {
            g = strip_cr(g);
            if (!g.empty()) manifest.genres.push_back(g);
        }
        if (manifest.genres.empty()) throw Error(genre_list_path + ": empty genre list");
    } else {
        std::set<std::string> names;
        for (const RawEntry& r : raw) names.insert(r.genre_name);
        manifest.genres.assign(names.begin(), names.end());  // lexicographic
    }

    for (RawEntry& r : raw) {
        const auto it = std::find(manifest.genres.begin(), manifest.genres.end(), r.genre_name);
        if (it == manifest.genres.end()) {
            throw Error(path + ": genre \"" + r.genre_name + "\" of video \"" + r.entry.video_id +
                        "\" is not in the genre list");
        }
        r.entry.genre = static_cast<int>(it - manifest.genres.begin());
        manifest.entries.push_back(std::move(r.entry));
    }
    return manifest;
}

DescriptorSequence read_descriptors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open descriptor file: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDescriptorMagic, 4) != 0) {
        if (in && std::memcmp(magic, kDescriptorMagic, 3) == 0) {
            throw Error(path + ": magic mismatch: got \"" + std::string(magic, 4) +
                        "\", expected \"FVD1\"");
        }
        // Not an FVD file at all; try the CSV alternative.
        in.close();
        return read_descriptors_csv(path);
    }
    const std::uint32_t t = read_u32(in);
    const std::uint32_t d = read_u32(in);
    const std::uint32_t reserved = read_u32(in);
    if (!in) throw Error(path + ": truncated FVD1 header");
    if (reserved != 0) throw Error(path + ": FVD1 reserved field must be 0");
    if (t == 0 || d == 0) throw Error(path + ": FVD1 requires T >= 1 and D >= 1");

    std::vector<float> payload(static_cast<std::size_t>(t) * d);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(payload.size() * sizeof(float))) {
        throw Error(path + ": size mismatch: header says " + std::to_string(t) + "x" +
                    std::to_string(d) + " but payload is short");
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw Error(path + ": size mismatch: trailing bytes after " + std::to_string(t) + "x" +
                    std::to_string(d) + " payload");
    }

    DescriptorSequence seq;
    seq.data.resize(t, d);
    for (std::uint32_t r = 0; r < t; ++r) {
        for (std::uint32_t c = 0; c < d; ++c) {
            const double v = static_cast<double>(payload[static_cast<std::size_t>(r) * d + c]);
            if (!std::isfinite(v)) {
                throw Error(path + ": non-finite value at (" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
            }
            seq.data(r, c) = v;
        }
    }
    return seq;
}

void write_descriptors(const DescriptorSequence& seq, const std::string& path) {
    if (seq.t() < 1 || seq.d() < 1) throw Error("write_descriptors: sequence must be at least 1x1");
    for (Eigen::Index r = 0; r < seq.t(); ++r) {
        for (Eigen::Index c = 0; c < seq.d(); ++c) {
            if (!std::isfinite(seq.data(r, c))) {
                throw Error("write_descriptors: non-finite value at (" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
            }
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write descriptor file: " + path);
    out.write(kDescriptorMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(seq.t()));
    write_u32(out, static_cast<std::uint32_t>(seq.d()));
    write_u32(out, 0);
    std::vector<float> payload;
    payload.reserve(static_cast<std::size_t>(seq.t() * seq.d()));
    for (Eigen::Index r = 0; r < seq.t(); ++r) {
        for (Eigen::Index c = 0; c < seq.d(); ++c) {
            payload.push_back(static_cast<float>(seq.data(r, c)));
        }
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw Error("I/O failure writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fvgenre

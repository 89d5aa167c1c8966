#pragma once

#include "fvgenre/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace fvgenre {

enum class Split { Train, Test };

const char* split_name(Split s);

/// One corpus video. Paths are optional; an entry must reference at least one
/// of frames_dir, descriptor_paths or metadata_path.
struct VideoEntry {
    std::string video_id;
    Split split = Split::Train;
    int genre = 0;  // index into DatasetManifest::genres
    std::string frames_dir;
    std::map<std::string, std::string> descriptor_paths;  // modality -> file
    std::string metadata_path;

    bool has_content() const {
        return !frames_dir.empty() || !descriptor_paths.empty() || !metadata_path.empty();
    }
};

struct DatasetManifest {
    std::vector<VideoEntry> entries;
    std::vector<std::string> genres;

    const VideoEntry* find(const std::string& video_id) const;
};

/// Variable-length multimodal descriptor sequence for one video: T keyframes,
/// D values each.
struct DescriptorSequence {
    std::string video_id;
    std::string modality;
    Mat data;  // T x D

    Eigen::Index t() const { return data.rows(); }
    Eigen::Index d() const { return data.cols(); }
};

/// Parses the tab-separated manifest. Columns: video_id, split, genre,
/// frames_dir, descriptors (semicolon-separated modality=path pairs),
/// metadata_path; empty cell = absent. The genre list is the sorted set of
/// distinct genre names unless genre_list_path names a file with one genre
/// per line.
DatasetManifest load_manifest(const std::string& path, const std::string& genre_list_path = {});

/// Reads an FVD1 binary descriptor file, or CSV (one comma-separated row per
/// keyframe) when the magic bytes do not match. video_id/modality are left
/// empty; callers fill them from context.
DescriptorSequence read_descriptors(const std::string& path);

/// Writes FVD1: magic "FVD1", u32 T, u32 D, u32 reserved=0, then T*D IEEE-754
/// binary32 values row-major, all little-endian.
void write_descriptors(const DescriptorSequence& seq, const std::string& path);

/// Slurps a whole UTF-8 text file.
std::string read_text_file(const std::string& path);

}  // namespace fvgenre

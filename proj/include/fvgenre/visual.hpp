#pragma once

#include "fvgenre/common.hpp"
#include "fvgenre/dataset.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fvgenre {

inline constexpr int kHogDim = 81;        // 3x3 cells x 9 orientation bins
inline constexpr int kColorNameDim = 11;  // universal color names
inline constexpr int kVisualDim = kHogDim + kColorNameDim;
inline constexpr int kMaxFrameSide = 320;  // frames larger than this get rescaled

/// 8-bit RGB frame, row-major.
struct FrameImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height

    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    std::uint8_t* at(int x, int y) {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

struct ColorPrototype {
    const char* name;
    std::uint8_t r, g, b;
};

/// The 11 universal color names with their fixed RGB prototypes, in the name
/// order that defines the descriptor layout and nearest-neighbor tie-breaking.
const std::array<ColorPrototype, kColorNameDim>& color_prototypes();

/// Reads a binary PPM (P6) or PGM (P5, gray replicated to RGB) frame.
FrameImage read_frame(const std::string& path);

/// Writes a frame as binary PPM (P6). Used by fixture generators and tools.
void write_ppm(const FrameImage& frame, const std::string& path);

/// Nearest-neighbor downscale so that max(width, height) <= max_side.
/// Frames already within bounds are returned unchanged.
FrameImage rescale_max_side(const FrameImage& frame, int max_side);

/// Lexicographically sorted regular files in a frames directory.
std::vector<std::string> list_frame_files(const std::string& frames_dir);

/// Uniform temporal sampling: min(n, F) frames at indices round(i*(F-1)/(m-1))
/// over the sorted file list (index 0 when a single frame is requested).
std::vector<FrameImage> sample_keyframes(const std::string& frames_dir, int n);

/// 81-dim global HoG: luminance gradients by central differences on interior
/// pixels, unsigned orientation in [0,180) hard-binned into 9 bins of 20
/// degrees, magnitude-weighted, over a 3x3 grid of equal cells; L1-normalized
/// (all zeros when the frame has no gradient).
Vec hog81(const FrameImage& frame);

/// 11-dim Color Naming histogram: per-pixel nearest prototype by squared RGB
/// distance (ties to the lowest name index), L1-normalized.
Vec color_naming11(const FrameImage& frame);

/// Per-keyframe concatenation [hog81 || color_naming11]; frames are rescaled
/// to kMaxFrameSide before extraction. Result is T x 92.
DescriptorSequence extract_visual_sequence(const std::string& frames_dir, int n_keyframes);

}  // namespace fvgenre

#include "fvgenre/visual.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fvgenre {

namespace {

namespace fs = std::filesystem;

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int pnm_int(std::istream& in, const std::string& path, const char* what) {
    const std::string tok = pnm_token(in);
    if (tok.empty()) throw Error(path + ": truncated PNM header (" + what + ")");
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw Error(path + ": bad PNM " + std::string(what) + ": \"" + tok + "\"");
    }
}

double luminance(const std::uint8_t* px) {
    return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
}

}  // namespace

const std::array<ColorPrototype, kColorNameDim>& color_prototypes() {
    static const std::array<ColorPrototype, kColorNameDim> table = {{
        {"black", 0, 0, 0},
        {"blue", 0, 0, 255},
        {"brown", 139, 69, 19},
        {"grey", 128, 128, 128},
        {"green", 0, 128, 0},
        {"orange", 255, 165, 0},
        {"pink", 255, 192, 203},
        {"purple", 128, 0, 128},
        {"red", 255, 0, 0},
        {"white", 255, 255, 255},
        {"yellow", 255, 255, 0},
    }};
    return table;
}

FrameImage read_frame(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open frame: " + path);
    const std::string magic = pnm_token(in);
    if (magic != "P6" && magic != "P5") {
        throw Error(path + ": unsupported frame format \"" + magic + "\" (want P6 or P5)");
    }
    const int width = pnm_int(in, path, "width");
    const int height = pnm_int(in, path, "height");
    const int maxval = pnm_int(in, path, "maxval");
    if (width < 2 || height < 2) {
        throw Error(path + ": frame must be at least 2x2, got " + std::to_string(width) + "x" +
                    std::to_string(height));
    }
    if (maxval <= 0 || maxval > 255) {
        throw Error(path + ": unsupported PNM maxval " + std::to_string(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload; the
    // token reader has already consumed it.

    FrameImage frame;
    frame.width = width;
    frame.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    frame.pixels.resize(3 * n);
    if (magic == "P6") {
        in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(3 * n));
        if (in.gcount() != static_cast<std::streamsize>(3 * n)) {
            throw Error(path + ": truncated frame payload");
        }
    } else {
        std::vector<std::uint8_t> gray(n);
        in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) {
            throw Error(path + ": truncated frame payload");
        }
        for (std::size_t i = 0; i < n; ++i) {
            frame.pixels[3 * i] = frame.pixels[3 * i + 1] = frame.pixels[3 * i + 2] = gray[i];
        }
    }
    return frame;
}

void write_ppm(const FrameImage& frame, const std::string& path) {
    if (frame.width < 1 || frame.height < 1 ||
        frame.pixels.size() != static_cast<std::size_t>(3) * frame.width * frame.height) {
        throw Error("write_ppm: inconsistent frame");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write frame: " + path);
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()),
              static_cast<std::streamsize>(frame.pixels.size()));
    if (!out) throw Error("I/O failure writing " + path);
}

FrameImage rescale_max_side(const FrameImage& frame, int max_side) {
    const int side = std::max(frame.width, frame.height);
    if (side <= max_side) return frame;
    const double scale = static_cast<double>(max_side) / side;
    FrameImage out;
    out.width = std::max(2, static_cast<int>(std::lround(frame.width * scale)));
    out.height = std::max(2, static_cast<int>(std::lround(frame.height * scale)));
    out.pixels.resize(static_cast<std::size_t>(3) * out.width * out.height);
    for (int y = 0; y < out.height; ++y) {
        const int sy = std::min(frame.height - 1,
                                static_cast<int>((y + 0.5) * frame.height / out.height));
        for (int x = 0; x < out.width; ++x) {
            const int sx = std::min(frame.width - 1,
                                    static_cast<int>((x + 0.5) * frame.width / out.width));
            const std::uint8_t* src = frame.at(sx, sy);
            std::uint8_t* dst = out.at(x, y);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
    }
    return out;
}

std::vector<std::string> list_frame_files(const std::string& frames_dir) {
    if (!fs::is_directory(frames_dir)) throw Error("not a directory: " + frames_dir);
    std::vector<std::string> files;
    for (const fs::directory_entry& e : fs::directory_iterator(frames_dir)) {
        if (e.is_regular_file()) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no frames in directory: " + frames_dir);
    return files;
}

std::vector<FrameImage> sample_keyframes(const std::string& frames_dir, int n) {
    if (n < 1) throw Error("sample_keyframes: n must be >= 1");
    const std::vector<std::string> files = list_frame_files(frames_dir);
    const std::size_t f = files.size();
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(n), f);
    std::vector<FrameImage> frames;
    frames.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx =
            m == 1 ? 0
                   : static_cast<std::size_t>(std::llround(
                         static_cast<double>(i) * static_cast<double>(f - 1) / static_cast<double>(m - 1)));
        frames.push_back(read_frame(files[idx]));
    }
    return frames;
}

Vec hog81(const FrameImage& frame) {
    if (frame.width < 2 || frame.height < 2) {
        throw Error("hog81: frame must be at least 2x2");
    }
    const int w = frame.width;
    const int h = frame.height;
    Mat lum(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lum(y, x) = luminance(frame.at(x, y));
        }
    }

    constexpr double kBinWidth = std::numbers::pi / 9.0;
    Vec hist = Vec::Zero(kHogDim);
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const double gx = 0.5 * (lum(y, x + 1) - lum(y, x - 1));
            const double gy = 0.5 * (lum(y + 1, x) - lum(y - 1, x));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx);  // (-pi, pi]
            if (angle < 0.0) angle += std::numbers::pi;
            if (angle >= std::numbers::pi) angle -= std::numbers::pi;  // fold pi onto 0
            const int bin = std::min(8, static_cast<int>(angle / kBinWidth));
            const int cx = x * 3 / w;
            const int cy = y * 3 / h;
            hist[(cy * 3 + cx) * 9 + bin] += mag;
        }
    }
    const double total = hist.sum();
    if (total > 0.0) hist /= total;
    return hist;
}

Vec color_naming11(const FrameImage& frame) {
    if (frame.width < 2 || frame.height < 2) {
        throw Error("color_naming11: frame must be at least 2x2");
    }
    const auto& protos = color_prototypes();
    Vec hist = Vec::Zero(kColorNameDim);
    const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* px = frame.pixels.data() + 3 * i;
        int best = 0;
        long best_d2 = -1;
        for (int p = 0; p < kColorNameDim; ++p) {
            const long dr = static_cast<long>(px[0]) - protos[p].r;
            const long dg = static_cast<long>(px[1]) - protos[p].g;
            const long db = static_cast<long>(px[2]) - protos[p].b;
            const long d2 = dr * dr + dg * dg + db * db;
            if (best_d2 < 0 || d2 < best_d2) {  // ties keep the lowest index
                best_d2 = d2;
                best = p;
            }
        }
        hist[best] += 1.0;
    }
    hist /= static_cast<double>(n);
    return hist;
}

DescriptorSequence extract_visual_sequence(const std::string& frames_dir, int n_keyframes) {
    const std::vector<FrameImage> frames = sample_keyframes(frames_dir, n_keyframes);
    DescriptorSequence seq;
    seq.modality = "visual";
    seq.data.resize(static_cast<Eigen::Index>(frames.size()), kVisualDim);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const FrameImage scaled = rescale_max_side(frames[t], kMaxFrameSide);
        seq.data.row(static_cast<Eigen::Index>(t)).head(kHogDim) = hog81(scaled).transpose();
        seq.data.row(static_cast<Eigen::Index>(t)).tail(kColorNameDim) =
            color_naming11(scaled).transpose();
    }
    return seq;
}

}  // namespace fvgenre

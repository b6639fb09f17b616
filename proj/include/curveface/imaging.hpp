#pragma once

// Canonical grayscale images and the pure preprocessing steps applied to
// them before any transform: luma conversion, block-mean downsampling,
// uniform bit-depth quantization and even-extent padding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "curveface/error.hpp"

namespace curveface {

/// Row-major grayscale raster. Pixel values are integral levels in
/// [0, 2^bit_depth - 1] stored as doubles so they feed the FFT directly.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;
    int bit_depth = 8;
    // Extent before pad_to_even; equal to width/height when unpadded.
    int original_width = 0;
    int original_height = 0;

    Image() = default;
    Image(int w, int h, std::vector<double> px, int bits = 8)
        : width(w), height(h), pixels(std::move(px)), bit_depth(bits),
          original_width(w), original_height(h) {
        if (w < 0 || h < 0 ||
            pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
            throw DimensionError("image pixel count does not match " + std::to_string(w) +
                                 "x" + std::to_string(h));
    }

    static Image filled(int w, int h, double value, int bits = 8) {
        return Image(w, h, std::vector<double>(static_cast<std::size_t>(w) * h, value), bits);
    }

    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::size_t size() const { return pixels.size(); }

    friend bool operator==(const Image&, const Image&) = default;
};

inline double max_level(int bit_depth) { return std::ldexp(1.0, bit_depth) - 1.0; }

/// Rec. 601 luma of three channel planes, rounded and clamped to [0, 255].
inline Image grayscale_convert(std::span<const double> r, std::span<const double> g,
                               std::span<const double> b, int width, int height) {
    if (r.size() != g.size() || r.size() != b.size())
        throw DimensionError("grayscale_convert: channel lengths differ");
    if (r.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw DimensionError("grayscale_convert: channel length does not match extent");
    std::vector<double> px(r.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double luma = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
        px[i] = std::clamp(std::round(luma), 0.0, 255.0);
    }
    return Image(width, height, std::move(px), 8);
}

/// Flat-array overload: treats the channels as a single row.
inline Image grayscale_convert(std::span<const double> r, std::span<const double> g,
                               std::span<const double> b) {
    if (r.size() != g.size() || r.size() != b.size())
        throw DimensionError("grayscale_convert: channel lengths differ");
    return grayscale_convert(r, g, b, static_cast<int>(r.size()), r.empty() ? 0 : 1);
}

/// Box-filter reduction by an integer factor. Partial trailing blocks are dropped.
inline Image downsample(const Image& img, int factor) {
    if (factor < 1) throw ArgumentError("downsample: factor must be >= 1");
    if (factor > img.width || factor > img.height)
        throw DimensionError("downsample: factor " + std::to_string(factor) +
                             " exceeds image extent");
    if (factor == 1) return img;
    const int w = img.width / factor;
    const int h = img.height / factor;
    const double area = static_cast<double>(factor) * factor;
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double sum = 0.0;
            for (int dr = 0; dr < factor; ++dr)
                for (int dc = 0; dc < factor; ++dc)
                    sum += img.at(r * factor + dr, c * factor + dc);
            px[static_cast<std::size_t>(r) * w + c] = std::round(sum / area);
        }
    }
    return Image(w, h, std::move(px), img.bit_depth);
}

/// Uniform truncating quantizer: v -> floor(v / 2^(8-b)) * 2^(8-b).
inline Image quantize(const Image& img, int target_bits) {
    if (target_bits != 2 && target_bits != 4 && target_bits != 8)
        throw ArgumentError("quantize: target_bits must be 2, 4 or 8");
    if (target_bits > img.bit_depth)
        throw ArgumentError("quantize: target_bits exceeds image bit depth");
    const double step = std::ldexp(1.0, 8 - target_bits);
    Image out = img;
    for (double& v : out.pixels) v = std::floor(v / step) * step;
    out.bit_depth = target_bits;
    return out;
}

/// Replicates the last row and/or column once when an extent is odd.
inline Image pad_to_even(const Image& img) {
    const int w = img.width + (img.width % 2);
    const int h = img.height + (img.height % 2);
    if (w == img.width && h == img.height) return img;
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        const int sr = std::min(r, img.height - 1);
        for (int c = 0; c < w; ++c)
            px[static_cast<std::size_t>(r) * w + c] = img.at(sr, std::min(c, img.width - 1));
    }
    Image out(w, h, std::move(px), img.bit_depth);
    out.original_width = img.original_width;
    out.original_height = img.original_height;
    return out;
}

/// Smallest integer factor bringing the smaller extent into [80, 200].
/// Returns 1 when the smaller extent is already at most 200.
inline int resolution_factor(int width, int height) {
    const int m = std::min(width, height);
    if (m <= 200) return 1;
    for (int f = 2; f <= m; ++f) {
        const int reduced = m / f;
        if (reduced >= 80 && reduced <= 200) return f;
        if (reduced < 80) break;
    }
    // Unreachable for integer extents: consecutive quotients never skip [80, 200].
    throw ArgumentError("resolution_factor: no admissible factor");
}

/// Resolution policy followed by padding; the canonical form fed to the transform.
inline Image canonicalize(const Image& img) {
    return pad_to_even(downsample(img, resolution_factor(img.width, img.height)));
}

/// Number of distinct pixel values.
inline std::size_t distinct_levels(const Image& img) {
    std::vector<double> v = img.pixels;
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace curveface

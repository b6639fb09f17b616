#pragma once

// Image file decoding. Netpbm (P2/P3/P5/P6) is parsed here so grayscale PGM
// input is bit-exact; PNG and JPEG go through OpenCV's codec layer and are
// converted with grayscale_convert.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "curveface/error.hpp"
#include "curveface/imaging.hpp"

namespace curveface {

namespace detail {

class NetpbmReader {
public:
    NetpbmReader(const std::vector<unsigned char>& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    int next_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw FormatError(name_ + ": malformed netpbm header");
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_++] - '0');
            if (value > 1'000'000'000) throw FormatError(name_ + ": netpbm value overflow");
        }
        return static_cast<int>(value);
    }

    // The single whitespace byte separating header from binary raster.
    void skip_raster_separator() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw FormatError(name_ + ": missing raster separator");
        ++pos_;
    }

    unsigned char next_byte() {
        if (pos_ >= bytes_.size()) throw FormatError(name_ + ": truncated raster");
        return bytes_[pos_++];
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::string name_;
    std::size_t pos_ = 2;
};

inline Image decode_netpbm(const std::vector<unsigned char>& bytes, const std::string& name) {
    const char kind = static_cast<char>(bytes[1]);
    NetpbmReader in(bytes, name);
    const int width = in.next_int();
    const int height = in.next_int();
    const int maxval = in.next_int();
    if (width <= 0 || height <= 0) throw FormatError(name + ": empty raster");
    if (maxval <= 0 || maxval > 255)
        throw FormatError(name + ": maxval " + std::to_string(maxval) + " unsupported");
    const bool binary = kind == '5' || kind == '6';
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;
    if (binary) in.skip_raster_separator();

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<double> planes(n * channels);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < channels; ++c) {
            const int v = binary ? in.next_byte() : in.next_int();
            if (v > maxval) throw FormatError(name + ": sample exceeds maxval");
            planes[c * n + i] = v;
        }
    }
    if (channels == 1) return Image(width, height, std::move(planes), 8);
    const std::span<const double> all(planes);
    return grayscale_convert(all.subspan(0, n), all.subspan(n, n), all.subspan(2 * n, n), width,
                             height);
}

inline Image decode_with_codec(const std::vector<unsigned char>& bytes, const std::string& name) {
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<unsigned char*>(bytes.data()));
    const cv::Mat bgr = cv::imdecode(raw, cv::IMREAD_COLOR);
    if (bgr.empty()) throw FormatError(name + ": codec could not decode image");
    const std::size_t n = static_cast<std::size_t>(bgr.rows) * bgr.cols;
    std::vector<double> r(n), g(n), b(n);
    for (int row = 0; row < bgr.rows; ++row) {
        const auto* p = bgr.ptr<cv::Vec3b>(row);
        for (int col = 0; col < bgr.cols; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * bgr.cols + col;
            b[i] = p[col][0];
            g[i] = p[col][1];
            r[i] = p[col][2];
        }
    }
    return grayscale_convert(r, g, b, bgr.cols, bgr.rows);
}

}  // namespace detail

/// Decodes an in-memory image file. `name` is used only in error messages.
inline Image decode_image(const std::vector<unsigned char>& bytes, const std::string& name) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '2' && bytes[1] <= '6' &&
        bytes[1] != '4')
        return detail::decode_netpbm(bytes, name);
    const bool png = bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' &&
                     bytes[2] == 'N' && bytes[3] == 'G';
    const bool jpeg = bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
    if (png || jpeg) return detail::decode_with_codec(bytes, name);
    throw FormatError(name + ": unsupported image format");
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

/// Loads an 8-bit grayscale image. Color sources are converted to luma.
inline Image load_image(const std::filesystem::path& path) {
    return decode_image(read_file_bytes(path), path.string());
}

/// Writes a binary PGM (P5). Pixels are rounded and clamped to the image's level range.
inline void write_pgm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<char> raster(img.pixels.size());
    for (std::size_t i = 0; i < raster.size(); ++i)
        raster[i] = static_cast<char>(
            static_cast<std::uint8_t>(std::clamp(std::round(img.pixels[i]), 0.0, 255.0)));
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace curveface

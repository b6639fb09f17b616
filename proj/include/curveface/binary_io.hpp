#pragma once

// Little-endian primitives shared by the model and decomposition file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "curveface/error.hpp"

namespace curveface::binary {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void magic(const char (&tag)[5]) { out_.write(tag, 4); }

    void u32(std::uint32_t v) {
        std::array<char, 4> b{};
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
        out_.write(b.data(), 4);
    }

    void u64(std::uint64_t v) {
        std::array<char, 8> b{};
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
        out_.write(b.data(), 8);
    }

    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void f64s(std::span<const double> v) {
        for (double x : v) f64(x);
    }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void check() const {
        if (!out_) throw IoError("binary write failed");
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void expect_magic(const char (&tag)[5]) {
        char got[4];
        read(got, 4);
        if (std::memcmp(got, tag, 4) != 0)
            throw FormatError(std::string("bad magic, expected ") + tag);
    }

    std::uint32_t u32() {
        unsigned char b[4];
        read(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::vector<double> f64s(std::size_t n) {
        // Guard against absurd counts from corrupt headers before allocating.
        if (n > (std::size_t{1} << 32)) throw FormatError("array length out of range");
        std::vector<double> v(n);
        for (double& x : v) x = f64();
        return v;
    }

    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 20)) throw FormatError("string length out of range");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

private:
    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("unexpected end of file");
    }

    std::istream& in_;
};

}  // namespace curveface::binary

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "accflow/types.hpp"

namespace accflow {

// Middlebury .flo layout: 4-byte float magic 202021.25 ("PIEH"), then
// width and height as 32-bit little-endian ints, then row-major
// interleaved (u, v) little-endian float32.
inline constexpr float kFloMagic = 202021.25f;
inline constexpr int kFloMaxDim = 1 << 16;

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32_le(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
        (std::uint32_t(b[3]) << 24);
    return true;
}

inline std::uint32_t float_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

inline float bits_float(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace detail

inline void write_flo(const FlowField& field, std::ostream& os) {
    if (field.empty()) throw std::invalid_argument("write_flo: empty field");
    detail::put_u32_le(os, detail::float_bits(kFloMagic));
    detail::put_u32_le(os, std::uint32_t(field.width()));
    detail::put_u32_le(os, std::uint32_t(field.height()));
    for (float c : field.data()) detail::put_u32_le(os, detail::float_bits(c));
    if (!os) throw std::runtime_error("write_flo: stream write failed");
}

inline FlowField read_flo(std::istream& is) {
    std::uint32_t magic_bits, w_raw, h_raw;
    if (!detail::get_u32_le(is, magic_bits) || !detail::get_u32_le(is, w_raw) ||
        !detail::get_u32_le(is, h_raw))
        throw std::runtime_error("read_flo: truncated header");
    if (detail::bits_float(magic_bits) != kFloMagic)
        throw std::runtime_error("read_flo: bad magic number");
    const std::int32_t w = std::int32_t(w_raw);
    const std::int32_t h = std::int32_t(h_raw);
    if (w <= 0 || h <= 0 || w > kFloMaxDim || h > kFloMaxDim)
        throw std::runtime_error("read_flo: implausible dimensions");

    FlowField field(w, h);
    for (float& c : field.data()) {
        std::uint32_t bits;
        if (!detail::get_u32_le(is, bits)) throw std::runtime_error("read_flo: truncated payload");
        c = detail::bits_float(bits);
    }
    return field;
}

inline void write_flo_file(const std::filesystem::path& path, const FlowField& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_flo_file: cannot open " + path.string());
    write_flo(field, os);
}

inline FlowField read_flo_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_flo_file: cannot open " + path.string());
    return read_flo(is);
}

namespace detail {

// 55-entry Middlebury color wheel (RY/YG/GC/CB/BM/MR arcs).
inline const std::vector<std::array<float, 3>>& colorwheel() {
    static const std::vector<std::array<float, 3>> wheel = [] {
        const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
        std::vector<std::array<float, 3>> w;
        w.reserve(RY + YG + GC + CB + BM + MR);
        for (int i = 0; i < RY; ++i) w.push_back({255.f, 255.f * i / RY, 0.f});
        for (int i = 0; i < YG; ++i) w.push_back({255.f - 255.f * i / YG, 255.f, 0.f});
        for (int i = 0; i < GC; ++i) w.push_back({0.f, 255.f, 255.f * i / GC});
        for (int i = 0; i < CB; ++i) w.push_back({0.f, 255.f - 255.f * i / CB, 255.f});
        for (int i = 0; i < BM; ++i) w.push_back({255.f * i / BM, 0.f, 255.f});
        for (int i = 0; i < MR; ++i) w.push_back({255.f, 0.f, 255.f - 255.f * i / MR});
        return w;
    }();
    return wheel;
}

}  // namespace detail

/// Middlebury-style color encoding: hue follows flow direction, saturation
/// grows with magnitude normalized by max_magnitude (the field's own peak
/// magnitude when absent). Zero flow renders white.
inline ImageU8 flow_to_color(const FlowField& field,
                             std::optional<float> max_magnitude = std::nullopt) {
    const auto& wheel = detail::colorwheel();
    const int ncols = int(wheel.size());

    double maxrad = 0.0;
    if (max_magnitude) {
        maxrad = double(*max_magnitude);
    } else {
        for (int y = 0; y < field.height(); ++y)
            for (int x = 0; x < field.width(); ++x)
                maxrad = std::max(maxrad, field.at(x, y).norm());
    }
    if (maxrad <= 0.0) maxrad = 1.0;

    ImageU8 img(field.width(), field.height(), 3);
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const Vec2f f = field.at(x, y);
            const double rad = f.norm() / maxrad;
            const double a = std::atan2(double(-f.v), double(-f.u)) / 3.14159265358979323846;
            const double fk = (a + 1.0) / 2.0 * (ncols - 1);
            const int k0 = std::min(int(fk), ncols - 1);
            const int k1 = (k0 + 1) % ncols;
            const double t = fk - k0;
            for (int c = 0; c < 3; ++c) {
                double col = ((1.0 - t) * wheel[k0][c] + t * wheel[k1][c]) / 255.0;
                if (rad <= 1.0)
                    col = 1.0 - rad * (1.0 - col);  // white toward zero motion
                else
                    col *= 0.75;  // out of normalization range
                img.at(x, y, c) = std::uint8_t(std::lround(255.0 * std::clamp(col, 0.0, 1.0)));
            }
        }
    }
    return img;
}

}  // namespace accflow

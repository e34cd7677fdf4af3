#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "accflow/types.hpp"

namespace accflow {

namespace detail {

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

inline void check_same_size(const FlowField& a, const FlowField& b, const char* op) {
    if (!a.same_size(b))
        throw std::invalid_argument(std::string(op) + ": field dimensions differ");
}

}  // namespace detail

/// Bilinear sample of a flow field at a (possibly sub-pixel) position.
/// Out-of-bounds coordinates clamp to the nearest edge pixel, so the
/// function is total and never produces NaN from finite inputs. Sampling
/// exactly on a lattice point returns the stored vector bit-for-bit.
inline Vec2f sample_bilinear(const FlowField& field, PixelCoord p) {
    const int w = field.width();
    const int h = field.height();
    const float x = std::clamp(p.x, 0.0f, float(w - 1));
    const float y = std::clamp(p.y, 0.0f, float(h - 1));
    const int x0 = int(x);
    const int y0 = int(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float ax = x - float(x0);
    const float ay = y - float(y0);

    const Vec2f f00 = field.at(x0, y0);
    const Vec2f f01 = field.at(x1, y0);
    const Vec2f f10 = field.at(x0, y1);
    const Vec2f f11 = field.at(x1, y1);

    // Nested lerps keep constant fields and lattice samples exact.
    return {detail::lerp(detail::lerp(f00.u, f01.u, ax), detail::lerp(f10.u, f11.u, ax), ay),
            detail::lerp(detail::lerp(f00.v, f01.v, ax), detail::lerp(f10.v, f11.v, ax), ay)};
}

/// Warp the start points of `follower` (F_{k,j}) along `leader` (F_{i,k}):
/// out(x) = follower(x + leader(x)). This re-references the follower to the
/// leader's reference frame.
inline FlowField warp_flow(const FlowField& follower, const FlowField& leader) {
    detail::check_same_size(follower, leader, "warp_flow");
    FlowField out(leader.width(), leader.height());
    for (int y = 0; y < leader.height(); ++y) {
        for (int x = 0; x < leader.width(); ++x) {
            const Vec2f d = leader.at(x, y);
            out.set(x, y, sample_bilinear(follower, PixelCoord{float(x), float(y)} + d));
        }
    }
    return out;
}

/// Flow composition: F_{i,j} = F_{i,k} (+) F_{k,j}, i.e. the leader plus the
/// follower warped to the leader's start points. Only valid where the
/// leader's endpoint is visible; occlusion is the caller's concern
/// (see compose_masked).
inline FlowField compose(const FlowField& leader, const FlowField& follower) {
    detail::check_same_size(leader, follower, "compose");
    FlowField out(leader.width(), leader.height());
    for (int y = 0; y < leader.height(); ++y) {
        for (int x = 0; x < leader.width(); ++x) {
            const Vec2f d = leader.at(x, y);
            const Vec2f warped = sample_bilinear(follower, PixelCoord{float(x), float(y)} + d);
            out.set(x, y, d + warped);
        }
    }
    return out;
}

/// Occlusion-aware composition: compose(leader, follower) where occ = 0,
/// the fill field P where occ = 1.
inline FlowField compose_masked(const FlowField& leader, const FlowField& follower,
                                const OcclusionMask& occ, const FlowField& fill) {
    detail::check_same_size(leader, follower, "compose_masked");
    detail::check_same_size(leader, fill, "compose_masked");
    if (!occ.matches(leader))
        throw std::invalid_argument("compose_masked: mask dimensions differ");
    FlowField out(leader.width(), leader.height());
    for (int y = 0; y < leader.height(); ++y) {
        for (int x = 0; x < leader.width(); ++x) {
            if (occ.at(x, y)) {
                out.set(x, y, fill.at(x, y));
            } else {
                const Vec2f d = leader.at(x, y);
                const Vec2f warped =
                    sample_bilinear(follower, PixelCoord{float(x), float(y)} + d);
                out.set(x, y, d + warped);
            }
        }
    }
    return out;
}

/// Fraction of occluded pixels, the alpha of Eq.-style occlusion analysis.
/// Counted in 64-bit, divided once.
inline double occlusion_proportion(const OcclusionMask& occ) {
    if (occ.empty()) throw std::invalid_argument("occlusion_proportion: empty mask");
    return double(occ.occluded_count()) / double(occ.pixel_count());
}

/// Histogram of per-pixel flow magnitudes sqrt(u^2 + v^2) over the given
/// strictly increasing bin edges. Bin i covers [edges[i], edges[i+1]);
/// magnitudes below the first or at/above the last edge land in the
/// boundary bins, so the counts always sum to width*height.
inline std::vector<std::int64_t> magnitude_histogram(const FlowField& field,
                                                     std::span<const double> bin_edges) {
    if (bin_edges.size() < 2)
        throw std::invalid_argument("magnitude_histogram: need at least two bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("magnitude_histogram: bin edges must be strictly increasing");

    const std::size_t nbins = bin_edges.size() - 1;
    std::vector<std::int64_t> counts(nbins, 0);
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const double m = field.at(x, y).norm();
            auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), m);
            std::ptrdiff_t bin = (it - bin_edges.begin()) - 1;
            bin = std::clamp<std::ptrdiff_t>(bin, 0, std::ptrdiff_t(nbins) - 1);
            ++counts[std::size_t(bin)];
        }
    }
    return counts;
}

}  // namespace accflow

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "accflow/core.hpp"
#include "accflow/types.hpp"

namespace accflow {

enum class DetectorKind { consistency, range_map, ground_truth };
enum class SolverKind { zero, extrapolate, nearest, oracle };

// Stable CLI-facing identifiers.
inline std::string to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::consistency: return "consistency";
        case DetectorKind::range_map: return "range-map";
        case DetectorKind::ground_truth: return "ground-truth";
    }
    throw std::logic_error("bad DetectorKind");
}

inline std::string to_string(SolverKind k) {
    switch (k) {
        case SolverKind::zero: return "zero";
        case SolverKind::extrapolate: return "extrapolate";
        case SolverKind::nearest: return "nearest";
        case SolverKind::oracle: return "oracle";
    }
    throw std::logic_error("bad SolverKind");
}

inline DetectorKind parse_detector_kind(const std::string& s) {
    if (s == "consistency") return DetectorKind::consistency;
    if (s == "range-map") return DetectorKind::range_map;
    if (s == "ground-truth") return DetectorKind::ground_truth;
    throw std::invalid_argument("unknown detector strategy: " + s);
}

inline SolverKind parse_solver_kind(const std::string& s) {
    if (s == "zero") return SolverKind::zero;
    if (s == "extrapolate") return SolverKind::extrapolate;
    if (s == "nearest") return SolverKind::nearest;
    if (s == "oracle") return SolverKind::oracle;
    throw std::invalid_argument("unknown solver strategy: " + s);
}

inline constexpr float kDefaultConsistencyTolAbs = 0.5f;   // px^2
inline constexpr float kDefaultConsistencyTolRel = 0.01f;

/// Forward-backward consistency check: pixel x is occluded iff
///   |fwd(x) + bwd(x + fwd(x))|^2 > tol_rel * (|fwd(x)|^2 + |bwd(x+fwd(x))|^2) + tol_abs.
/// The standard surrogate when no analytic occlusion is available.
inline OcclusionMask detect_consistency(const FlowField& fwd, const FlowField& bwd,
                                        float tol_abs = kDefaultConsistencyTolAbs,
                                        float tol_rel = kDefaultConsistencyTolRel) {
    detail::check_same_size(fwd, bwd, "detect_consistency");
    if (!(tol_abs > 0.0f) || tol_rel < 0.0f)
        throw std::invalid_argument("detect_consistency: tol_abs must be > 0, tol_rel >= 0");

    OcclusionMask occ(fwd.width(), fwd.height());
    for (int y = 0; y < fwd.height(); ++y) {
        for (int x = 0; x < fwd.width(); ++x) {
            const Vec2f f = fwd.at(x, y);
            const Vec2f b = sample_bilinear(bwd, PixelCoord{float(x), float(y)} + f);
            const double residual = (f + b).squared_norm();
            const double bound = double(tol_rel) * (f.squared_norm() + b.squared_norm()) +
                                 double(tol_abs);
            occ.set(x, y, residual > bound);
        }
    }
    return occ;
}

/// One-directional occlusion from a forward range map. Every source pixel is
/// splatted to its rounded endpoint (clamped to the canvas); when several
/// sources claim one target cell, the one with the smallest flow magnitude
/// stays visible (ties: smallest raster index) and the rest are occluded.
inline OcclusionMask detect_range_map(const FlowField& fwd) {
    const int w = fwd.width();
    const int h = fwd.height();

    // winner[cell] = raster index of the currently visible claimant
    std::vector<std::int64_t> winner(std::size_t(w) * h, -1);
    std::vector<double> winner_mag(std::size_t(w) * h, 0.0);
    OcclusionMask occ(w, h);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec2f f = fwd.at(x, y);
            const int tx = std::clamp(int(std::lround(double(x) + f.u)), 0, w - 1);
            const int ty = std::clamp(int(std::lround(double(y) + f.v)), 0, h - 1);
            const std::size_t cell = std::size_t(ty) * w + tx;
            const double mag = f.norm();
            const std::int64_t idx = std::int64_t(y) * w + x;

            if (winner[cell] < 0) {
                winner[cell] = idx;
                winner_mag[cell] = mag;
            } else if (mag < winner_mag[cell]) {
                // previous winner loses visibility
                occ.data()[std::size_t(winner[cell])] = 1;
                winner[cell] = idx;
                winner_mag[cell] = mag;
            } else {
                // equal magnitude keeps the earlier (smaller raster) claimant
                occ.data()[std::size_t(idx)] = 1;
            }
        }
    }
    return occ;
}

/// Baseline occlusion solver: zero flow in occluded regions, pass-through
/// elsewhere.
inline FlowField solve_zero(const FlowField& local, const OcclusionMask& occ) {
    if (!occ.matches(local)) throw std::invalid_argument("solve_zero: mask dimensions differ");
    FlowField out = local;
    for (int y = 0; y < local.height(); ++y)
        for (int x = 0; x < local.width(); ++x)
            if (occ.at(x, y)) out.set(x, y, {0.0f, 0.0f});
    return out;
}

/// Constant-velocity extrapolation: occluded pixels get remaining_steps
/// times the local flow (linear continuation of the last visible step);
/// visible pixels pass through unchanged.
inline FlowField solve_extrapolate(const FlowField& local, int remaining_steps,
                                   const OcclusionMask& occ) {
    if (remaining_steps < 1)
        throw std::invalid_argument("solve_extrapolate: remaining_steps must be >= 1");
    if (!occ.matches(local))
        throw std::invalid_argument("solve_extrapolate: mask dimensions differ");
    FlowField out = local;
    const float m = float(remaining_steps);
    for (int y = 0; y < local.height(); ++y)
        for (int x = 0; x < local.width(); ++x)
            if (occ.at(x, y)) out.set(x, y, m * local.at(x, y));
    return out;
}

/// Spatial-coherence fill: each occluded pixel copies the flow of its
/// nearest visible pixel (Euclidean grid distance, ties by smaller raster
/// index). Errors if every pixel is occluded.
inline FlowField solve_nearest_visible(const FlowField& candidate, const OcclusionMask& occ) {
    if (!occ.matches(candidate))
        throw std::invalid_argument("solve_nearest_visible: mask dimensions differ");
    const int w = candidate.width();
    const int h = candidate.height();
    if (occ.occluded_count() == occ.pixel_count())
        throw std::invalid_argument("solve_nearest_visible: no visible pixels to copy from");

    // Expanding ring search per occluded pixel. A cell at Chebyshev radius
    // r is at least r away, so once r^2 exceeds the best squared distance
    // the search is complete. Exact, with the documented tie-break.
    auto nearest_visible = [&](int px, int py) {
        std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
        std::int64_t best_idx = -1;
        const int max_r = std::max(w, h);
        for (int r = 1; r <= max_r; ++r) {
            if (best_idx >= 0 && std::int64_t(r) * r > best_d2) break;
            const int x_lo = px - r, x_hi = px + r;
            const int y_lo = py - r, y_hi = py + r;
            auto visit = [&](int x, int y) {
                if (x < 0 || x >= w || y < 0 || y >= h || occ.at(x, y)) return;
                const std::int64_t dx = x - px, dy = y - py;
                const std::int64_t d2 = dx * dx + dy * dy;
                const std::int64_t idx = std::int64_t(y) * w + x;
                if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                    best_d2 = d2;
                    best_idx = idx;
                }
            };
            for (int x = x_lo; x <= x_hi; ++x) {
                visit(x, y_lo);
                visit(x, y_hi);
            }
            for (int y = y_lo + 1; y < y_hi; ++y) {
                visit(x_lo, y);
                visit(x_hi, y);
            }
        }
        return best_idx;
    };

    FlowField out = candidate;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!occ.at(x, y)) continue;
            const std::int64_t s = nearest_visible(x, y);
            out.set(x, y, candidate.at(int(s % w), int(s / w)));
        }
    }
    return out;
}

}  // namespace accflow

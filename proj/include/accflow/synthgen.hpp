#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "accflow/accumulate.hpp"
#include "accflow/core.hpp"
#include "accflow/types.hpp"

namespace accflow {

enum class ShapeKind { rectangle, disc };
enum class TrajectoryKind { constant, piecewise_linear, quadratic };
enum class Difficulty { easy, hard };

inline Difficulty parse_difficulty(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "hard") return Difficulty::hard;
    throw std::invalid_argument("unknown difficulty: " + s);
}

/// Rigid per-layer motion. step_displacement(t) is the move from frame t
/// to t+1; displacements over any interval follow by exact summation, so
/// every generated flow is trajectory algebra, not estimation.
struct Trajectory {
    TrajectoryKind kind = TrajectoryKind::constant;
    Vec2f velocity{};      // constant and quadratic
    Vec2f acceleration{};  // quadratic: per-step velocity increment
    std::vector<Vec2f> steps;  // piecewise_linear: explicit per-step moves

    static Trajectory statics() { return {}; }
    static Trajectory constant_velocity(Vec2f v) {
        Trajectory t;
        t.velocity = v;
        return t;
    }

    Vec2f step_displacement(int t) const {
        switch (kind) {
            case TrajectoryKind::constant: return velocity;
            case TrajectoryKind::quadratic: return velocity + float(t - 1) * acceleration;
            case TrajectoryKind::piecewise_linear:
                if (t < 1 || t > int(steps.size()))
                    throw std::out_of_range("Trajectory: step index beyond piecewise steps");
                return steps[std::size_t(t) - 1];
        }
        throw std::logic_error("bad TrajectoryKind");
    }

    /// Exact displacement between frames `from` and `to` (either order).
    Vec2f displacement(int from, int to) const {
        if (from == to) return {0.0f, 0.0f};
        if (from > to) return -displacement(to, from);
        Vec2f d{0.0f, 0.0f};
        for (int t = from; t < to; ++t) d = d + step_displacement(t);
        return d;
    }

    bool is_static() const {
        if (kind == TrajectoryKind::constant) return velocity == Vec2f{0.0f, 0.0f};
        return false;
    }
};

struct Sprite {
    ShapeKind shape = ShapeKind::rectangle;
    float size_w = 8.0f;   // rectangle width, or disc diameter bound (2*radius)
    float size_h = 8.0f;   // rectangle height; ignored for discs
    float radius = 4.0f;   // disc only
    Vec2f position{};      // frame-1 anchor: rect top-left / disc center
    Trajectory trajectory;
    std::array<std::uint8_t, 3> color{200, 80, 80};
    float noise_amp = 0.0f;
};

/// Procedural layered scene: an (optionally translating) background plus
/// front-to-back ordered sprites, all rigid translations so flows and
/// occlusion masks have closed forms.
struct SceneSpec {
    int width = 128;
    int height = 128;
    int frames = 7;
    Trajectory background;  // static or constant translation
    std::array<std::uint8_t, 3> background_color{24, 28, 36};
    float background_noise = 0.0f;
    std::vector<Sprite> sprites;  // index 0 is the frontmost layer
    std::uint64_t seed = 0;
};

namespace detail {

inline Vec2f layer_position(const SceneSpec& spec, int layer, int frame) {
    if (layer == int(spec.sprites.size()))
        return spec.background.displacement(1, frame);
    const Sprite& s = spec.sprites[std::size_t(layer)];
    return s.position + s.trajectory.displacement(1, frame);
}

inline bool sprite_contains(const Sprite& s, Vec2f pos, float x, float y) {
    if (s.shape == ShapeKind::rectangle)
        return x >= pos.u && x < pos.u + s.size_w && y >= pos.v && y < pos.v + s.size_h;
    const float dx = x - pos.u;
    const float dy = y - pos.v;
    return dx * dx + dy * dy <= s.radius * s.radius;
}

/// Index of the visible layer at real coordinates (x, y) in `frame`;
/// sprites.size() denotes the background.
inline int layer_at(const SceneSpec& spec, int frame, float x, float y) {
    for (int l = 0; l < int(spec.sprites.size()); ++l)
        if (sprite_contains(spec.sprites[std::size_t(l)], layer_position(spec, l, frame), x, y))
            return l;
    return int(spec.sprites.size());
}

inline const Trajectory& layer_trajectory(const SceneSpec& spec, int layer) {
    return layer == int(spec.sprites.size()) ? spec.background
                                             : spec.sprites[std::size_t(layer)].trajectory;
}

/// Memoized layer_at over the integer lattice of every frame. Lookups off
/// the lattice fall back to the analytic test; results are identical by
/// construction.
class LayerMaps {
public:
    LayerMaps(const SceneSpec& spec) : spec_(&spec) {
        maps_.resize(std::size_t(spec.frames));
        for (int t = 1; t <= spec.frames; ++t) {
            auto& m = maps_[std::size_t(t) - 1];
            m.resize(std::size_t(spec.width) * spec.height);
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x)
                    m[std::size_t(y) * spec.width + x] =
                        std::int16_t(layer_at(spec, t, float(x), float(y)));
        }
    }

    int at(int frame, float x, float y) const {
        const float xi = std::floor(x);
        const float yi = std::floor(y);
        if (xi == x && yi == y && x >= 0.0f && x < float(spec_->width) && y >= 0.0f &&
            y < float(spec_->height))
            return maps_[std::size_t(frame) - 1]
                        [std::size_t(int(y)) * spec_->width + int(x)];
        return layer_at(*spec_, frame, x, y);
    }

private:
    const SceneSpec* spec_;
    std::vector<std::vector<std::int16_t>> maps_;
};

/// Lattice-point count of the sprite's footprint and of its on-canvas part.
inline std::pair<std::int64_t, std::int64_t> sprite_pixel_counts(const SceneSpec& spec,
                                                                 const Sprite& s, Vec2f pos) {
    float x_lo, x_hi, y_lo, y_hi;
    if (s.shape == ShapeKind::rectangle) {
        x_lo = pos.u;
        x_hi = pos.u + s.size_w;
        y_lo = pos.v;
        y_hi = pos.v + s.size_h;
    } else {
        x_lo = pos.u - s.radius;
        x_hi = pos.u + s.radius + 1.0f;
        y_lo = pos.v - s.radius;
        y_hi = pos.v + s.radius + 1.0f;
    }
    std::int64_t total = 0, on_canvas = 0;
    for (int y = int(std::floor(y_lo)); y <= int(std::ceil(y_hi)); ++y) {
        for (int x = int(std::floor(x_lo)); x <= int(std::ceil(x_hi)); ++x) {
            if (!sprite_contains(s, pos, float(x), float(y))) continue;
            ++total;
            if (x >= 0 && x < spec.width && y >= 0 && y < spec.height) ++on_canvas;
        }
    }
    return {total, on_canvas};
}

// splitmix64; stable across platforms, used for texture noise and seeding.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_coords(std::uint64_t seed, std::int64_t a, std::int64_t b,
                                 std::int64_t c) {
    std::uint64_t h = mix64(seed ^ 0x51b9c1a3f2e08d47ULL);
    h = mix64(h ^ std::uint64_t(a));
    h = mix64(h ^ std::uint64_t(b));
    h = mix64(h ^ std::uint64_t(c));
    return h;
}

}  // namespace detail

inline void validate_scene_spec(const SceneSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw std::invalid_argument("SceneSpec: canvas must be positive");
    if (spec.frames < 2) throw std::invalid_argument("SceneSpec: need at least 2 frames");
    if (spec.background.kind != TrajectoryKind::constant)
        throw std::invalid_argument("SceneSpec: background must be static or constant translation");
    for (const Sprite& s : spec.sprites) {
        if (s.trajectory.kind == TrajectoryKind::piecewise_linear &&
            int(s.trajectory.steps.size()) < spec.frames - 1)
            throw std::invalid_argument("SceneSpec: piecewise trajectory shorter than sequence");
        for (int t = 1; t <= spec.frames; ++t) {
            const Vec2f pos = s.position + s.trajectory.displacement(1, t);
            const auto [total, on] = detail::sprite_pixel_counts(spec, s, pos);
            if (total == 0)
                throw std::invalid_argument("SceneSpec: sprite has empty pixel footprint");
            if (2 * on < total)
                throw std::invalid_argument(
                    "SceneSpec: sprite leaves the canvas (needs >= 50% on-canvas every frame)");
        }
    }
}

/// Exact cross-frame flow F_{from,to} of the scene: each pixel moves with
/// the layer visible at it in the reference frame.
inline FlowField analytic_flow(const SceneSpec& spec, int from, int to,
                               const detail::LayerMaps* maps = nullptr) {
    FlowField f(spec.width, spec.height);
    // per-layer displacement is shared by every pixel of the layer
    std::vector<Vec2f> disp;
    for (int l = 0; l <= int(spec.sprites.size()); ++l)
        disp.push_back(detail::layer_trajectory(spec, l).displacement(from, to));
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int l = maps ? maps->at(from, float(x), float(y))
                               : detail::layer_at(spec, from, float(x), float(y));
            f.set(x, y, disp[std::size_t(l)]);
        }
    }
    return f;
}

/// Exact occlusion mask O_{from,to}: a pixel is occluded iff its layer's
/// destination leaves the canvas or is covered there by a strictly nearer
/// layer.
inline OcclusionMask analytic_occlusion(const SceneSpec& spec, int from, int to,
                                        const detail::LayerMaps* maps = nullptr) {
    OcclusionMask occ(spec.width, spec.height);
    const float x_max = float(spec.width - 1);
    const float y_max = float(spec.height - 1);
    std::vector<Vec2f> disp;
    for (int l = 0; l <= int(spec.sprites.size()); ++l)
        disp.push_back(detail::layer_trajectory(spec, l).displacement(from, to));
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int l = maps ? maps->at(from, float(x), float(y))
                               : detail::layer_at(spec, from, float(x), float(y));
            const Vec2f d = disp[std::size_t(l)];
            const float dx = float(x) + d.u;
            const float dy = float(y) + d.v;
            if (dx < 0.0f || dx > x_max || dy < 0.0f || dy > y_max) {
                occ.set(x, y, true);
                continue;
            }
            const int lt = maps ? maps->at(to, dx, dy) : detail::layer_at(spec, to, dx, dy);
            occ.set(x, y, lt < l);
        }
    }
    return occ;
}

/// Flat-colored render with optional rigid per-layer texture noise.
inline ImageU8 render_frame(const SceneSpec& spec, int frame,
                            const detail::LayerMaps* maps = nullptr) {
    ImageU8 img(spec.width, spec.height, 3);
    const int bg = int(spec.sprites.size());
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int l = maps ? maps->at(frame, float(x), float(y))
                               : detail::layer_at(spec, frame, float(x), float(y));
            const auto& base =
                l == bg ? spec.background_color : spec.sprites[std::size_t(l)].color;
            const float amp =
                l == bg ? spec.background_noise : spec.sprites[std::size_t(l)].noise_amp;
            float offset = 0.0f;
            if (amp > 0.0f) {
                // noise lives in layer-local coordinates so it translates
                // rigidly with the layer
                const Vec2f pos = detail::layer_position(spec, l, frame);
                const auto lx = std::int64_t(std::floor(float(x) - pos.u));
                const auto ly = std::int64_t(std::floor(float(y) - pos.v));
                const std::uint64_t h = detail::hash_coords(spec.seed, lx, ly, l);
                offset = amp * (2.0f * float(h >> 11) * 0x1.0p-53f - 1.0f);
            }
            for (int c = 0; c < 3; ++c) {
                const float v = float(base[std::size_t(c)]) + offset;
                img.at(x, y, c) = std::uint8_t(std::clamp(v, 0.0f, 255.0f));
            }
        }
    }
    return img;
}

/// A generated sequence: frames plus every ground-truth flow/mask pair the
/// pipeline consumes. Stored pairs: locals (t,t+1) and (t+1,t), cross
/// flows (1,t) for t in [2,N], and (t,N) for t in [1,N-1], each with its
/// occlusion mask. Frame indices are 1-based.
struct SceneSequence {
    SceneSpec spec;
    std::vector<ImageU8> frames;           // N
    std::vector<FlowField> local_fwd;      // [t-1] = F_{t,t+1}
    std::vector<FlowField> local_bwd;      // [t-1] = F_{t+1,t}
    std::vector<FlowField> from_first;     // [t-2] = F_{1,t}
    std::vector<FlowField> to_last;        // [t-1] = F_{t,N}
    std::vector<OcclusionMask> occ_local_fwd;
    std::vector<OcclusionMask> occ_local_bwd;
    std::vector<OcclusionMask> occ_from_first;
    std::vector<OcclusionMask> occ_to_last;

    int length() const { return spec.frames; }

    const FlowField& flow(int from, int to) const {
        const int n = spec.frames;
        if (to == from + 1 && from >= 1 && from <= n - 1) return local_fwd[std::size_t(from) - 1];
        if (to == from - 1 && to >= 1 && to <= n - 1) return local_bwd[std::size_t(to) - 1];
        if (from == 1 && to >= 2 && to <= n) return from_first[std::size_t(to) - 2];
        if (to == n && from >= 1 && from <= n - 1) return to_last[std::size_t(from) - 1];
        throw std::out_of_range("SceneSequence::flow: pair (" + std::to_string(from) + "," +
                                std::to_string(to) + ") not generated");
    }

    const OcclusionMask& occ(int from, int to) const {
        const int n = spec.frames;
        if (to == from + 1 && from >= 1 && from <= n - 1)
            return occ_local_fwd[std::size_t(from) - 1];
        if (to == from - 1 && to >= 1 && to <= n - 1) return occ_local_bwd[std::size_t(to) - 1];
        if (from == 1 && to >= 2 && to <= n) return occ_from_first[std::size_t(to) - 2];
        if (to == n && from >= 1 && from <= n - 1) return occ_to_last[std::size_t(from) - 1];
        throw std::out_of_range("SceneSequence::occ: pair (" + std::to_string(from) + "," +
                                std::to_string(to) + ") not generated");
    }

    FlowSequence as_flow_sequence(bool with_backward = true) const {
        return FlowSequence(local_fwd, with_backward ? local_bwd : std::vector<FlowField>{});
    }
};

/// Deterministic render of a scene spec into frames and exact ground truth.
inline SceneSequence generate(const SceneSpec& spec) {
    validate_scene_spec(spec);
    const int n = spec.frames;
    const detail::LayerMaps maps(spec);

    SceneSequence seq;
    seq.spec = spec;
    seq.frames.reserve(std::size_t(n));
    for (int t = 1; t <= n; ++t) seq.frames.push_back(render_frame(spec, t, &maps));

    for (int t = 1; t <= n - 1; ++t) {
        seq.local_fwd.push_back(analytic_flow(spec, t, t + 1, &maps));
        seq.local_bwd.push_back(analytic_flow(spec, t + 1, t, &maps));
        seq.occ_local_fwd.push_back(analytic_occlusion(spec, t, t + 1, &maps));
        seq.occ_local_bwd.push_back(analytic_occlusion(spec, t + 1, t, &maps));
    }
    for (int t = 2; t <= n; ++t) {
        seq.from_first.push_back(analytic_flow(spec, 1, t, &maps));
        seq.occ_from_first.push_back(analytic_occlusion(spec, 1, t, &maps));
    }
    for (int t = 1; t <= n - 1; ++t) {
        seq.to_last.push_back(analytic_flow(spec, t, n, &maps));
        seq.occ_to_last.push_back(analytic_occlusion(spec, t, n, &maps));
    }
    return seq;
}

/// The ground-truth long-range flow F_{1,N}.
inline const FlowField& oracle_long_range(const SceneSequence& seq) {
    return seq.from_first.back();
}

inline Detector make_ground_truth_detector(const SceneSequence& seq) {
    return make_ground_truth_detector(
        [&seq](int from, int to) { return seq.occ(from, to); });
}

inline Solver make_oracle_solver(const SceneSequence& seq) {
    return make_oracle_solver([&seq](int from, int to) { return seq.flow(from, to); });
}

namespace detail {

// Minimal deterministic sampling helpers over splitmix64 streams; std
// distributions are implementation-defined, these are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(next() % std::uint64_t(hi - lo + 1));
    }
    bool coin() { return (next() & 1) != 0; }

private:
    std::uint64_t state_;
};

}  // namespace detail

/// Samples a random linear-motion scene: 1-5 sprites sized 5-25% of the
/// canvas side, speeds up to 4 px/frame (easy) or 16 px/frame (hard), and
/// a background that is static or slowly translating. Integer per-frame
/// displacements by default so warp chains stay interpolation-free;
/// real-valued motion is available behind the flag.
inline SceneSpec random_spec(std::uint64_t seed, Difficulty difficulty, int width = 128,
                             int height = 128, int frames = 7, bool integer_motion = true) {
    detail::Rng rng(detail::mix64(seed ^ 0xaccf10accf10ULL));
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    spec.frames = frames;
    spec.seed = seed;

    const double vmax = difficulty == Difficulty::easy ? 4.0 : 16.0;
    const double bg_vmax = difficulty == Difficulty::easy ? 2.0 : 6.0;
    const double side = double(std::min(width, height));

    auto sample_velocity = [&](double speed_cap) {
        const double speed = rng.uniform(0.5, speed_cap);
        const double angle = rng.uniform(0.0, 6.283185307179586);
        Vec2f v{float(speed * std::cos(angle)), float(speed * std::sin(angle))};
        if (integer_motion) v = {float(std::lround(v.u)), float(std::lround(v.v))};
        return v;
    };

    spec.background_color = {std::uint8_t(rng.uniform_int(16, 96)),
                             std::uint8_t(rng.uniform_int(16, 96)),
                             std::uint8_t(rng.uniform_int(16, 96))};
    spec.background_noise = 6.0f;
    spec.background = rng.coin() ? Trajectory::statics()
                                 : Trajectory::constant_velocity(sample_velocity(bg_vmax));

    const int count = rng.uniform_int(1, 5);
    for (int i = 0; i < count; ++i) {
        Sprite s;
        s.shape = rng.coin() ? ShapeKind::rectangle : ShapeKind::disc;
        if (s.shape == ShapeKind::rectangle) {
            s.size_w = float(std::max(2l, std::lround(rng.uniform(0.05, 0.25) * side)));
            s.size_h = float(std::max(2l, std::lround(rng.uniform(0.05, 0.25) * side)));
        } else {
            s.radius = float(std::max(2l, std::lround(rng.uniform(0.025, 0.125) * side)));
            s.size_w = s.size_h = 2.0f * s.radius;
        }
        s.color = {std::uint8_t(rng.uniform_int(48, 240)), std::uint8_t(rng.uniform_int(48, 240)),
                   std::uint8_t(rng.uniform_int(48, 240))};
        s.noise_amp = 6.0f;

        // Rejection-sample a placement+velocity that keeps >= 50% of the
        // sprite on-canvas in every frame; fall back to a parked sprite.
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            if (s.shape == ShapeKind::rectangle) {
                s.position = {float(rng.uniform_int(0, std::max(0, width - int(s.size_w)))),
                              float(rng.uniform_int(0, std::max(0, height - int(s.size_h))))};
            } else {
                const int r = int(s.radius);
                s.position = {float(rng.uniform_int(r, std::max(r, width - 1 - r))),
                              float(rng.uniform_int(r, std::max(r, height - 1 - r)))};
            }
            s.trajectory = Trajectory::constant_velocity(sample_velocity(vmax));
            placed = true;
            for (int t = 1; t <= frames && placed; ++t) {
                const Vec2f pos = s.position + s.trajectory.displacement(1, t);
                const auto [total, on] = detail::sprite_pixel_counts(spec, s, pos);
                placed = total > 0 && 2 * on >= total;
            }
        }
        if (!placed) s.trajectory = Trajectory::statics();
        spec.sprites.push_back(s);
    }
    return spec;
}

}  // namespace accflow

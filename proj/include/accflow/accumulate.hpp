#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "accflow/core.hpp"
#include "accflow/occlusion.hpp"
#include "accflow/types.hpp"

namespace accflow {

enum class Direction { forward, backward };

inline std::string to_string(Direction d) {
    return d == Direction::forward ? "forward" : "backward";
}

inline Direction parse_direction(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    throw std::invalid_argument("unknown direction: " + s);
}

/// Everything a detector or solver may look at during one accumulation
/// step. The forward driver at loop index t composes F_{1,t+1} from leader
/// F_{1,t} and follower F_{t,t+1}; the backward driver composes F_{t-1,N}
/// from leader F_{t-1,t} and follower F_{t,N}. Frame indices are 1-based.
struct StepInputs {
    Direction direction;
    int t;          // loop variable
    int mask_from;  // occlusion interval O_{mask_from, mask_to}
    int mask_to;
    int out_from;   // interval of the flow being produced
    int out_to;
    const FlowField& leader;
    const FlowField& follower;
    const FlowSequence& seq;

    /// Steps spanned by the produced flow; the extrapolation horizon.
    int span() const { return out_to - out_from; }
};

/// Occlusion detector seam (the abstract getOcc). `fn` must return a mask
/// matching the sequence dimensions.
struct Detector {
    DetectorKind kind;
    std::function<OcclusionMask(const StepInputs&)> fn;
};

/// Occlusion solver seam (the abstract solveOcc). `fn` returns the fill
/// field P for the produced interval; only occluded pixels are consulted.
struct Solver {
    SolverKind kind;
    std::function<FlowField(const StepInputs&, const OcclusionMask&)> fn;
};

/// Consistency detector. Backward steps check the local pair
/// (F_{t-1,t}, F_{t,t-1}) directly. Forward steps need a mask for the
/// growing interval (1,t), so the check runs between the composed forward
/// flow F_{1,t} and a backward chain F_{t,1} composed from the sequence's
/// backward local flows.
inline Detector make_consistency_detector(float tol_abs = kDefaultConsistencyTolAbs,
                                          float tol_rel = kDefaultConsistencyTolRel) {
    auto fn = [tol_abs, tol_rel](const StepInputs& in) {
        if (!in.seq.has_backward())
            throw std::invalid_argument(
                "consistency detector requires backward local flows");
        if (in.direction == Direction::backward)
            return detect_consistency(in.leader, in.seq.local_backward(in.t - 1), tol_abs,
                                      tol_rel);
        FlowField back_chain = in.seq.local_backward(in.t - 1);  // F_{t,t-1}
        for (int s = in.t - 2; s >= 1; --s)
            back_chain = compose(back_chain, in.seq.local_backward(s));
        return detect_consistency(in.leader, back_chain, tol_abs, tol_rel);
    };
    return Detector{DetectorKind::consistency, std::move(fn)};
}

/// Range-map detector applied to the leader flow of each step.
inline Detector make_range_map_detector() {
    return Detector{DetectorKind::range_map,
                    [](const StepInputs& in) { return detect_range_map(in.leader); }};
}

/// Provider of ground-truth masks O_{from,to} by 1-based frame interval.
using MaskProvider = std::function<OcclusionMask(int from, int to)>;

inline Detector make_ground_truth_detector(MaskProvider provider) {
    auto fn = [provider = std::move(provider)](const StepInputs& in) {
        OcclusionMask m = provider(in.mask_from, in.mask_to);
        if (m.width() != in.seq.width() || m.height() != in.seq.height())
            throw std::invalid_argument("ground-truth detector: mask dimensions differ");
        return m;
    };
    return Detector{DetectorKind::ground_truth, std::move(fn)};
}

inline Solver make_zero_solver() {
    return Solver{SolverKind::zero, [](const StepInputs& in, const OcclusionMask& occ) {
                      return solve_zero(in.leader, occ);
                  }};
}

/// Constant-velocity extrapolation. Backward steps continue the local flow
/// F_{t-1,t} over the remaining span; forward steps continue the reference
/// frame's local flow F_{1,2}.
inline Solver make_extrapolate_solver() {
    return Solver{SolverKind::extrapolate, [](const StepInputs& in, const OcclusionMask& occ) {
                      const FlowField& local = in.direction == Direction::backward
                                                   ? in.leader
                                                   : in.seq.local(1);
                      return solve_extrapolate(local, in.span(), occ);
                  }};
}

/// Nearest-visible fill of the step's unmasked composition.
inline Solver make_nearest_solver() {
    return Solver{SolverKind::nearest, [](const StepInputs& in, const OcclusionMask& occ) {
                      return solve_nearest_visible(compose(in.leader, in.follower), occ);
                  }};
}

/// Provider of ground-truth flows F_{from,to} by 1-based frame interval.
using FlowProvider = std::function<FlowField(int from, int to)>;

/// Perfect solver oracle: substitutes the ground-truth flow for the
/// produced interval at occluded pixels.
inline Solver make_oracle_solver(FlowProvider provider) {
    auto fn = [provider = std::move(provider)](const StepInputs& in, const OcclusionMask&) {
        FlowField f = provider(in.out_from, in.out_to);
        if (!f.same_size(in.leader))
            throw std::invalid_argument("oracle solver: flow dimensions differ");
        return f;
    };
    return Solver{SolverKind::oracle, std::move(fn)};
}

/// One accumulation step as recorded in the trace. In streaming mode the
/// flow/mask payloads are dropped and only the scalar diagnostics remain.
struct AccumulationStep {
    int t = 0;
    int mask_from = 0, mask_to = 0;
    int out_from = 0, out_to = 0;
    double alpha = 0.0;            // occlusion proportion of the consumed mask
    std::int64_t filled = 0;       // pixels taken from the solver fill
    std::optional<FlowField> flow;     // produced intermediate flow
    std::optional<OcclusionMask> mask;  // consumed mask
};

/// Full record of one driver run: per-step diagnostics plus the final
/// long-range flow F_{1,N}.
struct AccumulationTrace {
    Direction direction = Direction::forward;
    DetectorKind detector = DetectorKind::ground_truth;
    SolverKind solver = SolverKind::zero;
    std::vector<AccumulationStep> steps;
    FlowField final_flow;
};

struct AccumulateOptions {
    /// Keep per-step flows and masks in the trace (memory: N-2 fields).
    /// When false only scalar diagnostics are kept.
    bool keep_intermediates = true;
};

namespace detail {

inline void check_driver_preconditions(const FlowSequence& seq, const Detector& detector) {
    if (seq.length() < 3)
        throw std::invalid_argument(
            "accumulate: need at least 3 frames (a single local flow needs no accumulation)");
    if (detector.kind == DetectorKind::consistency && !seq.has_backward())
        throw std::invalid_argument(
            "accumulate: consistency detector requires backward local flows");
    if (!detector.fn) throw std::invalid_argument("accumulate: detector not wired");
}

inline AccumulationStep record_step(const StepInputs& in, const FlowField& produced,
                                    OcclusionMask&& mask, bool keep) {
    AccumulationStep step;
    step.t = in.t;
    step.mask_from = in.mask_from;
    step.mask_to = in.mask_to;
    step.out_from = in.out_from;
    step.out_to = in.out_to;
    step.filled = mask.occluded_count();
    step.alpha = double(step.filled) / double(mask.pixel_count());
    if (keep) {
        step.flow = produced;
        step.mask = std::move(mask);
    }
    return step;
}

}  // namespace detail

/// Forward accumulation: grow F_{1,t+1} = F_{1,t} (+) F_{t,t+1} for
/// t = 2 .. N-1, detecting occlusion over the growing interval (1,t) and
/// filling occluded pixels from the solver.
inline AccumulationTrace accumulate_forward(const FlowSequence& seq, const Detector& detector,
                                            const Solver& solver,
                                            const AccumulateOptions& options = {}) {
    detail::check_driver_preconditions(seq, detector);
    const int n = seq.length();

    AccumulationTrace trace;
    trace.direction = Direction::forward;
    trace.detector = detector.kind;
    trace.solver = solver.kind;
    trace.steps.reserve(std::size_t(n) - 2);

    FlowField running = seq.local(1);  // F_{1,2}
    for (int t = 2; t <= n - 1; ++t) {
        const StepInputs in{Direction::forward, t, 1, t, 1, t + 1, running, seq.local(t), seq};
        OcclusionMask mask = detector.fn(in);
        const FlowField fill = solver.fn(in, mask);
        running = compose_masked(running, seq.local(t), mask, fill);
        trace.steps.push_back(
            detail::record_step(in, running, std::move(mask), options.keep_intermediates));
    }
    trace.final_flow = std::move(running);
    return trace;
}

/// Backward accumulation: grow F_{t-1,N} = F_{t-1,t} (+) F_{t,N} for
/// t = N-1 .. 2. Each composition aligns along the local flow, so the
/// detected interval stays the single step (t-1,t).
inline AccumulationTrace accumulate_backward(const FlowSequence& seq, const Detector& detector,
                                             const Solver& solver,
                                             const AccumulateOptions& options = {}) {
    detail::check_driver_preconditions(seq, detector);
    const int n = seq.length();

    AccumulationTrace trace;
    trace.direction = Direction::backward;
    trace.detector = detector.kind;
    trace.solver = solver.kind;
    trace.steps.reserve(std::size_t(n) - 2);

    FlowField running = seq.local(n - 1);  // F_{N-1,N}
    for (int t = n - 1; t >= 2; --t) {
        const FlowField& local = seq.local(t - 1);  // F_{t-1,t}
        const StepInputs in{Direction::backward, t, t - 1, t, t - 1, n, local, running, seq};
        OcclusionMask mask = detector.fn(in);
        const FlowField fill = solver.fn(in, mask);
        running = compose_masked(local, running, mask, fill);
        trace.steps.push_back(
            detail::record_step(in, running, std::move(mask), options.keep_intermediates));
    }
    trace.final_flow = std::move(running);
    return trace;
}

/// The alpha sequence in loop order, keyed by the loop index t.
inline std::vector<std::pair<int, double>> per_step_occlusion_series(
    const AccumulationTrace& trace) {
    std::vector<std::pair<int, double>> series;
    series.reserve(trace.steps.size());
    for (const AccumulationStep& s : trace.steps) series.emplace_back(s.t, s.alpha);
    return series;
}

}  // namespace accflow

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "accflow/accumulate.hpp"
#include "accflow/flow_io.hpp"
#include "accflow/image_io.hpp"
#include "accflow/synthgen.hpp"
#include "accflow/types.hpp"

namespace accflow {

// Dataset directory layout, one directory per sequence:
//   frames/frame_%03d.png          rendered frames, t = 1..N
//   flow/fwd_%03d_%03d.flo         F_{i,j} with i < j
//   flow/bwd_%03d_%03d.flo         F_{i,j} with i > j
//   occ/occ_%03d_%03d.png          O_{i,j}, 8-bit gray, 0=visible 255=occluded
//   manifest.json                  spec echo, seed, file index
// Filename indices are (reference frame, target frame), 1-based.

namespace detail {

inline std::string fmt3(int v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", v);
    return buf;
}

}  // namespace detail

inline std::string frame_filename(int t) { return "frame_" + detail::fmt3(t) + ".png"; }

inline std::string flow_filename(int from, int to) {
    return (from < to ? "fwd_" : "bwd_") + detail::fmt3(from) + "_" + detail::fmt3(to) + ".flo";
}

inline std::string occ_filename(int from, int to) {
    return "occ_" + detail::fmt3(from) + "_" + detail::fmt3(to) + ".png";
}

inline std::string sequence_dirname(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "seq_%04d", index);
    return buf;
}

// ---------------------------------------------------------------------------
// SceneSpec JSON echo

inline nlohmann::json to_json(const Trajectory& t) {
    nlohmann::json j;
    switch (t.kind) {
        case TrajectoryKind::constant:
            j["kind"] = "constant";
            j["velocity"] = {t.velocity.u, t.velocity.v};
            break;
        case TrajectoryKind::quadratic:
            j["kind"] = "quadratic";
            j["velocity"] = {t.velocity.u, t.velocity.v};
            j["acceleration"] = {t.acceleration.u, t.acceleration.v};
            break;
        case TrajectoryKind::piecewise_linear: {
            j["kind"] = "piecewise";
            auto& steps = j["steps"] = nlohmann::json::array();
            for (Vec2f s : t.steps) steps.push_back({s.u, s.v});
            break;
        }
    }
    return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    const std::string kind = j.at("kind");
    if (kind == "constant") {
        t.kind = TrajectoryKind::constant;
        t.velocity = {j.at("velocity")[0], j.at("velocity")[1]};
    } else if (kind == "quadratic") {
        t.kind = TrajectoryKind::quadratic;
        t.velocity = {j.at("velocity")[0], j.at("velocity")[1]};
        t.acceleration = {j.at("acceleration")[0], j.at("acceleration")[1]};
    } else if (kind == "piecewise") {
        t.kind = TrajectoryKind::piecewise_linear;
        for (const auto& s : j.at("steps")) t.steps.push_back({s[0], s[1]});
    } else {
        throw std::runtime_error("trajectory_from_json: unknown kind " + kind);
    }
    return t;
}

inline nlohmann::json to_json(const SceneSpec& spec) {
    nlohmann::json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["frames"] = spec.frames;
    j["seed"] = spec.seed;
    j["background"] = {{"trajectory", to_json(spec.background)},
                       {"color", spec.background_color},
                       {"noise", spec.background_noise}};
    auto& sprites = j["sprites"] = nlohmann::json::array();
    for (const Sprite& s : spec.sprites) {
        nlohmann::json sj;
        sj["shape"] = s.shape == ShapeKind::rectangle ? "rectangle" : "disc";
        sj["size"] = {s.size_w, s.size_h};
        sj["radius"] = s.radius;
        sj["position"] = {s.position.u, s.position.v};
        sj["trajectory"] = to_json(s.trajectory);
        sj["color"] = s.color;
        sj["noise"] = s.noise_amp;
        sprites.push_back(sj);
    }
    return j;
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    SceneSpec spec;
    spec.width = j.at("width");
    spec.height = j.at("height");
    spec.frames = j.at("frames");
    spec.seed = j.at("seed");
    const auto& bg = j.at("background");
    spec.background = trajectory_from_json(bg.at("trajectory"));
    spec.background_color = {bg.at("color")[0], bg.at("color")[1], bg.at("color")[2]};
    spec.background_noise = bg.at("noise");
    for (const auto& sj : j.at("sprites")) {
        Sprite s;
        s.shape = sj.at("shape") == "rectangle" ? ShapeKind::rectangle : ShapeKind::disc;
        s.size_w = sj.at("size")[0];
        s.size_h = sj.at("size")[1];
        s.radius = sj.at("radius");
        s.position = {sj.at("position")[0], sj.at("position")[1]};
        s.trajectory = trajectory_from_json(sj.at("trajectory"));
        s.color = {sj.at("color")[0], sj.at("color")[1], sj.at("color")[2]};
        s.noise_amp = sj.at("noise");
        spec.sprites.push_back(s);
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Sequence directories

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

/// Writes one sequence directory: frames, every stored flow pair as .flo,
/// every mask as PNG, plus a manifest with the spec echo and file index.
inline void save_sequence(const std::filesystem::path& dir, const SceneSequence& seq) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "frames");
    fs::create_directories(dir / "flow");
    fs::create_directories(dir / "occ");

    const int n = seq.length();
    std::vector<std::string> files;

    for (int t = 1; t <= n; ++t) {
        const std::string name = frame_filename(t);
        write_png(dir / "frames" / name, seq.frames[std::size_t(t) - 1]);
        files.push_back("frames/" + name);
    }

    auto put_flow = [&](int from, int to) {
        const std::string name = flow_filename(from, to);
        const fs::path p = dir / "flow" / name;
        if (!fs::exists(p)) {
            write_flo_file(p, seq.flow(from, to));
            files.push_back("flow/" + name);
        }
    };
    auto put_occ = [&](int from, int to) {
        const std::string name = occ_filename(from, to);
        const fs::path p = dir / "occ" / name;
        if (!fs::exists(p)) {
            write_mask_png(p, seq.occ(from, to));
            files.push_back("occ/" + name);
        }
    };

    for (int t = 1; t <= n - 1; ++t) {
        put_flow(t, t + 1);
        put_flow(t + 1, t);
        put_occ(t, t + 1);
        put_occ(t + 1, t);
    }
    for (int t = 2; t <= n; ++t) {
        put_flow(1, t);
        put_occ(1, t);
    }
    for (int t = 1; t <= n - 1; ++t) {
        put_flow(t, n);
        put_occ(t, n);
    }

    std::sort(files.begin(), files.end());
    nlohmann::json manifest;
    manifest["format"] = "accflow-sequence-v1";
    manifest["seed"] = seq.spec.seed;
    manifest["frames"] = n;
    manifest["spec"] = to_json(seq.spec);
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline SceneSpec load_sequence_spec(const std::filesystem::path& dir) {
    const auto j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    return scene_spec_from_json(j.at("spec"));
}

inline FlowField load_flow(const std::filesystem::path& dir, int from, int to) {
    return read_flo_file(dir / "flow" / flow_filename(from, to));
}

inline OcclusionMask load_occ(const std::filesystem::path& dir, int from, int to) {
    return read_mask_png(dir / "occ" / occ_filename(from, to));
}

inline FlowSequence load_flow_sequence(const std::filesystem::path& dir, int n,
                                       bool with_backward) {
    std::vector<FlowField> fwd, bwd;
    for (int t = 1; t <= n - 1; ++t) fwd.push_back(load_flow(dir, t, t + 1));
    if (with_backward)
        for (int t = 1; t <= n - 1; ++t) bwd.push_back(load_flow(dir, t + 1, t));
    return FlowSequence(std::move(fwd), std::move(bwd));
}

/// Ground-truth seams backed by a sequence directory on disk.
inline Detector make_dataset_detector(const std::filesystem::path& dir) {
    return make_ground_truth_detector(
        [dir](int from, int to) { return load_occ(dir, from, to); });
}

inline Solver make_dataset_oracle_solver(const std::filesystem::path& dir) {
    return make_oracle_solver([dir](int from, int to) { return load_flow(dir, from, to); });
}

// ---------------------------------------------------------------------------
// Trace directories: one .flo per intermediate flow, one PNG per consumed
// mask, and a JSON summary with per-step diagnostics.

inline void save_trace(const std::filesystem::path& dir, const AccumulationTrace& trace) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json j;
    j["direction"] = to_string(trace.direction);
    j["detector"] = to_string(trace.detector);
    j["solver"] = to_string(trace.solver);
    auto& steps = j["steps"] = nlohmann::json::array();
    for (const AccumulationStep& s : trace.steps) {
        nlohmann::json sj;
        sj["t"] = s.t;
        sj["mask"] = {s.mask_from, s.mask_to};
        sj["out"] = {s.out_from, s.out_to};
        sj["alpha"] = s.alpha;
        sj["filled"] = s.filled;
        if (s.flow) {
            const std::string name = flow_filename(s.out_from, s.out_to);
            write_flo_file(dir / name, *s.flow);
            sj["flow_file"] = name;
        }
        if (s.mask) {
            const std::string name = occ_filename(s.mask_from, s.mask_to);
            write_mask_png(dir / name, *s.mask);
            sj["mask_file"] = name;
        }
        steps.push_back(sj);
    }
    const std::string final_name = "final_" + to_string(trace.direction) + ".flo";
    write_flo_file(dir / final_name, trace.final_flow);
    j["final_file"] = final_name;
    write_text_file(dir / "trace.json", j.dump(2) + "\n");
}

}  // namespace accflow

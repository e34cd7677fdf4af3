#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "accflow/accumulate.hpp"
#include "accflow/dataset.hpp"
#include "accflow/metrics.hpp"
#include "accflow/synthgen.hpp"

namespace accflow {

/// Resolved settings of one CLI run. A config plus the seed reproduces all
/// outputs byte-identically; worker count and output paths never influence
/// produced bytes.
struct ExperimentConfig {
    std::string dataset;   // input dataset directory (accumulate/eval/occ-stats)
    std::string results;   // accumulate output directory (eval input)
    std::string out;       // output directory of this command
    int num_sequences = 10;
    std::uint64_t seed = 1;
    std::string difficulty = "easy";
    int canvas = 128;
    int frames = 7;
    std::string split = "train";
    bool real_motion = false;  // real-valued per-frame displacements
    std::string direction = "backward";  // forward | backward | both
    std::string detector = "ground-truth";
    double tol_abs = kDefaultConsistencyTolAbs;
    double tol_rel = kDefaultConsistencyTolRel;
    std::string solver = "zero";
    bool save_traces = true;
    int workers = 0;  // 0 = hardware concurrency
};

/// Relative paths resolve against $ACCFLOW_OUT_ROOT when it is set.
inline std::filesystem::path resolve_path(const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("ACCFLOW_OUT_ROOT"); root && *root)
        return std::filesystem::path(root) / path;
    return path;
}

inline std::vector<std::string> requested_directions(const std::string& direction) {
    if (direction == "forward" || direction == "backward") return {direction};
    if (direction == "both") return {"forward", "backward"};
    throw std::invalid_argument("direction must be forward, backward, or both");
}

/// Fixed-size parallel loop over sequence indices. Workers own disjoint
/// indices; the first exception cancels the remaining work and rethrows.
inline void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    if (count <= 0) return;
    if (workers <= 0) workers = int(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<int> next{0};
    std::atomic<bool> cancelled{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto run = [&] {
        while (!cancelled.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                cancelled.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace detail {

inline std::uint64_t derive_sequence_seed(std::uint64_t base, int index) {
    return mix64(mix64(base) ^ (std::uint64_t(index) + 1));
}

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

inline std::string num_str(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Resolved-config echo written next to every command's outputs. Output
// paths and worker counts are execution details, not experiment settings,
// and are deliberately left out so equal configs give equal bytes.
inline std::string config_ini(const ExperimentConfig& cfg, const std::string& command) {
    std::ostringstream os;
    os << "command=" << command << "\n";
    if (command == "synth") {
        os << "n=" << cfg.num_sequences << "\n"
           << "seed=" << cfg.seed << "\n"
           << "difficulty=" << cfg.difficulty << "\n"
           << "canvas=" << cfg.canvas << "\n"
           << "frames=" << cfg.frames << "\n"
           << "split=" << cfg.split << "\n"
           << "real-motion=" << bool_str(cfg.real_motion) << "\n";
    } else if (command == "accumulate") {
        os << "dataset=" << cfg.dataset << "\n"
           << "direction=" << cfg.direction << "\n"
           << "detector=" << cfg.detector << "\n"
           << "tol-abs=" << num_str(cfg.tol_abs) << "\n"
           << "tol-rel=" << num_str(cfg.tol_rel) << "\n"
           << "solver=" << cfg.solver << "\n"
           << "save-traces=" << bool_str(cfg.save_traces) << "\n";
    } else if (command == "eval") {
        os << "dataset=" << cfg.dataset << "\n"
           << "results=" << cfg.results << "\n"
           << "direction=" << cfg.direction << "\n";
    } else if (command == "occ-stats") {
        os << "dataset=" << cfg.dataset << "\n";
    }
    return os.str();
}

}  // namespace detail

struct DatasetManifest {
    nlohmann::json config;
    std::vector<std::string> sequences;
};

inline DatasetManifest load_dataset_manifest(const std::filesystem::path& root) {
    if (!std::filesystem::exists(root / "manifest.json"))
        throw std::runtime_error("not a dataset directory (missing manifest.json): " +
                                 root.string());
    const auto j = nlohmann::json::parse(read_text_file(root / "manifest.json"));
    DatasetManifest m;
    m.config = j.value("config", nlohmann::json::object());
    for (const auto& s : j.at("sequences")) m.sequences.push_back(s.get<std::string>());
    return m;
}

// ---------------------------------------------------------------------------
// synth

/// Generates `num_sequences` random scenes and writes one dataset
/// directory per sequence plus a top-level manifest. Deterministic in
/// (seed, n, difficulty, canvas, frames, real_motion) regardless of worker
/// count.
inline void cmd_synth(const ExperimentConfig& cfg) {
    if (cfg.num_sequences < 1) throw std::invalid_argument("synth: n must be >= 1");
    if (cfg.canvas < 8) throw std::invalid_argument("synth: canvas too small");
    if (cfg.frames < 2) throw std::invalid_argument("synth: need at least 2 frames");
    const Difficulty difficulty = parse_difficulty(cfg.difficulty);

    const std::filesystem::path out = resolve_path(cfg.out);
    std::filesystem::create_directories(out);

    std::vector<std::string> names(std::size_t(cfg.num_sequences));
    parallel_for(cfg.num_sequences, cfg.workers, [&](int i) {
        const std::uint64_t seq_seed = detail::derive_sequence_seed(cfg.seed, i);
        const SceneSpec spec = random_spec(seq_seed, difficulty, cfg.canvas, cfg.canvas,
                                           cfg.frames, !cfg.real_motion);
        const SceneSequence seq = generate(spec);
        names[std::size_t(i)] = sequence_dirname(i);
        save_sequence(out / names[std::size_t(i)], seq);
    });

    nlohmann::json manifest;
    manifest["format"] = "accflow-dataset-v1";
    manifest["config"] = {{"n", cfg.num_sequences},      {"seed", cfg.seed},
                          {"difficulty", cfg.difficulty}, {"canvas", cfg.canvas},
                          {"frames", cfg.frames},         {"split", cfg.split},
                          {"integer_motion", !cfg.real_motion}};
    manifest["sequences"] = names;
    write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
    write_text_file(out / "config.ini", detail::config_ini(cfg, "synth"));
}

// ---------------------------------------------------------------------------
// accumulate

namespace detail {

inline Detector build_detector(const ExperimentConfig& cfg,
                               const std::filesystem::path& seq_dir) {
    switch (parse_detector_kind(cfg.detector)) {
        case DetectorKind::consistency:
            return make_consistency_detector(float(cfg.tol_abs), float(cfg.tol_rel));
        case DetectorKind::range_map: return make_range_map_detector();
        case DetectorKind::ground_truth: return make_dataset_detector(seq_dir);
    }
    throw std::logic_error("bad detector kind");
}

inline Solver build_solver(const ExperimentConfig& cfg, const std::filesystem::path& seq_dir) {
    switch (parse_solver_kind(cfg.solver)) {
        case SolverKind::zero: return make_zero_solver();
        case SolverKind::extrapolate: return make_extrapolate_solver();
        case SolverKind::nearest: return make_nearest_solver();
        case SolverKind::oracle: return make_dataset_oracle_solver(seq_dir);
    }
    throw std::logic_error("bad solver kind");
}

inline void require_file(const std::filesystem::path& p, const std::string& why) {
    if (!std::filesystem::exists(p))
        throw std::runtime_error("missing input for " + why + ": " + p.string());
}

// All input files a run will touch must exist before anything is written.
inline void check_accumulate_inputs(const ExperimentConfig& cfg,
                                    const std::filesystem::path& data,
                                    const std::vector<std::string>& sequences) {
    const DetectorKind dkind = parse_detector_kind(cfg.detector);
    const SolverKind skind = parse_solver_kind(cfg.solver);
    const auto directions = requested_directions(cfg.direction);

    for (const std::string& name : sequences) {
        const std::filesystem::path dir = data / name;
        require_file(dir / "manifest.json", "sequence " + name);
        const SceneSpec spec = load_sequence_spec(dir);
        const int n = spec.frames;
        if (n < 3)
            throw std::runtime_error("sequence " + name +
                                     " has fewer than 3 frames; nothing to accumulate");

        for (int t = 1; t <= n - 1; ++t)
            require_file(dir / "flow" / flow_filename(t, t + 1), "local flows of " + name);
        if (dkind == DetectorKind::consistency)
            for (int t = 1; t <= n - 1; ++t)
                require_file(dir / "flow" / flow_filename(t + 1, t),
                             "consistency detector (backward local flows) of " + name);
        for (const std::string& d : directions) {
            const bool fwd = d == "forward";
            if (dkind == DetectorKind::ground_truth) {
                for (int t = 2; t <= n - 1; ++t)
                    require_file(dir / "occ" / occ_filename(fwd ? 1 : t - 1, t),
                                 "ground-truth masks of " + name);
            }
            if (skind == SolverKind::oracle) {
                for (int t = 2; t <= n - 1; ++t) {
                    const int from = fwd ? 1 : t - 1;
                    const int to = fwd ? t + 1 : n;
                    require_file(dir / "flow" / flow_filename(from, to),
                                 "oracle solver flows of " + name);
                }
            }
        }
    }
}

}  // namespace detail

/// Runs the requested driver(s) over every sequence of a dataset; writes
/// result_<direction>.flo and, unless disabled, a trace directory per run.
inline void cmd_accumulate(const ExperimentConfig& cfg) {
    const std::filesystem::path data = resolve_path(cfg.dataset);
    const DatasetManifest manifest = load_dataset_manifest(data);
    if (manifest.sequences.empty()) throw std::runtime_error("dataset lists no sequences");
    const auto directions = requested_directions(cfg.direction);
    detail::check_accumulate_inputs(cfg, data, manifest.sequences);

    const std::filesystem::path out = resolve_path(cfg.out);
    std::filesystem::create_directories(out);

    parallel_for(int(manifest.sequences.size()), cfg.workers, [&](int i) {
        const std::string& name = manifest.sequences[std::size_t(i)];
        const std::filesystem::path seq_dir = data / name;
        const SceneSpec spec = load_sequence_spec(seq_dir);
        const bool need_bwd = parse_detector_kind(cfg.detector) == DetectorKind::consistency;
        const FlowSequence seq = load_flow_sequence(seq_dir, spec.frames, need_bwd);

        const std::filesystem::path res_dir = out / name;
        std::filesystem::create_directories(res_dir);
        const Detector detector = detail::build_detector(cfg, seq_dir);
        const Solver solver = detail::build_solver(cfg, seq_dir);
        const AccumulateOptions options{cfg.save_traces};

        for (const std::string& d : directions) {
            const AccumulationTrace trace =
                d == "forward" ? accumulate_forward(seq, detector, solver, options)
                               : accumulate_backward(seq, detector, solver, options);
            write_flo_file(res_dir / ("result_" + d + ".flo"), trace.final_flow);
            if (cfg.save_traces) save_trace(res_dir / ("trace_" + d), trace);
        }
    });
    write_text_file(out / "config.ini", detail::config_ini(cfg, "accumulate"));
}

// ---------------------------------------------------------------------------
// eval

struct EvalOutcome {
    // direction -> per-sequence reports in manifest order
    std::map<std::string, std::vector<EpeReport>> rows;
    std::map<std::string, EpeReport> aggregates;
};

/// Scores accumulate results against the dataset's ground truth F_{1,N}
/// with the O_{1,N} occlusion partition; writes one CSV per direction and
/// a paired CSV when both directions are requested.
inline EvalOutcome cmd_eval(const ExperimentConfig& cfg) {
    const std::filesystem::path data = resolve_path(cfg.dataset);
    const std::filesystem::path results = resolve_path(cfg.results);
    const DatasetManifest manifest = load_dataset_manifest(data);
    if (manifest.sequences.empty()) throw std::runtime_error("dataset lists no sequences");
    if (!std::filesystem::exists(results))
        throw std::runtime_error("results directory does not exist: " + results.string());
    const auto directions = requested_directions(cfg.direction);

    for (const std::string& name : manifest.sequences) {
        const SceneSpec spec = load_sequence_spec(data / name);
        detail::require_file(data / name / "flow" / flow_filename(1, spec.frames),
                             "ground-truth flow of " + name);
        detail::require_file(data / name / "occ" / occ_filename(1, spec.frames),
                             "ground-truth mask of " + name);
        for (const std::string& d : directions)
            detail::require_file(results / name / ("result_" + d + ".flo"),
                                 "estimate (dataset/results pairing) of " + name);
    }

    const std::filesystem::path out = resolve_path(cfg.out);
    std::filesystem::create_directories(out);

    EvalOutcome outcome;
    for (const std::string& d : directions)
        outcome.rows[d].resize(manifest.sequences.size());

    parallel_for(int(manifest.sequences.size()), cfg.workers, [&](int i) {
        const std::string& name = manifest.sequences[std::size_t(i)];
        const SceneSpec spec = load_sequence_spec(data / name);
        const FlowField gt = load_flow(data / name, 1, spec.frames);
        const OcclusionMask occ = load_occ(data / name, 1, spec.frames);
        for (const std::string& d : directions) {
            const FlowField est = read_flo_file(results / name / ("result_" + d + ".flo"));
            outcome.rows[d][std::size_t(i)] = epe(est, gt, occ, name);
        }
    });

    for (const std::string& d : directions) {
        outcome.aggregates[d] = aggregate(outcome.rows[d]);
        std::ostringstream csv;
        csv << epe_csv_header() << "\n";
        for (const EpeReport& r : outcome.rows[d]) csv << to_csv_row(r) << "\n";
        csv << to_csv_row(outcome.aggregates[d]) << "\n";
        write_text_file(out / ("eval_" + d + ".csv"), csv.str());
    }

    if (directions.size() == 2) {
        auto cell = [](const std::optional<double>& v) {
            if (!v) return std::string();
            std::ostringstream os;
            os.precision(9);
            os << *v;
            return os.str();
        };
        std::ostringstream csv;
        csv << "id,fwd_epe_all,fwd_epe_occ,bwd_epe_all,bwd_epe_occ,delta_all,delta_occ\n";
        for (std::size_t i = 0; i <= manifest.sequences.size(); ++i) {
            const bool agg = i == manifest.sequences.size();
            const EpeReport& f = agg ? outcome.aggregates["forward"] : outcome.rows["forward"][i];
            const EpeReport& b =
                agg ? outcome.aggregates["backward"] : outcome.rows["backward"][i];
            std::optional<double> delta_all, delta_occ;
            if (f.epe_all && b.epe_all) delta_all = *f.epe_all - *b.epe_all;
            if (f.epe_occ && b.epe_occ) delta_occ = *f.epe_occ - *b.epe_occ;
            csv << (agg ? std::string("aggregate") : f.id) << ',' << cell(f.epe_all) << ','
                << cell(f.epe_occ) << ',' << cell(b.epe_all) << ',' << cell(b.epe_occ) << ','
                << cell(delta_all) << ',' << cell(delta_occ) << "\n";
        }
        write_text_file(out / "eval_paired.csv", csv.str());
    }
    write_text_file(out / "config.ini", detail::config_ini(cfg, "eval"));
    return outcome;
}

// ---------------------------------------------------------------------------
// occ-stats

/// Type-7 (linear interpolation) quantile of a sample.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = double(v.size() - 1) * p;
    const std::size_t lo = std::size_t(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - double(lo)) * (v[lo + 1] - v[lo]);
}

struct OccStatsOutcome {
    struct Sample {
        std::string id;
        int delta = 0;
        double alpha = 0.0;
    };
    struct Quartiles {
        int delta = 0;
        double q25 = 0.0, q50 = 0.0, q75 = 0.0;
    };
    std::vector<Sample> samples;     // sequence-major, delta-minor order
    std::vector<Quartiles> summary;  // one row per delta
};

/// Occlusion-proportion statistics alpha_Delta = alpha(O_{1,1+Delta}) from
/// the dataset's ground-truth masks, for Delta = 1..N-1.
inline OccStatsOutcome cmd_occ_stats(const ExperimentConfig& cfg) {
    const std::filesystem::path data = resolve_path(cfg.dataset);
    const DatasetManifest manifest = load_dataset_manifest(data);
    if (manifest.sequences.empty()) throw std::runtime_error("dataset lists no sequences");

    for (const std::string& name : manifest.sequences) {
        const SceneSpec spec = load_sequence_spec(data / name);
        for (int to = 2; to <= spec.frames; ++to)
            detail::require_file(data / name / "occ" / occ_filename(1, to),
                                 "occlusion masks of " + name);
    }

    const std::filesystem::path out = resolve_path(cfg.out);
    std::filesystem::create_directories(out);

    std::vector<std::vector<OccStatsOutcome::Sample>> per_seq(manifest.sequences.size());
    parallel_for(int(manifest.sequences.size()), cfg.workers, [&](int i) {
        const std::string& name = manifest.sequences[std::size_t(i)];
        const SceneSpec spec = load_sequence_spec(data / name);
        for (int to = 2; to <= spec.frames; ++to) {
            const double a = occlusion_proportion(load_occ(data / name, 1, to));
            per_seq[std::size_t(i)].push_back({name, to - 1, a});
        }
    });

    OccStatsOutcome outcome;
    std::map<int, std::vector<double>> by_delta;
    for (const auto& rows : per_seq)
        for (const auto& s : rows) {
            outcome.samples.push_back(s);
            by_delta[s.delta].push_back(s.alpha);
        }
    for (const auto& [delta, alphas] : by_delta)
        outcome.summary.push_back(
            {delta, quantile(alphas, 0.25), quantile(alphas, 0.50), quantile(alphas, 0.75)});

    std::ostringstream samples_csv;
    samples_csv << "id,delta,alpha\n";
    samples_csv.precision(9);
    for (const auto& s : outcome.samples)
        samples_csv << s.id << ',' << s.delta << ',' << s.alpha << "\n";
    write_text_file(out / "occ_stats_samples.csv", samples_csv.str());

    std::ostringstream summary_csv;
    summary_csv << "delta,q25,median,q75\n";
    summary_csv.precision(9);
    for (const auto& q : outcome.summary)
        summary_csv << q.delta << ',' << q.q25 << ',' << q.q50 << ',' << q.q75 << "\n";
    write_text_file(out / "occ_stats_summary.csv", summary_csv.str());

    write_text_file(out / "config.ini", detail::config_ini(cfg, "occ-stats"));
    return outcome;
}

// ---------------------------------------------------------------------------
// Determinism helpers

/// FNV-1a digest over sorted relative paths and file bytes of a tree.
inline std::uint64_t tree_digest(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            files.push_back(fs::relative(e.path(), root).generic_string());
    std::sort(files.begin(), files.end());

    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](const char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= std::uint8_t(data[i]);
            h *= 0x100000001b3ULL;
        }
    };
    for (const std::string& f : files) {
        eat(f.data(), f.size());
        eat("\0", 1);
        const std::string bytes = read_text_file(root / f);
        eat(bytes.data(), bytes.size());
        eat("\xff", 1);
    }
    return h;
}

}  // namespace accflow

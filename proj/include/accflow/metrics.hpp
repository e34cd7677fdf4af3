#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "accflow/types.hpp"

namespace accflow {

/// End-point-error aggregates over the ALL / NOC / OCC partition of one
/// estimate. A region with no pixels reports an absent mean rather than a
/// fabricated zero.
struct EpeReport {
    std::string id;
    std::optional<double> epe_all;
    std::optional<double> epe_noc;
    std::optional<double> epe_occ;
    std::int64_t n_all = 0;
    std::int64_t n_noc = 0;
    std::int64_t n_occ = 0;
};

/// Mean end-point error of `estimate` against `gt`, partitioned by the
/// ground-truth occlusion mask. Sums are accumulated in double in raster
/// order.
inline EpeReport epe(const FlowField& estimate, const FlowField& gt, const OcclusionMask& occ_gt,
                     std::string id = {}) {
    if (!estimate.same_size(gt) || !occ_gt.matches(gt))
        throw std::invalid_argument("epe: dimensions differ");

    double sum_all = 0.0, sum_noc = 0.0, sum_occ = 0.0;
    std::int64_t n_noc = 0, n_occ = 0;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            const double e = (estimate.at(x, y) - gt.at(x, y)).norm();
            sum_all += e;
            if (occ_gt.at(x, y)) {
                sum_occ += e;
                ++n_occ;
            } else {
                sum_noc += e;
                ++n_noc;
            }
        }
    }

    EpeReport r;
    r.id = std::move(id);
    r.n_all = gt.pixel_count();
    r.n_noc = n_noc;
    r.n_occ = n_occ;
    if (r.n_all > 0) r.epe_all = sum_all / double(r.n_all);
    if (n_noc > 0) r.epe_noc = sum_noc / double(n_noc);
    if (n_occ > 0) r.epe_occ = sum_occ / double(n_occ);
    return r;
}

/// Pixel-count-weighted mean of several reports, region by region.
inline EpeReport aggregate(std::span<const EpeReport> reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: empty report list");

    EpeReport out;
    out.id = "aggregate";
    double sum_all = 0.0, sum_noc = 0.0, sum_occ = 0.0;
    for (const EpeReport& r : reports) {
        out.n_all += r.n_all;
        out.n_noc += r.n_noc;
        out.n_occ += r.n_occ;
        if (r.epe_all) sum_all += *r.epe_all * double(r.n_all);
        if (r.epe_noc) sum_noc += *r.epe_noc * double(r.n_noc);
        if (r.epe_occ) sum_occ += *r.epe_occ * double(r.n_occ);
    }
    if (out.n_all > 0) out.epe_all = sum_all / double(out.n_all);
    if (out.n_noc > 0) out.epe_noc = sum_noc / double(out.n_noc);
    if (out.n_occ > 0) out.epe_occ = sum_occ / double(out.n_occ);
    return out;
}

inline std::string epe_csv_header() {
    return "id,epe_all,epe_noc,epe_occ,n_all,n_noc,n_occ";
}

/// CSV row per the report schema; absent regions serialize as empty cells.
inline std::string to_csv_row(const EpeReport& r) {
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string();
        std::ostringstream os;
        os.precision(9);
        os << *v;
        return os.str();
    };
    std::ostringstream os;
    os << r.id << ',' << cell(r.epe_all) << ',' << cell(r.epe_noc) << ',' << cell(r.epe_occ)
       << ',' << r.n_all << ',' << r.n_noc << ',' << r.n_occ;
    return os.str();
}

}  // namespace accflow

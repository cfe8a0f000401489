#pragma once

#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <ostream>
#include <string>
#include <vector>

#include "deauto/experiments.hpp"

namespace deauto {

namespace detail {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RateReport& r) {
    nlohmann::ordered_json j;
    j["dim"] = r.dim;
    j["cells"] = r.cells;
    j["case"] = to_string(r.data_case);
    j["levels"] = r.levels;
    j["runs"] = r.runs;
    j["seed0"] = r.seed0;
    j["kappa"] = r.kappa_valid ? nlohmann::ordered_json(r.kappa) : nlohmann::ordered_json(nullptr);
    j["failures"] = r.failures;
    j["wall_seconds"] = r.wall_seconds;
    j["mean_rel_error"] = r.mean_rel_error;
    j["stddev_rel_error"] = r.stddev_rel_error;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : r.cell_results) {
        nlohmann::ordered_json jc;
        jc["level"] = c.level;
        jc["run"] = c.run;
        jc["seed"] = c.seed;
        jc["ok"] = c.ok;
        if (c.ok) {
            jc["rel_error"] = c.rel_error;
            jc["alpha"] = c.alpha;
            jc["iterations"] = c.iterations;
        } else {
            jc["message"] = c.message;
        }
        cells.push_back(std::move(jc));
    }
    j["cells_detail"] = std::move(cells);
    return j;
}

/// Table-shaped CSV: one row per (level, run), then per-level aggregate rows
/// and a kappa footer per case. Reports must share levels and runs.
inline void write_table_csv(const std::vector<RateReport>& reports, std::ostream& os,
                            bool with_timestamp) {
    if (reports.empty()) throw std::invalid_argument("write_table_csv: no reports");
    const RateReport& first = reports.front();
    os << "# deautoconv table1: n=" << first.dim << ", m=" << first.cells
       << ", runs=" << first.runs << ", seed=" << first.seed0;
    if (with_timestamp) {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << ", generated=" << buf;
    }
    os << '\n';
    os << "kind,level_percent,run,case,value_percent,alpha,iterations\n";
    using detail::fmt_g;
    for (const auto& r : reports) {
        for (const auto& c : r.cell_results) {
            os << "run," << fmt_g(100.0 * c.level) << ',' << c.run << ',' << to_string(r.data_case)
               << ',';
            if (c.ok)
                os << fmt_g(100.0 * c.rel_error) << ',' << fmt_g(c.alpha) << ',' << c.iterations;
            else
                os << "FAILED,,";
            os << '\n';
        }
    }
    for (const auto& r : reports) {
        for (std::size_t li = 0; li < r.levels.size(); ++li) {
            os << "mean," << fmt_g(100.0 * r.levels[li]) << ",," << to_string(r.data_case) << ','
               << fmt_g(100.0 * r.mean_rel_error[li]) << ",,\n";
            os << "std," << fmt_g(100.0 * r.levels[li]) << ",," << to_string(r.data_case) << ','
               << fmt_g(100.0 * r.stddev_rel_error[li]) << ",,\n";
        }
    }
    for (const auto& r : reports) {
        os << "kappa,,," << to_string(r.data_case) << ','
           << (r.kappa_valid ? fmt_g(r.kappa) : std::string("NA")) << ",,\n";
    }
    if (!os) throw std::runtime_error("write_table_csv: write failed");
}

}  // namespace deauto

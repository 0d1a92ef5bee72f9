#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pathmc/errors.hpp"
#include "pathmc/estimators.hpp"
#include "pathmc/version.hpp"

namespace pathmc {

struct ReportCell {
    std::string key;  // governing axis value, e.g. "r=0.02", "u=1", "n=16"
    double value = 0.0;
    double std_error = 0.0;
    uint64_t n = 0;
    double bound = std::numeric_limits<double>::quiet_NaN();
    bool pass = true;
    std::string rule;
};

struct ReportSlope {
    std::string label;
    SlopeFit fit;
    bool pass = true;
    std::string rule;
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    std::string kind;
    std::string library_version = kVersion;
    uint64_t seed = 0;
    int workers = 1;
    double wall_seconds = 0.0;
    nlohmann::json config_echo;
    std::vector<ReportCell> cells;
    std::vector<ReportSlope> slopes;
    nlohmann::json extras;  // experiment-specific diagnostics
    // Additional named CSV tables (filename -> contents), e.g. law tables.
    std::vector<std::pair<std::string, std::string>> tables;
    bool pass = true;
};

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Atomic publish: write next to the target, then rename over it.
inline void write_file_atomic(const std::filesystem::path& target,
                              const std::string& contents) {
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace detail

inline std::string cells_csv(const RunReport& r) {
    std::string s = "key,value,stderr,bound,pass\n";
    for (const auto& c : r.cells) {
        s += c.key;
        s += ',';
        s += detail::fmt_double(c.value);
        s += ',';
        s += detail::fmt_double(c.std_error);
        s += ',';
        s += detail::fmt_double(c.bound);
        s += ',';
        s += c.pass ? "true" : "false";
        s += '\n';
    }
    return s;
}

inline std::string slopes_csv(const RunReport& r) {
    std::string s = "label,slope,intercept,slope_stderr,n_points,dropped,pass\n";
    for (const auto& sl : r.slopes) {
        s += sl.label;
        s += ',';
        s += detail::fmt_double(sl.fit.slope);
        s += ',';
        s += detail::fmt_double(sl.fit.intercept);
        s += ',';
        s += detail::fmt_double(sl.fit.slope_std_error);
        s += ',';
        s += std::to_string(sl.fit.n_points);
        s += ',';
        s += std::to_string(sl.fit.dropped.size());
        s += ',';
        s += sl.pass ? "true" : "false";
        s += '\n';
    }
    return s;
}

inline nlohmann::json report_json(const RunReport& r) {
    nlohmann::json j;
    j["schema_version"] = r.schema_version;
    j["kind"] = r.kind;
    j["library_version"] = r.library_version;
    j["seed"] = r.seed;
    j["workers"] = r.workers;
    j["wall_seconds"] = r.wall_seconds;
    j["config"] = r.config_echo;
    j["pass"] = r.pass;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json jc;
        jc["key"] = c.key;
        jc["value"] = c.value;
        jc["stderr"] = c.std_error;
        jc["n"] = c.n;
        if (std::isnan(c.bound))
            jc["bound"] = nullptr;
        else
            jc["bound"] = c.bound;
        jc["pass"] = c.pass;
        jc["rule"] = c.rule;
        cells.push_back(jc);
    }
    j["cells"] = cells;
    nlohmann::json slopes = nlohmann::json::array();
    for (const auto& sl : r.slopes) {
        nlohmann::json js;
        js["label"] = sl.label;
        js["slope"] = sl.fit.slope;
        js["intercept"] = sl.fit.intercept;
        js["slope_stderr"] = sl.fit.slope_std_error;
        js["n_points"] = sl.fit.n_points;
        js["dropped"] = sl.fit.dropped;
        js["pass"] = sl.pass;
        js["rule"] = sl.rule;
        slopes.push_back(js);
    }
    j["slopes"] = slopes;
    j["extras"] = r.extras;
    return j;
}

// Writes report.json, cells.csv, slopes.csv, and any extra tables into dir.
// Every file is published atomically; returns the paths written.
inline std::vector<std::string> emit_report(const RunReport& r,
                                            const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    const auto put = [&](const std::string& name, const std::string& contents) {
        const fs::path target = fs::path(dir) / name;
        detail::write_file_atomic(target, contents);
        written.push_back(target.string());
    };
    put("report.json", report_json(r).dump(2) + "\n");
    put("cells.csv", cells_csv(r));
    put("slopes.csv", slopes_csv(r));
    for (const auto& [name, contents] : r.tables) put(name, contents);
    return written;
}

}  // namespace pathmc

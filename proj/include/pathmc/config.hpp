#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathmc/errors.hpp"
#include "pathmc/geometry.hpp"

namespace pathmc {

enum class ExperimentKind {
    survival,
    shell,
    bridge_shell,
    two_window,
    bv_sequence,
    reflect_chain,
    uebc_check,
    hitting_tables,
};

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::survival: return "survival";
        case ExperimentKind::shell: return "shell";
        case ExperimentKind::bridge_shell: return "bridge_shell";
        case ExperimentKind::two_window: return "two_window";
        case ExperimentKind::bv_sequence: return "bv_sequence";
        case ExperimentKind::reflect_chain: return "reflect_chain";
        case ExperimentKind::uebc_check: return "uebc_check";
        case ExperimentKind::hitting_tables: return "hitting_tables";
    }
    return "?";
}

inline ExperimentKind kind_from_string(const std::string& s) {
    for (ExperimentKind k :
         {ExperimentKind::survival, ExperimentKind::shell,
          ExperimentKind::bridge_shell, ExperimentKind::two_window,
          ExperimentKind::bv_sequence, ExperimentKind::reflect_chain,
          ExperimentKind::uebc_check, ExperimentKind::hitting_tables})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::survival;
    std::optional<Domain> domain;
    std::optional<double> delta;  // exterior-ball radius for bounds / checks
    std::vector<Point> starts;    // from "a" or "a_list"
    std::optional<Point> b;       // absent selects the free-endpoint variant
    std::vector<double> r_list;
    std::vector<double> u_list;
    std::vector<int> n_list;
    double u = 1.0;  // horizon for shell
    double s1 = 1.0 / 3.0, s2 = 2.0 / 3.0;
    uint64_t n_paths = 100000;
    int grid_steps = 512;
    double k_sigma = 4.0;
    // Reflecting-chain parameters.
    double dt = 1e-3;
    int m = 15;
    double total_time = 1000.0;
    double burn_in_frac = 0.1;
    int hist_bins = 20;
    // Passage-law table grids.
    std::vector<double> r_grid;
    std::vector<double> k_grid;
    // Execution.
    uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";

    nlohmann::json echo;  // the parsed config document, verbatim

    const Point& a() const {
        if (starts.empty()) throw ConfigError("config has no start point");
        return starts.front();
    }
    const Domain& dom() const {
        if (!domain) throw ConfigError("config has no domain");
        return *domain;
    }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config field '" + path + "': " + msg);
}

inline void expect_keys(const json& j, const std::string& path,
                        const std::set<std::string>& allowed) {
    if (!j.is_object()) cfg_fail(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            cfg_fail(path.empty() ? item.key() : path + "." + item.key(),
                     "unknown key");
}

inline double get_num(const json& j, const std::string& path) {
    if (!j.is_number()) cfg_fail(path, "expected a number");
    return j.get<double>();
}

inline int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) cfg_fail(path, "expected an integer");
    return j.get<int>();
}

inline Point get_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) cfg_fail(path, "expected a nonempty array");
    Point p;
    for (const auto& v : j) {
        if (!v.is_number()) cfg_fail(path, "expected numeric entries");
        p.push_back(v.get<double>());
    }
    return p;
}

inline std::vector<double> get_vec(const json& j, const std::string& path) {
    return get_point(j, path);
}

inline Domain parse_domain(const json& j) {
    expect_keys(j, "domain", {"kind", "dim", "params"});
    if (!j.contains("kind") || !j["kind"].is_string())
        cfg_fail("domain.kind", "required string");
    const std::string kind = j["kind"].get<std::string>();
    if (!j.contains("params")) cfg_fail("domain.params", "required object");
    const json& p = j["params"];
    Domain dom = [&]() -> Domain {
        if (kind == "ball") {
            expect_keys(p, "domain.params", {"center", "radius"});
            if (!p.contains("center") || !p.contains("radius"))
                cfg_fail("domain.params", "ball needs center and radius");
            return Domain::ball(get_point(p["center"], "domain.params.center"),
                                get_num(p["radius"], "domain.params.radius"));
        }
        if (kind == "halfspace") {
            expect_keys(p, "domain.params", {"normal", "offset"});
            if (!p.contains("normal") || !p.contains("offset"))
                cfg_fail("domain.params", "halfspace needs normal and offset");
            return Domain::halfspace(get_point(p["normal"], "domain.params.normal"),
                                     get_num(p["offset"], "domain.params.offset"));
        }
        if (kind == "box") {
            expect_keys(p, "domain.params", {"lo", "hi"});
            if (!p.contains("lo") || !p.contains("hi"))
                cfg_fail("domain.params", "box needs lo and hi");
            return Domain::box(get_point(p["lo"], "domain.params.lo"),
                               get_point(p["hi"], "domain.params.hi"));
        }
        if (kind == "annulus") {
            expect_keys(p, "domain.params", {"center", "r_inner", "r_outer"});
            if (!p.contains("center") || !p.contains("r_inner") ||
                !p.contains("r_outer"))
                cfg_fail("domain.params", "annulus needs center, r_inner, r_outer");
            return Domain::annulus(get_point(p["center"], "domain.params.center"),
                                   get_num(p["r_inner"], "domain.params.r_inner"),
                                   get_num(p["r_outer"], "domain.params.r_outer"));
        }
        if (kind == "convex_polytope") {
            expect_keys(p, "domain.params", {"faces"});
            if (!p.contains("faces") || !p["faces"].is_array() || p["faces"].empty())
                cfg_fail("domain.params.faces", "required nonempty array");
            std::vector<HalfspaceFace> faces;
            int d = -1;
            for (std::size_t i = 0; i < p["faces"].size(); ++i) {
                const json& f = p["faces"][i];
                const std::string fp = "domain.params.faces[" + std::to_string(i) + "]";
                expect_keys(f, fp, {"normal", "offset"});
                if (!f.contains("normal") || !f.contains("offset"))
                    cfg_fail(fp, "face needs normal and offset");
                Point n = get_point(f["normal"], fp + ".normal");
                if (d < 0) d = static_cast<int>(n.size());
                faces.push_back(
                    HalfspaceFace{std::move(n), get_num(f["offset"], fp + ".offset")});
            }
            return Domain::convex_polytope(std::move(faces), d);
        }
        if (kind == "cusp_union") {
            expect_keys(p, "domain.params", {"centers", "radii"});
            if (!p.contains("centers") || !p["centers"].is_array() ||
                p["centers"].empty())
                cfg_fail("domain.params.centers", "required nonempty array");
            if (!p.contains("radii"))
                cfg_fail("domain.params.radii", "required array");
            std::vector<Point> centers;
            for (std::size_t i = 0; i < p["centers"].size(); ++i)
                centers.push_back(get_point(
                    p["centers"][i], "domain.params.centers[" + std::to_string(i) + "]"));
            return Domain::cusp_union(std::move(centers),
                                      get_vec(p["radii"], "domain.params.radii"));
        }
        cfg_fail("domain.kind", "unknown domain kind '" + kind + "'");
    }();
    if (j.contains("dim")) {
        const int d = get_int(j["dim"], "domain.dim");
        if (d != dom.dim())
            cfg_fail("domain.dim", "declared dim " + std::to_string(d) +
                                       " does not match parameters (dim " +
                                       std::to_string(dom.dim()) + ")");
    }
    return dom;
}

inline int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::cfg_fail;
    using detail::get_int;
    using detail::get_num;
    using detail::get_point;
    using detail::get_vec;

    static const std::set<std::string> kAllKeys = {
        "kind",       "domain",     "delta",     "a",          "a_list",
        "b",          "r_list",     "u_list",    "n_list",     "u",
        "s1",         "s2",         "n_paths",   "grid_steps", "k_sigma",
        "dt",         "m",          "total_time", "burn_in_frac", "hist_bins",
        "r_grid",     "k_grid",     "seed",      "workers",    "out_dir"};
    detail::expect_keys(j, "", kAllKeys);
    if (!j.contains("kind") || !j["kind"].is_string())
        cfg_fail("kind", "required string");

    ExperimentConfig c;
    c.echo = j;
    c.kind = kind_from_string(j["kind"].get<std::string>());

    if (j.contains("domain")) c.domain = detail::parse_domain(j["domain"]);
    if (j.contains("delta")) {
        c.delta = get_num(j["delta"], "delta");
        if (!(*c.delta > 0)) cfg_fail("delta", "must be positive");
    }
    if (j.contains("a") && j.contains("a_list"))
        cfg_fail("a_list", "give either a or a_list, not both");
    if (j.contains("a")) c.starts.push_back(get_point(j["a"], "a"));
    if (j.contains("a_list")) {
        if (!j["a_list"].is_array() || j["a_list"].empty())
            cfg_fail("a_list", "expected a nonempty array of points");
        for (std::size_t i = 0; i < j["a_list"].size(); ++i)
            c.starts.push_back(
                get_point(j["a_list"][i], "a_list[" + std::to_string(i) + "]"));
    }
    if (j.contains("b")) c.b = get_point(j["b"], "b");
    if (j.contains("r_list")) {
        c.r_list = get_vec(j["r_list"], "r_list");
        for (double r : c.r_list)
            if (!(r > 0)) cfg_fail("r_list", "entries must be positive");
    }
    if (j.contains("u_list")) {
        c.u_list = get_vec(j["u_list"], "u_list");
        for (double u : c.u_list)
            if (!(u > 0)) cfg_fail("u_list", "entries must be positive");
    }
    if (j.contains("n_list")) {
        if (!j["n_list"].is_array() || j["n_list"].empty())
            cfg_fail("n_list", "expected a nonempty integer array");
        for (const auto& v : j["n_list"]) {
            if (!v.is_number_integer() || v.get<int>() < 1)
                cfg_fail("n_list", "entries must be positive integers");
            c.n_list.push_back(v.get<int>());
        }
    }
    if (j.contains("u")) {
        c.u = get_num(j["u"], "u");
        if (!(c.u > 0)) cfg_fail("u", "must be positive");
    }
    if (j.contains("s1")) c.s1 = get_num(j["s1"], "s1");
    if (j.contains("s2")) c.s2 = get_num(j["s2"], "s2");
    if (j.contains("n_paths")) {
        const double v = get_num(j["n_paths"], "n_paths");
        if (!(v >= 2) || v != std::floor(v)) cfg_fail("n_paths", "must be an integer >= 2");
        c.n_paths = static_cast<uint64_t>(v);
    }
    if (j.contains("grid_steps")) {
        c.grid_steps = get_int(j["grid_steps"], "grid_steps");
        if (c.grid_steps < 1) cfg_fail("grid_steps", "must be >= 1");
    }
    if (j.contains("k_sigma")) {
        c.k_sigma = get_num(j["k_sigma"], "k_sigma");
        if (!(c.k_sigma > 0)) cfg_fail("k_sigma", "must be positive");
    }
    if (j.contains("dt")) {
        c.dt = get_num(j["dt"], "dt");
        if (!(c.dt > 0)) cfg_fail("dt", "must be positive");
    }
    if (j.contains("m")) {
        c.m = get_int(j["m"], "m");
        if (c.m < 1) cfg_fail("m", "must be >= 1");
    }
    if (j.contains("total_time")) {
        c.total_time = get_num(j["total_time"], "total_time");
        if (!(c.total_time > 0)) cfg_fail("total_time", "must be positive");
    }
    if (j.contains("burn_in_frac")) {
        c.burn_in_frac = get_num(j["burn_in_frac"], "burn_in_frac");
        if (!(c.burn_in_frac >= 0 && c.burn_in_frac < 1))
            cfg_fail("burn_in_frac", "must lie in [0, 1)");
    }
    if (j.contains("hist_bins")) {
        c.hist_bins = get_int(j["hist_bins"], "hist_bins");
        if (c.hist_bins < 2) cfg_fail("hist_bins", "must be >= 2");
    }
    if (j.contains("r_grid")) {
        c.r_grid = get_vec(j["r_grid"], "r_grid");
        for (double r : c.r_grid)
            if (!(r > 0)) cfg_fail("r_grid", "entries must be positive");
    }
    if (j.contains("k_grid")) {
        c.k_grid = get_vec(j["k_grid"], "k_grid");
        for (double k : c.k_grid)
            if (!(k >= 0)) cfg_fail("k_grid", "entries must be nonnegative");
    }
    if (j.contains("seed")) {
        const double v = get_num(j["seed"], "seed");
        if (v < 0 || v != std::floor(v)) cfg_fail("seed", "must be a nonnegative integer");
        c.seed = j["seed"].get<uint64_t>();
    }
    if (j.contains("workers")) {
        c.workers = get_int(j["workers"], "workers");
        if (c.workers < 1) cfg_fail("workers", "must be >= 1");
    }
    if (j.contains("out_dir")) {
        if (!j["out_dir"].is_string()) cfg_fail("out_dir", "expected a string");
        c.out_dir = j["out_dir"].get<std::string>();
    }

    // Per-kind requirements.
    const auto need_domain = [&] {
        if (!c.domain) cfg_fail("domain", "required for this experiment kind");
    };
    const auto need_starts = [&] {
        if (c.starts.empty()) cfg_fail("a", "required for this experiment kind");
        for (const auto& p : c.starts)
            if (static_cast<int>(p.size()) != c.domain->dim())
                cfg_fail("a", "dimension does not match the domain");
    };
    const auto forbid_b = [&] {
        if (c.b) cfg_fail("b", "not accepted for this experiment kind");
    };
    const auto check_b_dim = [&] {
        if (c.b && static_cast<int>(c.b->size()) != c.domain->dim())
            cfg_fail("b", "dimension does not match the domain");
    };
    switch (c.kind) {
        case ExperimentKind::survival:
            need_domain();
            need_starts();
            forbid_b();
            if (c.u_list.empty()) cfg_fail("u_list", "required for survival");
            if (!c.delta) cfg_fail("delta", "required for survival bounds");
            break;
        case ExperimentKind::shell:
            need_domain();
            need_starts();
            forbid_b();
            if (c.r_list.empty()) cfg_fail("r_list", "required for shell");
            break;
        case ExperimentKind::bridge_shell:
            need_domain();
            need_starts();
            check_b_dim();
            if (c.starts.size() != 1) cfg_fail("a_list", "bridge_shell takes a single a");
            if (c.r_list.empty()) cfg_fail("r_list", "required for bridge_shell");
            break;
        case ExperimentKind::two_window:
            need_domain();
            need_starts();
            if (!c.b) cfg_fail("b", "required for two_window");
            check_b_dim();
            if (c.starts.size() != 1) cfg_fail("a_list", "two_window takes a single a");
            if (c.r_list.empty()) cfg_fail("r_list", "required for two_window");
            if (!(0 < c.s1 && c.s1 < c.s2 && c.s2 < 1))
                cfg_fail("s1", "need 0 < s1 < s2 < 1");
            break;
        case ExperimentKind::bv_sequence:
            need_domain();
            need_starts();
            check_b_dim();
            if (c.starts.size() != 1) cfg_fail("a_list", "bv_sequence takes a single a");
            if (c.n_list.empty()) cfg_fail("n_list", "required for bv_sequence");
            break;
        case ExperimentKind::reflect_chain:
            need_domain();
            need_starts();
            check_b_dim();
            if (c.starts.size() != 1) cfg_fail("a_list", "reflect_chain takes a single a");
            break;
        case ExperimentKind::uebc_check:
            need_domain();
            if (!c.delta) cfg_fail("delta", "required for uebc_check");
            if (!c.starts.empty()) cfg_fail("a", "not accepted for uebc_check");
            forbid_b();
            break;
        case ExperimentKind::hitting_tables:
            if (c.domain) cfg_fail("domain", "not accepted for hitting_tables");
            if (!c.starts.empty()) cfg_fail("a", "not accepted for hitting_tables");
            forbid_b();
            if (c.r_grid.empty()) cfg_fail("r_grid", "required for hitting_tables");
            if (c.k_grid.empty()) cfg_fail("k_grid", "required for hitting_tables");
            break;
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in '" + path + "' near line " +
                          std::to_string(detail::line_of_offset(text, e.byte)) +
                          ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const InputError& e) {
        throw ConfigError(std::string("config '") + path + "': " + e.what());
    }
}

}  // namespace pathmc

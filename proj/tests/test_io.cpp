#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "pathmc/pathmc.hpp"

#include "oracles.hpp"

namespace pm = pathmc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path p = fs::temp_directory_path() /
                       ("pathmc_io_" + tag + "_" + std::to_string(::getpid()) +
                        "_" + std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    REQUIRE(out.good());
}

json survival_config() {
    return json{
        {"kind", "survival"},
        {"domain",
         {{"kind", "halfspace"}, {"params", {{"normal", {1.0}}, {"offset", 0.0}}}}},
        {"delta", 1.0},
        {"a", {0.5}},
        {"u_list", {1.0}},
        {"n_paths", 40000},
        {"grid_steps", 256},
        {"seed", 11}};
}

#ifdef _WIN32
#error "POSIX-only test runner"
#endif
int run_cli(const std::string& args) {
    const char* cli = std::getenv("PATHMC_CLI_PATH");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

}  // namespace

TEST_CASE("experiment kind names round-trip") {
    for (const char* name :
         {"survival", "shell", "bridge_shell", "two_window", "bv_sequence",
          "reflect_chain", "uebc_check", "hitting_tables"})
        REQUIRE(std::string(pm::to_string(pm::kind_from_string(name))) == name);
    REQUIRE_THROWS_AS(pm::kind_from_string("nonsense"), pm::ConfigError);
}

TEST_CASE("config parsing applies defaults and keeps an echo") {
    const auto c = pm::parse_config(survival_config());
    REQUIRE(c.kind == pm::ExperimentKind::survival);
    REQUIRE(c.dom().kind() == pm::DomainKind::halfspace);
    REQUIRE(c.a() == pm::Point{0.5});
    REQUIRE(c.u_list == std::vector<double>{1.0});
    REQUIRE(c.n_paths == 40000);
    REQUIRE(c.grid_steps == 256);
    REQUIRE(c.seed == 11);
    REQUIRE(c.workers == 1);      // default
    REQUIRE(c.k_sigma == 4.0);    // default
    REQUIRE(c.out_dir == "out");  // default
    REQUIRE(c.echo["kind"] == "survival");
}

TEST_CASE("config rejects unknown keys with a field path") {
    auto j = survival_config();
    j["typo_key"] = 1;
    REQUIRE_THROWS_WITH(pm::parse_config(j),
                        Catch::Matchers::ContainsSubstring("typo_key"));

    auto j2 = survival_config();
    j2["domain"]["params"]["extra"] = 1;
    REQUIRE_THROWS_WITH(pm::parse_config(j2),
                        Catch::Matchers::ContainsSubstring("domain.params"));
}

TEST_CASE("config enforces per-kind requirements") {
    auto no_u = survival_config();
    no_u.erase("u_list");
    REQUIRE_THROWS_AS(pm::parse_config(no_u), pm::ConfigError);

    auto no_delta = survival_config();
    no_delta.erase("delta");
    REQUIRE_THROWS_AS(pm::parse_config(no_delta), pm::ConfigError);

    json shell = {{"kind", "shell"},
                  {"domain",
                   {{"kind", "ball"},
                    {"params", {{"center", {0.0, 0.0}}, {"radius", 1.0}}}}},
                  {"a", {0.0, 0.0}}};
    REQUIRE_THROWS_WITH(pm::parse_config(shell),
                        Catch::Matchers::ContainsSubstring("r_list"));
    shell["r_list"] = {0.1};
    REQUIRE_NOTHROW(pm::parse_config(shell));
    shell["r_list"] = {0.1, -0.1};
    REQUIRE_THROWS_AS(pm::parse_config(shell), pm::ConfigError);

    json tw = {{"kind", "two_window"},
               {"domain",
                {{"kind", "box"}, {"params", {{"lo", {0.0}}, {"hi", {1.0}}}}}},
               {"a", {0.5}},
               {"r_list", {0.1}}};
    REQUIRE_THROWS_WITH(pm::parse_config(tw),
                        Catch::Matchers::ContainsSubstring("'b'"));
    tw["b"] = {0.5};
    REQUIRE_NOTHROW(pm::parse_config(tw));
    tw["s1"] = 0.7;
    tw["s2"] = 0.3;
    REQUIRE_THROWS_AS(pm::parse_config(tw), pm::ConfigError);

    json uebc = {{"kind", "uebc_check"},
                 {"domain",
                  {{"kind", "annulus"},
                   {"params",
                    {{"center", {0.0, 0.0}}, {"r_inner", 1.0}, {"r_outer", 2.0}}}}},
                 {"delta", 0.5}};
    REQUIRE_NOTHROW(pm::parse_config(uebc));
    uebc["a"] = {1.5, 0.0};
    REQUIRE_THROWS_AS(pm::parse_config(uebc), pm::ConfigError);

    json tables = {{"kind", "hitting_tables"},
                   {"r_grid", {0.5, 1.0}},
                   {"k_grid", {0.0, 1.0}}};
    REQUIRE_NOTHROW(pm::parse_config(tables));
    tables["domain"] = {{"kind", "ball"},
                        {"params", {{"center", {0.0}}, {"radius", 1.0}}}};
    REQUIRE_THROWS_AS(pm::parse_config(tables), pm::ConfigError);

    auto bad_n = survival_config();
    bad_n["n_paths"] = 1;
    REQUIRE_THROWS_AS(pm::parse_config(bad_n), pm::ConfigError);

    auto bad_dim = survival_config();
    bad_dim["domain"]["dim"] = 2;
    REQUIRE_THROWS_WITH(pm::parse_config(bad_dim),
                        Catch::Matchers::ContainsSubstring("domain.dim"));

    auto bad_a = survival_config();
    bad_a["a"] = {0.5, 0.5};
    REQUIRE_THROWS_AS(pm::parse_config(bad_a), pm::ConfigError);
}

TEST_CASE("domain JSON covers every kind") {
    const json specs = json::array({
        {{"kind", "ball"}, {"params", {{"center", {0.0, 0.0}}, {"radius", 2.0}}}},
        {{"kind", "halfspace"}, {"params", {{"normal", {0.0, 1.0}}, {"offset", -1.0}}}},
        {{"kind", "box"}, {"params", {{"lo", {0.0, 0.0}}, {"hi", {1.0, 2.0}}}}},
        {{"kind", "annulus"},
         {"params", {{"center", {0.0, 0.0}}, {"r_inner", 1.0}, {"r_outer", 2.0}}}},
        {{"kind", "convex_polytope"},
         {"params",
          {{"faces",
            json::array({{{"normal", {1.0, 0.0}}, {"offset", 0.0}},
                         {{"normal", {0.0, 1.0}}, {"offset", 0.0}},
                         {{"normal", {-1.0, -1.0}}, {"offset", -2.0}}})}}}},
        {{"kind", "cusp_union"},
         {"params", {{"centers", {{0.0, 0.0}, {2.0, 0.0}}}, {"radii", {1.0, 1.0}}}}},
    });
    for (const auto& ds : specs) {
        const auto d = pm::detail::parse_domain(ds);
        REQUIRE(d.dim() == 2);
    }
    const auto ball = pm::detail::parse_domain(specs[0]);
    const pm::Point origin = {0.0, 0.0};
    REQUIRE(ball.signed_distance(origin) == 2.0);

    json bad = {{"kind", "circle"}, {"params", json::object()}};
    REQUIRE_THROWS_AS(pm::detail::parse_domain(bad), pm::ConfigError);
}

TEST_CASE("load_config reports parse position and bad paths") {
    const auto dir = fresh_dir("cfg");
    REQUIRE_THROWS_AS(pm::load_config((dir / "missing.json").string()),
                      pm::ConfigError);
    spit(dir / "broken.json", "{\n  \"kind\": \"survival\",\n  oops\n}\n");
    REQUIRE_THROWS_WITH(pm::load_config((dir / "broken.json").string()),
                        Catch::Matchers::ContainsSubstring("line 3"));
    spit(dir / "ok.json", survival_config().dump(2));
    REQUIRE_NOTHROW(pm::load_config((dir / "ok.json").string()));
    fs::remove_all(dir);
}

TEST_CASE("report serialization round-trips") {
    pm::RunReport rep;
    rep.kind = "shell";
    rep.seed = 9;
    rep.config_echo = json{{"kind", "shell"}};
    pm::ReportCell c1;
    c1.key = "r=0.1";
    c1.value = 0.25;
    c1.std_error = 0.01;
    c1.n = 1000;
    c1.bound = 0.5;
    c1.pass = true;
    c1.rule = "demo";
    rep.cells.push_back(c1);
    pm::ReportCell c2;
    c2.key = "r=0.2";
    c2.value = 0.5;
    c2.n = 1000;  // bound left NaN: reported without a verdict threshold
    rep.cells.push_back(c2);
    pm::ReportSlope sl;
    sl.label = "shell";
    sl.fit.slope = 1.02;
    sl.fit.intercept = 0.7;
    sl.fit.slope_std_error = 0.03;
    sl.fit.n_points = 3;
    rep.slopes.push_back(sl);

    const std::string csv = pm::cells_csv(rep);
    REQUIRE(csv.substr(0, csv.find('\n')) == "key,value,stderr,bound,pass");
    REQUIRE(csv.find("r=0.1,0.25,0.01,0.5,true") != std::string::npos);
    REQUIRE(csv.find("r=0.2,0.5,0,,true") != std::string::npos);  // NaN -> empty

    const std::string scsv = pm::slopes_csv(rep);
    REQUIRE(scsv.find("label,slope,intercept,slope_stderr,n_points,dropped,pass") == 0);
    REQUIRE(scsv.find("shell,1.02,") != std::string::npos);

    const json parsed = json::parse(pm::report_json(rep).dump(2));
    REQUIRE(parsed["schema_version"] == pm::kReportSchemaVersion);
    REQUIRE(parsed["library_version"] == std::string(pm::kVersion));
    REQUIRE(parsed["kind"] == "shell");
    REQUIRE(parsed["cells"].size() == 2);
    REQUIRE(parsed["cells"][0]["value"] == 0.25);
    REQUIRE(parsed["cells"][1]["bound"].is_null());
    REQUIRE(parsed["slopes"][0]["slope"] == 1.02);
}

TEST_CASE("emit_report publishes atomically") {
    const auto dir = fresh_dir("emit");
    pm::RunReport rep;
    rep.kind = "survival";
    rep.tables.emplace_back("extra.csv", "a,b\n1,2\n");
    const auto files = pm::emit_report(rep, dir.string());
    REQUIRE(files.size() == 4);
    for (const auto& f : files) REQUIRE(fs::exists(f));
    REQUIRE(fs::exists(dir / "report.json"));
    REQUIRE(fs::exists(dir / "cells.csv"));
    REQUIRE(fs::exists(dir / "slopes.csv"));
    REQUIRE(slurp(dir / "extra.csv") == "a,b\n1,2\n");
    // no leftover temp files
    for (const auto& entry : fs::directory_iterator(dir))
        REQUIRE(entry.path().extension() != ".tmp");
    // re-emitting overwrites in place
    rep.seed = 77;
    pm::emit_report(rep, dir.string());
    const json round = json::parse(slurp(dir / "report.json"));
    REQUIRE(round["seed"] == 77);
    fs::remove_all(dir);
}

TEST_CASE("run_experiment survival matches the half-line value") {
    const auto cfg = pm::parse_config(survival_config());
    const auto rep = pm::run_experiment(cfg);
    REQUIRE(rep.kind == "survival");
    REQUIRE(rep.cells.size() == 1);
    const auto& cell = rep.cells[0];
    REQUIRE(cell.key == "u=1");
    const double exact = oracles::halfspace_stay(0.5, 1.0);
    CAPTURE(cell.value, cell.std_error, exact);
    REQUIRE(std::abs(cell.value - exact) <= 4.0 * cell.std_error);
    // Half-line drift slope vanishes, so the tail bound is sqrt(2/pi)*q(a).
    REQUIRE(cell.bound == Catch::Approx(std::sqrt(2.0 / M_PI) * 0.5).margin(1e-12));
    REQUIRE(cell.pass);
    REQUIRE(rep.pass);
    REQUIRE(rep.wall_seconds > 0.0);
}

TEST_CASE("run_experiment flags an inadmissible exterior radius") {
    json j = {{"kind", "uebc_check"},
              {"domain",
               {{"kind", "annulus"},
                {"params",
                 {{"center", {0.0, 0.0}}, {"r_inner", 1.0}, {"r_outer", 2.0}}}}},
              {"delta", 1.5}};
    const auto rep = pm::run_experiment(pm::parse_config(j));
    REQUIRE(rep.cells.size() == 1);
    REQUIRE_FALSE(rep.cells[0].pass);
    REQUIRE_FALSE(rep.pass);

    j["delta"] = 0.9;
    const auto ok = pm::run_experiment(pm::parse_config(j));
    REQUIRE(ok.pass);
}

TEST_CASE("run_experiment hitting_tables emits law tables") {
    json j = {{"kind", "hitting_tables"}, {"r_grid", {0.5}}, {"k_grid", {0.0, 1.0}}};
    const auto rep = pm::run_experiment(pm::parse_config(j));
    REQUIRE(rep.pass);
    REQUIRE(rep.tables.size() == 2);
    for (const auto& cell : rep.cells) REQUIRE(cell.value <= 1e-8);
    REQUIRE(rep.tables[0].second.rfind("t,conditional_cdf\n", 0) == 0);
}

TEST_CASE("cli runs an experiment end to end") {
    const auto dir = fresh_dir("cli");
    const auto cfg_path = dir / "survival.json";
    auto j = survival_config();
    j["out_dir"] = (dir / "out").string();
    spit(cfg_path, j.dump(2));

    REQUIRE(run_cli("survival --config " + cfg_path.string() + " --dump-paths") == 0);
    REQUIRE(fs::exists(dir / "out" / "report.json"));
    REQUIRE(fs::exists(dir / "out" / "cells.csv"));
    REQUIRE(fs::exists(dir / "out" / "paths.csv"));
    const json rep = json::parse(slurp(dir / "out" / "report.json"));
    REQUIRE(rep["pass"] == true);
    const double exact = oracles::halfspace_stay(0.5, 1.0);
    const double value = rep["cells"][0]["value"].get<double>();
    const double se = rep["cells"][0]["stderr"].get<double>();
    REQUIRE(std::abs(value - exact) <= 4.0 * se);
    fs::remove_all(dir);
}

TEST_CASE("cli exit codes distinguish verdict failures from input errors") {
    const auto dir = fresh_dir("cli_codes");

    json fail_cfg = {{"kind", "uebc_check"},
                     {"domain",
                      {{"kind", "annulus"},
                       {"params",
                        {{"center", {0.0, 0.0}}, {"r_inner", 1.0}, {"r_outer", 2.0}}}}},
                     {"delta", 1.5},
                     {"out_dir", (dir / "out_fail").string()}};
    spit(dir / "fail.json", fail_cfg.dump(2));
    REQUIRE(run_cli("uebc_check --config " + (dir / "fail.json").string()) == 2);
    REQUIRE(fs::exists(dir / "out_fail" / "report.json"));  // report still written

    spit(dir / "broken.json", "{ not json");
    REQUIRE(run_cli("uebc_check --config " + (dir / "broken.json").string()) == 1);

    // Subcommand / config kind mismatch.
    spit(dir / "surv.json", survival_config().dump(2));
    REQUIRE(run_cli("shell --config " + (dir / "surv.json").string()) == 1);

    // Missing config file is a CLI-level error.
    REQUIRE(run_cli("survival --config " + (dir / "nope.json").string()) != 0);
    fs::remove_all(dir);
}

TEST_CASE("cli results do not depend on the worker count") {
    const auto dir = fresh_dir("cli_workers");
    json j = {{"kind", "bridge_shell"},
              {"domain",
               {{"kind", "ball"},
                {"params", {{"center", {0.0, 0.0}}, {"radius", 1.0}}}}},
              {"a", {0.0, 0.0}},
              {"b", {0.0, 0.0}},
              {"r_list", {0.05, 0.1, 0.2}},
              {"n_paths", 30000},
              {"grid_steps", 128},
              {"seed", 5}};
    spit(dir / "bs.json", j.dump(2));
    const std::string base = "bridge_shell --config " + (dir / "bs.json").string();
    REQUIRE(run_cli(base + " --out " + (dir / "w1").string() + " --workers 1") == 0);
    REQUIRE(run_cli(base + " --out " + (dir / "w4").string() + " --workers 4") == 0);
    REQUIRE(slurp(dir / "w1" / "cells.csv") == slurp(dir / "w4" / "cells.csv"));
    REQUIRE(slurp(dir / "w1" / "slopes.csv") == slurp(dir / "w4" / "slopes.csv"));
    fs::remove_all(dir);
}

// Experiment runner: one subcommand per experiment kind, JSON config in,
// report.json + CSV tables out.  Exit code 0 when every verdict passes,
// 2 when any verdict fails, 1 on configuration or runtime errors.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pathmc/pathmc.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> workers;
    bool dump_paths = false;
};

void add_common(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "override the output directory");
    cmd->add_option("--workers", args.workers,
                    "worker threads (never changes results)");
    cmd->add_flag("--dump-paths", args.dump_paths,
                  "also write a few sampled paths to paths.csv");
}

int run(pathmc::ExperimentKind kind, const CliArgs& args) {
    pathmc::ExperimentConfig cfg = pathmc::load_config(args.config_path);
    if (cfg.kind != kind)
        throw pathmc::ConfigError(
            std::string("config kind '") + pathmc::to_string(cfg.kind) +
            "' does not match the subcommand '" + pathmc::to_string(kind) + "'");
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (args.workers) {
        if (*args.workers < 1)
            throw pathmc::ConfigError("--workers must be >= 1");
        cfg.workers = *args.workers;
    }
    const pathmc::RunReport rep = pathmc::run_experiment(cfg);
    auto files = pathmc::emit_report(rep, cfg.out_dir);
    if (args.dump_paths) {
        pathmc::detail::write_file_atomic(
            std::filesystem::path(cfg.out_dir) / "paths.csv",
            pathmc::dump_paths_csv(cfg));
        files.push_back((std::filesystem::path(cfg.out_dir) / "paths.csv").string());
    }
    std::cout << "experiment " << pathmc::to_string(cfg.kind) << ": "
              << (rep.pass ? "PASS" : "FAIL") << " (" << rep.cells.size()
              << " cells, " << rep.slopes.size() << " slopes, "
              << rep.wall_seconds << " s)\n";
    for (const auto& f : files) std::cout << "  wrote " << f << "\n";
    return rep.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "pathmc: Monte Carlo experiments for constrained Gaussian path laws"};
    app.set_version_flag("--version", std::string(pathmc::kVersion));
    app.require_subcommand(1);

    struct Sub {
        pathmc::ExperimentKind kind;
        const char* help;
    };
    const Sub subs[] = {
        {pathmc::ExperimentKind::survival,
         "stay probability of free motion vs the explicit passage-law bound"},
        {pathmc::ExperimentKind::shell,
         "probability of staying while dipping into the boundary shell"},
        {pathmc::ExperimentKind::bridge_shell,
         "boundary-shell probability under the pinned (or free-endpoint) law"},
        {pathmc::ExperimentKind::two_window,
         "near-boundary dips in two disjoint time windows"},
        {pathmc::ExperimentKind::bv_sequence,
         "gradient-mass proxy sequence n * shell(1/n)"},
        {pathmc::ExperimentKind::reflect_chain,
         "reflecting chain on the discretized constrained path space"},
        {pathmc::ExperimentKind::uebc_check,
         "statistical exterior-ball validation for a domain"},
        {pathmc::ExperimentKind::hitting_tables,
         "first-passage law tables and normalization checks"},
    };
    CliArgs args[std::size(subs)];
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(pathmc::to_string(subs[i].kind),
                                           subs[i].help);
        add_common(cmd, args[i]);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < std::size(subs); ++i)
            if (app.get_subcommand(pathmc::to_string(subs[i].kind))->parsed())
                return run(subs[i].kind, args[i]);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const pathmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const pathmc::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fpo/harness/aggregate.hpp"
#include "fpo/harness/config.hpp"
#include "fpo/harness/plot.hpp"
#include "fpo/harness/runner.hpp"

namespace fs = std::filesystem;

namespace {

fs::path resolve_output_root(const std::string& cli_root) {
    if (!cli_root.empty()) return cli_root;
    if (const char* env_root = std::getenv("FPO_OUTPUT_ROOT")) return env_root;
    return fs::current_path();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust policy optimisation under rare-event environment variables"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_root;
    int threads_override = 0;
    auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
    run->add_option("config", config_path, "TOML experiment config")->required();
    run->add_option("--output-root", output_root, "Directory run output is placed under");
    run->add_option("--threads", threads_override, "Override the configured seed parallelism");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config and print the resolved form");
    validate->add_option("config", validate_path, "TOML experiment config")->required();

    std::vector<std::string> run_dirs;
    std::string summary_out = "summary.json";
    auto* aggregate = app.add_subcommand("aggregate", "Fold run directories into a summary");
    aggregate->add_option("dirs", run_dirs, "Run directories (one per method)")->required();
    aggregate->add_option("-o,--output", summary_out, "Summary JSON path");

    std::string summary_in;
    std::string charts_dir = ".";
    auto* plot = app.add_subcommand("plot", "Render SVG charts from a summary");
    plot->add_option("summary", summary_in, "Summary JSON")->required();
    plot->add_option("-o,--output-dir", charts_dir, "Directory the charts are written to");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto config = fpo::harness::ExperimentConfig::load(config_path);
            if (threads_override > 0) config.threads = threads_override;
            const fs::path dir =
                fpo::harness::run_experiment(config, resolve_output_root(output_root), std::cout);
            std::cout << "run complete: " << dir.string() << "\n";
        } else if (*validate) {
            const auto config = fpo::harness::ExperimentConfig::load(validate_path);
            std::cout << config.manifest_json();
        } else if (*aggregate) {
            std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
            const auto summary = fpo::harness::aggregate(dirs);
            fpo::harness::write_summary(summary, summary_out);
            for (const auto& [name, ms] : summary.methods) {
                std::cout << name << ": final J quartiles " << ms.final_quartiles.q1 << " / "
                          << ms.final_quartiles.median << " / " << ms.final_quartiles.q3 << " ("
                          << ms.seeds << " seeds)\n";
            }
            std::cout << "summary written: " << summary_out << "\n";
        } else if (*plot) {
            const auto summary = fpo::harness::read_summary(summary_in);
            fs::create_directories(charts_dir);
            const fs::path curves = fs::path(charts_dir) / "learning_curves.svg";
            const fs::path schedule = fs::path(charts_dir) / "psi_schedule.svg";
            fpo::harness::write_learning_curve_svg(summary, curves);
            fpo::harness::write_psi_schedule_svg(summary, schedule);
            std::cout << "charts written: " << curves.string() << ", " << schedule.string()
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

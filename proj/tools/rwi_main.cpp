// rwi: tail-probability experiments for the common range of two planar
// random walks, and the matching rate-function solves.
//
//   rwi run <config.json> [--force] [--workers N] [--seed U64]
//   rwi report <dir> --kind <tail-scan|rate-solve|diagnostics|trend-compare>
//
// Exit codes: 0 success, 1 validation error, 2 partial failure, 3 numerical
// failure.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rwi/config.hpp"
#include "rwi/experiment.hpp"
#include "rwi/report.hpp"
#include "rwi/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"random-walk intersection tails and rate functions"};
    app.set_version_flag("--version", rwi::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    bool force = false;
    unsigned workers = 0;
    std::uint64_t seed_override = 0;
    bool seed_set = false;

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "path to the JSON config")->required();
    run->add_flag("--force", force, "re-run units even when already persisted");
    run->add_option("--workers", workers, "worker threads (0 = hardware)");
    run->add_option("--seed", seed_override, "override the config seed_root")
        ->each([&](const std::string&) { seed_set = true; });

    std::string report_dir;
    std::string kind_str;
    CLI::App* report = app.add_subcommand("report", "emit CSV/JSON reports from records");
    report->add_option("dir", report_dir, "experiment output directory")->required();
    report->add_option("--kind", kind_str, "tail-scan | rate-solve | diagnostics | trend-compare")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            rwi::ExperimentConfig config = rwi::ExperimentConfig::load(config_path);
            rwi::RunOverrides overrides;
            overrides.workers = workers;
            overrides.force = force;
            if (seed_set) overrides.seed_root = seed_override;
            const rwi::RunSummary summary = rwi::run_experiment(config, overrides);
            std::cout << "completed " << summary.completed << ", skipped " << summary.skipped
                      << ", failed " << summary.failed << "\n";
            for (const auto& f : summary.failures) std::cerr << "failed unit: " << f << "\n";
            return summary.exit_code();
        }
        if (report->parsed()) {
            const rwi::ExperimentKind kind = rwi::experiment_kind_from(kind_str);
            const rwi::ReportOutput out = rwi::write_report(report_dir, kind);
            for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << out.csv_path.string() << "\n" << out.summary_path.string() << "\n";
            return 0;
        }
    } catch (const rwi::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const rwi::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

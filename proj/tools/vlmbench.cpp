// vlmbench: run, resume and score vision-language model benchmarks against
// chat-completions endpoints.

#include <iostream>

#include "CLI11.hpp"
#include "vlmbench/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Config-driven vision-language model benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    vlmbench::RunFlags flags;
    auto* run = app.add_subcommand("run", "Run (or resume) a benchmark; results go to the configured CSV");
    run->add_option("config", config_path, "Run configuration file")->required();
    run->add_flag("--fresh", flags.fresh, "Overwrite an existing results file instead of resuming");
    run->add_option("--parallel", flags.parallel, "Images processed concurrently")->check(CLI::PositiveNumber);
    run->add_option("--backend-url", flags.backend_url, "Endpoint base URL (overrides config and environment)");
    run->add_option("--backend-kind", flags.backend_kind, "llava-style, qwen-style or generic")
        ->check(CLI::IsMember({"llava-style", "qwen-style", "generic"}));
    run->add_option("--timeout", flags.timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
    run->add_option("--retries", flags.retries, "Retries per request")->check(CLI::NonNegativeNumber);
    run->add_option("--max-images", flags.max_images, "Stop after this many images (resume later)");

    std::string results_csv, truth_csv, report_cfg;
    auto* report = app.add_subcommand("report", "Score a results file against human annotations");
    report->add_option("results", results_csv, "Results CSV")->required();
    report->add_option("truth", truth_csv, "Ground-truth CSV")->required();
    report->add_option("config", report_cfg, "Report configuration file")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a run configuration and print it normalized");
    validate->add_option("config", validate_path, "Run configuration file")->required();

    std::string fixtures;
    int port = 0;
    auto* mock = app.add_subcommand("mock-serve", "Serve canned chat-completions replies from a fixture file");
    mock->add_option("fixtures", fixtures, "Fixture file")->required();
    mock->add_option("port", port, "TCP port (0 picks a free one)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? vlmbench::kExitOk : vlmbench::kExitConfig;
    }

    if (*run) return vlmbench::cmd_run(config_path, flags, std::cout, std::cerr);
    if (*report) return vlmbench::cmd_report(results_csv, truth_csv, report_cfg, std::cout, std::cerr);
    if (*validate) return vlmbench::cmd_validate(validate_path, std::cout, std::cerr);
    return vlmbench::cmd_mock_serve(fixtures, port, std::cout, std::cerr);
}

#include "vlmbench/commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "vlmbench/batch.hpp"
#include "vlmbench/config.hpp"
#include "vlmbench/metrics.hpp"
#include "vlmbench/mock_server.hpp"
#include "vlmbench/report.hpp"

namespace vlmbench {

namespace fs = std::filesystem;

namespace {

void apply_overrides(RunConfig& config, const RunFlags& flags) {
    if (const char* env = std::getenv(kBackendUrlEnv); env && *env) config.backend.url = env;
    if (flags.backend_url) config.backend.url = *flags.backend_url;
    if (flags.backend_kind) {
        auto kind = parse_backend_kind(*flags.backend_kind);
        if (!kind) {
            throw ConfigError("--backend-kind: unknown backend kind '" + *flags.backend_kind +
                              "' (expected llava-style, qwen-style or generic)");
        }
        config.backend.kind = *kind;
    }
    if (flags.timeout) config.backend.request_timeout_s = *flags.timeout;
    if (flags.retries) config.backend.max_retries = *flags.retries;
    if (flags.parallel) config.parallel_images = *flags.parallel;
    validate(config);
    if (config.backend.url.empty()) {
        throw ConfigError(std::string("backend_url: not set (config, ") + kBackendUrlEnv + " or --backend-url)");
    }
}

bool write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    return static_cast<bool>(out);
}

std::atomic<bool> g_stop_requested{false};

extern "C" void request_stop(int) {
    g_stop_requested = true;
}

}  // namespace

int cmd_run(const fs::path& config_path, const RunFlags& flags, std::ostream& out, std::ostream& err) {
    RunConfig config;
    try {
        config = load_config_file(config_path);
        apply_overrides(config, flags);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::mutex err_mu;
    BatchOptions options;
    options.fresh = flags.fresh;
    options.max_images = flags.max_images;
    options.log = [&](std::string_view line) {
        std::lock_guard lock(err_mu);
        err << line << '\n';
    };
    options.on_image_done = [&](const ImageProgress& p) {
        out << "[" << p.completed << "/" << p.scheduled << "] " << p.image << ": done (" << p.na_runs << " NA runs, "
            << p.truncated_tasks << " truncated tasks)\n";
        out.flush();
    };

    try {
        const auto s = run_batch(config, options);
        out << "Summary: " << s.images_found << " images found, " << s.images_scheduled << " images scheduled, "
            << s.images_skipped << " already complete, " << s.images_processed << " processed; " << s.runs
            << " runs, " << s.na_runs << " NA runs, " << s.failed_runs << " failed requests, " << s.truncated_tasks
            << " truncated tasks\n";
        out << "Results: " << config.output_csv.string() << '\n';
    } catch (const BatchError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const OutputError& e) {
        err << "output error: " << e.what() << " (completed rows are kept; re-run to resume)\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << " (completed rows are kept; re-run to resume)\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_report(const fs::path& results_csv, const fs::path& truth_csv, const fs::path& report_cfg,
               std::ostream& out, std::ostream& err) {
    ReportConfig config;
    std::vector<ModelReport> reports;
    try {
        config = load_report_config_file(report_cfg);
        const auto truth = read_truth_csv(truth_csv);
        reports.push_back(evaluate_model(config.model, read_results_csv(results_csv), truth, config));
        for (const auto& extra : config.extra_models) {
            reports.push_back(evaluate_model(extra.name, read_results_csv(extra.results), truth, config));
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BatchError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const metrics::MetricError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<metrics::ModelScores> scores;
    for (const auto& r : reports) {
        metrics::ModelScores s{r.model, {}};
        for (const auto& t : r.tasks) s.tasks.push_back({t.column, t.proximity});
        scores.push_back(std::move(s));
    }
    const auto tables = render_report(reports, metrics::rank_models(scores));
    out << tables;

    if (!config.tables.empty() && !write_file(config.tables, tables)) {
        err << "output error: cannot write '" << config.tables.string() << "'\n";
        return kExitRuntime;
    }
    if (!config.metrics_csv.empty() && !write_file(config.metrics_csv, render_metrics_csv(reports))) {
        err << "output error: cannot write '" << config.metrics_csv.string() << "'\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
    try {
        out << render_config(load_config_file(config_path));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_mock_serve(const fs::path& fixtures, int port, std::ostream& out, std::ostream& err) {
    std::vector<MockFixture> loaded;
    try {
        loaded = load_fixtures(fixtures);
    } catch (const FixtureError& e) {
        err << "fixture error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (port < 0 || port > 65535) {
        err << "port: " << port << " outside [0, 65535]\n";
        return kExitConfig;
    }

    try {
        MockServer server(std::move(loaded), port);
        g_stop_requested = false;
        std::signal(SIGINT, request_stop);
        std::signal(SIGTERM, request_stop);
        out << "mock backend listening on " << server.url() << '\n';
        out.flush();
        while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
        err << "served " << server.request_count() << " requests\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace vlmbench

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace vlmbench {

// Process exit codes. On kExitRuntime the results file holds every row
// completed before the failure and can be resumed.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

// Overrides the environment variable carries for the backend URL; command
// line flags win over both.
inline constexpr const char* kBackendUrlEnv = "VLM_HARNESS_BACKEND_URL";

struct RunFlags {
    bool fresh = false;
    std::optional<int> parallel;
    std::optional<std::string> backend_url;
    std::optional<std::string> backend_kind;
    std::optional<double> timeout;
    std::optional<int> retries;
    std::optional<std::size_t> max_images;
};

// Results and summaries go to `out`, logs and warnings to `err`.
int cmd_run(const std::filesystem::path& config_path, const RunFlags& flags, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& results_csv, const std::filesystem::path& truth_csv,
               const std::filesystem::path& report_cfg, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
// Serves until SIGINT or SIGTERM.
int cmd_mock_serve(const std::filesystem::path& fixtures, int port, std::ostream& out, std::ostream& err);

}  // namespace vlmbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlmbench {

enum class TaskType { numeric, category, boolean, text };

std::string_view to_string(TaskType type);
std::optional<TaskType> parse_task_type(std::string_view name);

// Output-cleaning discipline applied to every reply of a backend.
enum class BackendKind { llava_style, qwen_style, generic };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

inline constexpr int kMinConsensusRuns = 2;
inline constexpr int kMaxConsensusRuns = 5;
inline constexpr int kDefaultConsensusRuns = 2;
inline constexpr int kMaxTokenBudget = 1500;
inline constexpr int kReasoningTokenBudget = 1024;
inline constexpr std::size_t kMaxTasks = 10;

struct TaskSpec {
    std::string column;
    std::string role;  // overrides RunConfig::global_role when non-empty
    std::string task;
    std::string theory;
    std::string format;
    TaskType task_type = TaskType::text;
    bool consensus_enabled = false;
    int n_runs = kDefaultConsensusRuns;
    double numeric_tolerance_pct = 0.0;
    bool reasoning_enabled = false;

    int effective_runs() const { return consensus_enabled ? n_runs : 1; }

    bool operator==(const TaskSpec&) const = default;
};

struct GenerationParams {
    double temperature = 0.0;  // 0 selects greedy decoding at the backend
    double top_p = 1.0;
    int max_tokens = 50;
    std::optional<std::uint64_t> seed;

    bool operator==(const GenerationParams&) const = default;
};

struct BackendSpec {
    std::string url;
    BackendKind kind = BackendKind::generic;
    std::string model_name;
    double request_timeout_s = 120.0;
    int max_retries = 2;
    double retry_backoff_s = 1.0;  // doubles after every failed attempt

    bool operator==(const BackendSpec&) const = default;
};

struct RunConfig {
    std::filesystem::path image_dir;
    std::filesystem::path output_csv;
    BackendSpec backend;
    std::string global_role;
    std::vector<TaskSpec> tasks;
    GenerationParams params;
    int parallel_images = 1;

    bool operator==(const RunConfig&) const = default;
};

}  // namespace vlmbench

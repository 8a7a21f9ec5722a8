#include "vlmbench/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vlmbench/ini.hpp"
#include "vlmbench/text.hpp"

namespace vlmbench {

namespace {

constexpr std::array<std::string_view, 5> kReservedSuffixes = {"_consensus", "_agreement", "_runs", "_reasoning",
                                                               "_truncated"};

std::string at_line(const ini::Entry& e) {
    return "line " + std::to_string(e.line) + ": " + e.key;
}

bool as_bool(const ini::Entry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError(at_line(e) + ": expected true or false, got '" + e.value + "'");
}

long long as_integer(const ini::Entry& e) {
    if (auto v = text::to_integer(e.value)) return *v;
    throw ConfigError(at_line(e) + ": expected an integer, got '" + e.value + "'");
}

int as_int(const ini::Entry& e) {
    auto v = as_integer(e);
    if (v < -1'000'000'000 || v > 1'000'000'000) throw ConfigError(at_line(e) + ": value out of range");
    return static_cast<int>(v);
}

double as_real(const ini::Entry& e) {
    if (auto v = text::to_real(e.value)) return *v;
    throw ConfigError(at_line(e) + ": expected a number, got '" + e.value + "'");
}

using Setter = std::function<void(const ini::Entry&)>;

void apply(const ini::Section& section, const std::map<std::string, Setter, std::less<>>& setters) {
    for (const auto& entry : section.entries) {
        auto it = setters.find(entry.key);
        if (it == setters.end()) {
            throw ConfigError(at_line(entry) + ": unknown key in [" + section.name + "] section");
        }
        it->second(entry);
    }
}

void parse_global(const ini::Section& section, RunConfig& config) {
    auto& params = config.params;
    auto& backend = config.backend;
    apply(section, {
        {"image_dir", [&](const ini::Entry& e) { config.image_dir = e.value; }},
        {"output_csv", [&](const ini::Entry& e) { config.output_csv = e.value; }},
        {"backend_url", [&](const ini::Entry& e) { backend.url = e.value; }},
        {"backend_kind",
         [&](const ini::Entry& e) {
             auto kind = parse_backend_kind(e.value);
             if (!kind) {
                 throw ConfigError(at_line(e) + ": unknown backend kind '" + e.value +
                                   "' (expected llava-style, qwen-style or generic)");
             }
             backend.kind = *kind;
         }},
        {"model", [&](const ini::Entry& e) { backend.model_name = e.value; }},
        {"timeout", [&](const ini::Entry& e) { backend.request_timeout_s = as_real(e); }},
        {"retries", [&](const ini::Entry& e) { backend.max_retries = as_int(e); }},
        {"retry_backoff", [&](const ini::Entry& e) { backend.retry_backoff_s = as_real(e); }},
        {"role", [&](const ini::Entry& e) { config.global_role = e.value; }},
        {"temperature", [&](const ini::Entry& e) { params.temperature = as_real(e); }},
        {"top_p", [&](const ini::Entry& e) { params.top_p = as_real(e); }},
        {"max_tokens", [&](const ini::Entry& e) { params.max_tokens = as_int(e); }},
        {"seed",
         [&](const ini::Entry& e) {
             if (e.value.empty()) {
                 params.seed.reset();
                 return;
             }
             auto v = as_integer(e);
             if (v < 0) throw ConfigError(at_line(e) + ": seed must be non-negative");
             params.seed = static_cast<std::uint64_t>(v);
         }},
        {"parallel_images", [&](const ini::Entry& e) { config.parallel_images = as_int(e); }},
    });
}

TaskSpec parse_task(const ini::Section& section) {
    TaskSpec task;
    bool has_column = false;
    bool has_type = false;
    apply(section, {
        {"column",
         [&](const ini::Entry& e) {
             task.column = e.value;
             has_column = true;
         }},
        {"role", [&](const ini::Entry& e) { task.role = e.value; }},
        {"task", [&](const ini::Entry& e) { task.task = e.value; }},
        {"theory", [&](const ini::Entry& e) { task.theory = e.value; }},
        {"format", [&](const ini::Entry& e) { task.format = e.value; }},
        {"type",
         [&](const ini::Entry& e) {
             auto type = parse_task_type(e.value);
             if (!type) {
                 throw ConfigError(at_line(e) + ": unknown task type '" + e.value +
                                   "' (expected numeric, category, boolean or text)");
             }
             task.task_type = *type;
             has_type = true;
         }},
        {"consensus", [&](const ini::Entry& e) { task.consensus_enabled = as_bool(e); }},
        {"runs", [&](const ini::Entry& e) { task.n_runs = as_int(e); }},
        {"tolerance_pct", [&](const ini::Entry& e) { task.numeric_tolerance_pct = as_real(e); }},
        {"reasoning", [&](const ini::Entry& e) { task.reasoning_enabled = as_bool(e); }},
    });
    const std::string where = "[task] at line " + std::to_string(section.line);
    if (!has_column) throw ConfigError(where + ": missing required key 'column'");
    if (!has_type) throw ConfigError(where + ": missing required key 'type' for task '" + task.column + "'");
    return task;
}

void validate_column(const std::string& column) {
    if (column.empty()) throw ConfigError("task column: empty column name");
    if (text::trim(column) != column) throw ConfigError("task '" + column + "': column has surrounding whitespace");
    if (column.find_first_of(",\"\n\r") != std::string::npos) {
        throw ConfigError("task '" + column + "': column contains a CSV-reserved character (comma, quote or newline)");
    }
    if (column == "image") throw ConfigError("task 'image': column name 'image' is reserved for the row key");
    for (auto suffix : kReservedSuffixes) {
        if (column.size() >= suffix.size() && column.compare(column.size() - suffix.size(), suffix.size(), suffix) == 0) {
            throw ConfigError("task '" + column + "': column ends with reserved suffix '" + std::string(suffix) + "'");
        }
    }
}

}  // namespace

std::string_view to_string(TaskType type) {
    switch (type) {
        case TaskType::numeric: return "numeric";
        case TaskType::category: return "category";
        case TaskType::boolean: return "boolean";
        case TaskType::text: return "text";
    }
    return "text";
}

std::optional<TaskType> parse_task_type(std::string_view name) {
    for (auto t : {TaskType::numeric, TaskType::category, TaskType::boolean, TaskType::text}) {
        if (name == to_string(t)) return t;
    }
    return std::nullopt;
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::llava_style: return "llava-style";
        case BackendKind::qwen_style: return "qwen-style";
        case BackendKind::generic: return "generic";
    }
    return "generic";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
    for (auto k : {BackendKind::llava_style, BackendKind::qwen_style, BackendKind::generic}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

void validate(const RunConfig& config) {
    if (config.image_dir.empty()) throw ConfigError("image_dir: missing");
    if (config.output_csv.empty()) throw ConfigError("output_csv: missing");
    if (config.tasks.empty()) throw ConfigError("tasks: empty task list");
    if (config.tasks.size() > kMaxTasks) {
        throw ConfigError("tasks: " + std::to_string(config.tasks.size()) + " tasks configured, maximum is " +
                          std::to_string(kMaxTasks));
    }

    const auto& p = config.params;
    if (!std::isfinite(p.temperature) || p.temperature < 0) throw ConfigError("temperature: must be >= 0");
    if (!std::isfinite(p.top_p) || p.top_p <= 0 || p.top_p > 1) throw ConfigError("top_p: must be in (0, 1]");
    if (p.max_tokens < 1 || p.max_tokens > kMaxTokenBudget) {
        throw ConfigError("max_tokens: " + std::to_string(p.max_tokens) + " outside [1, " +
                          std::to_string(kMaxTokenBudget) + "]");
    }
    if (config.parallel_images < 1) throw ConfigError("parallel_images: must be >= 1");

    const auto& b = config.backend;
    if (!std::isfinite(b.request_timeout_s) || b.request_timeout_s <= 0) throw ConfigError("timeout: must be > 0");
    if (b.max_retries < 0) throw ConfigError("retries: must be >= 0");
    if (!std::isfinite(b.retry_backoff_s) || b.retry_backoff_s < 0) throw ConfigError("retry_backoff: must be >= 0");

    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < config.tasks.size(); ++i) {
        const auto& t = config.tasks[i];
        validate_column(t.column);
        if (auto [it, inserted] = seen.emplace(t.column, i); !inserted) {
            throw ConfigError("task '" + t.column + "': duplicate column (tasks " + std::to_string(it->second + 1) +
                              " and " + std::to_string(i + 1) + ")");
        }
        if (t.n_runs < kMinConsensusRuns || t.n_runs > kMaxConsensusRuns) {
            throw ConfigError("task '" + t.column + "': runs = " + std::to_string(t.n_runs) + " outside [" +
                              std::to_string(kMinConsensusRuns) + ", " + std::to_string(kMaxConsensusRuns) + "]");
        }
        if (!std::isfinite(t.numeric_tolerance_pct) || t.numeric_tolerance_pct < 0) {
            throw ConfigError("task '" + t.column + "': tolerance_pct must be >= 0");
        }
        if (t.task_type != TaskType::numeric && t.numeric_tolerance_pct != 0) {
            throw ConfigError("task '" + t.column + "': tolerance_pct is only allowed on numeric tasks");
        }
    }
}

RunConfig load_config(std::string_view source) {
    ini::Document doc;
    try {
        doc = ini::parse(source);
    } catch (const ini::SyntaxError& e) {
        throw ConfigError(std::string("syntax error at ") + e.what());
    }

    RunConfig config;
    bool has_global = false;
    for (const auto& section : doc.sections) {
        if (section.name == "global") {
            if (has_global) throw ConfigError("line " + std::to_string(section.line) + ": second [global] section");
            has_global = true;
            parse_global(section, config);
        } else if (section.name == "task") {
            config.tasks.push_back(parse_task(section));
        } else {
            throw ConfigError("line " + std::to_string(section.line) + ": unknown section [" + section.name + "]");
        }
    }
    if (!has_global) throw ConfigError("missing [global] section");
    validate(config);
    return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string render_config(const RunConfig& config) {
    const auto& p = config.params;
    const auto& b = config.backend;
    std::string out = "[global]\n";
    out += ini::render_entry("image_dir", config.image_dir.string());
    out += ini::render_entry("output_csv", config.output_csv.string());
    out += ini::render_entry("backend_url", b.url);
    out += ini::render_entry("backend_kind", to_string(b.kind));
    out += ini::render_entry("model", b.model_name);
    out += ini::render_entry("timeout", text::format_number(b.request_timeout_s));
    out += ini::render_entry("retries", std::to_string(b.max_retries));
    out += ini::render_entry("retry_backoff", text::format_number(b.retry_backoff_s));
    out += ini::render_entry("role", config.global_role);
    out += ini::render_entry("temperature", text::format_number(p.temperature));
    out += ini::render_entry("top_p", text::format_number(p.top_p));
    out += ini::render_entry("max_tokens", std::to_string(p.max_tokens));
    out += ini::render_entry("seed", p.seed ? std::to_string(*p.seed) : std::string());
    out += ini::render_entry("parallel_images", std::to_string(config.parallel_images));

    for (const auto& t : config.tasks) {
        out += "\n[task]\n";
        out += ini::render_entry("column", t.column);
        out += ini::render_entry("type", to_string(t.task_type));
        if (!t.role.empty()) out += ini::render_entry("role", t.role);
        out += ini::render_entry("task", t.task);
        out += ini::render_entry("theory", t.theory);
        out += ini::render_entry("format", t.format);
        out += ini::render_entry("consensus", t.consensus_enabled ? "true" : "false");
        out += ini::render_entry("runs", std::to_string(t.n_runs));
        if (t.task_type == TaskType::numeric) {
            out += ini::render_entry("tolerance_pct", text::format_number(t.numeric_tolerance_pct));
        }
        out += ini::render_entry("reasoning", t.reasoning_enabled ? "true" : "false");
    }
    return out;
}

int effective_max_tokens(const TaskSpec& task, const GenerationParams& params) {
    return task.reasoning_enabled ? kReasoningTokenBudget : params.max_tokens;
}

}  // namespace vlmbench

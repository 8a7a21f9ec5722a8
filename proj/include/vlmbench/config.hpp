#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vlmbench/types.hpp"

namespace vlmbench {

// Any problem with a run or report configuration. Messages name the offending
// field (and line, for syntax problems).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parses and validates a run configuration document:
//
//   [global]
//   image_dir = images/
//   output_csv = results.csv
//   backend_url = http://127.0.0.1:8080
//   backend_kind = qwen-style         # llava-style | qwen-style | generic
//   model = Qwen2.5-VL-32B-Instruct
//   role = """
//   You analyze a street-level image.
//   """
//   temperature = 0
//   top_p = 1
//   max_tokens = 50
//   seed = 42
//   parallel_images = 1
//   timeout = 120                      # seconds
//   retries = 2
//   retry_backoff = 1                  # seconds, doubled per retry
//
//   [task]
//   column = vehicles
//   type = numeric                     # numeric | category | boolean | text
//   task = Count the motor vehicles in the image.
//   theory = ...
//   format = Answer with only one integer number, nothing else.
//   consensus = true
//   runs = 3
//   tolerance_pct = 0
//   reasoning = false
//   role = ...                         # optional per-task override
//
// Relative image_dir/output_csv paths are kept as written; callers resolve
// them against their working directory.
RunConfig load_config(std::string_view source);
RunConfig load_config_file(const std::filesystem::path& path);

// Checks every RunConfig/TaskSpec invariant; throws ConfigError.
void validate(const RunConfig& config);

// Writes a document that load_config parses back to an equal RunConfig.
std::string render_config(const RunConfig& config);

int effective_max_tokens(const TaskSpec& task, const GenerationParams& params);

}  // namespace vlmbench

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlmbench/backend.hpp"
#include "vlmbench/csv.hpp"
#include "vlmbench/types.hpp"

namespace vlmbench {

// Bad inputs detected at run time: missing image directory, unreadable or
// incompatible existing results file.
class BatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The results file could not be written. Rows appended before the failure
// stay on disk and remain resumable.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kImageColumn = "image";

struct ResultsRow {
    std::string image;
    std::map<std::string, std::string, std::less<>> cells;

    bool operator==(const ResultsRow&) const = default;
};

struct ResultsTable {
    std::vector<std::string> header;  // header[0] == "image" once populated
    std::vector<ResultsRow> rows;

    const ResultsRow* find(std::string_view image) const;
    ResultsRow* find(std::string_view image);
    bool has_column(std::string_view column) const;
    std::string cell(const ResultsRow& row, std::string_view column) const;

    // Inserts or replaces the row with the same image key.
    void upsert(ResultsRow row);
    // Byte-wise ascending by image name.
    void sort_rows();

    csv::Record to_record(const ResultsRow& row) const;
    std::string to_csv() const;

    bool operator==(const ResultsTable&) const = default;
};

// Parses a results file. Later rows for the same image replace earlier ones
// (an interrupted schema-upgrade run appends the upgraded row); a final
// record cut off mid-write is dropped. Throws BatchError.
ResultsTable parse_results_csv(std::string_view data);
ResultsTable read_results_csv(const std::filesystem::path& path);

// `{col}`, `{col}_reasoning` (reasoning), `{col}_consensus`,
// `{col}_agreement`, `{col}_runs` (consensus), `{col}_truncated` (always).
std::vector<std::string> task_columns(const TaskSpec& task);
std::vector<std::string> expected_header(const std::vector<TaskSpec>& tasks);

// jpg/jpeg/png files (case-insensitive extension), byte-wise sorted by file
// name. Bytes are not loaded. Throws BatchError for a missing or unreadable
// directory.
std::vector<ImageRef> list_images(const std::filesystem::path& dir);

struct WorkItem {
    ImageRef image;
    std::vector<std::size_t> tasks;  // indices into RunConfig::tasks, config order
};

struct ResumePlan {
    ResultsTable table;  // existing rows under the upgraded header
    std::vector<WorkItem> work;
    std::size_t skipped = 0;  // images already complete
};

// An image is complete when every configured task has a non-empty `{col}`
// cell (NA counts). Missing task column groups are appended to the header;
// existing cells are never touched. Throws BatchError when an existing
// column group does not match the configured layout.
ResumePlan plan_resume(ResultsTable existing, const std::vector<TaskSpec>& tasks, const std::vector<ImageRef>& images);
ResumePlan resume_plan(const std::filesystem::path& existing_csv, const RunConfig& config);

using InferenceFn = std::function<RawInference(const BackendSpec&, const PromptText&, const ImageRef&,
                                               const GenerationParams&, int token_limit, const RequestTag&)>;
using LogFn = std::function<void(std::string_view line)>;

struct TaskResult {
    std::map<std::string, std::string, std::less<>> cells;
    int runs = 0;
    int failed_runs = 0;  // transport/HTTP/body failures
    int na_runs = 0;      // failed or unparseable
    bool truncated = false;
};

// All runs of one task on one image, cells ready for the CSV.
TaskResult execute_task(const RunConfig& config, const TaskSpec& task, const ImageRef& image,
                        const InferenceFn& infer_fn, const LogFn& log);

struct ImageProgress {
    std::string image;
    std::size_t completed = 0;  // images finished so far in this run
    std::size_t scheduled = 0;
    int na_runs = 0;
    int truncated_tasks = 0;
};

struct BatchOptions {
    InferenceFn infer;  // defaults to the HTTP client
    LogFn log;          // defaults to standard error
    std::function<void(const ImageProgress&)> on_image_done;
    bool fresh = false;  // ignore and overwrite an existing output file
    std::optional<std::size_t> max_images;  // stop after this many scheduled images
    bool finalize = true;  // false leaves the file as an interrupted run would
};

struct BatchSummary {
    ResultsTable table;
    std::size_t images_found = 0;
    std::size_t images_scheduled = 0;
    std::size_t images_skipped = 0;
    std::size_t images_processed = 0;
    std::size_t runs = 0;
    std::size_t na_runs = 0;
    std::size_t failed_runs = 0;
    std::size_t truncated_tasks = 0;
};

// Resumes from config.output_csv when it exists (unless options.fresh),
// processes up to config.parallel_images images at a time, appends each row
// as its image completes and finally rewrites the file sorted by image.
// Throws BatchError for input problems and OutputError when the results
// file cannot be written.
BatchSummary run_batch(const RunConfig& config, const BatchOptions& options = {});

}  // namespace vlmbench

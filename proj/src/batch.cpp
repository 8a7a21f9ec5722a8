#include "vlmbench/batch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "vlmbench/config.hpp"
#include "vlmbench/consensus.hpp"
#include "vlmbench/parse.hpp"
#include "vlmbench/prompt.hpp"
#include "vlmbench/text.hpp"

namespace vlmbench {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ResultsTable

const ResultsRow* ResultsTable::find(std::string_view image) const {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultsRow& r) { return r.image == image; });
    return it == rows.end() ? nullptr : &*it;
}

ResultsRow* ResultsTable::find(std::string_view image) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultsRow& r) { return r.image == image; });
    return it == rows.end() ? nullptr : &*it;
}

bool ResultsTable::has_column(std::string_view column) const {
    return std::find(header.begin(), header.end(), column) != header.end();
}

std::string ResultsTable::cell(const ResultsRow& row, std::string_view column) const {
    if (column == kImageColumn) return row.image;
    auto it = row.cells.find(column);
    return it == row.cells.end() ? std::string() : it->second;
}

void ResultsTable::upsert(ResultsRow row) {
    if (auto* existing = find(row.image)) {
        *existing = std::move(row);
    } else {
        rows.push_back(std::move(row));
    }
}

void ResultsTable::sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultsRow& a, const ResultsRow& b) { return a.image < b.image; });
}

csv::Record ResultsTable::to_record(const ResultsRow& row) const {
    csv::Record record;
    record.reserve(header.size());
    for (const auto& column : header) record.push_back(cell(row, column));
    return record;
}

std::string ResultsTable::to_csv() const {
    std::string out = csv::format_record(header);
    for (const auto& row : rows) out += csv::format_record(to_record(row));
    return out;
}

ResultsTable parse_results_csv(std::string_view data) {
    csv::Document doc;
    try {
        doc = csv::parse(data, /*drop_unterminated=*/true);
    } catch (const csv::ParseError& e) {
        throw BatchError(std::string("results file: ") + e.what());
    }

    ResultsTable table;
    auto& records = doc.records;
    std::erase_if(records, [](const csv::Record& r) { return r.size() == 1 && r.front().empty(); });
    if (records.empty()) return table;

    table.header = records.front();
    if (table.header.empty() || table.header.front() != kImageColumn) {
        throw BatchError("results file: first column must be 'image'");
    }
    std::set<std::string> seen;
    for (const auto& column : table.header) {
        if (!seen.insert(column).second) throw BatchError("results file: duplicate column '" + column + "'");
    }

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& record = records[r];
        if (record.size() > table.header.size()) {
            throw BatchError("results file: record " + std::to_string(r + 1) + " has " + std::to_string(record.size()) +
                             " fields, header has " + std::to_string(table.header.size()));
        }
        ResultsRow row;
        row.image = record.front();
        if (row.image.empty()) throw BatchError("results file: record " + std::to_string(r + 1) + " has no image key");
        for (std::size_t c = 1; c < record.size(); ++c) {
            if (!record[c].empty()) row.cells[table.header[c]] = record[c];
        }
        table.upsert(std::move(row));
    }
    return table;
}

ResultsTable read_results_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BatchError("cannot read results file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_results_csv(buf.str());
    } catch (const BatchError& e) {
        throw BatchError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Layout and planning

std::vector<std::string> task_columns(const TaskSpec& task) {
    std::vector<std::string> cols = {task.column};
    if (task.reasoning_enabled) cols.push_back(task.column + "_reasoning");
    if (task.consensus_enabled) {
        cols.push_back(task.column + "_consensus");
        cols.push_back(task.column + "_agreement");
        cols.push_back(task.column + "_runs");
    }
    cols.push_back(task.column + "_truncated");
    return cols;
}

std::vector<std::string> expected_header(const std::vector<TaskSpec>& tasks) {
    std::vector<std::string> header = {std::string(kImageColumn)};
    for (const auto& t : tasks) {
        auto cols = task_columns(t);
        header.insert(header.end(), cols.begin(), cols.end());
    }
    return header;
}

std::vector<ImageRef> list_images(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw BatchError("image_dir '" + dir.string() + "' is not a directory");

    std::vector<ImageRef> images;
    try {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const auto name = entry.path().filename().string();
            auto dot = name.rfind('.');
            if (dot == std::string::npos) continue;
            const auto ext = text::to_lower(std::string_view(name).substr(dot + 1));
            if (ext != "jpg" && ext != "jpeg" && ext != "png") continue;
            images.push_back({name, entry.path(), {}});
        }
    } catch (const fs::filesystem_error& e) {
        throw BatchError("cannot list image_dir '" + dir.string() + "': " + e.what());
    }
    std::sort(images.begin(), images.end(), [](const ImageRef& a, const ImageRef& b) { return a.file_name < b.file_name; });
    return images;
}

ResumePlan plan_resume(ResultsTable existing, const std::vector<TaskSpec>& tasks, const std::vector<ImageRef>& images) {
    ResumePlan plan;
    plan.table = std::move(existing);
    auto& header = plan.table.header;
    if (header.empty()) header.emplace_back(kImageColumn);

    for (const auto& task : tasks) {
        const auto cols = task_columns(task);
        auto at = std::find(header.begin(), header.end(), task.column);
        if (at == header.end()) {
            for (const auto& c : cols) {
                if (plan.table.has_column(c)) {
                    throw BatchError("existing results file has column '" + c + "' but no '" + task.column +
                                     "' column; write to a fresh output path (or use --fresh)");
                }
            }
            header.insert(header.end(), cols.begin(), cols.end());
            continue;
        }
        const auto pos = static_cast<std::size_t>(at - header.begin());
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (pos + k >= header.size() || header[pos + k] != cols[k]) {
                throw BatchError("existing results file lays out task '" + task.column +
                                 "' differently from the configuration (expected column '" + cols[k] +
                                 "' at position " + std::to_string(pos + k + 1) +
                                 "); write to a fresh output path (or use --fresh)");
            }
        }
    }

    for (const auto& image : images) {
        WorkItem item{image, {}};
        const auto* row = plan.table.find(image.file_name);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (!row || plan.table.cell(*row, tasks[t].column).empty()) item.tasks.push_back(t);
        }
        if (item.tasks.empty()) {
            ++plan.skipped;
        } else {
            plan.work.push_back(std::move(item));
        }
    }
    return plan;
}

ResumePlan resume_plan(const fs::path& existing_csv, const RunConfig& config) {
    ResultsTable existing;
    if (fs::exists(existing_csv)) existing = read_results_csv(existing_csv);
    return plan_resume(std::move(existing), config.tasks, list_images(config.image_dir));
}

// ---------------------------------------------------------------------------
// Execution

TaskResult execute_task(const RunConfig& config, const TaskSpec& task, const ImageRef& image,
                        const InferenceFn& infer_fn, const LogFn& log) {
    const auto prompt = build_prompt(task, config.global_role);
    const int token_limit = effective_max_tokens(task, config.params);
    const int n = task.effective_runs();

    TaskResult result;
    std::vector<ParsedValue> runs;
    std::string first_trace;
    for (int r = 1; r <= n; ++r) {
        const std::string where = image.file_name + " " + task.column + " run " + std::to_string(r) + "/" +
                                  std::to_string(n);
        ParsedValue parsed;
        try {
            const auto raw = infer_fn(config.backend, prompt, image, config.params, token_limit,
                                      RequestTag{image.file_name, task.column, r});
            const auto cleaned = clean_output(raw, prompt);
            parsed = task.reasoning_enabled ? parse_reasoning(cleaned, task.task_type)
                                            : parse_response(cleaned, task.task_type);
            if (log) {
                log(where + ": " + to_cell(parsed.value) + " (" + std::to_string(raw.generated_tokens) + "/" +
                    std::to_string(raw.token_limit) + " tokens)");
            }
            if (raw.truncated()) {
                result.truncated = true;
                if (log) {
                    log("WARNING: " + where + " hit the token limit (" + std::to_string(raw.token_limit) +
                        "); the answer may be cut off");
                }
            }
        } catch (const InferenceError& e) {
            ++result.failed_runs;
            parsed = ParsedValue{};
            if (log) log(where + ": NA (" + e.what() + ")");
        }
        if (r == 1) first_trace = parsed.reasoning_trace.value_or(std::string(kNaCell));
        if (parsed.is_na()) ++result.na_runs;
        runs.push_back(std::move(parsed));
    }
    result.runs = n;

    const std::string& col = task.column;
    auto& cells = result.cells;
    if (task.consensus_enabled) {
        const auto outcome = compute_consensus(runs, task.task_type, task.numeric_tolerance_pct);
        const auto value = to_cell(outcome.value.value);
        std::vector<std::string> run_cells;
        for (const auto& run : outcome.runs) run_cells.push_back(to_cell(run.value));
        cells[col] = value;
        cells[col + "_consensus"] = value;
        cells[col + "_agreement"] = text::format_fixed(outcome.agreement_ratio, 2);
        cells[col + "_runs"] = text::join(run_cells, ";");
    } else {
        cells[col] = to_cell(runs.front().value);
    }
    if (task.reasoning_enabled) cells[col + "_reasoning"] = first_trace;
    cells[col + "_truncated"] = result.truncated ? "1" : "0";
    return result;
}

namespace {

void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) throw OutputError("cannot write '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw OutputError("cannot replace '" + path.string() + "': " + ec.message());
}

LogFn stderr_logger() {
    static std::mutex mu;
    return [](std::string_view line) {
        std::lock_guard lock(mu);
        std::cerr << line << '\n';
    };
}

}  // namespace

BatchSummary run_batch(const RunConfig& config, const BatchOptions& options) {
    const InferenceFn infer_fn = options.infer ? options.infer : InferenceFn(infer);
    const LogFn log = options.log ? options.log : stderr_logger();

    const auto images = list_images(config.image_dir);
    const auto parent = config.output_csv.parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw BatchError("output_csv: directory '" + parent.string() + "' does not exist");
    }

    ResultsTable existing;
    if (!options.fresh && fs::exists(config.output_csv)) existing = read_results_csv(config.output_csv);
    auto plan = plan_resume(std::move(existing), config.tasks, images);
    if (options.max_images && plan.work.size() > *options.max_images) plan.work.resize(*options.max_images);

    BatchSummary summary;
    summary.images_found = images.size();
    summary.images_skipped = plan.skipped;
    summary.images_scheduled = plan.work.size();

    ResultsTable table = std::move(plan.table);
    write_atomically(config.output_csv, table.to_csv());

    std::ofstream appender(config.output_csv, std::ios::binary | std::ios::app);
    if (!appender) throw OutputError("cannot open '" + config.output_csv.string() + "' for appending");

    std::mutex mu;  // guards table, appender, summary
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;

    auto worker = [&] {
        while (!abort) {
            const std::size_t i = next++;
            if (i >= plan.work.size()) return;
            auto image = plan.work[i].image;
            try {
                load_image_bytes(image);
            } catch (const InferenceError& e) {
                log(image.file_name + ": " + e.what());
            }

            ResultsRow row;
            {
                std::lock_guard lock(mu);
                if (const auto* r = table.find(image.file_name)) row = *r;
            }
            row.image = image.file_name;

            ImageProgress progress{image.file_name, 0, plan.work.size(), 0, 0};
            std::size_t runs = 0, failed = 0;
            for (auto t : plan.work[i].tasks) {
                auto result = execute_task(config, config.tasks[t], image, infer_fn, log);
                for (auto& [k, v] : result.cells) row.cells[k] = std::move(v);
                runs += static_cast<std::size_t>(result.runs);
                failed += static_cast<std::size_t>(result.failed_runs);
                progress.na_runs += result.na_runs;
                progress.truncated_tasks += result.truncated ? 1 : 0;
            }

            std::lock_guard lock(mu);
            try {
                table.upsert(row);
                appender << csv::format_record(table.to_record(row));
                appender.flush();
                if (!appender) throw OutputError("cannot append to '" + config.output_csv.string() + "'");
            } catch (...) {
                if (!failure) failure = std::current_exception();
                abort = true;
                return;
            }
            ++summary.images_processed;
            summary.runs += runs;
            summary.failed_runs += failed;
            summary.na_runs += static_cast<std::size_t>(progress.na_runs);
            summary.truncated_tasks += static_cast<std::size_t>(progress.truncated_tasks);
            progress.completed = summary.images_processed;
            if (options.on_image_done) options.on_image_done(progress);
        }
    };

    const auto n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(config.parallel_images), plan.work.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    appender.close();
    if (failure) std::rethrow_exception(failure);

    table.sort_rows();
    if (options.finalize) write_atomically(config.output_csv, table.to_csv());
    summary.table = std::move(table);
    return summary;
}

}  // namespace vlmbench

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlmbench/batch.hpp"
#include "vlmbench/metrics.hpp"

namespace vlmbench {

// Evaluation settings, same file syntax as run configs:
//
//   [report]
//   model = qwen32b-reasoning          # name of the evaluated results file
//   metrics_csv = metrics.csv          # optional: model,task,metric,value
//   tables = report.txt                # optional: copy of the text tables
//
//   [task]
//   column = vehicles
//   kind = count                       # binary | count | continuous | ordinal
//   range = 8                          # optional proximity range R
//   classes = 6                        # ordinal only, required
//
//   [model]                            # optional, repeatable: extra ranking rows
//   name = llava-7b
//   results = llava7b.csv
//
// R defaults to 1 for binary tasks, classes-1 for ordinal tasks and the
// observed human max-min for count and continuous tasks.
struct ReportTask {
    std::string column;
    metrics::EvalKind kind = metrics::EvalKind::count;
    std::optional<double> range;
    int classes = 0;
};

struct ExtraModel {
    std::string name;
    std::filesystem::path results;
};

struct ReportConfig {
    std::string model = "model";
    std::filesystem::path metrics_csv;  // empty: not written
    std::filesystem::path tables;       // empty: not written
    std::vector<ReportTask> tasks;
    std::vector<ExtraModel> extra_models;
};

// Throws ConfigError.
ReportConfig load_report_config(std::string_view source);
ReportConfig load_report_config_file(const std::filesystem::path& path);

// image -> column -> cell. Header must start with `image`.
struct TruthTable {
    std::vector<std::string> columns;
    std::map<std::string, std::map<std::string, std::string, std::less<>>, std::less<>> rows;
};

// Throws BatchError.
TruthTable parse_truth_csv(std::string_view data);
TruthTable read_truth_csv(const std::filesystem::path& path);

// yes/true/1 -> 1, no/false/0 -> 0, otherwise a finite number; empty, NA
// and anything else are missing.
std::optional<double> cell_number(std::string_view cell);

struct NamedMetric {
    std::string name;
    metrics::Sentinel value;
    bool is_fraction = false;  // rendered as a percentage
};

struct TaskEvaluation {
    std::string column;
    metrics::EvalKind kind = metrics::EvalKind::count;
    double range = 1;
    std::size_t n_evaluated = 0;
    std::size_t n_na = 0;             // NA or unusable predictions
    std::size_t n_missing_truth = 0;  // result rows without a human value
    double proximity = 0;
    std::vector<NamedMetric> metrics;
};

struct ModelReport {
    std::string model;
    std::vector<TaskEvaluation> tasks;
    double overall_proximity = 0;  // unweighted mean over tasks
    metrics::ReliabilityRates reliability;
};

// Throws BatchError when result images are absent from the truth table (all
// of them are named) and metrics::MetricError for tasks without evaluable
// pairs or a non-positive range.
ModelReport evaluate_model(const std::string& name, const ResultsTable& results, const TruthTable& truth,
                           const ReportConfig& config);

// One table per task, reliability lines and the ranking table.
std::string render_report(const std::vector<ModelReport>& reports, const metrics::Ranking& ranking);

// Header `model,task,metric,value`; values in shortest form, NA for
// undefined metrics.
std::string render_metrics_csv(const std::vector<ModelReport>& reports);

std::string format_percent(double fraction);  // 0.168 -> "16.8"

}  // namespace vlmbench

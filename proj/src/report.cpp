#include "vlmbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vlmbench/config.hpp"
#include "vlmbench/csv.hpp"
#include "vlmbench/ini.hpp"
#include "vlmbench/parse.hpp"
#include "vlmbench/text.hpp"

namespace vlmbench {

using metrics::EvalKind;
using metrics::Pair;

namespace {

std::string at_line(const ini::Entry& e) {
    return "line " + std::to_string(e.line) + ": " + e.key;
}

double positive_real(const ini::Entry& e) {
    auto v = text::to_real(e.value);
    if (!v || *v <= 0) throw ConfigError(at_line(e) + ": expected a number > 0, got '" + e.value + "'");
    return *v;
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BatchError("cannot read " + std::string(what) + " '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ReportConfig load_report_config(std::string_view source) {
    ini::Document doc;
    try {
        doc = ini::parse(source);
    } catch (const ini::SyntaxError& e) {
        throw ConfigError(e.what());
    }

    ReportConfig config;
    bool seen_report = false;
    for (const auto& section : doc.sections) {
        if (section.name == "report") {
            if (seen_report) throw ConfigError("line " + std::to_string(section.line) + ": second [report] section");
            seen_report = true;
            for (const auto& e : section.entries) {
                if (e.key == "model") {
                    if (e.value.empty()) throw ConfigError(at_line(e) + ": empty model name");
                    config.model = e.value;
                } else if (e.key == "metrics_csv") {
                    config.metrics_csv = e.value;
                } else if (e.key == "tables") {
                    config.tables = e.value;
                } else {
                    throw ConfigError(at_line(e) + ": unknown key in [report] section");
                }
            }
        } else if (section.name == "task") {
            ReportTask task;
            bool has_kind = false;
            for (const auto& e : section.entries) {
                if (e.key == "column") {
                    task.column = e.value;
                } else if (e.key == "kind") {
                    auto kind = metrics::parse_eval_kind(e.value);
                    if (!kind) {
                        throw ConfigError(at_line(e) + ": unknown kind '" + e.value +
                                          "' (expected binary, count, continuous or ordinal)");
                    }
                    task.kind = *kind;
                    has_kind = true;
                } else if (e.key == "range") {
                    task.range = positive_real(e);
                } else if (e.key == "classes") {
                    auto v = text::to_integer(e.value);
                    if (!v || *v < 2 || *v > 1000) {
                        throw ConfigError(at_line(e) + ": expected an integer in [2, 1000], got '" + e.value + "'");
                    }
                    task.classes = static_cast<int>(*v);
                } else {
                    throw ConfigError(at_line(e) + ": unknown key in [task] section");
                }
            }
            const std::string where = "task at line " + std::to_string(section.line);
            if (task.column.empty()) throw ConfigError(where + ": missing column");
            if (!has_kind) throw ConfigError(where + ": missing kind");
            if (task.kind == EvalKind::ordinal && task.classes == 0) {
                throw ConfigError(where + ": ordinal task '" + task.column + "' needs classes");
            }
            if (task.kind != EvalKind::ordinal && task.classes != 0) {
                throw ConfigError(where + ": classes is only valid for ordinal tasks");
            }
            for (const auto& other : config.tasks) {
                if (other.column == task.column) throw ConfigError(where + ": duplicate column '" + task.column + "'");
            }
            config.tasks.push_back(std::move(task));
        } else if (section.name == "model") {
            ExtraModel model;
            for (const auto& e : section.entries) {
                if (e.key == "name") {
                    model.name = e.value;
                } else if (e.key == "results") {
                    model.results = e.value;
                } else {
                    throw ConfigError(at_line(e) + ": unknown key in [model] section");
                }
            }
            const std::string where = "model at line " + std::to_string(section.line);
            if (model.name.empty()) throw ConfigError(where + ": missing name");
            if (model.results.empty()) throw ConfigError(where + ": missing results");
            config.extra_models.push_back(std::move(model));
        } else {
            throw ConfigError("line " + std::to_string(section.line) + ": unknown section [" + section.name + "]");
        }
    }
    if (config.tasks.empty()) throw ConfigError("tasks: empty task list");

    std::set<std::string> names = {config.model};
    for (const auto& m : config.extra_models) {
        if (!names.insert(m.name).second) throw ConfigError("model name '" + m.name + "' used twice");
    }
    return config;
}

ReportConfig load_report_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot read report config");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_report_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

TruthTable parse_truth_csv(std::string_view data) {
    csv::Document doc;
    try {
        doc = csv::parse(data);
    } catch (const csv::ParseError& e) {
        throw BatchError(std::string("truth file: ") + e.what());
    }
    auto& records = doc.records;
    std::erase_if(records, [](const csv::Record& r) { return r.size() == 1 && r.front().empty(); });
    if (records.empty() || records.front().empty() || records.front().front() != kImageColumn) {
        throw BatchError("truth file: first column must be 'image'");
    }

    TruthTable truth;
    truth.columns = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& record = records[r];
        if (record.size() != truth.columns.size()) {
            throw BatchError("truth file: record " + std::to_string(r + 1) + " has " + std::to_string(record.size()) +
                             " fields, header has " + std::to_string(truth.columns.size()));
        }
        if (truth.rows.count(record.front())) {
            throw BatchError("truth file: image '" + record.front() + "' listed twice");
        }
        auto& row = truth.rows[record.front()];
        for (std::size_t c = 1; c < record.size(); ++c) row[truth.columns[c]] = record[c];
    }
    return truth;
}

TruthTable read_truth_csv(const std::filesystem::path& path) {
    try {
        return parse_truth_csv(read_file(path, "truth file"));
    } catch (const BatchError& e) {
        throw BatchError(path.string() + ": " + e.what());
    }
}

std::optional<double> cell_number(std::string_view cell) {
    const auto t = text::trim(cell);
    if (t.empty() || t == kNaCell) return std::nullopt;
    const auto lower = text::to_lower(t);
    if (lower == "yes" || lower == "true") return 1.0;
    if (lower == "no" || lower == "false") return 0.0;
    return text::to_real(t);
}

namespace {

bool in_domain(double v, EvalKind kind, int classes) {
    switch (kind) {
        case EvalKind::binary: return v == 0 || v == 1;
        case EvalKind::ordinal: return v == std::floor(v) && v >= 1 && v <= classes;
        default: return true;
    }
}

std::vector<NamedMetric> kind_metrics(std::span<const Pair> pairs, const ReportTask& task) {
    switch (task.kind) {
        case EvalKind::binary: {
            const auto m = metrics::binary_metrics(pairs);
            return {{"accuracy", m.accuracy, true},
                    {"sensitivity", m.sensitivity, true},
                    {"specificity", m.specificity, true},
                    {"cohen_kappa", m.cohen_kappa, false}};
        }
        case EvalKind::count: {
            const auto m = metrics::count_metrics(pairs);
            return {{"mae", m.mae, false},         {"bias", m.bias, false},
                    {"exact", m.exact, true},      {"within1", m.within1, true},
                    {"within2", m.within2, true},  {"pearson_r", m.pearson_r, false}};
        }
        case EvalKind::continuous: {
            const auto m = metrics::continuous_metrics(pairs);
            return {{"mae", m.mae, false},
                    {"bias", m.bias, false},
                    {"mape", m.mape, false},
                    {"within10m", m.within10m, true},
                    {"pearson_r", m.pearson_r, false}};
        }
        case EvalKind::ordinal: {
            const auto m = metrics::ordinal_metrics(pairs, task.classes);
            return {{"exact", m.exact, true},
                    {"within1class", m.within1class, true},
                    {"mae_class", m.mae_class, false},
                    {"weighted_kappa_linear", m.weighted_kappa_linear, false}};
        }
    }
    return {};
}

double default_range(const ReportTask& task, const TruthTable& truth) {
    if (task.kind == EvalKind::binary) return 1.0;
    if (task.kind == EvalKind::ordinal) return static_cast<double>(task.classes - 1);
    std::optional<double> lo, hi;
    for (const auto& [image, row] : truth.rows) {
        auto it = row.find(task.column);
        if (it == row.end()) continue;
        if (auto v = cell_number(it->second)) {
            lo = lo ? std::min(*lo, *v) : *v;
            hi = hi ? std::max(*hi, *v) : *v;
        }
    }
    if (!lo || *hi - *lo <= 0) {
        throw metrics::MetricError("task '" + task.column +
                                   "': human values are constant or missing, so the proximity range cannot be "
                                   "derived; set range in the report config");
    }
    return *hi - *lo;
}

}  // namespace

ModelReport evaluate_model(const std::string& name, const ResultsTable& results, const TruthTable& truth,
                           const ReportConfig& config) {
    std::vector<std::string> unknown;
    for (const auto& row : results.rows) {
        if (!truth.rows.count(row.image)) unknown.push_back(row.image);
    }
    if (!unknown.empty()) {
        throw BatchError("model '" + name + "': images missing from the truth file: " + text::join(unknown, ", "));
    }

    ModelReport report;
    report.model = name;
    std::vector<std::string> columns;
    double proximity_sum = 0;
    for (const auto& task : config.tasks) {
        if (!results.has_column(task.column)) {
            throw BatchError("model '" + name + "': results have no '" + task.column + "' column");
        }
        if (std::find(truth.columns.begin(), truth.columns.end(), task.column) == truth.columns.end()) {
            throw BatchError("truth file has no '" + task.column + "' column");
        }
        columns.push_back(task.column);

        TaskEvaluation eval;
        eval.column = task.column;
        eval.kind = task.kind;
        eval.range = task.range ? *task.range : default_range(task, truth);

        std::vector<Pair> pairs;
        for (const auto& row : results.rows) {
            const auto& truth_row = truth.rows.find(row.image)->second;
            const auto truth_cell = truth_row.find(task.column)->second;
            const auto y = cell_number(truth_cell);
            if (!y) {
                ++eval.n_missing_truth;
                continue;
            }
            if (!in_domain(*y, task.kind, task.classes)) {
                throw metrics::MetricError("task '" + task.column + "', image '" + row.image + "': human value '" +
                                           truth_cell + "' is not a valid " +
                                           std::string(metrics::to_string(task.kind)) + " value");
            }
            const auto yhat = cell_number(results.cell(row, task.column));
            if (!yhat || !in_domain(*yhat, task.kind, task.classes)) {
                ++eval.n_na;
                continue;
            }
            pairs.push_back({*y, *yhat});
        }
        if (pairs.empty()) {
            throw metrics::MetricError("model '" + name + "', task '" + task.column + "': no evaluable pairs");
        }
        eval.n_evaluated = pairs.size();
        eval.proximity = metrics::task_proximity(pairs, eval.range);
        eval.metrics = kind_metrics(pairs, task);
        proximity_sum += eval.proximity;
        report.tasks.push_back(std::move(eval));
    }
    report.overall_proximity = proximity_sum / static_cast<double>(report.tasks.size());
    report.reliability = metrics::reliability_rates(results, columns);
    return report;
}

std::string format_percent(double fraction) {
    return text::format_fixed(fraction * 100.0, 1);
}

namespace {

std::string render_value(const NamedMetric& m) {
    if (!m.value) return std::string(kNaCell);
    if (m.is_fraction) return format_percent(*m.value) + "%";
    if (m.name == "mape") return text::format_fixed(*m.value, 1) + "%";
    return text::format_fixed(*m.value, 2);
}

std::string render_columns(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        widths.resize(std::max(widths.size(), row.size()), 0);
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line += "  ";
            line += row[c];
            if (c + 1 < row.size()) line.append(widths[c] - row[c].size(), ' ');
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace

std::string render_report(const std::vector<ModelReport>& reports, const metrics::Ranking& ranking) {
    std::string out;
    for (const auto& report : reports) {
        out += "== " + report.model + " ==\n\n";
        for (const auto& task : report.tasks) {
            out += task.column + " (" + std::string(metrics::to_string(task.kind)) +
                   ", R = " + text::format_number(task.range) + ", n = " + std::to_string(task.n_evaluated) +
                   ", NA = " + std::to_string(task.n_na) + ")\n";
            std::vector<std::vector<std::string>> rows = {{"metric", "value"},
                                                          {"proximity", format_percent(task.proximity) + "%"}};
            for (const auto& m : task.metrics) rows.push_back({m.name, render_value(m)});
            out += render_columns(rows) + "\n";
        }
        const auto& r = report.reliability;
        out += "NA rate: " + format_percent(r.na_rate) + "% (" + std::to_string(r.na_runs) + "/" +
               std::to_string(r.runs) + " runs)\n";
        out += "Truncation rate: " + format_percent(r.truncation_rate) + "% (" + std::to_string(r.truncated) + "/" +
               std::to_string(r.task_cells) + " tasks)\n";
        out += "Overall proximity: " + format_percent(report.overall_proximity) + "\n\n";
    }

    out += "== Ranking by mean proximity ==\n\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"rank", "model"};
    header.insert(header.end(), ranking.tasks.begin(), ranking.tasks.end());
    header.push_back("mean");
    rows.push_back(std::move(header));
    for (const auto& row : ranking.rows) {
        std::vector<std::string> cells = {std::to_string(row.rank), row.name};
        for (double p : row.proximities) cells.push_back(format_percent(p));
        cells.push_back(format_percent(row.mean));
        rows.push_back(std::move(cells));
    }
    out += render_columns(rows);
    return out;
}

std::string render_metrics_csv(const std::vector<ModelReport>& reports) {
    std::string out = csv::format_record({"model", "task", "metric", "value"});
    auto emit = [&](const std::string& model, const std::string& task, const std::string& metric,
                    const metrics::Sentinel& v) {
        out += csv::format_record({model, task, metric, v ? text::format_number(*v) : std::string(kNaCell)});
    };
    for (const auto& report : reports) {
        for (const auto& task : report.tasks) {
            emit(report.model, task.column, "n_evaluated", static_cast<double>(task.n_evaluated));
            emit(report.model, task.column, "n_na", static_cast<double>(task.n_na));
            emit(report.model, task.column, "range", task.range);
            emit(report.model, task.column, "proximity", task.proximity);
            for (const auto& m : task.metrics) emit(report.model, task.column, m.name, m.value);
        }
        emit(report.model, "overall", "proximity", report.overall_proximity);
        emit(report.model, "overall", "na_rate", report.reliability.na_rate);
        emit(report.model, "overall", "truncation_rate", report.reliability.truncation_rate);
    }
    return out;
}

}  // namespace vlmbench

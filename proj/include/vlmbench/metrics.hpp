#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlmbench/batch.hpp"

namespace vlmbench::metrics {

// Invalid metric input: empty pair list, R <= 0, values outside the task's
// domain, inconsistent task sets in a ranking.
class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class EvalKind { binary, count, continuous, ordinal };

std::string_view to_string(EvalKind kind);
std::optional<EvalKind> parse_eval_kind(std::string_view name);

// A metric that can be undefined (Pearson r on zero variance, sensitivity
// without positives, MAPE without positive truth). Serialized as NA.
using Sentinel = std::optional<double>;

struct Pair {
    double truth = 0;
    double pred = 0;
};

// max(0, 1 - |y - yhat| / R). Throws MetricError for R <= 0.
double proximity(double y, double yhat, double range);

// Mean proximity over the pairs (NA predictions already removed).
double task_proximity(std::span<const Pair> pairs, double range);

struct BinaryMetrics {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    double accuracy = 0;
    Sentinel sensitivity;  // NA without positive truth
    Sentinel specificity;  // NA without negative truth
    double cohen_kappa = 0;  // 0 when chance agreement is 1
};

// Values must be exactly 0 or 1.
BinaryMetrics binary_metrics(std::span<const Pair> pairs);

struct CountMetrics {
    double mae = 0;
    double bias = 0;  // mean(pred - truth): over-prediction is positive
    double exact = 0;
    double within1 = 0;
    double within2 = 0;
    Sentinel pearson_r;  // NA when either side has zero variance
};

CountMetrics count_metrics(std::span<const Pair> pairs);

struct ContinuousMetrics {
    double mae = 0;
    double bias = 0;
    Sentinel mape;  // percent, over pairs with truth > 0; NA when there are none
    double within10m = 0;
    Sentinel pearson_r;
};

ContinuousMetrics continuous_metrics(std::span<const Pair> pairs);

struct OrdinalMetrics {
    double exact = 0;
    double within1class = 0;
    double mae_class = 0;
    double weighted_kappa_linear = 0;  // 0 on degenerate marginals
};

// Classes are integers 1..classes (classes >= 2).
OrdinalMetrics ordinal_metrics(std::span<const Pair> pairs, int classes);

Sentinel pearson_r(std::span<const Pair> pairs);

struct ReliabilityRates {
    std::size_t runs = 0;
    std::size_t na_runs = 0;
    std::size_t task_cells = 0;  // tasks x images
    std::size_t truncated = 0;
    double na_rate = 0;          // na_runs / runs
    double truncation_rate = 0;  // truncated / task_cells
};

// NA entries across `{col}_runs` lists (the `{col}` cell stands in for a
// single run when a task has no consensus columns) and `{col}_truncated` = 1
// cells. Rates are 0 when there is nothing to count.
ReliabilityRates reliability_rates(const ResultsTable& table, const std::vector<std::string>& task_columns);

struct TaskScore {
    std::string task;
    double proximity = 0;
};

struct ModelScores {
    std::string name;
    std::vector<TaskScore> tasks;
};

struct RankingRow {
    std::size_t rank = 0;  // 1-based
    std::string name;
    std::vector<double> proximities;  // in the task order of the first model
    double mean = 0;
};

struct Ranking {
    std::vector<std::string> tasks;
    std::vector<RankingRow> rows;
};

// Unweighted per-model mean, sorted descending, ties by name. Throws
// MetricError when the models do not cover the same tasks.
Ranking rank_models(const std::vector<ModelScores>& models);

}  // namespace vlmbench::metrics

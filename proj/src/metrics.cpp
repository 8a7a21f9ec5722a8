#include "vlmbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "vlmbench/parse.hpp"
#include "vlmbench/text.hpp"

namespace vlmbench::metrics {

std::string_view to_string(EvalKind kind) {
    switch (kind) {
        case EvalKind::binary: return "binary";
        case EvalKind::count: return "count";
        case EvalKind::continuous: return "continuous";
        case EvalKind::ordinal: return "ordinal";
    }
    return "?";
}

std::optional<EvalKind> parse_eval_kind(std::string_view name) {
    if (name == "binary") return EvalKind::binary;
    if (name == "count") return EvalKind::count;
    if (name == "continuous") return EvalKind::continuous;
    if (name == "ordinal") return EvalKind::ordinal;
    return std::nullopt;
}

namespace {

void require_pairs(std::span<const Pair> pairs, std::string_view what) {
    if (pairs.empty()) throw MetricError(std::string(what) + ": no evaluated pairs");
    for (const auto& p : pairs) {
        if (!std::isfinite(p.truth) || !std::isfinite(p.pred)) {
            throw MetricError(std::string(what) + ": non-finite value");
        }
    }
}

double fraction(std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

// Sum of |err|, sum of err, and counts of |err| <= k for the given k.
struct ErrorSums {
    double abs_sum = 0;
    double signed_sum = 0;
};

ErrorSums error_sums(std::span<const Pair> pairs) {
    ErrorSums s;
    for (const auto& p : pairs) {
        s.abs_sum += std::abs(p.pred - p.truth);
        s.signed_sum += p.pred - p.truth;
    }
    return s;
}

std::size_t count_within(std::span<const Pair> pairs, double k) {
    return static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [&](const Pair& p) { return std::abs(p.pred - p.truth) <= k; }));
}

}  // namespace

double proximity(double y, double yhat, double range) {
    if (!(range > 0) || !std::isfinite(range)) throw MetricError("proximity: range must be > 0");
    return std::max(0.0, 1.0 - std::abs(y - yhat) / range);
}

double task_proximity(std::span<const Pair> pairs, double range) {
    require_pairs(pairs, "proximity");
    double sum = 0;
    for (const auto& p : pairs) sum += proximity(p.truth, p.pred, range);
    return sum / static_cast<double>(pairs.size());
}

Sentinel pearson_r(std::span<const Pair> pairs) {
    if (pairs.size() < 2) return std::nullopt;
    auto [tmin, tmax] = std::minmax_element(pairs.begin(), pairs.end(),
                                            [](const Pair& a, const Pair& b) { return a.truth < b.truth; });
    auto [pmin, pmax] = std::minmax_element(pairs.begin(), pairs.end(),
                                            [](const Pair& a, const Pair& b) { return a.pred < b.pred; });
    if (tmin->truth == tmax->truth || pmin->pred == pmax->pred) return std::nullopt;

    const double n = static_cast<double>(pairs.size());
    double mt = 0, mp = 0;
    for (const auto& p : pairs) {
        mt += p.truth;
        mp += p.pred;
    }
    mt /= n;
    mp /= n;
    double stp = 0, stt = 0, spp = 0;
    for (const auto& p : pairs) {
        stp += (p.truth - mt) * (p.pred - mp);
        stt += (p.truth - mt) * (p.truth - mt);
        spp += (p.pred - mp) * (p.pred - mp);
    }
    return std::clamp(stp / std::sqrt(stt * spp), -1.0, 1.0);
}

BinaryMetrics binary_metrics(std::span<const Pair> pairs) {
    require_pairs(pairs, "binary metrics");
    BinaryMetrics m;
    for (const auto& p : pairs) {
        const bool valid = (p.truth == 0 || p.truth == 1) && (p.pred == 0 || p.pred == 1);
        if (!valid) throw MetricError("binary metrics: values must be 0 or 1");
        if (p.truth == 1) {
            (p.pred == 1 ? m.tp : m.fn)++;
        } else {
            (p.pred == 1 ? m.fp : m.tn)++;
        }
    }
    const auto n = static_cast<std::int64_t>(pairs.size());
    const auto tp = static_cast<std::int64_t>(m.tp), fn = static_cast<std::int64_t>(m.fn);
    const auto fp = static_cast<std::int64_t>(m.fp), tn = static_cast<std::int64_t>(m.tn);

    m.accuracy = fraction(m.tp + m.tn, pairs.size());
    if (m.tp + m.fn > 0) m.sensitivity = fraction(m.tp, m.tp + m.fn);
    if (m.tn + m.fp > 0) m.specificity = fraction(m.tn, m.tn + m.fp);

    // kappa = (po - pe) / (1 - pe) with po = agree/n and pe = marginals/n^2,
    // kept in integers until the final division.
    const std::int64_t agree = tp + tn;
    const std::int64_t marginals = (tp + fp) * (tp + fn) + (fn + tn) * (fp + tn);
    const std::int64_t denom = n * n - marginals;
    m.cohen_kappa = denom == 0 ? 0.0 : static_cast<double>(n * agree - marginals) / static_cast<double>(denom);
    return m;
}

CountMetrics count_metrics(std::span<const Pair> pairs) {
    require_pairs(pairs, "count metrics");
    const auto sums = error_sums(pairs);
    const double n = static_cast<double>(pairs.size());
    CountMetrics m;
    m.mae = sums.abs_sum / n;
    m.bias = sums.signed_sum / n;
    m.exact = fraction(count_within(pairs, 0), pairs.size());
    m.within1 = fraction(count_within(pairs, 1), pairs.size());
    m.within2 = fraction(count_within(pairs, 2), pairs.size());
    m.pearson_r = pearson_r(pairs);
    return m;
}

ContinuousMetrics continuous_metrics(std::span<const Pair> pairs) {
    require_pairs(pairs, "continuous metrics");
    const auto sums = error_sums(pairs);
    const double n = static_cast<double>(pairs.size());
    ContinuousMetrics m;
    m.mae = sums.abs_sum / n;
    m.bias = sums.signed_sum / n;

    double pct_sum = 0;
    std::size_t pct_n = 0;
    for (const auto& p : pairs) {
        if (p.truth > 0) {
            pct_sum += std::abs(p.pred - p.truth) / p.truth;
            ++pct_n;
        }
    }
    if (pct_n > 0) m.mape = pct_sum / static_cast<double>(pct_n) * 100.0;
    m.within10m = fraction(count_within(pairs, 10), pairs.size());
    m.pearson_r = pearson_r(pairs);
    return m;
}

OrdinalMetrics ordinal_metrics(std::span<const Pair> pairs, int classes) {
    require_pairs(pairs, "ordinal metrics");
    if (classes < 2) throw MetricError("ordinal metrics: need at least 2 classes");
    const auto k = static_cast<std::size_t>(classes);

    std::vector<std::int64_t> confusion(k * k, 0), rows(k, 0), cols(k, 0);
    for (const auto& p : pairs) {
        auto class_index = [&](double v) {
            if (v != std::floor(v) || v < 1 || v > classes) {
                throw MetricError("ordinal metrics: class " + text::format_number(v) + " outside 1.." +
                                  std::to_string(classes));
            }
            return static_cast<std::size_t>(v) - 1;
        };
        const auto i = class_index(p.truth), j = class_index(p.pred);
        ++confusion[i * k + j];
        ++rows[i];
        ++cols[j];
    }

    OrdinalMetrics m;
    m.exact = fraction(count_within(pairs, 0), pairs.size());
    m.within1class = fraction(count_within(pairs, 1), pairs.size());
    m.mae_class = error_sums(pairs).abs_sum / static_cast<double>(pairs.size());

    // Linear weights w_ij = 1 - |i-j|/(K-1) = (K-1-|i-j|)/(K-1); the common
    // (K-1) factor cancels, leaving integer numerators.
    const auto n = static_cast<std::int64_t>(pairs.size());
    std::int64_t observed = 0, chance = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const auto dist = static_cast<std::int64_t>(i > j ? i - j : j - i);
            const std::int64_t w = static_cast<std::int64_t>(k) - 1 - dist;
            observed += w * confusion[i * k + j];
            chance += w * rows[i] * cols[j];
        }
    }
    const std::int64_t scale = static_cast<std::int64_t>(k) - 1;
    const std::int64_t denom = scale * n * n - chance;
    m.weighted_kappa_linear =
        denom == 0 ? 0.0 : static_cast<double>(observed * n - chance) / static_cast<double>(denom);
    return m;
}

ReliabilityRates reliability_rates(const ResultsTable& table, const std::vector<std::string>& task_columns) {
    ReliabilityRates r;
    for (const auto& row : table.rows) {
        for (const auto& col : task_columns) {
            const auto runs_col = col + "_runs";
            if (table.has_column(runs_col) && !table.cell(row, runs_col).empty()) {
                const auto cell = table.cell(row, runs_col);
                std::size_t start = 0;
                while (true) {
                    const auto end = cell.find(';', start);
                    const auto run = std::string_view(cell).substr(start, end == std::string::npos ? end : end - start);
                    ++r.runs;
                    if (run == kNaCell) ++r.na_runs;
                    if (end == std::string::npos) break;
                    start = end + 1;
                }
            } else if (!table.cell(row, col).empty()) {
                ++r.runs;
                if (table.cell(row, col) == kNaCell) ++r.na_runs;
            }
            ++r.task_cells;
            if (table.cell(row, col + "_truncated") == "1") ++r.truncated;
        }
    }
    r.na_rate = fraction(r.na_runs, r.runs);
    r.truncation_rate = fraction(r.truncated, r.task_cells);
    return r;
}

Ranking rank_models(const std::vector<ModelScores>& models) {
    Ranking ranking;
    if (models.empty()) return ranking;
    for (const auto& t : models.front().tasks) ranking.tasks.push_back(t.task);
    const std::set<std::string> expected(ranking.tasks.begin(), ranking.tasks.end());
    if (expected.size() != ranking.tasks.size()) throw MetricError("ranking: duplicate task names");
    if (expected.empty()) throw MetricError("ranking: no tasks");

    for (const auto& model : models) {
        std::set<std::string> seen;
        for (const auto& t : model.tasks) seen.insert(t.task);
        if (seen != expected || model.tasks.size() != expected.size()) {
            throw MetricError("ranking: model '" + model.name + "' does not cover the same tasks as '" +
                              models.front().name + "'");
        }
        RankingRow row;
        row.name = model.name;
        double sum = 0;
        for (const auto& task : ranking.tasks) {
            auto it = std::find_if(model.tasks.begin(), model.tasks.end(),
                                   [&](const TaskScore& s) { return s.task == task; });
            row.proximities.push_back(it->proximity);
            sum += it->proximity;
        }
        row.mean = sum / static_cast<double>(ranking.tasks.size());
        ranking.rows.push_back(std::move(row));
    }
    std::sort(ranking.rows.begin(), ranking.rows.end(), [](const RankingRow& a, const RankingRow& b) {
        if (a.mean != b.mean) return a.mean > b.mean;
        return a.name < b.name;
    });
    for (std::size_t i = 0; i < ranking.rows.size(); ++i) ranking.rows[i].rank = i + 1;
    return ranking;
}

}  // namespace vlmbench::metrics

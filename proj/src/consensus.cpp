#include "vlmbench/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vlmbench {

namespace {

struct VoteClass {
    std::vector<std::size_t> members;  // indices into the run list
    std::size_t first_seen = 0;        // earliest member index
};

std::vector<VoteClass> exact_classes(std::span<const ParsedValue> values, const std::vector<std::size_t>& valid) {
    std::vector<VoteClass> classes;
    for (auto idx : valid) {
        auto it = std::find_if(classes.begin(), classes.end(), [&](const VoteClass& c) {
            return values[c.members.front()].value == values[idx].value;
        });
        if (it == classes.end()) {
            classes.push_back({{idx}, idx});
        } else {
            it->members.push_back(idx);
        }
    }
    return classes;
}

std::vector<VoteClass> numeric_classes(std::span<const ParsedValue> values, std::vector<std::size_t> valid,
                                       double tolerance_pct) {
    auto number = [&](std::size_t i) { return std::get<double>(values[i].value); };
    std::stable_sort(valid.begin(), valid.end(), [&](auto a, auto b) { return number(a) < number(b); });

    std::vector<VoteClass> classes;
    std::size_t i = 0;
    while (i < valid.size()) {
        const double seed = number(valid[i]);
        const double reach = tolerance_pct / 100.0 * std::abs(seed);
        VoteClass c;
        while (i < valid.size() && std::abs(number(valid[i]) - seed) <= reach) c.members.push_back(valid[i++]);
        c.first_seen = *std::min_element(c.members.begin(), c.members.end());
        classes.push_back(std::move(c));
    }
    return classes;
}

}  // namespace

ConsensusOutcome compute_consensus(std::span<const ParsedValue> values, TaskType type, double tolerance_pct) {
    if (values.size() < static_cast<std::size_t>(kMinConsensusRuns) ||
        values.size() > static_cast<std::size_t>(kMaxConsensusRuns)) {
        throw std::invalid_argument("consensus needs 2 to 5 runs, got " + std::to_string(values.size()));
    }

    ConsensusOutcome out;
    out.runs.assign(values.begin(), values.end());

    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].is_na()) valid.push_back(i);
    }
    if (valid.empty()) return out;

    const bool numeric = type == TaskType::numeric &&
                         std::all_of(valid.begin(), valid.end(),
                                     [&](auto i) { return std::holds_alternative<double>(values[i].value); });
    auto classes = numeric ? numeric_classes(values, valid, tolerance_pct) : exact_classes(values, valid);

    const auto winner = std::min_element(classes.begin(), classes.end(), [](const VoteClass& a, const VoteClass& b) {
        if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
        return a.first_seen < b.first_seen;
    });

    if (numeric) {
        std::vector<double> members;
        for (auto i : winner->members) members.push_back(std::get<double>(values[i].value));
        std::sort(members.begin(), members.end());
        out.value.value = members[(members.size() - 1) / 2];
    } else {
        out.value.value = values[winner->first_seen].value;
    }
    out.agreement_ratio = static_cast<double>(winner->members.size()) / static_cast<double>(values.size());
    out.reached = out.agreement_ratio > 0.5;
    return out;
}

}  // namespace vlmbench

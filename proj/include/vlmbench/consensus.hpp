#pragma once

#include <span>
#include <vector>

#include "vlmbench/parse.hpp"
#include "vlmbench/types.hpp"

namespace vlmbench {

struct ConsensusOutcome {
    ParsedValue value;  // plurality winner, reported even when !reached
    bool reached = false;
    double agreement_ratio = 0.0;  // winner size / all runs, NA runs included
    std::vector<ParsedValue> runs;  // execution order
};

// Majority vote over repeated runs of one task on one image.
//
// NA runs are dropped before voting but stay in the ratio's denominator.
// Non-numeric values vote by exact equality. Numeric values are sorted and
// clustered greedily: the smallest unassigned value s opens a class that
// takes every v with |v - s| <= tolerance_pct/100 * |s| (exact match at 0).
// The largest class wins; ties go to the class whose first member appears
// earliest in run order. A numeric class reports its lower median.
//
// Throws std::invalid_argument unless 2 <= values.size() <= 5.
ConsensusOutcome compute_consensus(std::span<const ParsedValue> values, TaskType type, double tolerance_pct);

}  // namespace vlmbench

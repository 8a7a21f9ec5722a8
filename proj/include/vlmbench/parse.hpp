#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vlmbench/types.hpp"

namespace vlmbench {

struct NotAvailable {
    bool operator==(const NotAvailable&) const = default;
};

struct Label {
    std::string text;
    bool operator==(const Label&) const = default;
};

struct FreeText {
    std::string text;
    bool operator==(const FreeText&) const = default;
};

// number | label | boolean | free text | NA. Numbers are always finite.
using Value = std::variant<NotAvailable, double, Label, bool, FreeText>;

struct ParsedValue {
    Value value = NotAvailable{};
    std::optional<std::string> reasoning_trace;

    bool is_na() const { return std::holds_alternative<NotAvailable>(value); }
    bool operator==(const ParsedValue&) const = default;
};

inline constexpr std::string_view kNaCell = "NA";

// CSV cell form: NA -> "NA", numbers in shortest round-trip form, booleans
// as 1/0, labels and free text verbatim.
std::string to_cell(const Value& value);

// Last match of -?\d+(\.\d+)?; no thousands separators or exponents.
ParsedValue parse_numeric(std::string_view text);

// Leading prefixes removed (case-insensitive, first match in list order)
// before trimming trailing periods.
inline constexpr std::array<std::string_view, 4> kCategoryPrefixes = {"The answer is:", "The answer is",
                                                                      "Based on the image,", "Answer:"};
ParsedValue parse_category(std::string_view text);

// yes/true/1 and no/false/0. First word decides; otherwise the first
// standalone token anywhere in the text.
ParsedValue parse_boolean(std::string_view text);

ParsedValue parse_text(std::string_view text);

// Standard (non-reasoning) dispatch by task type.
ParsedValue parse_response(std::string_view text, TaskType type);

// Reasoning-mode parse. Looks at the last five non-empty lines, newest
// first, for a case-insensitive "ANSWER:" and parses what follows the colon
// with the standard parser. When that finds nothing usable it falls back to
// the whole text: the standard parser for numeric, category and text tasks;
// for boolean tasks the last yes/no/true/false/1/0 token in the text, since
// a trace states its conclusion at the end. The trace is always kept.
ParsedValue parse_reasoning(std::string_view text, TaskType type);

inline constexpr std::size_t kAnswerScanLines = 5;

}  // namespace vlmbench

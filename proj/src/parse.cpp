#include "vlmbench/parse.hpp"

#include <cctype>
#include <vector>

#include "vlmbench/text.hpp"

namespace vlmbench {

namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

// Lowercased words of the text with punctuation treated as separators.
std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string current;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || u >= 0x80) {
            current += static_cast<char>(std::tolower(u));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::optional<bool> boolean_token(std::string_view word) {
    if (word == "yes" || word == "true" || word == "1") return true;
    if (word == "no" || word == "false" || word == "0") return false;
    return std::nullopt;
}

ParsedValue last_boolean_token(std::string_view text) {
    const auto ws = words(text);
    for (auto it = ws.rbegin(); it != ws.rend(); ++it) {
        if (auto b = boolean_token(*it)) return {*b, std::nullopt};
    }
    return {};
}

}  // namespace

std::string to_cell(const Value& value) {
    struct Visitor {
        std::string operator()(const NotAvailable&) const { return std::string(kNaCell); }
        std::string operator()(double v) const { return text::format_number(v); }
        std::string operator()(const Label& l) const { return l.text; }
        std::string operator()(bool b) const { return b ? "1" : "0"; }
        std::string operator()(const FreeText& t) const { return t.text; }
    };
    return std::visit(Visitor{}, value);
}

ParsedValue parse_numeric(std::string_view s) {
    std::string_view last;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t start = i;
        std::size_t j = i;
        if (s[j] == '-') ++j;
        if (j >= s.size() || !is_digit(s[j])) {
            ++i;
            continue;
        }
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
            j += 1;
            while (j < s.size() && is_digit(s[j])) ++j;
        }
        last = s.substr(start, j - start);
        i = j;
    }
    if (last.empty()) return {};
    if (auto v = text::to_real(last)) return {*v, std::nullopt};
    return {};
}

ParsedValue parse_category(std::string_view s) {
    auto t = text::trim(s);
    for (auto prefix : kCategoryPrefixes) {
        if (text::istarts_with(t, prefix)) {
            t.remove_prefix(prefix.size());
            break;
        }
    }
    t = text::trim(t);
    while (!t.empty() && t.back() == '.') t = text::trim(t.substr(0, t.size() - 1));
    if (t.empty()) return {};
    return {Label{std::string(t)}, std::nullopt};
}

ParsedValue parse_boolean(std::string_view s) {
    const auto ws = words(s);
    if (ws.empty()) return {};
    if (auto b = boolean_token(ws.front())) return {*b, std::nullopt};
    for (const auto& w : ws) {
        if (auto b = boolean_token(w)) return {*b, std::nullopt};
    }
    return {};
}

ParsedValue parse_text(std::string_view s) {
    auto t = text::trim(s);
    if (t.empty()) return {};
    return {FreeText{std::string(t)}, std::nullopt};
}

ParsedValue parse_response(std::string_view s, TaskType type) {
    switch (type) {
        case TaskType::numeric: return parse_numeric(s);
        case TaskType::category: return parse_category(s);
        case TaskType::boolean: return parse_boolean(s);
        case TaskType::text: return parse_text(s);
    }
    return {};
}

ParsedValue parse_reasoning(std::string_view s, TaskType type) {
    constexpr std::string_view kAnswerTag = "ANSWER:";

    ParsedValue result;
    const auto lines = text::split_lines(s);
    std::size_t examined = 0;
    for (auto it = lines.rbegin(); it != lines.rend() && examined < kAnswerScanLines; ++it) {
        if (text::trim(*it).empty()) continue;
        ++examined;
        auto pos = text::ifind_last(*it, kAnswerTag);
        if (pos == std::string_view::npos) continue;
        result = parse_response(it->substr(pos + kAnswerTag.size()), type);
        break;
    }

    if (result.is_na()) {
        result = type == TaskType::boolean ? last_boolean_token(s) : parse_response(s, type);
    }
    result.reasoning_trace = std::string(s);
    return result;
}

}  // namespace vlmbench

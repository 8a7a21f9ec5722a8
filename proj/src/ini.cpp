#include "vlmbench/ini.hpp"

#include <algorithm>
#include <cctype>

#include "vlmbench/text.hpp"

namespace vlmbench::ini {

namespace {

constexpr std::string_view kFence = R"(""")";

bool valid_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}

}  // namespace

SyntaxError::SyntaxError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

Document parse(std::string_view source) {
    if (source.substr(0, 3) == "\xEF\xBB\xBF") source.remove_prefix(3);
    const auto lines = text::split_lines(source);

    Document doc;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        const auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw SyntaxError(line_no, "unterminated section header");
            auto name = text::trim(line.substr(1, line.size() - 2));
            if (!valid_name(name)) throw SyntaxError(line_no, "invalid section name '" + std::string(name) + "'");
            doc.sections.push_back({std::string(name), line_no, {}});
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw SyntaxError(line_no, "expected 'key = value'");
        auto key = text::trim(line.substr(0, eq));
        if (!valid_name(key)) throw SyntaxError(line_no, "invalid key '" + std::string(key) + "'");
        if (doc.sections.empty()) {
            throw SyntaxError(line_no, "key '" + std::string(key) + "' appears before any [section]");
        }
        auto& section = doc.sections.back();
        for (const auto& e : section.entries) {
            if (e.key == key) {
                throw SyntaxError(line_no, "duplicate key '" + std::string(key) + "' (first set on line " +
                                               std::to_string(e.line) + ")");
            }
        }

        auto value = text::trim(line.substr(eq + 1));
        std::string parsed;
        if (value.substr(0, 3) == kFence) {
            auto rest = value.substr(3);
            if (rest.size() >= 3 && rest.substr(rest.size() - 3) == kFence) {
                // inline block: keep everything between the fences, untrimmed
                auto raw = lines[i].substr(lines[i].find(kFence) + 3);
                raw = raw.substr(0, raw.rfind(kFence));
                parsed = std::string(raw);
            } else if (!text::trim(rest).empty()) {
                throw SyntaxError(line_no, "text after opening \"\"\" must move to the next line");
            } else {
                std::vector<std::string> block;
                std::size_t j = i + 1;
                for (; j < lines.size(); ++j) {
                    if (text::trim(lines[j]) == kFence) break;
                    block.emplace_back(lines[j]);
                }
                if (j == lines.size()) throw SyntaxError(line_no, "unterminated \"\"\" block for key '" + std::string(key) + "'");
                parsed = text::join(block, "\n");
                i = j;
            }
        } else {
            parsed = std::string(value);
        }
        section.entries.push_back({std::string(key), std::move(parsed), line_no});
    }
    return doc;
}

std::string render_entry(std::string_view key, std::string_view value) {
    const bool single_line_ok = value.find('\n') == std::string_view::npos &&
                                value.find('\r') == std::string_view::npos && text::trim(value) == value &&
                                value.substr(0, 3) != kFence;
    std::string out(key);
    if (single_line_ok) {
        out += value.empty() ? " =" : " = ";
        out += value;
        out += '\n';
        return out;
    }
    for (auto line : text::split_lines(value)) {
        if (text::trim(line) == kFence) {
            throw std::invalid_argument("value of '" + std::string(key) + "' contains a bare \"\"\" line");
        }
    }
    if (value.find('\r') != std::string_view::npos) {
        throw std::invalid_argument("value of '" + std::string(key) + "' contains a carriage return");
    }
    out += " = \"\"\"\n";
    out += value;
    out += "\n\"\"\"\n";
    return out;
}

}  // namespace vlmbench::ini

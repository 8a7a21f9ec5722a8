#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented sectioned key/value documents shared by run configs and
// report configs.
//
//   # comment
//   [section]
//   key = single line value
//   key = """inline block"""
//   key = """
//   multi-line block, kept verbatim
//   """
//
// Single-line values are trimmed. Block lines are kept byte-for-byte and
// joined with '\n'; a block ends at the first line whose trimmed content is
// exactly three double quotes.
namespace vlmbench::ini {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

struct Document {
    std::vector<Section> sections;
};

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(int line, const std::string& what);
    int line() const noexcept { return line_; }

private:
    int line_;
};

Document parse(std::string_view source);

// Renders `key = value`, switching to a block when the value would not
// survive the single-line form. Throws std::invalid_argument for values that
// contain a bare `"""` line and so cannot be represented at all.
std::string render_entry(std::string_view key, std::string_view value);

}  // namespace vlmbench::ini

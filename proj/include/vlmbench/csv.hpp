#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// RFC 4180 CSV: comma separated, fields quoted only when they contain a
// comma, quote, CR or LF, quotes doubled inside quoted fields. Records end
// with '\n' when written; '\r\n' is accepted when read.
namespace vlmbench::csv {

using Record = std::vector<std::string>;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Document {
    std::vector<Record> records;
    bool torn_tail = false;  // last record lacked its terminating newline and was dropped
};

// With drop_unterminated, a final record without a trailing newline (an
// interrupted append) is discarded instead of returned.
Document parse(std::string_view data, bool drop_unterminated = false);

std::string format_field(std::string_view field);
std::string format_record(const Record& record);

}  // namespace vlmbench::csv

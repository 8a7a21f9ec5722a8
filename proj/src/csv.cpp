#include "vlmbench/csv.hpp"

namespace vlmbench::csv {

Document parse(std::string_view data, bool drop_unterminated) {
    if (data.substr(0, 3) == "\xEF\xBB\xBF") data.remove_prefix(3);

    Document doc;
    Record record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool quote_closed = false;
    int line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        quote_closed = false;
    };
    auto end_record = [&] {
        end_field();
        doc.records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                    quote_closed = true;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) {
                    throw ParseError("line " + std::to_string(line) + ": quote inside unquoted field");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < data.size() && data[i + 1] == '\n') break;
                if (quote_closed) throw ParseError("line " + std::to_string(line) + ": text after closing quote");
                field += c;
                field_started = true;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (quote_closed) throw ParseError("line " + std::to_string(line) + ": text after closing quote");
                field += c;
                field_started = true;
        }
    }

    const bool pending = field_started || !field.empty() || !record.empty();
    if (in_quotes) {
        if (!drop_unterminated) throw ParseError("line " + std::to_string(line) + ": unterminated quoted field");
        doc.torn_tail = true;
    } else if (pending) {
        if (drop_unterminated) {
            doc.torn_tail = true;
        } else {
            end_record();
        }
    }
    return doc;
}

std::string format_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_record(const Record& record) {
    std::string out;
    for (std::size_t i = 0; i < record.size(); ++i) {
        if (i) out += ',';
        out += format_field(record[i]);
    }
    out += '\n';
    return out;
}

}  // namespace vlmbench::csv

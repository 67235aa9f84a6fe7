#pragma once

// Minimal CSV layer shared by the series exporters and the data pipeline:
// RFC-4180 quoting and parsing, shortest round-trip double rendering, and a
// raw string table for callers that parse columns themselves.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace loglap::csv {

/** Shortest decimal string that parses back to exactly the same double. */
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field) {
    double x = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::invalid_argument("csv: not a number: '" + std::string(field) + "'");
    return x;
}

/** Quote a field if it contains a comma, quote, or line break. */
inline std::string quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os.put(',');
        os << quote(fields[i]);
    }
    os.put('\n');
}

/** Raw parsed CSV: a header row plus data rows of unescaped string fields. */
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("csv: no column named '" + std::string(name) + "'");
    }
};

/**
 * Parse an RFC-4180 stream: quoted fields may hold commas, line breaks, and
 * doubled quotes; rows end at LF or CRLF. The first row is the header.
 * Throws on ragged rows or an unterminated quote.
 */
inline Table read(std::istream& is) {
    Table table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (table.header.empty()) {
            table.header = std::move(row);
        } else {
            if (row.size() != table.header.size())
                throw std::invalid_argument(
                    "csv: row " + std::to_string(table.rows.size() + 2) + " has " +
                    std::to_string(row.size()) + " fields, header has " +
                    std::to_string(table.header.size()));
            table.rows.push_back(std::move(row));
        }
        row.clear();
        row_has_data = false;
    };

    char c;
    while (is.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    is.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            row_has_data = true;
        } else if (c == '"') {
            in_quotes = true;
            row_has_data = true;
        } else if (c == ',') {
            end_field();
            row_has_data = true;
        } else if (c == '\n') {
            if (row_has_data || !field.empty() || !row.empty()) end_row();
        } else if (c == '\r') {
            // consumed; LF (if any) ends the row on the next iteration
        } else {
            field.push_back(c);
            row_has_data = true;
        }
    }
    if (in_quotes) throw std::invalid_argument("csv: unterminated quoted field");
    if (row_has_data || !field.empty() || !row.empty()) end_row();
    return table;
}

}  // namespace loglap::csv

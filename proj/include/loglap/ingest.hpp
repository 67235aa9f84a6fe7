#pragma once

// CSV data ingestion: price and covariate files keyed by ISO dates, log-
// return computation, and inner-join alignment. Failures throw IngestError
// with file and row context so the command line can report them verbatim.

#include "loglap/csv.hpp"
#include "loglap/series.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loglap {

/** Raised for any data-file problem: missing file, malformed row, duplicate
    or decreasing dates, non-positive prices, empty join. */
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ReturnKind { log_return, raw };

/** What to read and how: the price file becomes the observable series
    (log-returns or raw values), covariate files are inner-joined on date. */
struct IngestSpec {
    std::string price_file;
    std::map<std::string, std::string> covariate_files;
    std::string date_column = "date";
    std::string value_column = "value";
    ReturnKind return_kind = ReturnKind::log_return;
};

/** Row accounting for one ingest run. dropped_by_covariate counts return
    rows whose date is missing from that covariate file. */
struct IngestReport {
    std::size_t price_rows = 0;
    std::size_t return_rows = 0;
    std::size_t joined_rows = 0;
    std::map<std::string, std::size_t> dropped_by_covariate;
    std::vector<std::string> dates;  // joined, one per output row
};

namespace detail {

inline bool leap_year(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

inline int days_in_month(int y, int m) {
    static constexpr int base[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap_year(y)) return 29;
    return base[m - 1];
}

/** Parse YYYY-MM-DD into a comparable key y*10000 + m*100 + d, validating
    the calendar (month range, month length, leap days). */
inline int parse_iso_date(std::string_view text, const std::string& context) {
    auto fail = [&]() -> int {
        throw IngestError(context + ": malformed date '" + std::string(text) +
                          "' (expected YYYY-MM-DD)");
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return fail();
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (text[i] < '0' || text[i] > '9') return fail();
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
        return v;
    };
    int y = num(0, 4), m = num(5, 2), d = num(8, 2);
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return fail();
    return y * 10000 + m * 100 + d;
}

inline std::string format_iso_date(int y, int m, int d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline std::string next_calendar_day(const std::string& date) {
    int key = parse_iso_date(date, "next_calendar_day");
    int y = key / 10000, m = key / 100 % 100, d = key % 100;
    if (++d > days_in_month(y, m)) {
        d = 1;
        if (++m > 12) {
            m = 1;
            ++y;
        }
    }
    return format_iso_date(y, m, d);
}

struct DatedSeries {
    std::vector<std::string> dates;
    std::vector<double> values;
};

/** Read one (date, value) file, enforcing strictly increasing dates. */
inline DatedSeries read_dated_csv(const std::string& path, const std::string& date_column,
                                  const std::string& value_column) {
    std::ifstream in(path);
    if (!in) throw IngestError(path + ": cannot open file");
    csv::Table table;
    try {
        table = csv::read(in);
    } catch (const std::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    std::size_t date_col, value_col;
    try {
        date_col = table.column(date_column);
        value_col = table.column(value_column);
    } catch (const std::exception& e) {
        throw IngestError(path + ": " + e.what());
    }
    DatedSeries out;
    int prev_key = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string row_context = path + ", row " + std::to_string(i + 2);
        const std::string& date = table.rows[i][date_col];
        int key = parse_iso_date(date, row_context);
        if (i > 0 && key <= prev_key)
            throw IngestError(row_context + ": date '" + date + "' is not after '" +
                              out.dates.back() + "'" +
                              (key == prev_key ? " (duplicate date)" : ""));
        prev_key = key;
        double value;
        try {
            value = csv::parse_double(table.rows[i][value_col]);
        } catch (const std::exception& e) {
            throw IngestError(row_context + ": " + e.what());
        }
        out.dates.push_back(date);
        out.values.push_back(value);
    }
    return out;
}

}  // namespace detail

/**
 * Read the price file, form the observable series (log-returns
 * log(P_t / P_{t-1}) dated at t, or raw values as-is), and inner-join every
 * covariate file on date. Rows missing from any covariate are dropped and
 * counted per covariate in the report.
 */
inline SeriesBundle ingest_csv(const IngestSpec& spec, IngestReport* report = nullptr) {
    if (spec.price_file.empty()) throw IngestError("no price file given");
    detail::DatedSeries prices =
        detail::read_dated_csv(spec.price_file, spec.date_column, spec.value_column);
    if (prices.values.empty()) throw IngestError(spec.price_file + ": no data rows");

    std::vector<std::string> dates;
    std::vector<double> epsilon;
    if (spec.return_kind == ReturnKind::log_return) {
        if (prices.values.size() < 2)
            throw IngestError(spec.price_file + ": need at least two prices for returns");
        for (std::size_t i = 0; i < prices.values.size(); ++i)
            if (!(prices.values[i] > 0.0))
                throw IngestError(spec.price_file + ", row " + std::to_string(i + 2) +
                                  ": non-positive price " +
                                  csv::format_double(prices.values[i]));
        for (std::size_t i = 1; i < prices.values.size(); ++i) {
            epsilon.push_back(std::log(prices.values[i] / prices.values[i - 1]));
            dates.push_back(prices.dates[i]);
        }
    } else {
        epsilon = prices.values;
        dates = prices.dates;
    }

    IngestReport local;
    IngestReport& rep = report ? *report : local;
    rep = IngestReport{};
    rep.price_rows = prices.values.size();
    rep.return_rows = epsilon.size();

    std::map<std::string, std::map<std::string, double>> covariate_by_date;
    for (const auto& [name, path] : spec.covariate_files) {
        detail::DatedSeries series =
            detail::read_dated_csv(path, spec.date_column, spec.value_column);
        std::map<std::string, double> by_date;
        for (std::size_t i = 0; i < series.dates.size(); ++i)
            by_date.emplace(series.dates[i], series.values[i]);
        std::size_t dropped = 0;
        for (const std::string& d : dates)
            if (!by_date.count(d)) ++dropped;
        rep.dropped_by_covariate[name] = dropped;
        covariate_by_date[name] = std::move(by_date);
    }

    SeriesBundle bundle;
    for (std::size_t i = 0; i < epsilon.size(); ++i) {
        bool keep = true;
        for (const auto& [name, by_date] : covariate_by_date)
            if (!by_date.count(dates[i])) {
                keep = false;
                break;
            }
        if (!keep) continue;
        bundle.epsilon.push_back(epsilon[i]);
        rep.dates.push_back(dates[i]);
        for (const auto& [name, by_date] : covariate_by_date)
            bundle.covariates[name].push_back(by_date.at(dates[i]));
    }
    rep.joined_rows = bundle.epsilon.size();
    if (bundle.epsilon.empty())
        throw IngestError("join across " + spec.price_file + " and " +
                          std::to_string(spec.covariate_files.size()) +
                          " covariate file(s) is empty");
    bundle.validate();
    return bundle;
}

}  // namespace loglap

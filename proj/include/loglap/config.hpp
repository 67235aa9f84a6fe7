#pragma once

// Study configuration: defaults for the three study commands, a flat
// "key = value" config-file format with one section per study, and merge
// semantics (defaults, then file section, then command-line overrides).

#include "loglap/csv.hpp"
#include "loglap/forecast.hpp"
#include "loglap/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loglap {

/** Raised for malformed config files, unknown keys, and invalid values. */
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class StudyKind { sim_study, lorenz_study, backtest };

inline const char* study_name(StudyKind kind) {
    switch (kind) {
        case StudyKind::sim_study: return "sim-study";
        case StudyKind::lorenz_study: return "lorenz-study";
        case StudyKind::backtest: return "backtest";
    }
    return "";
}

/**
 * Settings for one study run. threshold_multipliers are the k of the
 * k sigma_hat estimation thresholds; the simulation study runs all of them,
 * the Lorenz study and backtest use the first. splits applies to the
 * Lorenz study only; split_fraction to the backtest. data_paths carries
 * the ingestion keys (price_file, iv_file, date_column, value_column,
 * return_kind) for the backtest and ingest-check commands.
 */
struct StudyConfig {
    StudyKind study = StudyKind::sim_study;
    std::size_t replicates = 1000;
    std::size_t sample_size = 625;
    double split_fraction = 0.5;
    std::vector<double> threshold_multipliers = {2.0, 3.0, 4.0};
    std::size_t ar_order = 10;
    std::size_t lag_count = 10;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> data_paths;
    std::vector<double> splits = {0.3, 0.4, 0.5};
    double classifier_threshold = event_probability_threshold;
    std::string out_dir = "out";
};

/** Stock settings per study. */
inline StudyConfig default_config(StudyKind kind) {
    StudyConfig c;
    c.study = kind;
    switch (kind) {
        case StudyKind::sim_study:
            // 1000 simulations, base size 625 (the study also runs 2x),
            // AR(10) conditional-mean model, 2/3/4 sigma thresholds
            break;
        case StudyKind::lorenz_study:
            c.replicates = 100;
            c.sample_size = 10000;
            c.lag_count = 20;
            c.threshold_multipliers = {4.0};
            break;
        case StudyKind::backtest:
            c.replicates = 100;
            c.split_fraction = 0.5;
            c.threshold_multipliers = {4.0};
            break;
    }
    return c;
}

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return out;
}

inline double parse_real(const std::string& value, const std::string& key) {
    try {
        return csv::parse_double(value);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

/** Space- or comma-separated list of reals. */
inline std::vector<double> parse_real_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::string token;
    for (char c : value + " ") {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!token.empty()) out.push_back(parse_real(token, key));
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

}  // namespace detail

/**
 * Parse the config-file format: full-line # comments, [section] headers
 * naming a study command, and key = value lines. Keys outside a section,
 * unknown sections, and duplicate keys are errors.
 */
inline ConfigMap parse_config_file(std::istream& in) {
    ConfigMap out;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = detail::trim(line);
        const std::string context = "config line " + std::to_string(line_no);
        if (text.empty() || text[0] == '#') continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError(context + ": unterminated section header '" + text + "'");
            section = detail::trim(text.substr(1, text.size() - 2));
            if (section != "sim-study" && section != "lorenz-study" && section != "backtest")
                throw ConfigError(context + ": unknown section '" + section + "'");
            out[section];
            continue;
        }
        std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(context + ": expected 'key = value', got '" + text + "'");
        if (section.empty())
            throw ConfigError(context + ": key outside any [section]");
        std::string key = detail::trim(text.substr(0, eq));
        std::string value = detail::trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError(context + ": empty key");
        if (!out[section].emplace(key, value).second)
            throw ConfigError(context + ": duplicate key '" + key + "'");
    }
    return out;
}

namespace detail {

inline void apply_config_entry(StudyConfig& c, const std::string& key,
                               const std::string& value) {
    if (key == "replicates") {
        c.replicates = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "sample_size") {
        c.sample_size = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "split_fraction") {
        c.split_fraction = parse_real(value, key);
    } else if (key == "threshold_multipliers") {
        c.threshold_multipliers = parse_real_list(value, key);
    } else if (key == "ar_order") {
        c.ar_order = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "lag_count") {
        c.lag_count = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "seed") {
        c.seed = parse_u64(value, key);
    } else if (key == "splits") {
        c.splits = parse_real_list(value, key);
    } else if (key == "classifier_threshold") {
        c.classifier_threshold = parse_real(value, key);
    } else if (key == "out_dir") {
        c.out_dir = value;
    } else if (key == "price_file" || key == "iv_file" || key == "date_column" ||
               key == "value_column" || key == "return_kind") {
        c.data_paths[key] = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

}  // namespace detail

inline void validate_study_config(const StudyConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (c.replicates == 0) fail("replicates: must be positive");
    if (c.sample_size == 0) fail("sample_size: must be positive");
    if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0))
        fail("split_fraction: must lie strictly between 0 and 1");
    if (c.threshold_multipliers.empty()) fail("threshold_multipliers: must be non-empty");
    for (double k : c.threshold_multipliers)
        if (!(k > 0.0) || !std::isfinite(k))
            fail("threshold_multipliers: entries must be positive, got " +
                 csv::format_double(k));
    if (c.ar_order == 0) fail("ar_order: must be positive");
    if (c.lag_count == 0) fail("lag_count: must be positive");
    if (c.splits.empty()) fail("splits: must be non-empty");
    for (double s : c.splits)
        if (!(s > 0.0 && s < 1.0))
            fail("splits: entries must lie strictly between 0 and 1, got " +
                 csv::format_double(s));
    if (!(c.classifier_threshold >= 0.0 && c.classifier_threshold <= 1.0))
        fail("classifier_threshold: must lie in [0, 1]");
    if (c.out_dir.empty()) fail("out_dir: must be non-empty");
}

/**
 * Build the effective config for one study: stock defaults, overridden by
 * the study's config-file section, overridden by command-line flags.
 */
inline StudyConfig make_study_config(StudyKind kind, const ConfigMap& file,
                                     const std::map<std::string, std::string>& overrides) {
    StudyConfig c = default_config(kind);
    auto section = file.find(study_name(kind));
    if (section != file.end())
        for (const auto& [key, value] : section->second)
            detail::apply_config_entry(c, key, value);
    for (const auto& [key, value] : overrides) detail::apply_config_entry(c, key, value);
    validate_study_config(c);
    return c;
}

/** Interpret the ingestion keys of a backtest or ingest-check config. */
inline IngestSpec ingest_spec_from(const StudyConfig& c) {
    IngestSpec spec;
    auto get = [&](const char* key) -> std::string {
        auto it = c.data_paths.find(key);
        return it == c.data_paths.end() ? std::string() : it->second;
    };
    spec.price_file = get("price_file");
    if (spec.price_file.empty())
        throw ConfigError("price_file: required for this command");
    std::string iv = get("iv_file");
    if (!iv.empty()) spec.covariate_files["iv"] = iv;
    if (std::string v = get("date_column"); !v.empty()) spec.date_column = v;
    if (std::string v = get("value_column"); !v.empty()) spec.value_column = v;
    if (std::string v = get("return_kind"); !v.empty()) {
        if (v == "log-return") spec.return_kind = ReturnKind::log_return;
        else if (v == "raw") spec.return_kind = ReturnKind::raw;
        else throw ConfigError("return_kind: expected 'log-return' or 'raw', got '" + v + "'");
    }
    return spec;
}

}  // namespace loglap

#pragma once

// Aligned time-series container shared across simulation, estimation, and
// the data pipeline, plus CSV export at full double precision.

#include "loglap/csv.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loglap {

/**
 * A bundle of series sharing one integer time index: the observed returns,
 * optional latent and estimated log-volatility tracks, and named external
 * covariates. Every present series must have the same length.
 */
struct SeriesBundle {
    std::vector<double> epsilon;
    std::optional<std::vector<double>> h_true;
    std::optional<std::vector<double>> h_hat;
    std::optional<std::vector<double>> h_bar_hat;
    std::map<std::string, std::vector<double>> covariates;

    std::size_t size() const noexcept { return epsilon.size(); }

    void validate() const {
        auto check = [&](const std::vector<double>& s, const std::string& name) {
            if (s.size() != epsilon.size())
                throw std::invalid_argument("SeriesBundle: '" + name + "' has length " +
                                            std::to_string(s.size()) + ", epsilon has " +
                                            std::to_string(epsilon.size()));
        };
        if (h_true) check(*h_true, "h_true");
        if (h_hat) check(*h_hat, "h_hat");
        if (h_bar_hat) check(*h_bar_hat, "h_bar_hat");
        for (const auto& [name, s] : covariates) check(s, name);
    }
};

/**
 * Write the bundle as CSV: a time index column "t", then "epsilon", then the
 * optional tracks that are present, then covariates in name order. Values
 * render with shortest round-trip precision.
 */
inline void write_series_csv(std::ostream& os, const SeriesBundle& bundle) {
    bundle.validate();
    std::vector<std::string> names{"t", "epsilon"};
    std::vector<const std::vector<double>*> columns{nullptr, &bundle.epsilon};
    auto add = [&](const std::optional<std::vector<double>>& s, const char* name) {
        if (s) {
            names.emplace_back(name);
            columns.push_back(&*s);
        }
    };
    add(bundle.h_true, "h_true");
    add(bundle.h_hat, "h_hat");
    add(bundle.h_bar_hat, "h_bar_hat");
    for (const auto& [name, s] : bundle.covariates) {
        names.push_back(name);
        columns.push_back(&s);
    }
    csv::write_row(os, names);
    std::vector<std::string> row(names.size());
    for (std::size_t t = 0; t < bundle.size(); ++t) {
        row[0] = std::to_string(t);
        for (std::size_t j = 1; j < columns.size(); ++j)
            row[j] = csv::format_double((*columns[j])[t]);
        csv::write_row(os, row);
    }
}

}  // namespace loglap

#pragma once

// One-step-ahead forecasting layer: next-step volatility from the
// conditional second moment, the dynamic extreme-event probability, the
// fixed-threshold event classifier, and out-of-sample evaluation metrics.

#include "loglap/csv.hpp"
#include "loglap/model.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loglap {

/** One forecast at time index t: conditional mean log-volatility, implied
    next-step volatility, and the (capped) tail probability estimate. */
struct ForecastRecord {
    std::size_t t = 0;
    double h_bar_hat = 0.0;
    double sigma_bar_hat = 0.0;
    double tail_prob_hat = 0.0;
    bool flag_capped = false;
};

/** Out-of-sample scorecard, mirroring one result-table row. delta_hat is
    filled by the caller that produced the forecasts; sensitivity and
    specificity are absent when the test window has no events or no
    non-events. The confusion counts always sum to the test length. */
struct EvalReport {
    double delta_hat = 0.0;
    double vol_correlation = 0.0;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t true_negatives = 0;
    std::size_t false_negatives = 0;
};

// Classifier threshold: five times the two-sided stationary Gaussian
// probability of a three-standard-deviation event (~.0027). Written as a
// literal so the .0135 boundary is exact.
inline constexpr double event_probability_threshold = 0.0135;

/**
 * Next-step volatility sqrt(E{eps^2 | h_bar, delta}) = e^{h_bar} /
 * sqrt(1 - 4 delta^2). Requires delta in [0, 1/2); the second moment
 * diverges beyond that.
 */
inline double forecast_volatility(double h_bar_hat, double delta) {
    if (!std::isfinite(h_bar_hat))
        throw std::domain_error("forecast_volatility: h_bar_hat must be finite");
    if (!std::isfinite(delta) || delta < 0.0)
        throw std::domain_error("forecast_volatility: delta must be non-negative");
    if (delta >= 0.5)
        throw std::domain_error(
            "forecast_volatility: second moment diverges for delta >= 1/2");
    return std::exp(h_bar_hat) * std::sqrt(1.0 / (1.0 - 4.0 * delta * delta));
}

/** Dynamic probability that the next observation exceeds the threshold in
    magnitude: the leading-order tail estimate, capped at 1 with a flag. */
inline TailEstimate forecast_tail_prob(double h_bar_hat, double delta, double threshold,
                                       NoiseKind noise_kind) {
    ModelParams params(delta, noise_kind);
    return exceedance_asymptotic(threshold, ConditionalState(h_bar_hat), params);
}

/** Event flag: 1 iff the probability reaches the classifier threshold
    (boundary inclusive). */
inline int classify(double prob, double threshold = event_probability_threshold) {
    if (!(prob >= 0.0) || !(prob <= 1.0))
        throw std::domain_error("classify: probability must lie in [0, 1]");
    return prob >= threshold ? 1 : 0;
}

/** Forecast record at one time index, from the fitted conditional mean and
    tail exponent. */
inline ForecastRecord make_forecast_record(std::size_t t, double h_bar_hat, double delta,
                                           double threshold, NoiseKind noise_kind) {
    TailEstimate tail = forecast_tail_prob(h_bar_hat, delta, threshold, noise_kind);
    return {t, h_bar_hat, forecast_volatility(h_bar_hat, delta), tail.value, tail.capped};
}

/**
 * Score forecasts against a test window: Pearson correlation of |eps_t|
 * with the volatility forecasts, and sensitivity/specificity of the event
 * classifier against realized events |eps_t| >= 3 sigma_hat_train. The
 * event scale is the training-frozen one, so train and test use the same
 * event definition. delta_hat is left for the caller to fill.
 */
inline EvalReport evaluate(const std::vector<double>& epsilon_test,
                           const std::vector<ForecastRecord>& forecasts,
                           double sigma_hat_train,
                           double classifier_threshold = event_probability_threshold) {
    if (epsilon_test.size() != forecasts.size())
        throw std::invalid_argument("evaluate: test series and forecasts differ in length");
    if (epsilon_test.size() < 2)
        throw std::invalid_argument("evaluate: need at least two observations");
    if (!(sigma_hat_train > 0.0) || !std::isfinite(sigma_hat_train))
        throw std::domain_error("evaluate: sigma_hat_train must be positive");

    EvalReport report;
    const std::size_t n = epsilon_test.size();
    double mean_abs = 0.0, mean_vol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_abs += std::fabs(epsilon_test[i]);
        mean_vol += forecasts[i].sigma_bar_hat;
    }
    mean_abs /= static_cast<double>(n);
    mean_vol /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = std::fabs(epsilon_test[i]) - mean_abs;
        double db = forecasts[i].sigma_bar_hat - mean_vol;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    report.vol_correlation = sab / std::sqrt(saa * sbb);

    const double event_level = 3.0 * sigma_hat_train;
    for (std::size_t i = 0; i < n; ++i) {
        bool event = std::fabs(epsilon_test[i]) >= event_level;
        bool flagged = classify(forecasts[i].tail_prob_hat, classifier_threshold) == 1;
        if (event && flagged) ++report.true_positives;
        else if (event) ++report.false_negatives;
        else if (flagged) ++report.false_positives;
        else ++report.true_negatives;
    }
    std::size_t events = report.true_positives + report.false_negatives;
    std::size_t non_events = report.true_negatives + report.false_positives;
    if (events > 0)
        report.sensitivity = static_cast<double>(report.true_positives) /
                             static_cast<double>(events);
    if (non_events > 0)
        report.specificity = static_cast<double>(report.true_negatives) /
                             static_cast<double>(non_events);
    return report;
}

inline const char* eval_report_csv_header() {
    return "seed,split,delta_hat,vol_correlation,sensitivity,specificity";
}

/** One evaluation row per repetition; absent metrics render as empty fields. */
inline void write_eval_report_row(std::ostream& os, std::uint64_t seed, double split,
                                  const EvalReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? csv::format_double(*v) : std::string();
    };
    csv::write_row(os, {std::to_string(seed), csv::format_double(split),
                        csv::format_double(report.delta_hat),
                        csv::format_double(report.vol_correlation),
                        opt(report.sensitivity), opt(report.specificity)});
}

}  // namespace loglap

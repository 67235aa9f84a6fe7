#pragma once

// The three study harnesses: the simulation study over the AR(2)/AR(5)
// volatility processes, the Lorenz-driven volatility study, and the
// train/test backtest on ingested data. Replicates run on a small thread
// pool with per-replicate seeds derived from (master seed, replicate
// index), and results are reduced in index order, so thread count never
// changes output.

#include "loglap/config.hpp"
#include "loglap/estimate.hpp"
#include "loglap/forecast.hpp"
#include "loglap/ingest.hpp"
#include "loglap/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace loglap {

namespace detail {

/** Run body(0..count-1) across a pool of max_workers threads (0 = hardware
    count). Each call writes only its own slot, so scheduling never affects
    results; the first exception is rethrown after all threads join. */
template <typename Body>
void parallel_replicates(std::size_t count, Body&& body, std::size_t max_workers = 0) {
    if (max_workers == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        max_workers = hw ? hw : 1;
    }
    std::size_t workers = std::min(count, max_workers);
    if (workers <= 1) {
        for (std::size_t r = 0; r < count; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (std::size_t r; (r = next.fetch_add(1)) < count;) {
                try {
                    body(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

struct RunningStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double sd() const {
        if (count == 0) return 0.0;
        double m = mean();
        double v = sum_sq / static_cast<double>(count) - m * m;
        return v > 0.0 ? std::sqrt(v) : 0.0;
    }
};

inline double population_sd(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    return std::sqrt(s2 / static_cast<double>(v.size()));
}

/** Lagged design rows: row i describes time t = lag + i and holds, for
    each track in order, track[t-1], ..., track[t-lag]. */
inline std::vector<std::vector<double>> build_lagged_design(
    const std::vector<const std::vector<double>*>& tracks, std::size_t lag) {
    const std::size_t n = tracks.front()->size();
    for (const auto* track : tracks)
        if (track->size() != n)
            throw std::invalid_argument("build_lagged_design: track lengths differ");
    if (n <= lag) throw std::invalid_argument("build_lagged_design: series shorter than lag");
    std::vector<std::vector<double>> rows;
    rows.reserve(n - lag);
    for (std::size_t t = lag; t < n; ++t) {
        std::vector<double> row;
        row.reserve(tracks.size() * lag);
        for (const auto* track : tracks)
            for (std::size_t j = 1; j <= lag; ++j) row.push_back((*track)[t - j]);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

/** Pad cells into aligned columns: first column left-aligned, the rest
    right-aligned. */
inline void render_aligned(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t j = 0; j < row.size(); ++j)
            width[j] = std::max(width[j], row[j].size());
    }
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) line += "  ";
            std::string cell = row[j];
            if (j == 0)
                cell.resize(width[j], ' ');
            else
                cell.insert(0, width[j] - cell.size(), ' ');
            line += cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        os << line << "\n";
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulation study

/** One (process, sample size, true delta, multiplier) cell: moments of
    delta_hat across replicates plus the count of replicates that raised
    estimation warnings. */
struct SimStudyCell {
    std::string process;
    std::size_t sample_size = 0;
    double delta_true = 0.0;
    double multiplier = 0.0;
    double avg_delta_hat = 0.0;
    double sd_delta_hat = 0.0;
    std::size_t warning_replicates = 0;
};

struct SimStudyResult {
    std::vector<std::string> processes;
    std::vector<std::size_t> sizes;
    std::vector<double> delta_grid;
    std::vector<double> multipliers;
    std::size_t ar_order = 10;
    std::vector<SimStudyCell> cells;  // ordered process, size, delta, multiplier

    const SimStudyCell& cell(std::size_t process, std::size_t size, std::size_t delta,
                             std::size_t multiplier) const {
        return cells[((process * sizes.size() + size) * delta_grid.size() + delta) *
                         multipliers.size() +
                     multiplier];
    }
};

namespace detail {

inline const std::vector<double>& process_coefficients(const std::string& name) {
    static const std::vector<double> ar2 = {0.5, 0.4};
    static const std::vector<double> ar5 = {0.05, 0.05, 0.25, 0.2, 0.35};
    if (name == "ar2") return ar2;
    if (name == "ar5") return ar5;
    throw std::invalid_argument("unknown volatility process '" + name + "'");
}

/** Replicate estimates for one cell group: delta_hat per multiplier and a
    flag when the estimator warned. */
struct SimReplicateOutcome {
    std::vector<double> delta_hats;
    std::vector<bool> warned;
};

inline SimReplicateOutcome sim_study_replicate(const std::vector<double>& coefficients,
                                               double delta_true, std::size_t sample_size,
                                               std::size_t ar_order,
                                               const std::vector<double>& multipliers,
                                               std::uint64_t seed) {
    ArSpec spec(coefficients, delta_true);
    SeriesBundle bundle = simulate_sv(spec, sample_size, NoiseKind::gaussian, seed);
    std::vector<double> h_hat = h_proxy(bundle.epsilon);
    ArPredictor predictor = fit_ar_predictor(h_hat, ar_order);
    std::vector<double> h_bar_hat = ar_one_step_predictions(predictor, h_hat);
    std::vector<double> eps_effective(bundle.epsilon.begin() + ar_order,
                                      bundle.epsilon.end());
    double sigma_hat = detail::population_sd(bundle.epsilon);
    SimReplicateOutcome out;
    for (double k : multipliers) {
        WarningLog warnings;
        DeltaEstimate est = estimate_delta(eps_effective, h_bar_hat, k * sigma_hat,
                                           NoiseKind::gaussian, &warnings);
        out.delta_hats.push_back(est.delta_hat);
        out.warned.push_back(!warnings.messages.empty());
    }
    return out;
}

}  // namespace detail

/** Moments of delta_hat for one (process, T) panel over the whole true-
    delta grid, replicates spread across the pool. */
inline std::vector<SimStudyCell> sim_study_panel(const std::string& process,
                                                 std::size_t sample_size,
                                                 const StudyConfig& config,
                                                 std::uint64_t panel_code,
                                                 std::size_t max_workers = 0) {
    const std::vector<double>& coefficients = detail::process_coefficients(process);
    std::vector<SimStudyCell> cells;
    for (std::size_t d = 0; d < 10; ++d) {
        double delta_true = 0.05 * static_cast<double>(d + 1);
        std::uint64_t cell_seed = derive_seed(config.seed, panel_code * 16 + d);
        std::vector<detail::SimReplicateOutcome> outcomes(config.replicates);
        detail::parallel_replicates(
            config.replicates,
            [&](std::size_t r) {
                outcomes[r] = detail::sim_study_replicate(
                    coefficients, delta_true, sample_size, config.ar_order,
                    config.threshold_multipliers, derive_seed(cell_seed, r + 1));
            },
            max_workers);
        for (std::size_t m = 0; m < config.threshold_multipliers.size(); ++m) {
            detail::RunningStats stats;
            std::size_t warned = 0;
            for (const auto& outcome : outcomes) {
                stats.add(outcome.delta_hats[m]);
                if (outcome.warned[m]) ++warned;
            }
            cells.push_back({process, sample_size, delta_true,
                             config.threshold_multipliers[m], stats.mean(), stats.sd(),
                             warned});
        }
    }
    return cells;
}

/** The full simulation study: both volatility processes at sample sizes
    {sample_size, 2 sample_size}, the ten-point true-delta grid, and every
    configured threshold multiplier. */
inline SimStudyResult run_sim_study(const StudyConfig& config, std::size_t max_workers = 0) {
    SimStudyResult result;
    result.processes = {"ar2", "ar5"};
    result.sizes = {config.sample_size, 2 * config.sample_size};
    result.ar_order = config.ar_order;
    for (std::size_t d = 0; d < 10; ++d)
        result.delta_grid.push_back(0.05 * static_cast<double>(d + 1));
    result.multipliers = config.threshold_multipliers;
    for (std::size_t p = 0; p < result.processes.size(); ++p)
        for (std::size_t s = 0; s < result.sizes.size(); ++s) {
            std::vector<SimStudyCell> cells = sim_study_panel(
                result.processes[p], result.sizes[s], config, p * 2 + s + 1, max_workers);
            // panel emits delta-major cells; result stores them the same way
            result.cells.insert(result.cells.end(), cells.begin(), cells.end());
        }
    return result;
}

/** Long-format rows, one per cell. */
inline void write_sim_study_csv(std::ostream& os, const SimStudyResult& result) {
    csv::write_row(os, {"process", "sample_size", "delta_true", "multiplier",
                        "avg_delta_hat", "sd_delta_hat", "warning_replicates"});
    for (const SimStudyCell& c : result.cells)
        csv::write_row(os, {c.process, std::to_string(c.sample_size),
                            csv::format_double(c.delta_true), csv::format_double(c.multiplier),
                            csv::format_double(c.avg_delta_hat),
                            csv::format_double(c.sd_delta_hat),
                            std::to_string(c.warning_replicates)});
}

/** Report-style panels: one block per (process, T) with a true-delta header
    column set and avg/sd/warning rows per multiplier. */
inline void write_sim_study_text(std::ostream& os, const SimStudyResult& result) {
    for (std::size_t p = 0; p < result.processes.size(); ++p)
        for (std::size_t s = 0; s < result.sizes.size(); ++s) {
            os << "process " << result.processes[p] << ", T = " << result.sizes[s] << " - "
               << result.ar_order << "\n";
            std::vector<std::vector<std::string>> rows;
            std::vector<std::string> header = {"delta"};
            for (double d : result.delta_grid) header.push_back(detail::fixed(d, 2));
            rows.push_back(header);
            for (const char* stat : {"avg", "sd", "warn"})
                for (std::size_t m = 0; m < result.multipliers.size(); ++m) {
                    std::vector<std::string> row = {
                        std::string(stat) + " d(" +
                        detail::fixed(result.multipliers[m], 0) + "s)"};
                    for (std::size_t d = 0; d < result.delta_grid.size(); ++d) {
                        const SimStudyCell& c = result.cell(p, s, d, m);
                        if (stat == std::string("avg"))
                            row.push_back(detail::fixed(c.avg_delta_hat, 2));
                        else if (stat == std::string("sd"))
                            row.push_back(detail::fixed(c.sd_delta_hat, 2));
                        else
                            row.push_back(std::to_string(c.warning_replicates));
                    }
                    rows.push_back(std::move(row));
                }
            detail::render_aligned(os, rows);
            os << "\n";
        }
}

// ---------------------------------------------------------------------------
// Lorenz study and backtest share the fit/estimate/forecast/evaluate pipeline

/** Aggregated out-of-sample metrics for one train/test split. */
struct SplitSummary {
    double split = 0.0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    double avg_delta_hat = 0.0, sd_delta_hat = 0.0;
    double avg_vol_correlation = 0.0, sd_vol_correlation = 0.0;
    double avg_sensitivity = 0.0, sd_sensitivity = 0.0;
    double avg_specificity = 0.0, sd_specificity = 0.0;
    std::size_t warning_replicates = 0;
};

namespace detail {

/** Everything the per-replicate pipeline needs about the data, built once:
    design rows plus the series values aligned to them. */
struct PipelineData {
    std::vector<std::vector<double>> design;
    std::vector<double> target;       // H-proxy at each design row's time
    std::vector<double> epsilon;      // observable at each design row's time
    std::size_t first_t = 0;          // global time of design row 0
};

inline PipelineData build_pipeline_data(const std::vector<double>& epsilon,
                                        const std::vector<const std::vector<double>*>& tracks,
                                        std::size_t lag) {
    PipelineData data;
    data.design = build_lagged_design(tracks, lag);
    data.first_t = lag;
    const std::vector<double>& h_hat = *tracks.front();
    data.target.assign(h_hat.begin() + lag, h_hat.end());
    data.epsilon.assign(epsilon.begin() + lag, epsilon.end());
    return data;
}

struct ReplicateResult {
    EvalReport report;
    std::vector<ForecastRecord> records;
    bool warned = false;
};

/** One train/test exercise: fit the penalized PC regression on the training
    rows, estimate delta in-sample, forecast the test rows, score. Only the
    cross-validation seed varies across replicates. */
inline ReplicateResult pipeline_replicate(const PipelineData& data, std::size_t train_rows,
                                          double multiplier, double classifier_threshold,
                                          std::uint64_t cv_seed, bool keep_records) {
    ReplicateResult out;
    WarningLog warnings;
    std::vector<std::vector<double>> train_design(data.design.begin(),
                                                  data.design.begin() + train_rows);
    std::vector<double> train_target(data.target.begin(), data.target.begin() + train_rows);
    RegressionModel model = fit_pc_lasso(train_design, train_target, 10, cv_seed, &warnings);

    std::vector<double> train_epsilon(data.epsilon.begin(), data.epsilon.begin() + train_rows);
    double sigma_hat_train = population_sd(train_epsilon);

    std::vector<double> train_h_bar(train_rows);
    for (std::size_t i = 0; i < train_rows; ++i)
        train_h_bar[i] = predict_h_bar(model, data.design[i]);
    DeltaEstimate est = estimate_delta(train_epsilon, train_h_bar,
                                       multiplier * sigma_hat_train, NoiseKind::gaussian,
                                       &warnings);

    const double event_level = 3.0 * sigma_hat_train;
    std::vector<double> test_epsilon(data.epsilon.begin() + train_rows, data.epsilon.end());
    std::vector<ForecastRecord> records;
    records.reserve(test_epsilon.size());
    for (std::size_t i = train_rows; i < data.design.size(); ++i)
        records.push_back(make_forecast_record(data.first_t + i,
                                               predict_h_bar(model, data.design[i]),
                                               est.delta_hat, event_level,
                                               NoiseKind::gaussian));

    out.report = evaluate(test_epsilon, records, sigma_hat_train, classifier_threshold);
    out.report.delta_hat = est.delta_hat;
    out.warned = !warnings.messages.empty();
    if (keep_records) out.records = std::move(records);
    return out;
}

inline SplitSummary summarize_replicates(double split, std::size_t train_rows,
                                         std::size_t test_rows,
                                         const std::vector<ReplicateResult>& results) {
    SplitSummary summary;
    summary.split = split;
    summary.train_rows = train_rows;
    summary.test_rows = test_rows;
    RunningStats delta, corr, sens, spec;
    for (const ReplicateResult& r : results) {
        delta.add(r.report.delta_hat);
        corr.add(r.report.vol_correlation);
        if (r.report.sensitivity) sens.add(*r.report.sensitivity);
        if (r.report.specificity) spec.add(*r.report.specificity);
        if (r.warned) ++summary.warning_replicates;
    }
    summary.avg_delta_hat = delta.mean();
    summary.sd_delta_hat = delta.sd();
    summary.avg_vol_correlation = corr.mean();
    summary.sd_vol_correlation = corr.sd();
    summary.avg_sensitivity = sens.mean();
    summary.sd_sensitivity = sens.sd();
    summary.avg_specificity = spec.mean();
    summary.sd_specificity = spec.sd();
    return summary;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lorenz study

struct LorenzStudyResult {
    std::vector<SplitSummary> rows;  // one per configured split
};

/** Volatility driven by the standardized Lorenz x coordinate: one fixed
    series (from the master seed), repeated train/test exercises whose only
    variation is the cross-validation fold assignment. */
inline LorenzStudyResult run_lorenz_study(const StudyConfig& config,
                                          std::size_t max_workers = 0) {
    LorenzConfig lorenz{10.0, 28.0, 8.0 / 3.0, 0.0, 1.0, 1.0, 0.01, config.sample_size};
    std::vector<Vec3> trajectory = integrate_lorenz(lorenz);
    std::vector<double> x(trajectory.size());
    for (std::size_t t = 0; t < trajectory.size(); ++t) x[t] = trajectory[t].x;
    std::vector<double> h = standardize(x);

    CounterRng noise(derive_seed(config.seed, 1));
    std::vector<double> epsilon(h.size());
    for (std::size_t t = 0; t < h.size(); ++t)
        epsilon[t] = std::exp(h[t]) * noise.gaussian();

    std::vector<double> h_hat = h_proxy(epsilon);
    detail::PipelineData data =
        detail::build_pipeline_data(epsilon, {&h_hat}, config.lag_count);

    const double multiplier = config.threshold_multipliers.front();
    LorenzStudyResult result;
    for (std::size_t s = 0; s < config.splits.size(); ++s) {
        double split = config.splits[s];
        std::size_t train_rows = static_cast<std::size_t>(
            std::llround(split * static_cast<double>(data.design.size())));
        if (train_rows < 1 || train_rows >= data.design.size())
            throw std::invalid_argument("run_lorenz_study: split leaves an empty side");
        std::uint64_t split_seed = derive_seed(config.seed, 100 + s);
        std::vector<detail::ReplicateResult> results(config.replicates);
        detail::parallel_replicates(
            config.replicates,
            [&](std::size_t r) {
                results[r] = detail::pipeline_replicate(data, train_rows, multiplier,
                                                        config.classifier_threshold,
                                                        derive_seed(split_seed, r + 1), false);
            },
            max_workers);
        result.rows.push_back(detail::summarize_replicates(
            split, train_rows, data.design.size() - train_rows, results));
    }
    return result;
}

inline void write_split_summary_csv_header(std::ostream& os) {
    csv::write_row(os, {"split", "train_rows", "test_rows", "avg_delta_hat", "sd_delta_hat",
                        "avg_vol_correlation", "sd_vol_correlation", "avg_sensitivity",
                        "sd_sensitivity", "avg_specificity", "sd_specificity",
                        "warning_replicates"});
}

inline void write_split_summary_csv_row(std::ostream& os, const SplitSummary& row) {
    csv::write_row(os, {csv::format_double(row.split), std::to_string(row.train_rows),
                        std::to_string(row.test_rows), csv::format_double(row.avg_delta_hat),
                        csv::format_double(row.sd_delta_hat),
                        csv::format_double(row.avg_vol_correlation),
                        csv::format_double(row.sd_vol_correlation),
                        csv::format_double(row.avg_sensitivity),
                        csv::format_double(row.sd_sensitivity),
                        csv::format_double(row.avg_specificity),
                        csv::format_double(row.sd_specificity),
                        std::to_string(row.warning_replicates)});
}

inline void write_lorenz_study_csv(std::ostream& os, const LorenzStudyResult& result) {
    write_split_summary_csv_header(os);
    for (const SplitSummary& row : result.rows) write_split_summary_csv_row(os, row);
}

namespace detail {

inline std::vector<std::string> split_summary_text_row(const SplitSummary& row) {
    auto pm = [](double avg, double sd) {
        return fixed(avg, 3) + " (+-" + fixed(sd, 3) + ")";
    };
    return {std::to_string(row.train_rows) + "/" + std::to_string(row.test_rows),
            pm(row.avg_delta_hat, row.sd_delta_hat),
            pm(row.avg_vol_correlation, row.sd_vol_correlation),
            pm(row.avg_sensitivity, row.sd_sensitivity),
            pm(row.avg_specificity, row.sd_specificity),
            std::to_string(row.warning_replicates)};
}

inline const std::vector<std::string>& split_summary_text_header() {
    static const std::vector<std::string> header = {
        "train/test", "avg delta_hat", "avg corr", "avg Sn", "avg Sp", "warn"};
    return header;
}

}  // namespace detail

inline void write_lorenz_study_text(std::ostream& os, const LorenzStudyResult& result) {
    std::vector<std::vector<std::string>> rows = {detail::split_summary_text_header()};
    for (const SplitSummary& row : result.rows)
        rows.push_back(detail::split_summary_text_row(row));
    detail::render_aligned(os, rows);
}

// ---------------------------------------------------------------------------
// Backtest

struct BacktestResult {
    SplitSummary summary;
    double whole_sample_delta_hat = 0.0;
    std::vector<EvalReport> reports;          // one per replicate
    std::vector<std::uint64_t> cv_seeds;      // aligned with reports
    std::vector<ForecastRecord> records;      // from the first replicate
    std::vector<double> epsilon_test;         // aligned with records
    double sigma_hat_train = 0.0;
    std::vector<std::string> dates;           // test-row dates; empty if unknown
};

/**
 * Train/test backtest on an ingested bundle: design columns are lag_count
 * lags of the H-proxy plus lag_count lags of the log of each covariate.
 * Covariates must be positive (they enter through their logarithm).
 * Replicates vary only the cross-validation seed; the forecast stream kept
 * for plotting comes from the first replicate.
 */
inline BacktestResult run_backtest(const StudyConfig& config, const SeriesBundle& bundle,
                                   const std::vector<std::string>& dates = {},
                                   std::size_t max_workers = 0) {
    bundle.validate();
    if (!dates.empty() && dates.size() != bundle.size())
        throw std::invalid_argument("run_backtest: dates misaligned with series");

    std::vector<double> h_hat = h_proxy(bundle.epsilon);
    std::vector<const std::vector<double>*> tracks = {&h_hat};
    std::vector<std::vector<double>> log_covariates;
    log_covariates.reserve(bundle.covariates.size());
    for (const auto& [name, values] : bundle.covariates) {
        std::vector<double> logged(values.size());
        for (std::size_t t = 0; t < values.size(); ++t) {
            if (!(values[t] > 0.0))
                throw std::domain_error("run_backtest: covariate '" + name +
                                        "' must be positive to enter through its log");
            logged[t] = std::log(values[t]);
        }
        log_covariates.push_back(std::move(logged));
    }
    for (const std::vector<double>& logged : log_covariates) tracks.push_back(&logged);

    detail::PipelineData data =
        detail::build_pipeline_data(bundle.epsilon, tracks, config.lag_count);
    const double multiplier = config.threshold_multipliers.front();

    std::size_t train_rows = static_cast<std::size_t>(
        std::llround(config.split_fraction * static_cast<double>(data.design.size())));
    if (train_rows < 1 || train_rows >= data.design.size())
        throw std::invalid_argument("run_backtest: split leaves an empty side");

    BacktestResult result;
    std::vector<detail::ReplicateResult> results(config.replicates);
    std::uint64_t split_seed = derive_seed(config.seed, 200);
    detail::parallel_replicates(
        config.replicates,
        [&](std::size_t r) {
            results[r] = detail::pipeline_replicate(data, train_rows, multiplier,
                                                    config.classifier_threshold,
                                                    derive_seed(split_seed, r + 1), r == 0);
        },
        max_workers);

    result.summary = detail::summarize_replicates(config.split_fraction, train_rows,
                                                  data.design.size() - train_rows, results);
    for (std::size_t r = 0; r < results.size(); ++r) {
        result.reports.push_back(results[r].report);
        result.cv_seeds.push_back(derive_seed(split_seed, r + 1));
    }
    result.records = std::move(results.front().records);
    result.epsilon_test.assign(data.epsilon.begin() + train_rows, data.epsilon.end());
    std::vector<double> train_epsilon(data.epsilon.begin(), data.epsilon.begin() + train_rows);
    result.sigma_hat_train = detail::population_sd(train_epsilon);
    if (!dates.empty())
        result.dates.assign(dates.begin() + data.first_t + train_rows, dates.end());

    // whole-sample estimate, reported alongside the split results
    WarningLog warnings;
    RegressionModel full_model =
        fit_pc_lasso(data.design, data.target, 10, derive_seed(config.seed, 300), &warnings);
    std::vector<double> full_h_bar(data.design.size());
    for (std::size_t i = 0; i < data.design.size(); ++i)
        full_h_bar[i] = predict_h_bar(full_model, data.design[i]);
    double sigma_full = detail::population_sd(data.epsilon);
    result.whole_sample_delta_hat =
        estimate_delta(data.epsilon, full_h_bar, multiplier * sigma_full,
                       NoiseKind::gaussian, &warnings)
            .delta_hat;
    return result;
}

inline void write_backtest_table_csv(std::ostream& os, const BacktestResult& result) {
    csv::write_row(os, {"split", "train_rows", "test_rows", "avg_delta_hat", "sd_delta_hat",
                        "avg_vol_correlation", "sd_vol_correlation", "avg_sensitivity",
                        "sd_sensitivity", "avg_specificity", "sd_specificity",
                        "warning_replicates", "whole_sample_delta_hat"});
    const SplitSummary& row = result.summary;
    csv::write_row(os, {csv::format_double(row.split), std::to_string(row.train_rows),
                        std::to_string(row.test_rows), csv::format_double(row.avg_delta_hat),
                        csv::format_double(row.sd_delta_hat),
                        csv::format_double(row.avg_vol_correlation),
                        csv::format_double(row.sd_vol_correlation),
                        csv::format_double(row.avg_sensitivity),
                        csv::format_double(row.sd_sensitivity),
                        csv::format_double(row.avg_specificity),
                        csv::format_double(row.sd_specificity),
                        std::to_string(row.warning_replicates),
                        csv::format_double(result.whole_sample_delta_hat)});
}

inline void write_backtest_table_text(std::ostream& os, const BacktestResult& result) {
    std::vector<std::vector<std::string>> rows = {detail::split_summary_text_header()};
    rows.push_back(detail::split_summary_text_row(result.summary));
    detail::render_aligned(os, rows);
    os << "whole-sample delta_hat = " << detail::fixed(result.whole_sample_delta_hat, 3)
       << "\n";
}

/** Per-replicate evaluation rows (seed, split, metrics). */
inline void write_backtest_summary_csv(std::ostream& os, const BacktestResult& result) {
    os << eval_report_csv_header() << "\n";
    for (std::size_t r = 0; r < result.reports.size(); ++r)
        write_eval_report_row(os, result.cv_seeds[r], result.summary.split,
                              result.reports[r]);
}

inline void write_forecast_records_csv(std::ostream& os, const BacktestResult& result) {
    bool dated = !result.dates.empty();
    std::vector<std::string> header = {"t"};
    if (dated) header.push_back("date");
    for (const char* name : {"h_bar_hat", "sigma_bar_hat", "tail_prob_hat", "flag_capped"})
        header.push_back(name);
    csv::write_row(os, header);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const ForecastRecord& rec = result.records[i];
        std::vector<std::string> row = {std::to_string(rec.t)};
        if (dated) row.push_back(result.dates[i]);
        row.push_back(csv::format_double(rec.h_bar_hat));
        row.push_back(csv::format_double(rec.sigma_bar_hat));
        row.push_back(csv::format_double(rec.tail_prob_hat));
        row.push_back(rec.flag_capped ? "1" : "0");
        csv::write_row(os, row);
    }
}

// Fig-style plot panels over the test window. Annualization (sqrt of 252
// trading days) is presentation-only and appears nowhere in the metrics.
inline constexpr double annualization_factor = 15.874507866387544;  // sqrt(252)

inline void write_panel_returns_csv(std::ostream& os, const BacktestResult& result) {
    bool dated = !result.dates.empty();
    std::vector<std::string> header = {"t"};
    if (dated) header.push_back("date");
    header.insert(header.end(), {"epsilon", "band_lower", "band_upper"});
    csv::write_row(os, header);
    const double band = 3.0 * result.sigma_hat_train;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        std::vector<std::string> row = {std::to_string(result.records[i].t)};
        if (dated) row.push_back(result.dates[i]);
        row.push_back(csv::format_double(result.epsilon_test[i]));
        row.push_back(csv::format_double(-band));
        row.push_back(csv::format_double(band));
        csv::write_row(os, row);
    }
}

inline void write_panel_volatility_csv(std::ostream& os, const BacktestResult& result) {
    bool dated = !result.dates.empty();
    std::vector<std::string> header = {"t"};
    if (dated) header.push_back("date");
    header.insert(header.end(), {"abs_return_annualized", "volatility_forecast_annualized"});
    csv::write_row(os, header);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        std::vector<std::string> row = {std::to_string(result.records[i].t)};
        if (dated) row.push_back(result.dates[i]);
        row.push_back(
            csv::format_double(annualization_factor * std::fabs(result.epsilon_test[i])));
        row.push_back(
            csv::format_double(annualization_factor * result.records[i].sigma_bar_hat));
        csv::write_row(os, row);
    }
}

inline void write_panel_tail_probability_csv(std::ostream& os, const BacktestResult& result,
                                             double classifier_threshold) {
    bool dated = !result.dates.empty();
    std::vector<std::string> header = {"t"};
    if (dated) header.push_back("date");
    header.insert(header.end(), {"tail_prob_hat", "classifier_threshold"});
    csv::write_row(os, header);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        std::vector<std::string> row = {std::to_string(result.records[i].t)};
        if (dated) row.push_back(result.dates[i]);
        row.push_back(csv::format_double(result.records[i].tail_prob_hat));
        row.push_back(csv::format_double(classifier_threshold));
        csv::write_row(os, row);
    }
}

// ---------------------------------------------------------------------------
// Bundled synthetic fixture

/** Ground truth behind the bundled example data: an AR(2) log-volatility
    process with delta 0.2, returns scaled to about one percent a day,
    prices 100 e^{cumulative return}, and a noisy volatility proxy
    0.01 exp(H_t + 0.1 N(0,1)) standing in for implied vol. h_true keeps
    the simulator's convention, so it matches log-volatility up to the
    constant log of the return scale. */
struct SyntheticFixture {
    SeriesBundle bundle;              // scaled epsilon + h_true from the simulator
    std::vector<double> prices;       // length epsilon.size() + 1
    std::vector<double> iv;           // aligned with epsilon
    std::vector<std::string> price_dates;
    std::vector<std::string> iv_dates;
};

inline SyntheticFixture make_synthetic_fixture(std::size_t length = 1250,
                                               std::uint64_t seed = 0xf17eULL) {
    const double return_scale = 0.01;
    SyntheticFixture fx;
    fx.bundle = simulate_sv(ArSpec({0.5, 0.4}, 0.2), length, NoiseKind::gaussian,
                            derive_seed(seed, 1));
    for (double& e : fx.bundle.epsilon) e *= return_scale;
    fx.prices.push_back(100.0);
    double log_price = std::log(100.0);
    for (double e : fx.bundle.epsilon) {
        log_price += e;
        fx.prices.push_back(std::exp(log_price));
    }
    CounterRng iv_noise(derive_seed(seed, 2));
    const std::vector<double>& h_true = *fx.bundle.h_true;
    for (std::size_t t = 0; t < length; ++t)
        fx.iv.push_back(return_scale * std::exp(h_true[t] + 0.1 * iv_noise.gaussian()));

    std::string date = "2015-01-01";
    for (std::size_t i = 0; i < fx.prices.size(); ++i) {
        fx.price_dates.push_back(date);
        if (i > 0) fx.iv_dates.push_back(date);  // iv sits on return dates
        date = detail::next_calendar_day(date);
    }
    return fx;
}

inline void write_dated_csv(std::ostream& os, const std::vector<std::string>& dates,
                            const std::vector<double>& values) {
    csv::write_row(os, {"date", "value"});
    for (std::size_t i = 0; i < dates.size(); ++i)
        csv::write_row(os, {dates[i], csv::format_double(values[i])});
}

}  // namespace loglap

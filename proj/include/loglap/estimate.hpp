#pragma once

// Estimation pipeline: the observable log-volatility proxy, Yule-Walker
// autoregression, L1-penalized principal-component regression with
// cross-validated penalty selection, and the probabilistic-moment tail
// exponent estimator on its fixed search grid.

#include "loglap/csv.hpp"
#include "loglap/linalg.hpp"
#include "loglap/model.hpp"
#include "loglap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loglap {

/** Sink for non-fatal estimation diagnostics (dropped inputs, empty tails). */
struct WarningLog {
    std::vector<std::string> messages;
    void add(std::string message) { messages.push_back(std::move(message)); }
};

/**
 * Fitted principal-component regression. center/scale hold the training
 * statistics per input covariate; a scale of 0 marks an input dropped for
 * zero variance (its basis rows are zero and it is ignored at prediction).
 * pc_basis[m] is the loading column of component m; coefficients align with
 * components.
 */
struct RegressionModel {
    std::vector<double> center;
    std::vector<double> scale;
    std::vector<std::vector<double>> pc_basis;
    double intercept = 0.0;
    std::vector<double> coefficients;
    double lambda_selected = 0.0;
};

/** Tail exponent estimate: grid argmin, the threshold used, and the
    minimized moment-constraint residual. */
struct DeltaEstimate {
    double delta_hat = 0.0;
    double threshold_used = 0.0;
    double residual = 0.0;
};

// (log 2 + Euler-Mascheroni) / 2: the additive constant that centers
// log|epsilon| into an unbiased log-volatility proxy under Gaussian noise.
inline constexpr double h_proxy_offset = 0.63518142273073908501;

/**
 * Observable proxy for the log-volatility: log|epsilon_t| + h_proxy_offset.
 * Magnitudes at or below 1e-300 are clamped to 1e-12 times the sample
 * standard deviation so zero returns stay finite without moving the
 * regression. Throws if clamping is needed on a degenerate series.
 */
inline std::vector<double> h_proxy(const std::vector<double>& epsilon) {
    if (epsilon.empty()) throw std::invalid_argument("h_proxy: empty series");
    double clamp = 0.0;
    bool clamp_ready = false;
    std::vector<double> out(epsilon.size());
    for (std::size_t t = 0; t < epsilon.size(); ++t) {
        double a = std::fabs(epsilon[t]);
        if (!std::isfinite(a)) throw std::domain_error("h_proxy: non-finite input");
        if (a <= 1e-300) {
            if (!clamp_ready) {
                double mean = 0.0;
                for (double e : epsilon) mean += e;
                mean /= static_cast<double>(epsilon.size());
                double var = 0.0;
                for (double e : epsilon) var += (e - mean) * (e - mean);
                var /= static_cast<double>(epsilon.size());
                clamp = 1e-12 * std::sqrt(var);
                clamp_ready = true;
                if (!(clamp > 0.0))
                    throw std::domain_error("h_proxy: series has no scale to clamp against");
            }
            a = clamp;
        }
        out[t] = std::log(a) + h_proxy_offset;
    }
    return out;
}

/**
 * Autoregressive coefficients of the given order via Levinson-Durbin on
 * biased sample autocovariances (demeaned internally). order 0 returns an
 * empty vector; the fitted model is always stationary.
 */
inline std::vector<double> yule_walker_ar(const std::vector<double>& series,
                                          std::size_t order) {
    if (series.size() <= order)
        throw std::invalid_argument("yule_walker_ar: series length must exceed order");
    if (order == 0) return {};
    const std::size_t n = series.size();
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    std::vector<double> r(order + 1, 0.0);
    for (std::size_t k = 0; k <= order; ++k) {
        double acc = 0.0;
        for (std::size_t t = k; t < n; ++t)
            acc += (series[t] - mean) * (series[t - k] - mean);
        r[k] = acc / static_cast<double>(n);
    }
    if (!(r[0] > 0.0)) throw std::domain_error("yule_walker_ar: series variance is zero");
    return levinson_durbin(r);
}

/** Yule-Walker autoregression with its training mean, for one-step
    prediction in levels: the mean is removed at fit time and added back. */
struct ArPredictor {
    double mean = 0.0;
    std::vector<double> coefficients;
};

inline ArPredictor fit_ar_predictor(const std::vector<double>& train, std::size_t order) {
    ArPredictor m;
    double mean = 0.0;
    for (double x : train) mean += x;
    m.mean = mean / static_cast<double>(train.size());
    m.coefficients = yule_walker_ar(train, order);
    return m;
}

/** One-step-ahead predictions over a series: entry j predicts series[p + j]
    from the p preceding values, so the output has series.size() - p entries. */
inline std::vector<double> ar_one_step_predictions(const ArPredictor& model,
                                                   const std::vector<double>& series) {
    const std::size_t p = model.coefficients.size();
    if (series.size() < p)
        throw std::invalid_argument("ar_one_step_predictions: series shorter than order");
    std::vector<double> out(series.size() - p);
    for (std::size_t t = p; t < series.size(); ++t) {
        double acc = model.mean;
        for (std::size_t i = 0; i < p; ++i)
            acc += model.coefficients[i] * (series[t - 1 - i] - model.mean);
        out[t - p] = acc;
    }
    return out;
}

namespace detail {

inline double soft_threshold(double x, double lambda) {
    if (x > lambda) return x - lambda;
    if (x < -lambda) return x + lambda;
    return 0.0;
}

// Lasso objective (1/2n)||y - X beta||^2 + lambda ||beta||_1 on centered
// data (no intercept); columns indexed over the active row subset.
inline double lasso_objective(const std::vector<std::vector<double>>& columns,
                              const std::vector<double>& y,
                              const std::vector<double>& beta, double lambda) {
    const std::size_t n = y.size();
    double rss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double r = y[t];
        for (std::size_t m = 0; m < columns.size(); ++m) r -= columns[m][t] * beta[m];
        rss += r * r;
    }
    double l1 = 0.0;
    for (double b : beta) l1 += std::fabs(b);
    return rss / (2.0 * static_cast<double>(n)) + lambda * l1;
}

// Cyclic coordinate descent on centered data. beta is the warm start and is
// updated in place; stops when the largest coefficient move in a full cycle
// drops below 1e-9 or after max_cycles cycles.
inline void lasso_cd(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& y, double lambda,
                     std::vector<double>& beta, int max_cycles = 100000) {
    const std::size_t n = y.size();
    const std::size_t m_count = columns.size();
    std::vector<double> col_ms(m_count);  // mean square of each column
    for (std::size_t m = 0; m < m_count; ++m) {
        double acc = 0.0;
        for (double x : columns[m]) acc += x * x;
        col_ms[m] = acc / static_cast<double>(n);
    }
    std::vector<double> residual(y);
    for (std::size_t m = 0; m < m_count; ++m)
        if (beta[m] != 0.0)
            for (std::size_t t = 0; t < n; ++t) residual[t] -= columns[m][t] * beta[m];

    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        double max_move = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            if (col_ms[m] == 0.0) continue;
            double inner = 0.0;
            for (std::size_t t = 0; t < n; ++t) inner += columns[m][t] * residual[t];
            double rho = inner / static_cast<double>(n) + col_ms[m] * beta[m];
            double updated = soft_threshold(rho, lambda) / col_ms[m];
            double move = updated - beta[m];
            if (move != 0.0) {
                for (std::size_t t = 0; t < n; ++t) residual[t] -= columns[m][t] * move;
                beta[m] = updated;
                max_move = std::fmax(max_move, std::fabs(move));
            }
        }
        if (max_move < 1e-9) break;
    }
}

// Deterministic shuffle of 0..n-1 from a counter stream.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    CounterRng rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_bits() % i]);
    return idx;
}

}  // namespace detail

/**
 * L1-penalized principal-component regression. Covariates are centered and
 * scaled by training statistics (zero-variance inputs dropped with a
 * warning), projected onto the full principal-component basis of their
 * correlation matrix, and the coefficients solve the lasso objective by
 * cyclic coordinate descent over a 100-point logarithmic penalty grid from
 * lambda_max down to 1e-4 lambda_max. The reported model is refit on all
 * rows at the penalty minimizing mean absolute folds-fold cross-validation
 * error, with fold membership drawn from seed; ties go to the larger
 * penalty (the sparser model).
 */
inline RegressionModel fit_pc_lasso(const std::vector<std::vector<double>>& design,
                                    const std::vector<double>& target, int folds = 10,
                                    std::uint64_t seed = 0,
                                    WarningLog* warnings = nullptr) {
    const std::size_t n = design.size();
    if (n != target.size())
        throw std::invalid_argument("fit_pc_lasso: design and target lengths differ");
    if (n < 2) throw std::invalid_argument("fit_pc_lasso: need at least two rows");
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        throw std::invalid_argument("fit_pc_lasso: folds must lie in [2, rows]");
    const std::size_t k_in = design[0].size();
    if (k_in == 0) throw std::invalid_argument("fit_pc_lasso: design has no covariates");
    for (const auto& row : design)
        if (row.size() != k_in)
            throw std::invalid_argument("fit_pc_lasso: ragged design rows");

    RegressionModel model;
    model.center.resize(k_in);
    model.scale.resize(k_in);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < k_in; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += design[t][j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double d = design[t][j] - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / static_cast<double>(n));
        model.center[j] = mean;
        if (sd <= 1e-12 * std::fmax(1.0, std::fabs(mean))) {
            model.scale[j] = 0.0;
            if (warnings)
                warnings->add("fit_pc_lasso: dropped zero-variance covariate " +
                              std::to_string(j));
        } else {
            model.scale[j] = sd;
            kept.push_back(j);
        }
    }
    const std::size_t k = kept.size();
    if (k == 0) throw std::domain_error("fit_pc_lasso: every covariate is degenerate");

    // Standardized kept columns and their correlation matrix.
    std::vector<std::vector<double>> u(k, std::vector<double>(n));
    for (std::size_t m = 0; m < k; ++m) {
        std::size_t j = kept[m];
        for (std::size_t t = 0; t < n; ++t)
            u[m][t] = (design[t][j] - model.center[j]) / model.scale[j];
    }
    std::vector<std::vector<double>> corr(k, std::vector<double>(k));
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) acc += u[a][t] * u[b][t];
            corr[a][b] = corr[b][a] = acc / static_cast<double>(n);
        }
    SymmetricEigen eig = jacobi_eigen_symmetric(corr);

    model.pc_basis.assign(k, std::vector<double>(k_in, 0.0));
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t a = 0; a < k; ++a)
            model.pc_basis[m][kept[a]] = eig.eigenvectors[m][a];

    std::vector<std::vector<double>> scores(k, std::vector<double>(n, 0.0));
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t a = 0; a < k; ++a) {
            double w = eig.eigenvectors[m][a];
            if (w == 0.0) continue;
            for (std::size_t t = 0; t < n; ++t) scores[m][t] += w * u[a][t];
        }

    double y_mean = 0.0;
    for (double y : target) y_mean += y;
    y_mean /= static_cast<double>(n);
    model.intercept = y_mean;
    std::vector<double> yc(n);
    for (std::size_t t = 0; t < n; ++t) yc[t] = target[t] - y_mean;

    double lambda_max = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
        double inner = 0.0;
        for (std::size_t t = 0; t < n; ++t) inner += scores[m][t] * yc[t];
        lambda_max = std::fmax(lambda_max, std::fabs(inner / static_cast<double>(n)));
    }
    if (lambda_max == 0.0) {
        // Target carries no signal along any component; the zero model is exact.
        model.coefficients.assign(k, 0.0);
        model.lambda_selected = 0.0;
        return model;
    }

    const int grid_size = 100;
    std::vector<double> grid(grid_size);
    for (int i = 0; i < grid_size; ++i)
        grid[i] = lambda_max * std::pow(10.0, -4.0 * i / (grid_size - 1));

    // Cross-validation: random fold membership from the run seed. Each fold
    // refits the whole penalty path with warm starts on its training rows
    // (principal components stay fixed from the full training set) and
    // scores held-out rows by absolute error.
    std::vector<std::size_t> perm = detail::shuffled_indices(n, seed);
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i)
        fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

    std::vector<double> cv_abs_error(grid_size, 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> in_rows, out_rows;
        for (std::size_t t = 0; t < n; ++t)
            (fold_of[t] == f ? out_rows : in_rows).push_back(t);

        std::vector<std::vector<double>> cols(k, std::vector<double>(in_rows.size()));
        std::vector<double> ysub(in_rows.size());
        for (std::size_t i = 0; i < in_rows.size(); ++i) ysub[i] = target[in_rows[i]];
        double sub_mean = 0.0;
        for (double y : ysub) sub_mean += y;
        sub_mean /= static_cast<double>(ysub.size());
        for (double& y : ysub) y -= sub_mean;
        std::vector<double> col_mean(k, 0.0);
        for (std::size_t m = 0; m < k; ++m) {
            for (std::size_t i = 0; i < in_rows.size(); ++i)
                col_mean[m] += scores[m][in_rows[i]];
            col_mean[m] /= static_cast<double>(in_rows.size());
            for (std::size_t i = 0; i < in_rows.size(); ++i)
                cols[m][i] = scores[m][in_rows[i]] - col_mean[m];
        }

        std::vector<double> beta(k, 0.0);
        for (int i = 0; i < grid_size; ++i) {
            detail::lasso_cd(cols, ysub, grid[i], beta);
            for (std::size_t t : out_rows) {
                double pred = sub_mean;
                for (std::size_t m = 0; m < k; ++m)
                    pred += beta[m] * (scores[m][t] - col_mean[m]);
                cv_abs_error[i] += std::fabs(target[t] - pred);
            }
        }
    }

    int best = 0;
    for (int i = 1; i < grid_size; ++i)
        if (cv_abs_error[i] < cv_abs_error[best]) best = i;
    model.lambda_selected = grid[best];

    // Refit on all rows down the path to the selected penalty.
    std::vector<double> beta(k, 0.0);
    for (int i = 0; i <= best; ++i) detail::lasso_cd(scores, yc, grid[i], beta);
    model.coefficients = std::move(beta);
    return model;
}

/** Apply a fitted model to one covariate row: standardize, project onto the
    component basis, and evaluate the linear model. */
inline double predict_h_bar(const RegressionModel& model, const std::vector<double>& row) {
    const std::size_t k_in = model.center.size();
    if (row.size() != k_in)
        throw std::invalid_argument("predict_h_bar: row dimension mismatch");
    double acc = model.intercept;
    for (std::size_t m = 0; m < model.coefficients.size(); ++m) {
        if (model.coefficients[m] == 0.0) continue;
        double score = 0.0;
        for (std::size_t j = 0; j < k_in; ++j) {
            if (model.scale[j] == 0.0) continue;
            score += model.pc_basis[m][j] * (row[j] - model.center[j]) / model.scale[j];
        }
        acc += model.coefficients[m] * score;
    }
    return acc;
}

/**
 * Probabilistic moment-constraint estimate of the tail exponent scale: grid
 * search over delta in {0.01, ..., 1.00} minimizing the absolute gap
 * between the count of threshold exceedances and the summed leading-order
 * tail weights. The per-day weights are left uncapped: the sum is a moment
 * constraint rather than a reported probability, and truncating days whose
 * leading term exceeds one flattens the objective exactly in the
 * spread-volatility regime the estimator has to resolve. Ties break toward
 * smaller delta. Warns when no observation exceeds the threshold.
 */
inline DeltaEstimate estimate_delta(const std::vector<double>& epsilon,
                                    const std::vector<double>& h_bar_hat,
                                    double threshold, NoiseKind noise_kind,
                                    WarningLog* warnings = nullptr) {
    if (epsilon.size() != h_bar_hat.size())
        throw std::invalid_argument("estimate_delta: series lengths differ");
    if (epsilon.empty()) throw std::invalid_argument("estimate_delta: empty series");
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw std::domain_error("estimate_delta: threshold must be positive");

    std::size_t count = 0;
    for (double e : epsilon)
        if (std::fabs(e) >= threshold) ++count;
    if (count == 0 && warnings)
        warnings->add("estimate_delta: no exceedances of threshold " +
                      csv::format_double(threshold));

    DeltaEstimate best;
    bool have_best = false;
    for (int g = 1; g <= 100; ++g) {
        double delta = g / 100.0;
        ModelParams params(delta, noise_kind);
        double prob_sum = 0.0;
        for (double h : h_bar_hat) {
            ScaledThreshold th =
                scaled_threshold(threshold, ConditionalState(h), params);
            prob_sum += std::exp(detail::leading_tail_log(th.lambda_tilde, params));
        }
        double objective = std::fabs(static_cast<double>(count) - prob_sum);
        if (!have_best || objective < best.residual) {
            best = {delta, threshold, objective};
            have_best = true;
        }
    }
    return best;
}

/** Serialize a fitted model as flat key = value lines at full precision. */
inline void write_regression_model(std::ostream& os, const RegressionModel& model) {
    auto write_vector = [&os](const char* key, const std::vector<double>& v) {
        os << key << " =";
        for (double x : v) os << ' ' << csv::format_double(x);
        os << '\n';
    };
    os << "inputs = " << model.center.size() << '\n';
    os << "components = " << model.coefficients.size() << '\n';
    write_vector("center", model.center);
    write_vector("scale", model.scale);
    for (std::size_t m = 0; m < model.pc_basis.size(); ++m)
        write_vector(("pc_basis_" + std::to_string(m)).c_str(), model.pc_basis[m]);
    os << "intercept = " << csv::format_double(model.intercept) << '\n';
    write_vector("coefficients", model.coefficients);
    os << "lambda = " << csv::format_double(model.lambda_selected) << '\n';
}

inline RegressionModel read_regression_model(std::istream& is) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("regression model: malformed line '" + line + "'");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    auto find = [&entries](const std::string& key) -> const std::string& {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        throw std::invalid_argument("regression model: missing key '" + key + "'");
    };
    auto parse_vector = [](const std::string& text) {
        std::vector<double> v;
        std::istringstream ss(text);
        std::string tok;
        while (ss >> tok) v.push_back(csv::parse_double(tok));
        return v;
    };

    RegressionModel model;
    std::size_t inputs = static_cast<std::size_t>(csv::parse_double(find("inputs")));
    std::size_t components = static_cast<std::size_t>(csv::parse_double(find("components")));
    model.center = parse_vector(find("center"));
    model.scale = parse_vector(find("scale"));
    model.pc_basis.resize(components);
    for (std::size_t m = 0; m < components; ++m)
        model.pc_basis[m] = parse_vector(find("pc_basis_" + std::to_string(m)));
    model.intercept = csv::parse_double(find("intercept"));
    model.coefficients = parse_vector(find("coefficients"));
    model.lambda_selected = csv::parse_double(find("lambda"));
    if (model.center.size() != inputs || model.scale.size() != inputs ||
        model.coefficients.size() != components)
        throw std::invalid_argument("regression model: inconsistent dimensions");
    for (const auto& col : model.pc_basis)
        if (col.size() != inputs)
            throw std::invalid_argument("regression model: inconsistent basis dimensions");
    return model;
}

}  // namespace loglap

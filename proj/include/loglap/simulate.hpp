#pragma once

// Synthetic data generators: Laplace log-volatility innovations, the AR
// stochastic-volatility process, a fixed-step Lorenz integrator used as a
// deterministic volatility driver, and series standardization.

#include "loglap/csv.hpp"
#include "loglap/model.hpp"
#include "loglap/rng.hpp"
#include "loglap/series.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loglap {

namespace detail {

// Stationarity test for the AR polynomial 1 - sum a_k z^k: step the
// coefficients down one order at a time; the model is stationary iff every
// reflection coefficient (the last coefficient at each order) lies in
// (-1, 1). Equivalent to the companion matrix having spectral radius < 1.
inline bool ar_is_stationary(std::vector<double> a) {
    for (std::size_t k = a.size(); k >= 1; --k) {
        double r = a[k - 1];
        if (!(std::fabs(r) < 1.0)) return false;
        double denom = 1.0 - r * r;
        std::vector<double> next(k - 1);
        for (std::size_t j = 0; j + 1 < k; ++j)
            next[j] = (a[j] + r * a[k - 2 - j]) / denom;
        a = std::move(next);
    }
    return true;
}

}  // namespace detail

/**
 * Autoregression for the log-volatility: coefficients ordered lag-1 first,
 * Laplace innovation scale delta, and the number of warm-up steps discarded
 * before sampling starts. Construction rejects non-stationary coefficient
 * lists (companion spectral radius must be below 1).
 */
struct ArSpec {
    std::vector<double> coefficients;
    double delta;
    std::size_t burn_in;

    explicit ArSpec(std::vector<double> coefficients_, double delta_,
                    std::size_t burn_in_ = 500)
        : coefficients(std::move(coefficients_)), delta(delta_), burn_in(burn_in_) {
        if (!std::isfinite(delta) || delta <= 0.0 || delta > 1.0)
            throw std::domain_error("ArSpec: delta must lie in (0, 1]");
        for (double c : coefficients)
            if (!std::isfinite(c))
                throw std::domain_error("ArSpec: coefficients must be finite");
        if (!detail::ar_is_stationary(coefficients))
            throw std::domain_error("ArSpec: coefficients are not stationary");
    }
};

/** Parameters and initial state for the Lorenz system integrator. */
struct LorenzConfig {
    double sigma;
    double rho;
    double beta;
    double x0;
    double y0;
    double z0;
    double dt;
    std::size_t n_steps;

    LorenzConfig(double sigma_, double rho_, double beta_, double x0_, double y0_,
                 double z0_, double dt_, std::size_t n_steps_)
        : sigma(sigma_), rho(rho_), beta(beta_), x0(x0_), y0(y0_), z0(z0_), dt(dt_),
          n_steps(n_steps_) {
        for (double v : {sigma, rho, beta, x0, y0, z0})
            if (!std::isfinite(v))
                throw std::domain_error("LorenzConfig: parameters must be finite");
        if (!std::isfinite(dt) || dt <= 0.0)
            throw std::domain_error("LorenzConfig: dt must be positive");
        if (n_steps < 1) throw std::domain_error("LorenzConfig: n_steps must be >= 1");
    }
};

struct Vec3 {
    double x;
    double y;
    double z;
};

/** I.i.d. Laplace draws with mean absolute deviation delta. */
inline std::vector<double> sample_laplace(double delta, std::size_t count,
                                          std::uint64_t seed) {
    if (!std::isfinite(delta) || delta <= 0.0)
        throw std::domain_error("sample_laplace: delta must be positive");
    CounterRng rng(seed);
    std::vector<double> out(count);
    for (double& h : out) h = rng.laplace(delta);
    return out;
}

/**
 * Simulate the stochastic-volatility process: H follows the autoregression
 * with Laplace innovations from a zero initial state, and the observed
 * series is epsilon_t = e^{H_t} z_t with i.i.d. unit-scale noise z of the
 * requested kind. The first spec.burn_in steps are discarded. The returned
 * bundle keeps the latent path in h_true and the conditional mean path in
 * the covariate "h_bar_true" for ground-truth checks.
 *
 * Innovations and noise come from two independent streams derived from
 * seed, so the retained z draws do not depend on burn_in or delta.
 */
inline SeriesBundle simulate_sv(const ArSpec& spec, std::size_t length,
                                NoiseKind noise_kind, std::uint64_t seed) {
    CounterRng innovation_rng(derive_seed(seed, 1));
    CounterRng noise_rng(derive_seed(seed, 2));

    const std::size_t p = spec.coefficients.size();
    std::vector<double> lagged(p, 0.0);  // lagged[i] = H_{t-1-i}

    SeriesBundle bundle;
    bundle.epsilon.resize(length);
    bundle.h_true = std::vector<double>(length);
    std::vector<double> h_bar_true(length);

    const std::size_t total = spec.burn_in + length;
    for (std::size_t t = 0; t < total; ++t) {
        double h_bar = 0.0;
        for (std::size_t i = 0; i < p; ++i) h_bar += spec.coefficients[i] * lagged[i];
        double h = h_bar + innovation_rng.laplace(spec.delta);
        if (t >= spec.burn_in) {
            std::size_t j = t - spec.burn_in;
            double z = noise_kind == NoiseKind::gaussian ? noise_rng.gaussian()
                                                         : noise_rng.laplace(1.0);
            bundle.epsilon[j] = std::exp(h) * z;
            (*bundle.h_true)[j] = h;
            h_bar_true[j] = h_bar;
        }
        for (std::size_t i = p; i-- > 1;) lagged[i] = lagged[i - 1];
        if (p > 0) lagged[0] = h;
    }
    bundle.covariates.emplace("h_bar_true", std::move(h_bar_true));
    return bundle;
}

namespace detail {

inline Vec3 lorenz_derivative(const Vec3& s, const LorenzConfig& c) {
    return {c.sigma * (s.y - s.x), s.x * (c.rho - s.z) - s.y, s.x * s.y - c.beta * s.z};
}

inline Vec3 rk4_step(const Vec3& s, double dt, const LorenzConfig& c) {
    auto scaled_add = [](const Vec3& a, const Vec3& d, double w) {
        return Vec3{a.x + w * d.x, a.y + w * d.y, a.z + w * d.z};
    };
    Vec3 k1 = lorenz_derivative(s, c);
    Vec3 k2 = lorenz_derivative(scaled_add(s, k1, 0.5 * dt), c);
    Vec3 k3 = lorenz_derivative(scaled_add(s, k2, 0.5 * dt), c);
    Vec3 k4 = lorenz_derivative(scaled_add(s, k3, dt), c);
    return {s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
            s.z + dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z)};
}

}  // namespace detail

/**
 * Fixed-step fourth-order Runge-Kutta trajectory of config.n_steps samples.
 * The first sample is the initial state; sample k is the state after k
 * steps of size config.dt. Throws on a non-finite state.
 */
inline std::vector<Vec3> integrate_lorenz(const LorenzConfig& config) {
    std::vector<Vec3> trajectory;
    trajectory.reserve(config.n_steps);
    Vec3 s{config.x0, config.y0, config.z0};
    trajectory.push_back(s);
    for (std::size_t k = 1; k < config.n_steps; ++k) {
        s = detail::rk4_step(s, config.dt, config);
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.z))
            throw std::runtime_error("integrate_lorenz: trajectory diverged at step " +
                                     std::to_string(k));
        trajectory.push_back(s);
    }
    return trajectory;
}

/** Write a trajectory as CSV with columns t, x, y, z. */
inline void write_trajectory_csv(std::ostream& os, const std::vector<Vec3>& trajectory) {
    csv::write_row(os, {"t", "x", "y", "z"});
    for (std::size_t t = 0; t < trajectory.size(); ++t)
        csv::write_row(os, {std::to_string(t), csv::format_double(trajectory[t].x),
                            csv::format_double(trajectory[t].y),
                            csv::format_double(trajectory[t].z)});
}

/**
 * Center and de-scale a series to mean 0 and population standard deviation 1.
 * Requires length >= 2 and nonzero variance.
 */
inline std::vector<double> standardize(const std::vector<double>& x) {
    if (x.size() < 2)
        throw std::invalid_argument("standardize: need at least two samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    if (!(var > 0.0))
        throw std::domain_error("standardize: series variance is zero");
    double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) out[t] = (x[t] - mean) / sd;
    return out;
}

}  // namespace loglap

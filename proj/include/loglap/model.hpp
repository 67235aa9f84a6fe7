#pragma once

// Conditional probabilistic structure of the volatility process: the
// log-Laplace volatility density and tail, conditional return moments and
// kurtosis, the conditional noise density, and exceedance probabilities in
// closed form, in leading order, and as a corrected asymptotic series.
// Both the Gaussian-noise and Laplace-noise variants are covered.

#include "loglap/specfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace loglap {

enum class NoiseKind { gaussian, laplace };

/** Model parameters: mean absolute log-volatility innovation and noise law. */
struct ModelParams {
    double delta;
    NoiseKind noise_kind;

    explicit ModelParams(double delta_, NoiseKind kind = NoiseKind::gaussian)
        : delta(delta_), noise_kind(kind) {
        if (!std::isfinite(delta) || delta <= 0.0 || delta > 1.0)
            throw std::domain_error("ModelParams: delta must lie in (0, 1]");
    }
};

/** Conditional mean log-volatility at the forecast horizon. */
struct ConditionalState {
    double h_bar;

    explicit ConditionalState(double h_bar_) : h_bar(h_bar_) {
        if (!std::isfinite(h_bar))
            throw std::domain_error("ConditionalState: h_bar must be finite");
    }
};

/** A raw threshold together with its noise-scaled version. */
struct ScaledThreshold {
    double lambda;
    double lambda_tilde;
};

/** Exceedance probability with a loss-of-precision indicator. */
struct Exceedance {
    double value = 0.0;
    bool precision_loss = false;
};

/** Leading-order tail estimate, capped at 1 when out of regime. */
struct TailEstimate {
    double value = 0.0;
    bool capped = false;
};

/** Asymptotic tail series: leading term plus signed corrections. */
struct ExceedanceSeries {
    double estimate = 0.0;
    std::vector<double> corrections;   // correction of order k at index k-1
    bool divergent = false;
};

inline ScaledThreshold scaled_threshold(double lambda, const ConditionalState& state,
                                        const ModelParams& params) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::domain_error("scaled_threshold: lambda must be positive");
    double scale = std::exp(state.h_bar);
    if (params.noise_kind == NoiseKind::gaussian) scale *= std::numbers::sqrt2;
    return {lambda, lambda / scale};
}

namespace detail {

inline double double_factorial_odd(int n) {
    // (n-1)!! for even n: product of the odd integers below n.
    double p = 1.0;
    for (int i = n - 1; i >= 3; i -= 2) p *= i;
    return p;
}

inline double harmonic(int m) {
    double h = 0.0;
    for (int k = 1; k <= m; ++k) h += 1.0 / k;
    return h;
}

// digamma, trigamma, tetragamma at integer argument 1+m.
inline double psi0_int(int m) { return -std::numbers::egamma + harmonic(m); }
inline double psi1_int(int m) {
    double s = std::numbers::pi * std::numbers::pi / 6.0;
    for (int k = 1; k <= m; ++k) s -= 1.0 / (double(k) * k);
    return s;
}
inline double psi2_int(int m) {
    double s = -2.4041138063191885708;   // -2 zeta(3)
    for (int k = 1; k <= m; ++k) s += 2.0 / (double(k) * k * k);
    return s;
}

// Gamma(a) y^{-a} - (-1)^m y^m / (m! (a+m)) for a = -m + d near the pole at
// -m, evaluated as one expression so the two diverging halves cancel
// analytically:  (-1)^m y^m / (m! d) * expm1(-d ln y + ln S(d) - q(d)),
// S = pi d / sin(pi d), q = lgamma(1+m-d) - lgamma(1+m).
inline double gamma_pole_pair(int m, double d, double y, double lny) {
    double mfac = std::tgamma(double(m) + 1.0);
    double sign = (m % 2 == 0) ? 1.0 : -1.0;
    double ym = (m == 0) ? 1.0 : std::exp(m * lny);
    if (d == 0.0)
        return sign * ym / mfac * (-lny + psi0_int(m));
    double pd = std::numbers::pi * d;
    double ln_s = (std::fabs(d) < 1e-4)
                      ? pd * pd / 6.0 + 7.0 * pd * pd * pd * pd / 360.0
                      : std::log(pd / std::sin(pd));
    double q = (std::fabs(d) < 1e-4)
                   ? -psi0_int(m) * d + 0.5 * psi1_int(m) * d * d -
                         psi2_int(m) * d * d * d / 6.0
                   : std::lgamma(1.0 + m - d) - std::lgamma(1.0 + double(m));
    double x = -d * lny + ln_s - q;
    return sign * ym / (mfac * d) * std::expm1(x);
}

// Near-zero core of the noise density once the outer powers of |eps| are
// absorbed: Gamma(a1) y^{-a1} + sum_k (-1)^k y^k (1/(a2+k) - 1/(a1+k)) / k!,
// where y is the scaled gamma argument. The cusp term is kept stable through
// the poles of the complete gamma at nonpositive a1.
inline double density_small_scale_core(double a1, double a2, double y, double lny) {
    int m = -1;
    double d = 0.0;
    if (a1 < 0.25) {
        int mm = static_cast<int>(std::llround(-a1));
        double dd = a1 + mm;
        if (std::fabs(dd) < 0.1) {
            m = mm;
            d = dd;
        }
    }
    double sum = 0.0;
    double pk = 1.0;   // (-1)^k y^k / k!
    for (int k = 0; k <= 200; ++k) {
        double t = pk / (a2 + k);
        if (k != m) t -= pk / (a1 + k);
        sum += t;
        pk *= -y / (k + 1.0);
        if (std::fabs(pk) < 1e-20 * (std::fabs(sum) + 1e-300) && k > 2) break;
    }
    double cusp;
    if (m >= 0) {
        cusp = gamma_pole_pair(m, d, y, lny);
    } else {
        cusp = std::tgamma(a1) * std::exp(-a1 * lny);
    }
    return cusp + sum;
}

// Switch point between the near-zero expansion and the direct incomplete
// gamma evaluation, chosen so the direct path's intermediate powers stay
// well inside double range for every delta.
inline double density_small_scale_cutoff(double delta) {
    double span = 600.0 * delta / std::fmax(1.0 - delta, 1e-12);
    return std::exp(-std::fmin(6.0, span));
}

// Plain adaptive Simpson, used only for the small-threshold exceedance
// guard where the integrand is nearly constant.
template <class F>
inline double simpson_adaptive(F&& f, double lo, double hi, double flo, double fmid,
                               double fhi, double whole, double eps, int depth) {
    double mid = 0.5 * (lo + hi);
    double flm = f(0.5 * (lo + mid));
    double frm = f(0.5 * (mid + hi));
    double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * eps)
        return left + right + delta / 15.0;
    return simpson_adaptive(f, lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
           simpson_adaptive(f, mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
}

template <class F>
inline double integrate(F&& f, double lo, double hi, double eps) {
    double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return simpson_adaptive(f, lo, hi, flo, fmid, fhi, whole, eps, 48);
}

inline void shape_parameters(const ModelParams& params, double& a1, double& a2) {
    double inv = 1.0 / params.delta;
    if (params.noise_kind == NoiseKind::gaussian) {
        a1 = 0.5 * (1.0 - inv);
        a2 = 0.5 * (1.0 + inv);
    } else {
        a1 = 1.0 - inv;
        a2 = 1.0 + inv;
    }
}

// Leading tail term in log form; shared by the asymptotic estimate and the
// correction series so the two agree exactly at one term.
inline double leading_tail_log(double lambda_tilde, const ModelParams& params) {
    double inv = 1.0 / params.delta;
    if (params.noise_kind == NoiseKind::gaussian)
        return std::lgamma(0.5 * (1.0 + inv)) - std::log(2.0 * sqrt_pi) -
               inv * std::log(lambda_tilde);
    return std::lgamma(1.0 + inv) - std::numbers::ln2 - inv * std::log(lambda_tilde);
}

} // namespace detail

/**
 * Density of the conditional volatility sigma = e^H given mean log
 * volatility h_bar: two power-law branches meeting at sigma = e^{h_bar}.
 * Independent of the noise kind.
 */
inline double volatility_density(double sigma, const ConditionalState& state,
                                 const ModelParams& params) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::domain_error("volatility_density: sigma must be positive");
    double inv = 1.0 / params.delta;
    double ls = std::log(sigma);
    double expo = (sigma < std::exp(state.h_bar))
                      ? -state.h_bar * inv + (inv - 1.0) * ls
                      : state.h_bar * inv - (inv + 1.0) * ls;
    return 0.5 * inv * std::exp(expo);
}

/**
 * P{sigma >= threshold} on the upper branch: (1/2) e^{h_bar/Delta}
 * threshold^{-1/Delta}. Requires threshold >= e^{h_bar}.
 */
inline double volatility_exceedance(double threshold, const ConditionalState& state,
                                    const ModelParams& params) {
    if (!(threshold >= std::exp(state.h_bar)))
        throw std::domain_error("volatility_exceedance: threshold below e^{h_bar}");
    return 0.5 * std::exp((state.h_bar - std::log(threshold)) / params.delta);
}

/**
 * Conditional moment E{eps^n | F}. Even moments follow the closed forms
 * e^{n h_bar} (n-1)!! / (1 - n^2 Delta^2) for Gaussian noise and
 * e^{n h_bar} n! / (1 - n^2 Delta^2) for Laplace noise, diverging to the
 * +infinity marker once Delta >= 1/n. Odd moments vanish by symmetry and
 * return exact 0, except n = 1 under Laplace noise which returns the mean
 * absolute value E{|eps|}.
 *
 * @throws std::domain_error for n <= 0.
 */
inline double conditional_moment(int n, const ConditionalState& state,
                                 const ModelParams& params) {
    if (n <= 0) throw std::domain_error("conditional_moment: n must be positive");
    const double inf = std::numeric_limits<double>::infinity();
    if (n % 2 == 1) {
        if (params.noise_kind == NoiseKind::laplace && n == 1) {
            if (params.delta >= 1.0) return inf;
            return std::exp(state.h_bar) / (1.0 - params.delta * params.delta);
        }
        return 0.0;
    }
    if (params.delta >= 1.0 / n) return inf;
    double nd = double(n) * params.delta;
    double num = (params.noise_kind == NoiseKind::gaussian)
                     ? detail::double_factorial_odd(n)
                     : std::tgamma(double(n) + 1.0);
    return std::exp(n * state.h_bar) * num / (1.0 - nd * nd);
}

/**
 * Conditional kurtosis under Gaussian noise: 3 (1-4 Delta^2)^2 /
 * (1 - 16 Delta^2) for Delta < 1/4, the +infinity marker otherwise.
 * Independent of h_bar.
 *
 * @throws std::domain_error under Laplace noise, for which no closed form
 * is available.
 */
inline double conditional_kurtosis(const ModelParams& params) {
    if (params.noise_kind != NoiseKind::gaussian)
        throw std::domain_error("conditional_kurtosis: unsupported for Laplace noise");
    if (params.delta >= 0.25) return std::numeric_limits<double>::infinity();
    double d2 = params.delta * params.delta;
    double num = 1.0 - 4.0 * d2;
    return 3.0 * num * num / (1.0 - 16.0 * d2);
}

/**
 * Conditional density of the return eps, a mixture of incomplete gamma
 * branches in the scaled coordinate z = |eps| / (sqrt(2) e^{h_bar}) for
 * Gaussian noise and z = |eps| / e^{h_bar} for Laplace noise. At eps = 0
 * the removable singularity is replaced by its analytic limit, which
 * requires Delta < 1; small nonzero |eps| uses a pole-safe expansion of the
 * same formula around zero.
 */
inline double noise_density(double epsilon, const ConditionalState& state,
                            const ModelParams& params) {
    if (!std::isfinite(epsilon))
        throw std::domain_error("noise_density: epsilon must be finite");
    bool gauss = params.noise_kind == NoiseKind::gaussian;
    double eh = std::exp(state.h_bar);
    if (epsilon == 0.0) {
        if (params.delta >= 1.0)
            throw std::domain_error("noise_density: unbounded at 0 for delta >= 1");
        double base = gauss ? 1.0 / (std::sqrt(2.0 * std::numbers::pi) * eh)
                            : 0.5 / eh;
        return base / (1.0 - params.delta * params.delta);
    }
    double inv = 1.0 / params.delta;
    double scale = gauss ? std::numbers::sqrt2 * eh : eh;
    double z = std::fabs(epsilon) / scale;
    double a1, a2;
    detail::shape_parameters(params, a1, a2);
    // ln z from the unscaled inputs: z itself may round to 0 or lose digits
    // when |epsilon| and the scale sit at opposite ends of double range.
    double lnz = std::log(std::fabs(epsilon)) - state.h_bar -
                 (gauss ? 0.5 * std::numbers::ln2 : 0.0);
    double y = gauss ? z * z : z;
    double lny = gauss ? 2.0 * lnz : lnz;
    double pref = gauss ? 1.0 / (4.0 * detail::sqrt_pi * params.delta * scale)
                        : 1.0 / (4.0 * params.delta * eh);
    if (z < detail::density_small_scale_cutoff(params.delta))
        return pref * detail::density_small_scale_core(a1, a2, y, lny);
    double upper = upper_incomplete_gamma(a1, y).value;
    double term1 = (upper > 0.0) ? std::exp(std::log(upper) + (inv - 1.0) * lnz) : 0.0;
    double lower = lower_incomplete_gamma(a2, y);
    double term2 = (lower > 0.0) ? std::exp(std::log(lower) - (inv + 1.0) * lnz) : 0.0;
    return pref * (term1 + term2);
}

/**
 * Closed-form conditional exceedance probability P{|eps| >= threshold | F}.
 *
 * Evaluated from the incomplete gamma pair plus the erfc (Gaussian) or
 * exponential (Laplace) tail. Below lambda_tilde = 0.05 the closed form
 * subtracts nearly equal terms, so the complement is integrated from the
 * density instead; the same integration backstops any non-finite closed
 * form evaluation at extreme parameters. The precision_loss flag reports
 * cancellation between the gamma terms beyond eight digits.
 */
inline Exceedance exceedance_exact(double threshold, const ConditionalState& state,
                                   const ModelParams& params) {
    ScaledThreshold th = scaled_threshold(threshold, state, params);
    bool gauss = params.noise_kind == NoiseKind::gaussian;
    auto quad_complement = [&]() {
        // Mass below the threshold in the substitution eps = lambda e^{-v}:
        // the near-zero cusp of the density flattens into an exponentially
        // decaying integrand and eps = 0 itself is never touched.
        auto g = [&](double v) {
            double e = th.lambda * std::exp(-v);
            if (e == 0.0) return 0.0;
            return noise_density(e, state, params) * e;
        };
        double mass = detail::integrate(g, 0.0, 690.0, 1e-13);
        double p = 1.0 - 2.0 * mass;
        return std::fmin(1.0, std::fmax(0.0, p));
    };
    if (th.lambda_tilde < 0.05) return {quad_complement(), false};

    double inv = 1.0 / params.delta;
    double a1, a2;
    detail::shape_parameters(params, a1, a2);
    double y = gauss ? th.lambda_tilde * th.lambda_tilde : th.lambda_tilde;
    double lt = std::log(th.lambda_tilde);
    double pref = gauss ? 0.5 / detail::sqrt_pi : 0.5;
    double tail = gauss ? loglap::erfc(th.lambda_tilde) : std::exp(-th.lambda_tilde);

    double t_plus = 0.0, t_minus = 0.0;
    bool finite_terms = true;
    if (y > 700.0) {
        // Upper part underflowed; the lower gamma saturates at the complete one.
        t_plus = std::exp(std::lgamma(a2) - inv * lt);
    } else {
        double lower = lower_incomplete_gamma(a2, y);
        double upper = upper_incomplete_gamma(a1, y).value;
        if (lower > 0.0 && std::isfinite(lower))
            t_plus = std::exp(std::log(lower) - inv * lt);
        else if (!std::isfinite(lower))
            finite_terms = false;
        if (upper > 0.0 && std::isfinite(upper))
            t_minus = std::exp(std::log(upper) + inv * lt);
        else if (!std::isfinite(upper))
            finite_terms = false;
    }
    double p = pref * (t_plus - t_minus) + tail;
    if (!finite_terms || !std::isfinite(p)) return {quad_complement(), false};
    bool flag = (t_plus + t_minus) > 0.0 &&
                std::fabs(t_plus - t_minus) < 1e-8 * (t_plus + t_minus);
    return {std::fmin(1.0, std::fmax(0.0, p)), flag};
}

/**
 * Leading-order tail estimate: (1/(2 sqrt(pi))) Gamma((1+1/Delta)/2)
 * lambda_tilde^{-1/Delta} for Gaussian noise, (1/2) Gamma(1+1/Delta)
 * lambda_tilde^{-1/Delta} for Laplace noise. Values above 1 are capped and
 * flagged as out of regime.
 */
inline TailEstimate exceedance_asymptotic(double threshold, const ConditionalState& state,
                                          const ModelParams& params) {
    ScaledThreshold th = scaled_threshold(threshold, state, params);
    double lp = detail::leading_tail_log(th.lambda_tilde, params);
    if (lp >= 0.0) return {1.0, true};
    return {std::exp(lp), false};
}

/**
 * Asymptotic tail series: the leading term plus the signed incomplete gamma
 * corrections of order 1 .. n_terms-1, returned individually. The divergent
 * flag reports that the first omitted correction already exceeds the last
 * kept term, as in gamma_asymptotic. Requires lambda_tilde > 1.
 */
inline ExceedanceSeries exceedance_series(double threshold, const ConditionalState& state,
                                          const ModelParams& params, int n_terms) {
    ScaledThreshold th = scaled_threshold(threshold, state, params);
    if (!(th.lambda_tilde > 1.0))
        throw std::domain_error("exceedance_series: requires lambda_tilde > 1");
    if (n_terms < 1)
        throw std::domain_error("exceedance_series: requires n_terms >= 1");
    bool gauss = params.noise_kind == NoiseKind::gaussian;
    double inv = 1.0 / params.delta;
    double y = gauss ? th.lambda_tilde * th.lambda_tilde : th.lambda_tilde;
    double pref = gauss ? 1.0 / (4.0 * detail::sqrt_pi * params.delta)
                        : 0.5 / params.delta;

    ExceedanceSeries out;
    out.estimate = std::exp(detail::leading_tail_log(th.lambda_tilde, params));
    double prev = std::fabs(out.estimate);
    for (int k = 1; k <= n_terms; ++k) {
        double sign = (k % 2 == 0) ? 1.0 : -1.0;
        double bracket = gauss
                             ? rising_factorial(0.5 * (1.0 + inv), k) -
                                   rising_factorial(0.5 * (1.0 - inv), k)
                             : rising_factorial(inv, k) - rising_factorial(-inv, k);
        double g = gauss ? upper_incomplete_gamma(-k - 0.5, y).value
                         : upper_incomplete_gamma(double(-k), y).value;
        double c = pref * sign * bracket * g;
        if (k < n_terms) {
            out.corrections.push_back(c);
            out.estimate += c;
            prev = std::fabs(c);
        } else {
            out.divergent = std::fabs(c) > prev;
        }
    }
    return out;
}

} // namespace loglap

// Conditional model layer: volatility density and tail, moments, noise
// density, and the three exceedance evaluations. Expected values marked as
// frozen were produced by integrating the mixture representation (volatility
// density times the per-sigma noise law) with an independent quadrature
// oracle; the generator shares no code with the library.

#include <catch2/catch_amalgamated.hpp>

#include "loglap/model.hpp"
#include "support/quadrature.hpp"
#include "support/testutil.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace loglap;
using testutil::rel_err;

namespace {

ModelParams gauss_params(double delta) { return ModelParams(delta, NoiseKind::gaussian); }
ModelParams laplace_params(double delta) { return ModelParams(delta, NoiseKind::laplace); }

// 2 * integral of the noise density over [lambda, lambda e^{22 delta + 2}]
// in geometric segments with one shared absolute tolerance. The omitted tail
// mass is below e^{-22-2/delta} of the result for every delta in (0, 1].
double tail_by_quadrature(double lambda, const ConditionalState& state,
                          const ModelParams& params) {
    auto f = [&](double e) { return noise_density(e, state, params); };
    const int nseg = 12;
    double span = 22.0 * params.delta + 2.0;
    std::vector<double> cuts(nseg + 1);
    for (int i = 0; i <= nseg; ++i) cuts[i] = lambda * std::exp(span * i / nseg);
    double coarse = 0.0;
    for (int i = 0; i < nseg; ++i)
        coarse += std::fabs(oracle::integrate(f, cuts[i], cuts[i + 1], 1e-290, 8));
    double eps = std::fmax(3e-10 * coarse, 1e-280) / nseg;
    double total = 0.0;
    for (int i = 0; i < nseg; ++i)
        total += oracle::integrate(f, cuts[i], cuts[i + 1], eps, 50);
    return 2.0 * total;
}

} // namespace

TEST_CASE("parameter and state validation") {
    CHECK_THROWS_AS(ModelParams(0.0), std::domain_error);
    CHECK_THROWS_AS(ModelParams(-0.1), std::domain_error);
    CHECK_THROWS_AS(ModelParams(1.2), std::domain_error);
    CHECK_THROWS_AS(ModelParams(std::nan("")), std::domain_error);
    CHECK_NOTHROW(ModelParams(1.0));
    CHECK_NOTHROW(ModelParams(1e-9));
    CHECK_THROWS_AS(ConditionalState(std::numeric_limits<double>::infinity()),
                    std::domain_error);
    CHECK_THROWS_AS(ConditionalState(std::nan("")), std::domain_error);

    ConditionalState s(0.4);
    CHECK_THROWS_AS(scaled_threshold(0.0, s, gauss_params(0.3)), std::domain_error);
    CHECK_THROWS_AS(scaled_threshold(-2.0, s, gauss_params(0.3)), std::domain_error);
    ScaledThreshold tg = scaled_threshold(2.0, ConditionalState(0.0), gauss_params(0.3));
    CHECK(tg.lambda == 2.0);
    CHECK(tg.lambda_tilde == Catch::Approx(std::numbers::sqrt2).epsilon(1e-15));
    ScaledThreshold tl = scaled_threshold(2.0, ConditionalState(0.5), laplace_params(0.3));
    CHECK(tl.lambda_tilde == Catch::Approx(2.0 / std::exp(0.5)).epsilon(1e-15));
}

TEST_CASE("volatility density branches and unit mass") {
    ModelParams p = gauss_params(0.25);
    ConditionalState s(1.0);
    double mode = std::exp(1.0);

    // both branches meet at sigma = e^{h_bar} with value (1/(2 delta)) e^{-h_bar}
    double at_mode = 2.0 * std::exp(-1.0);
    CHECK(volatility_density(mode, s, p) == Catch::Approx(at_mode).epsilon(1e-14));
    CHECK(volatility_density(mode * (1.0 - 1e-13), s, p) ==
          Catch::Approx(at_mode).epsilon(1e-10));
    CHECK(volatility_density(mode * (1.0 + 1e-13), s, p) ==
          Catch::Approx(at_mode).epsilon(1e-10));
    CHECK_THROWS_AS(volatility_density(0.0, s, p), std::domain_error);
    CHECK_THROWS_AS(volatility_density(-1.0, s, p), std::domain_error);

    // e^{h_bar} is the median: the lower branch carries mass 1/2
    auto f = [&](double sigma) { return volatility_density(sigma, s, p); };
    double lower_mass = oracle::integrate(f, 1e-12, mode, 1e-12);
    CHECK(lower_mass == Catch::Approx(0.5).epsilon(1e-10));

    // full normalization for (delta = 0.4, h_bar = -0.5), integrated over
    // ln sigma so one adaptive pass sees the whole two-sided envelope
    ModelParams p2 = gauss_params(0.4);
    ConditionalState s2(-0.5);
    auto g = [&](double u) {
        double sigma = std::exp(u);
        return volatility_density(sigma, s2, p2) * sigma;
    };
    double mass = oracle::integrate(g, -0.5 - 40.0 * 0.4, -0.5 + 40.0 * 0.4, 1e-12);
    CHECK(mass == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("volatility exceedance closed form") {
    ModelParams p = gauss_params(0.25);
    ConditionalState s(0.0);
    CHECK(volatility_exceedance(1.0, s, p) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(volatility_exceedance(2.0, s, p) == Catch::Approx(0.03125).epsilon(1e-14));
    CHECK_THROWS_AS(volatility_exceedance(0.9, s, p), std::domain_error);
    ConditionalState s1(1.2);
    CHECK_THROWS_AS(volatility_exceedance(std::exp(1.2) * 0.999, s1, p), std::domain_error);

    // noise kind never enters the volatility law
    CHECK(volatility_exceedance(4.0, s1, gauss_params(0.4)) ==
          volatility_exceedance(4.0, s1, laplace_params(0.4)));
}

TEST_CASE("volatility exceedance agrees with Monte Carlo") {
    // sigma >= lambda iff the Laplace innovation exceeds ln(lambda) - h_bar
    const double delta = 0.4, h = 0.3, lambda = 3.0;
    const int n = 10000000;
    std::mt19937_64 gen(0x101d05eedULL);
    std::exponential_distribution<double> expo(1.0 / delta);
    std::bernoulli_distribution coin(0.5);
    double cut = std::log(lambda) - h;
    long hits = 0;
    for (int i = 0; i < n; ++i) {
        double eta = expo(gen) * (coin(gen) ? 1.0 : -1.0);
        if (eta >= cut) ++hits;
    }
    double p_hat = double(hits) / n;
    double want = volatility_exceedance(lambda, ConditionalState(h), gauss_params(delta));
    double se = std::sqrt(p_hat * (1.0 - p_hat) / n);
    CHECK(std::fabs(want - p_hat) <= 3.0 * se);
}

TEST_CASE("conditional moments") {
    ConditionalState s0(0.0);
    CHECK(conditional_moment(2, s0, gauss_params(0.25)) ==
          Catch::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(std::isinf(conditional_moment(4, s0, gauss_params(0.25))));
    CHECK(std::isinf(conditional_moment(2, s0, gauss_params(0.5))));
    CHECK(conditional_moment(3, s0, gauss_params(0.3)) == 0.0);
    CHECK(conditional_moment(1, s0, gauss_params(0.3)) == 0.0);
    CHECK(conditional_moment(5, s0, laplace_params(0.3)) == 0.0);
    CHECK_THROWS_AS(conditional_moment(0, s0, gauss_params(0.3)), std::domain_error);
    CHECK_THROWS_AS(conditional_moment(-2, s0, gauss_params(0.3)), std::domain_error);

    // Laplace n=1 is the mean absolute value e^{h_bar} / (1 - delta^2)
    ConditionalState s(0.2);
    CHECK(conditional_moment(1, s, laplace_params(0.6)) ==
          Catch::Approx(std::exp(0.2) / (1.0 - 0.36)).epsilon(1e-14));
    CHECK(std::isinf(conditional_moment(1, s, laplace_params(1.0))));

    ConditionalState sm(-0.1);
    CHECK(conditional_moment(2, sm, laplace_params(0.3)) ==
          Catch::Approx(2.0 * std::exp(-0.2) / 0.64).epsilon(1e-14));
    CHECK(std::isinf(conditional_moment(4, s0, laplace_params(0.25))));
    double m4l = 24.0 * std::exp(0.4) / (1.0 - 16.0 * 0.24 * 0.24);
    CHECK(conditional_moment(4, ConditionalState(0.1), laplace_params(0.24)) ==
          Catch::Approx(m4l).epsilon(1e-14));

    // even-moment growth in h_bar follows e^{n h_bar} exactly
    CHECK(conditional_moment(2, ConditionalState(1.0), gauss_params(0.2)) ==
          Catch::Approx(std::exp(2.0) * conditional_moment(2, s0, gauss_params(0.2)))
              .epsilon(1e-13));
}

TEST_CASE("conditional second moment agrees with Monte Carlo") {
    const int n = 10000000;
    struct Setup { double delta, h; bool gauss; };
    for (Setup c : {Setup{0.2, 0.1, true}, Setup{0.15, 0.0, false}}) {
        ModelParams p = c.gauss ? gauss_params(c.delta) : laplace_params(c.delta);
        ConditionalState s(c.h);
        std::mt19937_64 gen(c.gauss ? 0xa11ce5ULL : 0xb0b5ULL);
        std::exponential_distribution<double> expo(1.0 / c.delta);
        std::bernoulli_distribution coin(0.5);
        std::normal_distribution<double> gz(0.0, 1.0);
        std::exponential_distribution<double> lz(1.0);
        double sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double eta = expo(gen) * (coin(gen) ? 1.0 : -1.0);
            double z = c.gauss ? gz(gen) : lz(gen) * (coin(gen) ? 1.0 : -1.0);
            double eps = std::exp(c.h + eta) * z;
            sum2 += eps * eps;
        }
        double m2_hat = sum2 / n;
        double m2 = conditional_moment(2, s, p);
        double m4 = conditional_moment(4, s, p);
        double se = std::sqrt((m4 - m2 * m2) / n);
        CHECK(std::fabs(m2_hat - m2) <= 3.0 * se);
    }
}

TEST_CASE("conditional kurtosis") {
    CHECK(conditional_kurtosis(gauss_params(0.2)) == Catch::Approx(5.88).epsilon(1e-12));
    CHECK(conditional_kurtosis(gauss_params(1e-9)) == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(std::isinf(conditional_kurtosis(gauss_params(0.25))));
    CHECK(std::isinf(conditional_kurtosis(gauss_params(0.7))));
    CHECK_THROWS_AS(conditional_kurtosis(laplace_params(0.2)), std::domain_error);

    // consistent with the moment ratio m4 / m2^2 at any h_bar
    ConditionalState s(0.37);
    ModelParams p = gauss_params(0.15);
    double ratio = conditional_moment(4, s, p) /
                   (conditional_moment(2, s, p) * conditional_moment(2, s, p));
    CHECK(conditional_kurtosis(p) == Catch::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("noise density matches mixture-integral oracle") {
    struct Row { bool gauss; double eps, delta, h, want; };
    // frozen: mixture quadrature, relative tolerance 1e-13 in the generator
    const Row rows[] = {
        {true, 0.7, 0.3, 0.2, 0.2651857626659529},
        {true, 3.5, 0.55, -0.4, 0.0060445138343382439},
        {true, 1e-5, 0.99, 0.0, 2.3001497612579263},
        {true, 1e-9, 1.0 / 3.0, 0.0, 0.44881006545161206},
        {true, 1e-4, 1.0, 0.0, 1.9484951617913056},
        {true, 0.5, 1.0, 0.0, 0.25566718905346775},
        {true, 1e-8, 0.5, 0.0, 0.53192303553524345},
        {true, 1e-5, 0.334, 0.0, 0.44903480699386311},
        {true, 1e-5, 1.0 / 3.000002, 0.0, 0.44880999028387081},
        {false, 0.9, 0.35, 0.1, 0.18397675837046332},
        {false, 1e-6, 0.5, 0.0, 0.66665942251902077},
        {false, 6.0, 0.8, -0.2, 0.0048834610536952084},
        {false, 0.3, 1.0, 0.0, 0.32902003267942498},
    };
    for (const Row& r : rows) {
        ModelParams p = r.gauss ? gauss_params(r.delta) : laplace_params(r.delta);
        double got = noise_density(r.eps, ConditionalState(r.h), p);
        INFO("eps=" << r.eps << " delta=" << r.delta << " gauss=" << r.gauss);
        CHECK(rel_err(got, r.want) < 1e-11);
    }
}

TEST_CASE("noise density at zero") {
    // analytic limits of the removable singularity
    CHECK(noise_density(0.0, ConditionalState(0.0), gauss_params(0.5)) ==
          Catch::Approx(1.0 / (std::sqrt(2.0 * std::numbers::pi) * 0.75)).epsilon(1e-14));
    CHECK(noise_density(0.0, ConditionalState(0.0), laplace_params(0.5)) ==
          Catch::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(noise_density(0.0, ConditionalState(1.3), gauss_params(0.2)) ==
          Catch::Approx(std::exp(-1.3) / (std::sqrt(2.0 * std::numbers::pi) * 0.96))
              .epsilon(1e-14));
    CHECK_THROWS_AS(noise_density(0.0, ConditionalState(0.0), gauss_params(1.0)),
                    std::domain_error);
    CHECK_THROWS_AS(noise_density(0.0, ConditionalState(0.0), laplace_params(1.0)),
                    std::domain_error);
    CHECK_NOTHROW(noise_density(0.0, ConditionalState(0.0), gauss_params(0.9999)));
    CHECK_THROWS_AS(noise_density(std::nan(""), ConditionalState(0.0), gauss_params(0.5)),
                    std::domain_error);

    // the density is finite for every nonzero eps even at delta = 1
    CHECK(std::isfinite(noise_density(1e-200, ConditionalState(0.0), gauss_params(1.0))));
    CHECK(noise_density(1e-200, ConditionalState(0.0), gauss_params(1.0)) > 0.0);
}

TEST_CASE("noise density symmetry and scaling covariance") {
    testutil::Uniform u(20240812ULL);
    for (int i = 0; i < 50; ++i) {
        double delta = u(0.05, 1.0);
        double h = u(-2.0, 2.0);
        double eps = u(1e-4, 5.0) * std::exp(h);
        for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::laplace}) {
            ModelParams p(delta, k);
            ConditionalState s(h);
            CHECK(noise_density(eps, s, p) == noise_density(-eps, s, p));
            double c = u(-1.5, 1.5);
            double lhs = noise_density(eps, s, p);
            double rhs = std::exp(-c) *
                         noise_density(eps * std::exp(-c), ConditionalState(h - c), p);
            CHECK(rel_err(lhs, rhs) < 1e-12);
        }
    }
}

TEST_CASE("noise density integrates to one") {
    // tail completion beyond the cut uses the leading-order estimate, whose
    // own error is far below the 1e-8 bar at lambda_tilde = 25
    for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::laplace}) {
        ModelParams p(0.35, k);
        ConditionalState s(1.5);
        double scale = std::exp(1.5) * (k == NoiseKind::gaussian ? std::numbers::sqrt2 : 1.0);
        double cut = 25.0 * scale;
        auto f = [&](double e) { return noise_density(e, s, p); };
        double body = 0.0;
        const double knots[] = {0.0, 1e-3, 0.1, 1.0, 4.0, 25.0};
        for (int i = 0; i + 1 < 6; ++i)
            body += oracle::integrate(f, knots[i] * scale, knots[i + 1] * scale, 1e-11);
        double mass = 2.0 * body + exceedance_asymptotic(cut, s, p).value;
        CHECK(mass == Catch::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("noise density behaves smoothly across the evaluation seam") {
    // both expansions meet at the internal cutoff; a gross mismatch there
    // would show as a jump far beyond the true local slope
    for (double delta : {0.15, 1.0 / 3.0, 0.5, 0.99, 1.0}) {
        for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::laplace}) {
            ModelParams p(delta, k);
            ConditionalState s(0.0);
            double cut = detail::density_small_scale_cutoff(delta);
            double scale = (k == NoiseKind::gaussian) ? std::numbers::sqrt2 : 1.0;
            double below = noise_density(0.999 * cut * scale, s, p);
            double above = noise_density(1.001 * cut * scale, s, p);
            INFO("delta=" << delta << " gauss=" << (k == NoiseKind::gaussian));
            CHECK(below > 0.0);
            CHECK(above > 0.0);
            CHECK(below / above > 0.98);
            CHECK(below / above < 1.02);
        }
    }
}

TEST_CASE("exceedance exact matches mixture-integral oracle") {
    struct Row { bool gauss; double lambda, delta, h, want; };
    // frozen: mixture of per-sigma tails, relative tolerance 1e-13
    const Row rows[] = {
        {true, 4.0, 0.25, 0.0, 0.0058566073668985365},
        {true, 6.0, 0.6, 0.5, 0.052127284670733624},
        {true, 0.06 * std::numbers::sqrt2, 0.3, 0.0, 0.92589056157877203},
        {true, 0.03 * std::numbers::sqrt2, 0.3, 0.0, 0.96284039972391777},
        {false, 3.0, 0.4, -0.3, 0.045805793056776491},
        {false, 0.5, 0.85, 0.0, 0.56317549344800155},
        {true, 2.0 * std::numbers::sqrt2, 0.05, 0.0, 0.005409605793224294},
        {true, 2.0 * std::numbers::sqrt2, 0.01, 0.0, 0.0047066847679780354},
        {false, 5.0, 1.0, 0.2, 0.12153499742542841},
    };
    for (const Row& r : rows) {
        ModelParams p = r.gauss ? gauss_params(r.delta) : laplace_params(r.delta);
        Exceedance got = exceedance_exact(r.lambda, ConditionalState(r.h), p);
        INFO("lambda=" << r.lambda << " delta=" << r.delta << " gauss=" << r.gauss);
        CHECK(rel_err(got.value, r.want) < 1e-11);
        CHECK_FALSE(got.precision_loss);
    }
}

TEST_CASE("exceedance exact equals the integrated density tail") {
    // 100 random parameter tuples per noise kind, checked against direct
    // quadrature of the density itself
    testutil::Uniform u(20240813ULL);
    for (int i = 0; i < 100; ++i) {
        double delta = u(0.05, 0.95);
        double h = u(-2.0, 2.0);
        double lambda = u(0.1, 6.0) * std::exp(h);
        for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::laplace}) {
            ModelParams p(delta, k);
            ConditionalState s(h);
            double quad = tail_by_quadrature(lambda, s, p);
            Exceedance ex = exceedance_exact(lambda, s, p);
            INFO("delta=" << delta << " h=" << h << " lambda=" << lambda
                          << " gauss=" << (k == NoiseKind::gaussian));
            CHECK(rel_err(ex.value, quad) < 1e-8);
        }
    }
}

TEST_CASE("exceedance exact limiting behaviour") {
    ModelParams p = gauss_params(0.3);
    ConditionalState s(0.0);

    // total mass as the threshold vanishes
    Exceedance near_zero = exceedance_exact(1e-10, s, p);
    CHECK(near_zero.value <= 1.0);
    CHECK(near_zero.value >= 1.0 - 1e-9);

    // monotone decreasing in the threshold
    double prev = 1.0 + 1e-12;
    for (double lam : {0.05, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        double v = exceedance_exact(lam, s, p).value;
        CHECK(v < prev);
        prev = v;
    }

    // degenerate-volatility limit: delta -> 0 collapses to the plain
    // Gaussian tail erfc(lambda_tilde)
    Exceedance deg = exceedance_exact(2.0 * std::numbers::sqrt2, s, gauss_params(0.01));
    CHECK(std::fabs(deg.value - std::erfc(2.0)) < 0.01 * std::erfc(2.0));

    // at extreme degeneracy the two gamma terms cancel beyond eight digits
    // and the flag reports it, while the erfc term keeps the value accurate
    Exceedance flagged = exceedance_exact(std::numbers::sqrt2, s, gauss_params(1e-9));
    CHECK(flagged.precision_loss);
    CHECK(rel_err(flagged.value, std::erfc(1.0)) < 1e-9);
}

TEST_CASE("asymptotic estimate: closed-form prefactors and capping") {
    ConditionalState s0(0.0);
    TailEstimate t = exceedance_asymptotic(4.0, s0, gauss_params(0.25));
    CHECK(t.value == Catch::Approx(0.005859375).epsilon(1e-13));
    CHECK_FALSE(t.capped);

    // out of regime: the leading term exceeds unity and is capped
    TailEstimate capped = exceedance_asymptotic(0.2, s0, gauss_params(0.25));
    CHECK(capped.value == 1.0);
    CHECK(capped.capped);

    // delta = 1/2 collapses the Gaussian prefactor to the volatility tail
    testutil::Uniform u(20240814ULL);
    for (int i = 0; i < 30; ++i) {
        double h = u(-2.0, 2.0);
        double lambda = u(1.0, 50.0) * std::exp(h);
        double asym = exceedance_asymptotic(lambda, ConditionalState(h), gauss_params(0.5)).value;
        double vol = volatility_exceedance(lambda, ConditionalState(h), gauss_params(0.5));
        CHECK(rel_err(asym, vol) < 1e-13);
        // Laplace noise at delta = 1: Gamma(2) = 1 gives the same collapse
        double asyml =
            exceedance_asymptotic(lambda, ConditionalState(h), laplace_params(1.0)).value;
        double voll = volatility_exceedance(lambda, ConditionalState(h), laplace_params(1.0));
        CHECK(rel_err(asyml, voll) < 1e-13);
    }
}

TEST_CASE("asymptotic estimate converges and is bounded by the first correction") {
    struct Setup { bool gauss; double delta, h; };
    for (Setup c : {Setup{true, 0.35, 0.2}, Setup{true, 0.7, -1.0}, Setup{false, 0.4, 0.0},
                    Setup{false, 0.8, 0.6}}) {
        ModelParams p = c.gauss ? gauss_params(c.delta) : laplace_params(c.delta);
        ConditionalState s(c.h);
        double scale = std::exp(c.h) * (c.gauss ? std::numbers::sqrt2 : 1.0);
        double prev_rel = std::numeric_limits<double>::infinity();
        for (double lt : {2.0, 3.0, 4.0, 5.0, 6.0}) {
            double lambda = lt * scale;
            double exact = exceedance_exact(lambda, s, p).value;
            double asym = exceedance_asymptotic(lambda, s, p).value;
            double rel = std::fabs(asym - exact) / exact;
            INFO("gauss=" << c.gauss << " delta=" << c.delta << " ltilde=" << lt);
            CHECK(rel < prev_rel);
            prev_rel = rel;
            // the first-correction envelope holds for the Gaussian kernel;
            // the Laplace corrections at small lambda_tilde are not yet in
            // the enveloping regime. A few ulps of slack cover the cases
            // where the true error sits below double resolution.
            if (c.gauss) {
                double c1 = exceedance_series(lambda, s, p, 2).corrections[0];
                CHECK(std::fabs(asym - exact) <=
                      std::fabs(c1) + 8.0 * std::numeric_limits<double>::epsilon() * exact);
            }
        }
    }
}

TEST_CASE("asymptotic relative error shrinks as delta grows") {
    // corrections scale inversely with delta^2, so at fixed lambda_tilde
    // larger delta means a better leading-order estimate
    for (bool gauss : {true, false}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double delta : {0.15, 0.25, 0.4, 0.6, 0.9}) {
            ModelParams p(delta, gauss ? NoiseKind::gaussian : NoiseKind::laplace);
            ConditionalState s(0.0);
            double lambda = 3.0 * (gauss ? std::numbers::sqrt2 : 1.0);
            double exact = exceedance_exact(lambda, s, p).value;
            double asym = exceedance_asymptotic(lambda, s, p).value;
            double rel = std::fabs(asym - exact) / exact;
            INFO("gauss=" << gauss << " delta=" << delta);
            CHECK(rel < prev);
            prev = rel;
        }
    }
}

TEST_CASE("exceedance series structure") {
    ConditionalState s0(0.0);
    ModelParams p = gauss_params(0.25);

    CHECK_THROWS_AS(exceedance_series(1.2, s0, p, 3), std::domain_error);   // ltilde < 1
    CHECK_THROWS_AS(exceedance_series(4.0, s0, p, 0), std::domain_error);

    // one term is exactly the leading-order estimate
    ExceedanceSeries one = exceedance_series(4.0, s0, p, 1);
    CHECK(one.corrections.empty());
    CHECK(one.estimate == exceedance_asymptotic(4.0, s0, p).value);

    // the first correction is negative throughout the tested regime
    for (double delta : {0.1, 0.25, 0.5, 0.9}) {
        for (double lt : {2.0, 4.0, 6.0}) {
            for (bool gauss : {true, false}) {
                ModelParams pk(delta, gauss ? NoiseKind::gaussian : NoiseKind::laplace);
                double lambda = lt * (gauss ? std::numbers::sqrt2 : 1.0);
                ExceedanceSeries ser = exceedance_series(lambda, s0, pk, 2);
                INFO("delta=" << delta << " ltilde=" << lt << " gauss=" << gauss);
                REQUIRE(ser.corrections.size() == 1);
                CHECK(ser.corrections[0] < 0.0);
            }
        }
    }

    // two terms beat one inside the asymptotic regime
    double exact = exceedance_exact(4.0, s0, p).value;
    double est1 = exceedance_series(4.0, s0, p, 1).estimate;
    double est2 = exceedance_series(4.0, s0, p, 2).estimate;
    CHECK(std::fabs(est2 - exact) < std::fabs(est1 - exact));
}

TEST_CASE("correction magnitudes shrink then diverge") {
    // truncation diagnostic at delta = 1/4, lambda_tilde = 2 sqrt(2):
    // the optimal truncation point sits in the middle of the list
    ConditionalState s0(0.0);
    ModelParams p = gauss_params(0.25);
    ExceedanceSeries ser = exceedance_series(4.0, s0, p, 15);
    REQUIRE(ser.corrections.size() == 14);
    CHECK(ser.divergent);

    std::vector<double> mags;
    for (double c : ser.corrections) mags.push_back(std::fabs(c));
    auto argmin = size_t(std::min_element(mags.begin(), mags.end()) - mags.begin());
    CHECK(argmin >= 3);
    CHECK(argmin <= 10);
    for (size_t k = 0; k + 1 < argmin; ++k) CHECK(mags[k] > mags[k + 1]);
    for (size_t k = argmin; k + 1 < mags.size(); ++k) CHECK(mags[k] < mags[k + 1]);

    // the divergence flag turns on exactly when the first omitted
    // correction stops shrinking
    CHECK_FALSE(exceedance_series(4.0, s0, p, 2).divergent);
    CHECK(exceedance_series(4.0, s0, p, int(argmin) + 2).divergent);

    // Laplace variant: same unimodal pattern, faster divergence
    ExceedanceSeries lser = exceedance_series(3.0, s0, laplace_params(0.4), 10);
    REQUIRE(lser.corrections.size() == 9);
    CHECK(lser.divergent);
    CHECK(std::fabs(lser.corrections[1]) < std::fabs(lser.corrections[0]));
    CHECK(std::fabs(lser.corrections[8]) > std::fabs(lser.corrections[2]));
}

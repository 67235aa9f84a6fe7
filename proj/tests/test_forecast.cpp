// Forecasting tests. The volatility forecast is checked against the
// conditional second moment it is derived from, the tail forecast against
// the leading-order exceedance estimate and a hand-derived closed form,
// and the scorecard against confusion matrices small enough to count by
// hand.

#include "loglap/forecast.hpp"

#include "loglap/rng.hpp"
#include "support/testutil.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

using namespace loglap;

namespace {

// Independent correlation route: standardized products with extended
// accumulation, unlike the centered-sum form used by evaluate().
double pearson_standardized(const std::vector<double>& a, const std::vector<double>& b) {
    long double ma = 0.0L, mb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    long double va = 0.0L, vb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    long double sa = std::sqrt(va), sb = std::sqrt(vb);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += ((a[i] - ma) / sa) * ((b[i] - mb) / sb);
    return static_cast<double>(acc);
}

std::vector<ForecastRecord> records_from(const std::vector<double>& sigma,
                                         const std::vector<double>& probs) {
    std::vector<ForecastRecord> out;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        out.push_back({i, 0.0, sigma[i], probs[i], false});
    return out;
}

std::size_t count_sum(const EvalReport& r) {
    return r.true_positives + r.false_positives + r.true_negatives + r.false_negatives;
}

double cube(double x) { return x * x * x; }

}  // namespace

TEST_CASE("volatility forecast matches the conditional second moment", "[forecast]") {
    SECTION("closed form at delta = 1/4") {
        // e^0 sqrt(1 / (1 - 1/4)) = sqrt(4/3)
        REQUIRE(forecast_volatility(0.0, 0.25) ==
                Catch::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-15));
    }
    SECTION("delta = 0 collapses to e^{h_bar} exactly") {
        for (double h : {-3.0, -0.5, 0.0, 1.25, 4.0})
            REQUIRE(forecast_volatility(h, 0.0) == std::exp(h));
    }
    SECTION("square equals the n = 2 conditional moment") {
        CounterRng rng(derive_seed(0xf0c5ULL, 1));
        for (int i = 0; i < 50; ++i) {
            double h = (rng.uniform() - 0.5) * 6.0;
            double delta = rng.uniform() * 0.499;
            double vol = forecast_volatility(h, delta);
            double m2 = conditional_moment(2, ConditionalState(h),
                                           ModelParams(delta, NoiseKind::gaussian));
            REQUIRE(vol * vol == Catch::Approx(m2).epsilon(1e-12));
        }
    }
    SECTION("domain") {
        REQUIRE_THROWS_AS(forecast_volatility(0.0, 0.5), std::domain_error);
        REQUIRE_THROWS_AS(forecast_volatility(0.0, 0.75), std::domain_error);
        REQUIRE_THROWS_AS(forecast_volatility(0.0, -0.1), std::domain_error);
        REQUIRE_THROWS_AS(forecast_volatility(std::nan(""), 0.2), std::domain_error);
        double inf = std::numeric_limits<double>::infinity();
        REQUIRE_THROWS_AS(forecast_volatility(inf, 0.2), std::domain_error);
    }
}

TEST_CASE("tail forecast reproduces the leading-order exceedance estimate", "[forecast]") {
    SECTION("hand-derived value at delta = 1/4, threshold 4") {
        // Pareto tail of e^h gives P(|eps| >= L) ~ (1/2) E[z^4] L^{-4}
        // = (1/2) 3 / 256 = 3/512 at h_bar = 0.
        TailEstimate tail = forecast_tail_prob(0.0, 0.25, 4.0, NoiseKind::gaussian);
        REQUIRE(tail.value == Catch::Approx(3.0 / 512.0).epsilon(1e-12));
        REQUIRE_FALSE(tail.capped);
    }
    SECTION("agrees with the exceedance estimate for both noise laws") {
        for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::laplace}) {
            ModelParams params(0.3, kind);
            for (double h : {-1.0, 0.0, 0.8}) {
                TailEstimate via_forecast = forecast_tail_prob(h, 0.3, 2.5, kind);
                TailEstimate direct = exceedance_asymptotic(2.5, ConditionalState(h), params);
                REQUIRE(via_forecast.value == direct.value);
                REQUIRE(via_forecast.capped == direct.capped);
            }
        }
    }
    SECTION("extremes of the conditional mean") {
        TailEstimate quiet = forecast_tail_prob(-40.0, 0.25, 4.0, NoiseKind::gaussian);
        REQUIRE(quiet.value < 1e-60);
        REQUIRE_FALSE(quiet.capped);
        TailEstimate loud = forecast_tail_prob(5.0, 0.25, 4.0, NoiseKind::gaussian);
        REQUIRE(loud.capped);
        REQUIRE(loud.value == 1.0);
    }
}

TEST_CASE("classifier threshold is boundary inclusive", "[forecast]") {
    SECTION("default threshold") {
        REQUIRE(event_probability_threshold == 0.0135);
        REQUIRE(event_probability_threshold == Catch::Approx(5.0 * 0.0027));
        REQUIRE(classify(0.0135) == 1);
        REQUIRE(classify(0.0134) == 0);
        REQUIRE(classify(event_probability_threshold) == 1);
        REQUIRE(classify(0.0) == 0);
        REQUIRE(classify(1.0) == 1);
    }
    SECTION("explicit threshold") {
        REQUIRE(classify(0.5, 0.5) == 1);
        REQUIRE(classify(0.499, 0.5) == 0);
        REQUIRE(classify(0.1, 0.0) == 1);
    }
    SECTION("invariant under a strictly increasing transform") {
        for (double p : {0.0, 1e-6, 0.001, 0.0134, 0.0135, 0.0136, 0.1, 0.5, 1.0})
            REQUIRE(classify(cube(p), cube(event_probability_threshold)) == classify(p));
    }
    SECTION("domain") {
        REQUIRE_THROWS_AS(classify(-0.01), std::domain_error);
        REQUIRE_THROWS_AS(classify(1.01), std::domain_error);
        REQUIRE_THROWS_AS(classify(std::nan("")), std::domain_error);
    }
}

TEST_CASE("event flag is monotone in the conditional mean", "[forecast]") {
    double prev_prob = -1.0;
    int prev_flag = 0;
    for (int i = 0; i <= 80; ++i) {
        double h = -2.0 + 0.05 * i;
        ForecastRecord rec = make_forecast_record(17, h, 0.25, 4.0, NoiseKind::gaussian);
        REQUIRE(rec.t == 17);
        REQUIRE(rec.h_bar_hat == h);
        REQUIRE(rec.sigma_bar_hat == forecast_volatility(h, 0.25));
        REQUIRE(rec.tail_prob_hat >= prev_prob);
        int flag = classify(rec.tail_prob_hat);
        REQUIRE(flag >= prev_flag);
        prev_prob = rec.tail_prob_hat;
        prev_flag = flag;
    }
    REQUIRE(prev_flag == 1);  // grid ends in the flagged region
}

TEST_CASE("scorecard counts events against the training scale", "[forecast]") {
    SECTION("hand-counted confusion matrix") {
        std::vector<double> eps = {0.1, 5.0, -4.0, 0.2, 6.0, 0.05};
        std::vector<double> probs = {0.5, 0.0135, 0.001, 0.9, 0.0, 0.0};
        std::vector<double> sigma = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        EvalReport r = evaluate(eps, records_from(sigma, probs), 1.0);
        REQUIRE(r.true_positives == 1);
        REQUIRE(r.false_negatives == 2);
        REQUIRE(r.false_positives == 2);
        REQUIRE(r.true_negatives == 1);
        REQUIRE(r.sensitivity);
        REQUIRE(r.specificity);
        REQUIRE(*r.sensitivity == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
        REQUIRE(*r.specificity == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
        REQUIRE(count_sum(r) == eps.size());
    }
    SECTION("event boundary is inclusive at three sigma") {
        std::vector<double> eps = {3.0, 1.0};
        EvalReport r = evaluate(eps, records_from({1.0, 2.0}, {1.0, 1.0}), 1.0);
        REQUIRE(r.true_positives == 1);
        REQUIRE(r.false_positives == 1);
        REQUIRE(*r.sensitivity == 1.0);
        REQUIRE(*r.specificity == 0.0);
    }
    SECTION("oracle classifier scores perfectly") {
        std::vector<double> eps = {0.1, 5.0, -4.0, 0.2, 6.0, 0.05};
        std::vector<double> probs = {0.0, 1.0, 1.0, 0.0, 1.0, 0.0};
        std::vector<double> sigma = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        EvalReport r = evaluate(eps, records_from(sigma, probs), 1.0);
        REQUIRE(*r.sensitivity == 1.0);
        REQUIRE(*r.specificity == 1.0);
        REQUIRE(count_sum(r) == eps.size());
    }
    SECTION("silent classifier has zero sensitivity, full specificity") {
        std::vector<double> eps = {0.1, 5.0, -4.0, 0.2};
        EvalReport r = evaluate(eps, records_from({1.0, 2.0, 3.0, 4.0},
                                                  {0.0, 0.0, 0.0, 0.0}), 1.0);
        REQUIRE(*r.sensitivity == 0.0);
        REQUIRE(*r.specificity == 1.0);
    }
    SECTION("sensitivity is absent without events") {
        std::vector<double> eps = {0.1, -0.2, 0.3, 0.05};
        EvalReport r = evaluate(eps, records_from({1.0, 2.0, 3.0, 4.0},
                                                  {0.5, 0.0, 0.0, 0.0}), 1.0);
        REQUIRE_FALSE(r.sensitivity);
        REQUIRE(r.specificity);
        REQUIRE(*r.specificity == Catch::Approx(3.0 / 4.0).epsilon(1e-15));
        REQUIRE(count_sum(r) == eps.size());
    }
    SECTION("specificity is absent without non-events") {
        std::vector<double> eps = {4.0, -5.0, 3.5};
        EvalReport r = evaluate(eps, records_from({1.0, 2.0, 3.0}, {1.0, 0.0, 1.0}), 1.0);
        REQUIRE(r.sensitivity);
        REQUIRE_FALSE(r.specificity);
        REQUIRE(*r.sensitivity == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SECTION("zero classifier threshold flags everything") {
        std::vector<double> eps = {0.1, 5.0, -4.0, 0.2};
        EvalReport r = evaluate(eps, records_from({1.0, 2.0, 3.0, 4.0},
                                                  {0.0, 0.0, 0.0, 0.0}), 1.0, 0.0);
        REQUIRE(*r.sensitivity == 1.0);
        REQUIRE(*r.specificity == 0.0);
    }
    SECTION("validation") {
        std::vector<double> eps = {1.0, 2.0};
        auto recs = records_from({1.0, 2.0}, {0.0, 0.0});
        REQUIRE_THROWS_AS(evaluate({1.0}, recs, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(evaluate({1.0}, records_from({1.0}, {0.0}), 1.0),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(evaluate(eps, recs, 0.0), std::domain_error);
        REQUIRE_THROWS_AS(evaluate(eps, recs, -1.0), std::domain_error);
        REQUIRE_THROWS_AS(evaluate(eps, recs, std::nan("")), std::domain_error);
    }
}

TEST_CASE("volatility correlation is Pearson on absolute returns", "[forecast]") {
    CounterRng rng(derive_seed(0xc0ffULL, 3));
    std::vector<double> eps, sigma, probs;
    for (int i = 0; i < 400; ++i) {
        double s = std::exp(rng.gaussian() * 0.4);
        sigma.push_back(s);
        eps.push_back(s * rng.gaussian());
        probs.push_back(0.0);
    }
    EvalReport r = evaluate(eps, records_from(sigma, probs), 1.0);

    std::vector<double> abs_eps;
    for (double e : eps) abs_eps.push_back(std::fabs(e));
    REQUIRE(r.vol_correlation ==
            Catch::Approx(pearson_standardized(abs_eps, sigma)).margin(1e-12));
    REQUIRE(r.vol_correlation > 0.2);  // forecasts carry real signal here

    SECTION("invariant to rescaling the forecasts by a power of two") {
        std::vector<double> scaled;
        for (double s : sigma) scaled.push_back(4.0 * s);
        EvalReport r4 = evaluate(eps, records_from(scaled, probs), 1.0);
        REQUIRE(r4.vol_correlation == r.vol_correlation);
    }
}

TEST_CASE("evaluation rows render as csv", "[forecast]") {
    EvalReport r;
    r.delta_hat = 0.35;
    r.vol_correlation = 0.6015625;
    r.specificity = 0.75;

    std::ostringstream out;
    out << eval_report_csv_header() << "\n";
    write_eval_report_row(out, 123, 0.3, r);
    r.sensitivity = 0.9375;
    write_eval_report_row(out, 124, 0.5, r);

    std::istringstream in(out.str());
    csv::Table table = csv::read(in);
    REQUIRE(table.header ==
            std::vector<std::string>{"seed", "split", "delta_hat", "vol_correlation",
                                     "sensitivity", "specificity"});
    REQUIRE(table.rows.size() == 2);
    REQUIRE(table.rows[0][table.column("seed")] == "123");
    REQUIRE(csv::parse_double(table.rows[0][table.column("split")]) == 0.3);
    REQUIRE(csv::parse_double(table.rows[0][table.column("delta_hat")]) == 0.35);
    REQUIRE(csv::parse_double(table.rows[0][table.column("vol_correlation")]) == 0.6015625);
    REQUIRE(table.rows[0][table.column("sensitivity")].empty());
    REQUIRE(csv::parse_double(table.rows[0][table.column("specificity")]) == 0.75);
    REQUIRE(csv::parse_double(table.rows[1][table.column("sensitivity")]) == 0.9375);
}

#include "nowcast/error.hpp"
#include "nowcast/forecast.hpp"
#include "nowcast/sarima.hpp"
#include "nowcast/schema.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace nowcast;

namespace {

/// Exact Gaussian log-likelihood with sigma^2 concentrated out, from the
/// unit-variance autocovariances by dense Cholesky.
double toeplitz_loglik(const std::vector<double>& y, const std::vector<double>& gamma) {
    const int n = static_cast<int>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e(i) = y[static_cast<std::size_t>(i)] - mean;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    const double quad = e.dot(llt.solve(e));
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double s2 = quad / n;
    return -0.5 * n * (std::log(2.0 * M_PI) + std::log(s2) + 1.0) - 0.5 * logdet;
}

std::vector<double> simulate_ar1(double phi, int n, std::uint64_t seed, double mean = 50.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e;
    std::vector<double> y;
    double x = e(rng) / std::sqrt(1.0 - phi * phi);
    for (int i = 0; i < n; ++i) {
        y.push_back(mean + x);
        x = phi * x + e(rng);
    }
    return y;
}

SampleTable channel_table(const std::vector<std::pair<std::string, int>>& spec) {
    SampleTable t{canonical_schema(), HalfYearPeriod::parse("2016H1"), Source::survey, {}};
    int k = 0;
    for (const auto& [channel, n] : spec) {
        for (int i = 0; i < n; ++i, ++k) {
            Row r;
            r.attributes = {20.0 + k, static_cast<double>(k % 2), static_cast<double>(k % 6), 0, 0, 0, 0, 0,
                            static_cast<double>(k % 5)};
            r.channel = channel;
            r.label = LabelValue::binary(k % 2);
            t.rows.push_back(r);
        }
    }
    return t;
}

} // namespace

TEST(Sarima, OrderGridAdmissibility) {
    SarimaOrder o{};
    o.p = 2;
    o.P = 1;
    o.D = 1;
    EXPECT_EQ(o.min_length(), 0u + 2u + 4u + 1u);
    EXPECT_TRUE(o.admissible(7));
    EXPECT_FALSE(o.admissible(6));
    EXPECT_EQ(o.to_string(), "(2,0,0)(1,1,0)[2]");
    EXPECT_EQ(o.parameter_count(), 4);
    for (const auto& g : sarima_order_grid(12)) EXPECT_TRUE(g.admissible(12));
    EXPECT_EQ(sarima_order_grid(1000).size(), 3u * 3u * 3u * 3u * 2u * 2u);
}

TEST(Sarima, LikelihoodMatchesDenseOracleArma11) {
    const auto y = simulate_ar1(0.6, 30, 11);
    const double phi = 0.5, theta = 0.3;
    std::vector<double> g(30);
    g[0] = (1 + 2 * phi * theta + theta * theta) / (1 - phi * phi);
    g[1] = (1 + phi * theta) * (phi + theta) / (1 - phi * phi);
    for (std::size_t k = 2; k < g.size(); ++k) g[k] = phi * g[k - 1];
    SarimaOrder o{};
    o.p = 1;
    o.q = 1;
    const auto m = sarima_from_parameters(y, o, {phi}, {theta}, {}, {});
    EXPECT_NEAR(m.loglik, toeplitz_loglik(y, g), 1e-6);
    EXPECT_NEAR(m.aic, 2.0 * o.parameter_count() - 2.0 * m.loglik, 1e-12);
}

TEST(Sarima, LikelihoodMatchesDenseOracleSeasonalAr) {
    const auto y = simulate_ar1(0.2, 24, 12);
    const double Phi = -0.4;
    std::vector<double> g(24, 0.0);
    for (std::size_t k = 0; k < g.size(); k += 2) g[k] = std::pow(Phi, static_cast<double>(k / 2)) / (1 - Phi * Phi);
    SarimaOrder o{};
    o.P = 1;
    const auto m = sarima_from_parameters(y, o, {}, {}, {Phi}, {});
    EXPECT_NEAR(m.loglik, toeplitz_loglik(y, g), 1e-6);
}

TEST(Sarima, RejectsNonStationaryParameters) {
    SarimaOrder o{};
    o.p = 1;
    EXPECT_THROW(sarima_from_parameters(simulate_ar1(0.5, 20, 1), o, {1.2}, {}, {}, {}), Error);
}

TEST(Sarima, ConstantSeries) {
    const ChannelCountSeries s{"other", HalfYearPeriod::parse("2010H1"), std::vector<double>(12, 100.0)};
    const auto sel = fit_sarima(s);
    EXPECT_NEAR(forecast_count(sel.model, 2), 100.0, 1e-3);
    EXPECT_NEAR(forecast_count(sel.model, 5), 100.0, 1e-3);
}

TEST(Sarima, AlternatingSeries) {
    std::vector<double> v;
    for (int i = 0; i < 12; ++i) v.push_back(i % 2 == 0 ? 100.0 : 200.0);
    const auto sel = fit_sarima({"other", HalfYearPeriod::parse("2010H1"), v});
    EXPECT_NEAR(forecast_count(sel.model, 1), 100.0, 1.0);
    EXPECT_NEAR(forecast_count(sel.model, 2), 200.0, 1.0);
}

TEST(Sarima, LinearTrend) {
    std::vector<double> v;
    for (int i = 0; i < 16; ++i) v.push_back(500.0 + 10.0 * i);
    const std::vector<double> train(v.begin(), v.begin() + 14);
    const auto sel = select_sarima(train);
    EXPECT_LT(std::abs(sel.model.forecast_path(2).back() - v[15]), 0.01 * v[15]);
    SarimaOrder o{};
    o.d = 1;
    const auto m = fit_sarima_order(train, o);
    ASSERT_TRUE(m.has_value());
    EXPECT_LT(std::abs(m->forecast_path(2).back() - v[15]), 1e-2);
}

TEST(Sarima, Ar1Recovery) {
    const auto y = simulate_ar1(0.7, 200, 2024);
    SarimaOrder o{};
    o.p = 1;
    const auto m = fit_sarima_order(y, o);
    ASSERT_TRUE(m.has_value());
    EXPECT_NEAR(m->ar[0], 0.7, 0.15);
    EXPECT_NEAR(m->mean, 50.0, 1.0);
}

TEST(Sarima, AicArgminUnderExhaustiveRecheck) {
    const auto y = simulate_ar1(0.5, 20, 77, 300.0);
    const auto sel = select_sarima(y);
    for (const auto& c : sel.candidates) {
        if (c.converged) {
            EXPECT_LE(sel.model.aic, c.aic + 1e-12) << c.order.to_string();
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : sarima_order_grid(y.size())) {
        if (const auto m = fit_sarima_order(y, o)) best = std::min(best, m->aic);
    }
    EXPECT_EQ(sel.model.aic, best);
}

TEST(Sarima, ClosedFormForecasts) {
    // AR(1) with phi = 0.5 and the last value 2 above the sample mean.
    const std::vector<double> y = {9.5, 9.5, 9.5, 9.5, 12.0};
    SarimaOrder ar1{};
    ar1.p = 1;
    const auto m = sarima_from_parameters(y, ar1, {0.5}, {}, {}, {});
    EXPECT_NEAR(m.mean, 10.0, 1e-12);
    EXPECT_NEAR(forecast_count(m, 2), 10.0 + 0.25 * 2.0, 1e-9);
    // White noise: the sample mean.
    const auto wn = sarima_from_parameters(y, SarimaOrder{}, {}, {}, {}, {});
    EXPECT_NEAR(forecast_count(wn, 3), 10.0, 1e-12);
}

TEST(Sarima, TooShort) {
    EXPECT_THROW(fit_sarima({"other", HalfYearPeriod::parse("2010H1"), std::vector<double>(7, 1.0)}), Error);
}

TEST(Counts, CsvRoundTripAndContiguity) {
    std::istringstream in("channel,period,count\nreferral,2010H1,5\nreferral,2010H2,6\nother,2010H1,1\n");
    const auto s = parse_counts(in);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].counts, (std::vector<double>{5, 6}));
    std::ostringstream out;
    write_counts(out, s);
    std::istringstream in2(out.str());
    EXPECT_EQ(parse_counts(in2)[0].counts, s[0].counts);
    std::istringstream gap("channel,period,count\nreferral,2010H1,5\nreferral,2011H1,6\n");
    EXPECT_THROW(parse_counts(gap), Error);
}

TEST(Aux, WindowAverageAndRule) {
    AuxiliarySeries aux;
    for (int y = 2016; y <= 2018; ++y)
        for (int m = 1; m <= 12; ++m) aux.months.push_back({y, m, 100.0});
    aux.months[24 + 0].value = 10;
    for (int m = 1; m < 4; ++m) aux.months[static_cast<std::size_t>(24 + m)].value = 10;
    aux.months[24 + 4].value = 60;
    EXPECT_DOUBLE_EQ(aux_window_average(aux, HalfYearPeriod::parse("2018H1")), 20.0);
    EXPECT_DOUBLE_EQ(aux_count(1000.0, aux, HalfYearPeriod::parse("2017H2")), 1000.0);
    for (int m = 7; m <= 11; ++m) aux.months[static_cast<std::size_t>(12 + m - 1)].value = 110;
    EXPECT_NEAR(aux_count(1000.0, aux, HalfYearPeriod::parse("2017H2")), 1100.0, 1e-9);
    EXPECT_THROW(aux_count(1000.0, aux, HalfYearPeriod::parse("2019H1")), Error);
    for (int m = 1; m <= 5; ++m) aux.months[static_cast<std::size_t>(m - 1)].value = 0;
    EXPECT_THROW(aux_count(1000.0, aux, HalfYearPeriod::parse("2017H1")), Error);
}

TEST(Forecast, ChannelCountsUseAuxForPublicChannel) {
    std::vector<ChannelCountSeries> series = {
        {"public_agency", HalfYearPeriod::parse("2010H1"), std::vector<double>(12, 50.0)},
        {"referral", HalfYearPeriod::parse("2010H1"), std::vector<double>(12, 80.0)}};
    AuxiliarySeries aux;
    for (int y = 2010; y <= 2016; ++y)
        for (int m = 1; m <= 12; ++m) aux.months.push_back({y, m, y >= 2016 ? 200.0 : 100.0});
    const auto target = HalfYearPeriod::parse("2016H1");
    const auto rep = forecast_channel_counts(series, target, &aux);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].method, CountMethod::aux);
    EXPECT_DOUBLE_EQ(rep.rows[0].count, 100.0);
    EXPECT_EQ(rep.rows[1].method, CountMethod::sarima);
    EXPECT_NEAR(rep.rows[1].count, 80.0, 1e-3);
    const auto no_aux = forecast_channel_counts(series, target, nullptr);
    EXPECT_EQ(no_aux.rows[0].method, CountMethod::sarima);
    EXPECT_THROW(forecast_channel_counts(series, HalfYearPeriod::parse("2017H2"), nullptr), Error);
}

TEST(Resample, ClosureAndCounts) {
    const auto src = channel_table({{"referral", 5}, {"other", 3}});
    const auto out = resample_attributes(src, {{"referral", 5}, {"other", 3}}, HalfYearPeriod::parse("2017H1"), 4);
    EXPECT_EQ(out.size(), 8u);
    EXPECT_EQ(out.period.to_string(), "2017H1");
    for (const auto& r : out.rows) {
        EXPECT_FALSE(r.label.has_value());
        const bool found = std::any_of(src.rows.begin(), src.rows.end(), [&](const Row& s) {
            return s.attributes == r.attributes && s.channel == r.channel;
        });
        EXPECT_TRUE(found);
    }
    const auto zero = resample_attributes(src, {{"referral", 0}, {"other", 2}}, src.period, 4);
    EXPECT_EQ(zero.size(), 2u);
    EXPECT_THROW(resample_attributes(src, {{"advertisement", 1}}, src.period, 4), Error);
    const auto again = resample_attributes(src, {{"referral", 5}, {"other", 3}}, HalfYearPeriod::parse("2017H1"), 4);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out.rows[i].attributes, again.rows[i].attributes);
}

TEST(Resample, LevelFrequenciesMatchSource) {
    const auto src = channel_table({{"referral", 60}});
    const std::size_t n = 50 * src.size();
    const auto out = resample_attributes(src, {{"referral", n}}, src.period, 99);
    ASSERT_EQ(out.size(), n);
    // Education (field 2) has 6 levels, 10 source rows each.
    std::vector<double> freq(6, 0.0);
    for (const auto& r : out.rows) freq[static_cast<std::size_t>(r.attributes[2])] += 1.0;
    double chi2 = 0.0;
    for (const double f : freq) {
        const double expect = static_cast<double>(n) / 6.0;
        chi2 += (f - expect) * (f - expect) / expect;
        EXPECT_LT(std::abs(f / n - 1.0 / 6.0), 3.0 * std::sqrt((1.0 / 6.0) * (5.0 / 6.0) / n) * std::sqrt(2.0));
    }
    EXPECT_LT(chi2, 20.5); // chi-square(5) upper 0.001 quantile
}

TEST(Extrapolation, Examples) {
    EXPECT_DOUBLE_EQ(simple_extrapolation(30.0, 33.0, 30.0), 33.0);
    EXPECT_DOUBLE_EQ(simple_extrapolation(27.0, 40.0, 40.0), 27.0);
    EXPECT_DOUBLE_EQ(simple_extrapolation(2 * 27.0, 41.0, 40.0), 2 * simple_extrapolation(27.0, 41.0, 40.0));
    EXPECT_DOUBLE_EQ(simple_extrapolation(27.0, 3 * 41.0, 3 * 40.0), simple_extrapolation(27.0, 41.0, 40.0));
    EXPECT_THROW(simple_extrapolation(27.0, 41.0, 0.0), Error);
}

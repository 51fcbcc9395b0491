#include "nowcast/error.hpp"
#include "nowcast/synthgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace nowcast;

namespace {

PopulationSpec small_spec(Selection sel) {
    PopulationSpec s;
    s.periods = 4;
    s.survey_rows = 2000;
    s.agency_rows = 8000;
    s.selection = sel;
    return s;
}

double mean_label(const SampleTable& t) {
    double s = 0.0;
    for (const auto& r : t.rows) s += r.label->binary_view();
    return s / static_cast<double>(t.size());
}

double mean_age(const SampleTable& t, bool weighted) {
    double s = 0.0, w = 0.0;
    for (const auto& r : t.rows) {
        const double wi = weighted ? r.weight : 1.0;
        s += wi * r.attributes[0];
        w += wi;
    }
    return s / w;
}

} // namespace

TEST(Synth, McarAgencyRateMatchesTruth) {
    const auto data = generate(small_spec(Selection::mcar));
    ASSERT_EQ(data.agency.size(), 4u);
    for (std::size_t t = 0; t < data.agency.size(); ++t) {
        const auto& pt = data.truth.periods[t];
        EXPECT_NEAR(pt.agency_rate, pt.indicator, 1e-9);
        const double p = pt.agency_rate / 100.0;
        const double se = std::sqrt(p * (1 - p) / static_cast<double>(data.agency[t].size()));
        EXPECT_NEAR(mean_label(data.agency[t]), p, 3.0 * se) << pt.period.to_string();
        EXPECT_DOUBLE_EQ(*data.indicators.official(pt.period), pt.indicator);
    }
    EXPECT_DOUBLE_EQ(data.truth.beta, 1.0);
}

TEST(Synth, McarRatioIsOne) {
    const auto spec = small_spec(Selection::mcar);
    const auto gt = compute_truth(spec);
    const auto data = generate(spec);
    for (std::size_t i = 0; i < 50; ++i)
        EXPECT_NEAR(true_ratio(gt, spec.period(1), data.agency[1].rows[i].attributes), 1.0, 1e-9);
}

TEST(Synth, MarSelectsYounger) {
    const auto data = generate(small_spec(Selection::mar));
    for (std::size_t t = 0; t < data.agency.size(); ++t)
        EXPECT_LT(mean_age(data.agency[t], false) + 2.0, mean_age(data.survey[t], true));
}

TEST(Synth, RatioIntegratesToOne) {
    const auto spec = small_spec(Selection::mar);
    const auto data = generate(spec);
    const auto& gt = data.truth;
    double s = 0.0;
    const auto& rows = data.agency[2].rows;
    for (const auto& r : rows) s += true_ratio(gt, spec.period(2), r.attributes);
    EXPECT_NEAR(s / static_cast<double>(rows.size()), 1.0, 0.02);
}

TEST(Synth, NmarShiftsLabelsByKappa) {
    auto spec = small_spec(Selection::nmar);
    spec.kappa = 1.2;
    const auto data = generate(spec);
    EXPECT_NEAR(data.truth.beta, 1.0 / 1.2, 1e-12);
    for (std::size_t t = 0; t < data.agency.size(); ++t) {
        double q = 0.0;
        for (const auto& r : data.agency[t].rows) q += label_probability(spec, static_cast<int>(t), r.attributes);
        const double n = static_cast<double>(data.agency[t].size());
        const double expected = spec.kappa * q / n;
        const double se = std::sqrt(expected * (1 - expected) / n);
        EXPECT_NEAR(mean_label(data.agency[t]), expected, 3.5 * se);
    }
}

TEST(Synth, SpecTextRoundTripAndValidation) {
    auto spec = small_spec(Selection::nmar);
    spec.kappa = 0.9;
    spec.mar_age_drift = 0.25;
    const auto text = spec_to_text(spec);
    EXPECT_EQ(spec_to_text(parse_spec(text)), text);
    EXPECT_THROW(parse_spec("no_such_key = 1\n"), Error);
    auto bad = spec;
    bad.kappa = 1.3;
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_THROW(set_spec_value(spec, "selection", "sometimes"), Error);
    set_spec_value(spec, "agency_rows", "123");
    EXPECT_EQ(spec.agency_rows, 123);
}

TEST(Synth, DeterministicAndWritten) {
    auto spec = small_spec(Selection::mar);
    spec.survey_rows = 300;
    spec.agency_rows = 200;
    const auto a = generate(spec);
    const auto b = generate(spec);
    ASSERT_EQ(a.survey[3].size(), b.survey[3].size());
    for (std::size_t i = 0; i < a.survey[3].size(); ++i)
        EXPECT_EQ(a.survey[3].rows[i].attributes, b.survey[3].rows[i].attributes);

    const auto dir = std::filesystem::temp_directory_path() / "nowcast_synth_test";
    std::filesystem::remove_all(dir);
    write_synthetic(dir, a);
    for (const char* f : {"counts.csv", "aux.csv", "indicators.csv", "truth.json", "spec.cfg"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const auto back = load_table(survey_file(dir / "survey", spec.period(3)), Source::survey, canonical_schema());
    EXPECT_EQ(back.size(), a.survey[3].size());
    const auto ag = load_table(agency_file(dir / "agency", spec.period(0)), Source::agency, canonical_schema());
    EXPECT_EQ(ag.size(), a.agency[0].size());
    EXPECT_EQ(spec_to_text(load_spec(dir / "spec.cfg")), spec_to_text(spec));
    std::filesystem::remove_all(dir);
}

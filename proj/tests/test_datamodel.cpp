#include "nowcast/encoding.hpp"
#include "nowcast/error.hpp"
#include "nowcast/period.hpp"
#include "nowcast/schema.hpp"
#include "nowcast/table.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace nowcast;

namespace {

const char* kHeader =
    "period,channel,weight,age,gender,education,loc_after,ind_after,size_after,loc_before,ind_before,size_before,"
    "emp_type_after,emp_type_before,wage_up_10pct\n";

std::string survey_row(const std::string& weight, const std::string& label, const std::string& emp = "full_time") {
    return "2018H1,referral," + weight + ",35,male,university,kanto,finance,30to99,kinki,services,under30," + emp +
           ",full_time," + label + "\n";
}

SampleTable parse_survey(const std::string& text) {
    std::istringstream in(text);
    return parse_table(in, Source::survey, canonical_schema(), "fixture.csv");
}

} // namespace

TEST(Period, OrderingAndDistance) {
    const auto a = HalfYearPeriod::parse("2018H1");
    const auto b = HalfYearPeriod::parse("2018h2");
    EXPECT_LT(a, b);
    EXPECT_EQ(distance(a, b), 1);
    EXPECT_EQ(b.next(), HalfYearPeriod::parse("2019H1"));
    EXPECT_EQ(HalfYearPeriod::parse("2019H1").prev(), b);
    EXPECT_EQ(a.shifted(-2).to_string(), "2017H1");
    EXPECT_EQ(distance(HalfYearPeriod::parse("2013H2"), HalfYearPeriod::parse("2018H2")), 10);
    EXPECT_THROW(HalfYearPeriod::parse("2018H3"), Error);
    EXPECT_THROW(HalfYearPeriod::parse("18H1"), Error);
}

TEST(Schema, CanonicalAndThreeItems) {
    const auto s = canonical_schema();
    EXPECT_EQ(s.size(), 9u);
    EXPECT_FALSE(s[0].is_categorical());
    EXPECT_EQ(three_item_fields(), (std::vector<std::string>{"age", "education", "size_before"}));
    EXPECT_THROW(AttributeSchema({{"a", Numeric{}}, {"a", Numeric{}}}), Error);
    EXPECT_THROW(AttributeSchema({{"c", Categorical{{}}}}), Error);
}

TEST(LoadTable, ThreeRowSurvey) {
    const auto t = parse_survey(std::string(kHeader) + survey_row("10", "1") + survey_row("20", "0") +
                                survey_row("30.5", "1"));
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t.period.to_string(), "2018H1");
    for (const auto& r : t.rows) {
        ASSERT_TRUE(r.label.has_value());
        EXPECT_FALSE(r.label->is_ratio());
    }
    EXPECT_EQ(t.rows[0].label->binary_view(), 1);
    EXPECT_EQ(t.rows[1].label->binary_view(), 0);
    EXPECT_DOUBLE_EQ(t.total_weight(), 60.5);
}

TEST(LoadTable, NegativeWeightNamesLine) {
    const std::string text = std::string(kHeader) + survey_row("1", "1") + survey_row("1", "0") + survey_row("-1", "1");
    try {
        parse_survey(text);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("fixture.csv:4"), std::string::npos) << e.what();
    }
}

TEST(LoadTable, UnknownLevelAndMissingColumn) {
    std::string bad = std::string(kHeader) + survey_row("1", "1");
    bad.replace(bad.find("university"), 10, "doctorate");
    EXPECT_THROW(parse_survey(bad), Error);
    EXPECT_THROW(parse_survey("period,channel,weight\n2018H1,referral,1\n"), Error);
}

TEST(LoadTable, PartTimeRowsDropped) {
    const auto t = parse_survey(std::string(kHeader) + survey_row("1", "1") + survey_row("1", "0", "part_time"));
    EXPECT_EQ(t.size(), 1u);
}

TEST(LoadTable, AgencyRatioLabel) {
    std::istringstream in(
        "period,channel,age,gender,education,loc_after,ind_after,size_after,loc_before,ind_before,size_before,"
        "emp_type_after,emp_type_before,wage_before,wage_after\n"
        "2018H1,private_agency,41,female,high_school,kanto,finance,30to99,kinki,services,under30,full_time,"
        "full_time,400,460\n");
    const auto t = parse_table(in, Source::agency, canonical_schema());
    ASSERT_EQ(t.size(), 1u);
    EXPECT_TRUE(t.rows[0].label->is_ratio());
    EXPECT_NEAR(*t.rows[0].label->ratio_value(), 1.15, 1e-15);
    EXPECT_EQ(t.rows[0].label->binary_view(), 1);
    EXPECT_DOUBLE_EQ(t.rows[0].weight, 1.0);
}

TEST(Label, StrictThreshold) {
    EXPECT_EQ(LabelValue::ratio(1.1).binary_view(), 0);
    EXPECT_EQ(LabelValue::ratio(std::nextafter(1.1, 2.0)).binary_view(), 1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1.09, 1.11);
    for (int i = 0; i < 1000; ++i) {
        const double r = u(rng);
        EXPECT_EQ(LabelValue::ratio(r).binary_view(), r > 1.1 ? 1 : 0);
    }
    EXPECT_THROW(LabelValue::ratio(0.0), Error);
    EXPECT_THROW(LabelValue::binary(2), Error);
}

TEST(Table, RoundTripIsByteIdentical) {
    const auto t = parse_survey(std::string(kHeader) + survey_row("1.25", "1") + survey_row("3", "0"));
    std::ostringstream a;
    write_table(a, t);
    const auto t2 = parse_survey(a.str());
    std::ostringstream b;
    write_table(b, t2);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Replicate, LargestRemainder) {
    EXPECT_EQ(largest_remainder(std::vector<double>{1.5, 1.5, 1.0}), (std::vector<std::size_t>{2, 1, 1}));
    EXPECT_EQ(largest_remainder(std::vector<double>{2.0, 1.0}), (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(largest_remainder(std::vector<double>{0.4, 0.4, 0.2}), (std::vector<std::size_t>{1, 0, 0}));
}

TEST(Replicate, ByWeight) {
    const auto t = parse_survey(std::string(kHeader) + survey_row("1.5", "1") + survey_row("1.5", "0") +
                                survey_row("1", "1"));
    const auto r = replicate_by_weight(t, 1.0);
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r.rows[0].label->binary_view(), 1);
    EXPECT_EQ(r.rows[1].label->binary_view(), 1);
    EXPECT_EQ(r.rows[2].label->binary_view(), 0);
    for (const auto& row : r.rows) EXPECT_DOUBLE_EQ(row.weight, 1.0);
    EXPECT_THROW(replicate_by_weight(t, 0.0), Error);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 7.0);
    SampleTable big = t;
    big.rows.clear();
    double total = 0.0;
    for (int i = 0; i < 300; ++i) {
        Row row = t.rows[0];
        row.weight = u(rng);
        total += row.weight * 0.37;
        big.rows.push_back(row);
    }
    EXPECT_LE(std::abs(static_cast<double>(replicate_by_weight(big, 0.37).size()) - total), 0.5);
}

TEST(Encode, ColumnsAndStandardization) {
    const AttributeSchema schema({{"c", Categorical{{"a", "b", "c"}}}, {"x", Numeric{}}});
    SampleTable t{schema, HalfYearPeriod::parse("2018H1"), Source::survey, {}};
    t.rows.push_back({{0, 1.0}, "other", 1.0, {}, {}, false});
    t.rows.push_back({{2, 3.0}, "other", 1.0, {}, {}, false});
    const auto m = encode(t);
    EXPECT_EQ(m.cols(), 4);
    EXPECT_NEAR(m.values.col(3).mean(), 0.0, 1e-12);
    const auto again = encode(t, m.params);
    EXPECT_TRUE(again.values.isApprox(m.values));
    EXPECT_DOUBLE_EQ(m.values(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.values(1, 2), 1.0);
    std::vector<double> row1 = {m.values(1, 0), m.values(1, 1), m.values(1, 2), m.values(1, 3)};
    const auto dec = decode_row(m.params, row1);
    EXPECT_EQ(dec[0], 2.0);
    EXPECT_NEAR(dec[1], 3.0, 1e-12);
    for (const auto& c : m.params.columns) EXPECT_LT(c.field, schema.size());
}

TEST(Encode, ConstantNumericAndUnknownLevel) {
    const AttributeSchema schema({{"x", Numeric{}}});
    SampleTable t{schema, HalfYearPeriod::parse("2018H1"), Source::survey, {}};
    for (int i = 0; i < 3; ++i) t.rows.push_back({{5.0}, "other", 1.0, {}, {}, false});
    const auto m = encode(t);
    EXPECT_EQ(m.values.cwiseAbs().maxCoeff(), 0.0);

    const AttributeSchema cs({{"c", Categorical{{"a", "b"}}}});
    SampleTable fit{cs, HalfYearPeriod::parse("2018H1"), Source::survey, {}};
    fit.rows.push_back({{0}, "other", 1.0, {}, {}, false});
    fit.rows.push_back({{1}, "other", 1.0, {}, {}, false});
    const auto p = fit_encoding(fit);
    SampleTable other = fit;
    other.rows = {{{7}, "other", 1.0, {}, {}, false}};
    const auto e = encode(other, p);
    EXPECT_EQ(e.values.row(0).sum(), 0.0);
}

TEST(Encode, MissingValues) {
    const AttributeSchema schema({{"c", Categorical{{"a", "b"}}}, {"x", Numeric{}}});
    SampleTable t{schema, HalfYearPeriod::parse("2018H1"), Source::survey, {}};
    t.rows.push_back({{0, 1.0}, "other", 1.0, {}, {}, false});
    t.rows.push_back({{kMissing, kMissing}, "other", 1.0, {}, {}, false});
    t.rows.push_back({{1, 3.0}, "other", 1.0, {}, {}, false});
    const auto m = encode(t);
    // 2 levels + missing level, numeric + missing indicator.
    EXPECT_EQ(m.cols(), 5);
    EXPECT_TRUE(m.values.allFinite());
}

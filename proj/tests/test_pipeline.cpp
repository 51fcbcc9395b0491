#include "nowcast/error.hpp"
#include "nowcast/pipeline.hpp"
#include "nowcast/synthgen.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nowcast;
namespace fs = std::filesystem;

namespace {

HalfYearPeriod P(const char* s) { return HalfYearPeriod::parse(s); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Small synthetic data set shared by the tests: 2008H1..2015H2.
const fs::path& fixture() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "nowcast_pipeline_fixture";
        fs::remove_all(d);
        PopulationSpec spec;
        spec.periods = 16;
        spec.survey_rows = 600;
        spec.agency_rows = 300;
        write_synthetic(d, generate(spec));
        return d;
    }();
    return dir;
}

RunConfig fast_config(const fs::path& out) {
    RunConfig cfg;
    cfg.data_dir = fixture();
    cfg.out_dir = out;
    cfg.tune = false;
    cfg.forest.n_trees = 10;
    cfg.boost.n_rounds = 10;
    cfg.ulsif.max_centers = 50;
    return cfg;
}

} // namespace

TEST(Config, ParseAndOverrides) {
    const auto cfg = parse_run_config("# run\ndata_dir = data\ntarget = 2018H1\ndre = three\nmethod = rf_reg\n"
                                      "beta_mode = full\nseed = 7\nmethods = en_cls, gb_reg\ntune = false\n",
                                      "/base");
    EXPECT_EQ(cfg.data_dir, fs::path("/base/data"));
    EXPECT_EQ(cfg.survey_path(), fs::path("/base/data/survey"));
    EXPECT_EQ(cfg.target->to_string(), "2018H1");
    EXPECT_EQ(cfg.dre, DreVariant::three_items);
    EXPECT_EQ(cfg.method, Method::rf_reg);
    EXPECT_EQ(cfg.beta_mode, BetaMode::full_period);
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.eval_methods, (std::vector<Method>{Method::en_cls, Method::gb_reg}));
    EXPECT_FALSE(cfg.tune);

    auto over = cfg;
    set_config_value(over, "method", "weighting_only");
    set_config_value(over, "counts", "/x/c.csv");
    EXPECT_EQ(over.method, Method::weighting_only);
    EXPECT_EQ(over.counts_file(), fs::path("/x/c.csv"));

    EXPECT_THROW(parse_run_config("colour = red\n"), Error);
    EXPECT_THROW(parse_run_config("method = magic\n"), Error);
    EXPECT_THROW(parse_run_config("no equals sign\n"), Error);
    for (const auto m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(Catalog, RefusesLateSurveyAndFutureActuals) {
    DataCatalog cat(fast_config(fs::temp_directory_path() / "nowcast_unused"));
    try {
        cat.survey(P("2014H2"), P("2015H1"));
        FAIL() << "expected a refusal";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("only available up to target - 2"), std::string::npos);
    }
    EXPECT_NO_THROW(cat.survey(P("2014H1"), P("2015H1")));
    EXPECT_THROW(cat.official(P("2015H1"), P("2015H1")), Error);
    EXPECT_NO_THROW(cat.official(P("2015H1"), P("2015H1"), true));
    EXPECT_TRUE(lookahead_violations(cat.log()).empty());
    EXPECT_EQ(cat.earliest_feasible(), P("2012H2"));

    std::vector<AccessRecord> bad = {{"survey", P("2015H1"), P("2015H2"), false},
                                     {"official", P("2015H2"), P("2015H2"), false},
                                     {"official", P("2015H2"), P("2015H2"), true}};
    EXPECT_EQ(lookahead_violations(bad).size(), 2u);
}

TEST(Nowcast, DeterministicAndPathIndependent) {
    const auto root = fs::temp_directory_path() / "nowcast_pipeline_runs";
    fs::remove_all(root);
    auto cfg = fast_config(root / "a");
    cfg.target = P("2015H2");
    cfg.method = Method::en_reg;
    cfg.dre = DreVariant::three_items;
    const auto r1 = run_nowcast(cfg);
    cfg.out_dir = root / "b";
    run_nowcast(cfg);
    EXPECT_EQ(slurp(root / "a" / "estimate.json"), slurp(root / "b" / "estimate.json"));
    EXPECT_TRUE(fs::exists(root / "a" / "model.json"));
    EXPECT_TRUE(fs::exists(root / "a" / "forecast_counts.csv"));
    EXPECT_GT(r1.estimate_pct, 0.0);
    EXPECT_LE(r1.estimate_pct, 100.0);
    EXPECT_EQ(r1.beta.window.front().period, P("2012H2"));
    EXPECT_EQ(r1.beta.window.back().period, P("2015H1"));

    // The same run through a config file with relative paths, from elsewhere.
    fs::create_directories(root / "cfgdir");
    fs::copy(fixture(), root / "cfgdir" / "data", fs::copy_options::recursive);
    {
        std::ofstream f(root / "cfgdir" / "run.cfg");
        f << "data_dir = data\nout = out\ntarget = 2015H2\nmethod = en_reg\ndre = three\ntune = false\n"
             "rf_trees = 10\ngb_rounds = 10\nulsif_centers = 50\n";
    }
    const auto from_file = load_run_config(root / "cfgdir" / "run.cfg");
    run_nowcast(from_file);
    EXPECT_EQ(slurp(root / "a" / "estimate.json"), slurp(root / "cfgdir" / "out" / "estimate.json"));

    cfg.seed = 2;
    cfg.out_dir = root / "c";
    run_nowcast(cfg);
    EXPECT_NE(slurp(root / "a" / "estimate.json"), slurp(root / "c" / "estimate.json"));
    fs::remove_all(root);
}

TEST(Evaluate, FullGridAndAudit) {
    const auto out = fs::temp_directory_path() / "nowcast_eval";
    fs::remove_all(out);
    auto cfg = fast_config(out);
    cfg.window_start = P("2014H2");
    cfg.window_end = P("2015H2");
    const auto run = run_evaluate(cfg);
    EXPECT_EQ(run.report.summary.size(), 1u + 7u * 2u * 2u);
    EXPECT_EQ(run.report.summary.front().method, kBenchmarkMethod);
    for (const auto& s : run.report.series) EXPECT_EQ(s.periods.size(), 3u);
    EXPECT_TRUE(lookahead_violations(run.access_log).empty());
    for (const char* f : {"report.csv", "summary.csv", "summary.txt", "access_log.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    fs::remove_all(out);
}

TEST(Evaluate, BenchmarkAgainstIndicators) {
    auto cfg = fast_config(fs::temp_directory_path() / "nowcast_bench");
    DataCatalog cat(cfg);
    const auto ind = load_indicators(cfg.indicators_file());
    const auto t = P("2015H2");
    const double expect = *ind.official(t.shifted(-2)) * *ind.supplementary(t) / *ind.supplementary(t.shifted(-2));
    EXPECT_NEAR(benchmark_estimate(cat, t), expect, 1e-12);
    EXPECT_TRUE(lookahead_violations(cat.log()).empty());
}

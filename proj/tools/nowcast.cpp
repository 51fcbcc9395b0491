// Command-line front end: synth, forecast-counts, weights, nowcast, evaluate.
#include "nowcast/error.hpp"
#include "nowcast/pipeline.hpp"
#include "nowcast/synthgen.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace nowcast;

namespace {

struct RunFlags {
    std::string config;
    std::string data;
    std::string out;
    std::string target;
    std::string dre;
    std::string method;
    std::string beta_mode;
    std::string window_start;
    std::string window_end;
    std::string beta_start;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> set;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
    app->add_option("--config", f.config, "Run configuration file (key = value)");
    app->add_option("--data", f.data, "Data directory with survey/, agency/, indicators.csv");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--target", f.target, "Target half-year, e.g. 2016H2");
    app->add_option("--seed", f.seed, "Root seed");
    app->add_option("--dre", f.dre, "Density-ratio items")->check(CLI::IsMember({"all", "three"}));
    app->add_option("--method", f.method, "weighting_only, en_cls, en_reg, rf_cls, rf_reg, gb_cls or gb_reg");
    app->add_option("--beta-mode", f.beta_mode, "Beta window")->check(CLI::IsMember({"prior", "full"}));
    app->add_option("--window-start", f.window_start, "First validation period");
    app->add_option("--window-end", f.window_end, "Last validation period");
    app->add_option("--beta-start", f.beta_start, "First period of the expanding beta window");
    app->add_option("--set", f.set, "Extra configuration override key=value (repeatable)");
}

/// Config file first, then flags; flags win.
RunConfig resolve_config(const RunFlags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    const fs::path here = fs::current_path();
    const auto apply = [&](const char* key, const std::string& v) {
        if (!v.empty()) set_config_value(cfg, key, v, here);
    };
    apply("data_dir", f.data);
    apply("out", f.out);
    apply("target", f.target);
    apply("dre", f.dre);
    apply("method", f.method);
    apply("beta_mode", f.beta_mode);
    apply("window_start", f.window_start);
    apply("window_end", f.window_end);
    apply("beta_start", f.beta_start);
    if (f.seed) cfg.seed = *f.seed;
    for (const auto& kv : f.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1), here);
    }
    return cfg;
}

HalfYearPeriod require_target(const RunConfig& cfg) {
    if (!cfg.target) throw Error("a target period is required (--target)");
    return *cfg.target;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nowcasting from biased real-time samples with density-ratio weighting"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string synth_out = "synthetic";
    std::optional<std::uint64_t> synth_seed;
    std::vector<std::string> synth_set;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic fixture with known ground truth");
    synth->add_option("--config", spec_path, "Population spec file (key = value)");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--set", synth_set, "Spec override key=value (repeatable)");

    RunFlags fc_flags, w_flags, n_flags, e_flags;
    auto* fc = app.add_subcommand("forecast-counts", "Forecast per-channel sample counts for the target");
    add_run_flags(fc, fc_flags);
    auto* weights = app.add_subcommand("weights", "Fit uLSIF and write agency sample weights for the target");
    add_run_flags(weights, w_flags);
    auto* now = app.add_subcommand("nowcast", "Produce a beta-corrected estimate for the target");
    add_run_flags(now, n_flags);
    auto* eval = app.add_subcommand("evaluate", "Evaluate methods over the validation window");
    add_run_flags(eval, e_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            PopulationSpec spec = spec_path.empty() ? PopulationSpec{} : load_spec(spec_path);
            for (const auto& kv : synth_set) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
                set_spec_value(spec, kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (synth_seed) spec.seed = *synth_seed;
            spec.validate();
            write_synthetic(synth_out, generate(spec));
            std::cout << "wrote " << spec.periods << " periods to " << synth_out << "\n";
        } else if (*fc) {
            const auto cfg = resolve_config(fc_flags);
            const auto target = require_target(cfg);
            DataCatalog catalog(cfg);
            const auto series = catalog.counts(target);
            const auto report = forecast_channel_counts(series, target, cfg.use_aux ? catalog.aux() : nullptr);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            fs::create_directories(cfg.out_dir);
            std::ofstream out(cfg.out_dir / "forecast_counts.csv", std::ios::binary);
            write_forecast_report(out, report);
            write_forecast_report(std::cout, report);
        } else if (*weights) {
            const auto cfg = resolve_config(w_flags);
            DataCatalog catalog(cfg);
            auto prep = prepare_period(catalog, require_target(cfg));
            const auto& w = dre_weights(prep, cfg.dre, cfg);
            fs::create_directories(cfg.out_dir);
            {
                std::ofstream out(cfg.out_dir / "weights.csv", std::ios::binary);
                write_weights(out, WeightVector{w, Normalization::raw});
            }
            {
                std::ofstream out(cfg.out_dir / "ulsif_cv.csv", std::ios::binary);
                write_cv_report(out, prep.dre_models.at(cfg.dre));
            }
            const auto& model = prep.dre_models.at(cfg.dre);
            std::cout << "sigma " << format_double(model.basis.sigma) << " lambda " << format_double(model.lambda)
                      << " centers " << model.basis.size() << " rows " << w.size() << "\n";
        } else if (*now) {
            const auto res = run_nowcast(resolve_config(n_flags));
            std::cout << res.to_json().dump(2) << "\n";
        } else if (*eval) {
            const auto cfg = resolve_config(e_flags);
            const auto run = run_evaluate(cfg);
            if (!run.warnings.empty()) {
                std::ofstream out(cfg.out_dir / "warnings.txt", std::ios::binary);
                for (const auto& w : run.warnings) out << w << "\n";
                std::cerr << run.warnings.size() << " forecast warnings written to "
                          << (cfg.out_dir / "warnings.txt").string() << "\n";
            }
            write_summary_table(std::cout, run.report);
            const auto bad = lookahead_violations(run.access_log);
            if (!bad.empty()) {
                std::cerr << "error: " << bad.size() << " data accesses broke the availability rules\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

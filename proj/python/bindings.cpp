#include "nowcast/boxcox.hpp"
#include "nowcast/correction.hpp"
#include "nowcast/density_ratio.hpp"
#include "nowcast/error.hpp"
#include "nowcast/forecast.hpp"
#include "nowcast/pipeline.hpp"
#include "nowcast/sarima.hpp"
#include "nowcast/synthgen.hpp"
#include "nowcast/weighted_learn.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <sstream>
#include <string>

namespace py = pybind11;
using namespace nowcast;

namespace {

RunConfig make_config(const std::map<std::string, std::string>& settings) {
    RunConfig cfg;
    for (const auto& [k, v] : settings) set_config_value(cfg, k, v);
    return cfg;
}

py::dict ulsif_to_dict(const UlsifModel& m) {
    py::dict d;
    d["centers"] = m.basis.centers;
    d["sigma"] = m.basis.sigma;
    d["lambda"] = m.lambda;
    d["alpha"] = m.alpha;
    d["median_distance"] = m.median_distance;
    return d;
}

UlsifModel ulsif_from(const Eigen::MatrixXd& centers, double sigma, const Eigen::VectorXd& alpha) {
    UlsifModel m;
    m.basis.centers = centers;
    m.basis.sigma = sigma;
    m.alpha = alpha;
    return m;
}

py::dict summary_row(const SummaryRow& r) {
    py::dict d;
    d["method"] = r.method;
    d["dre_variant"] = r.dre_variant;
    d["beta_mode"] = r.beta_mode;
    d["mae"] = r.mae;
    d["hln_stat"] = r.hln.statistic ? py::cast(*r.hln.statistic) : py::none();
    d["hln_p"] = r.hln.p_value ? py::cast(*r.hln.p_value) : py::none();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nowcasting of the wage-increase indicator from biased agency data";
    py::register_exception<Error>(m, "NowcastError", PyExc_ValueError);

    // Density ratio
    m.def(
        "fit_ulsif",
        [](const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer, std::uint64_t seed, std::size_t max_centers) {
            UlsifConfig cfg;
            cfg.max_centers = max_centers;
            return ulsif_to_dict(fit_ulsif(denom, numer, cfg, seed));
        },
        py::arg("denom"), py::arg("numer"), py::arg("seed") = 0, py::arg("max_centers") = 100,
        "Fit uLSIF for p_numer/p_denom; returns centers, sigma, lambda and alpha.");
    m.def(
        "predict_ratio",
        [](const Eigen::MatrixXd& centers, double sigma, const Eigen::VectorXd& alpha, const Eigen::MatrixXd& x,
           bool self_normalized) {
            return predict_ratio(ulsif_from(centers, sigma, alpha), x,
                                 self_normalized ? Normalization::self_normalized : Normalization::raw)
                .weights;
        },
        py::arg("centers"), py::arg("sigma"), py::arg("alpha"), py::arg("x"), py::arg("self_normalized") = false);
    m.def(
        "kde_ratio_baseline",
        [](const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer) {
            return kde_ratio_baseline(denom, numer).weights;
        },
        py::arg("denom"), py::arg("numer"));

    // Counts
    m.def(
        "sarima_forecast",
        [](const std::vector<double>& y, int horizon) {
            const auto sel = select_sarima(y);
            py::dict d;
            d["order"] = sel.model.order.to_string();
            d["aic"] = sel.model.aic;
            d["forecast"] = sel.model.forecast_path(horizon);
            d["warnings"] = sel.warnings;
            return d;
        },
        py::arg("y"), py::arg("horizon") = 2, "AIC-selected SARIMA(p,d,q)(P,D,Q)[2] point forecasts.");
    m.def("simple_extrapolation", &simple_extrapolation, py::arg("o_prev2"), py::arg("s_now"), py::arg("s_prev2"));

    // Learning
    m.def(
        "weighted_mean_label",
        [](const Eigen::VectorXd& labels, const Eigen::VectorXd& weights) {
            WeightedDataset d{Eigen::MatrixXd::Zero(labels.size(), 1), labels, weights};
            return weighted_mean_label(d);
        },
        py::arg("labels"), py::arg("weights"));
    m.def(
        "fit_predict",
        [](const std::string& method, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
           const Eigen::MatrixXd& x_new, std::uint64_t seed) {
            const WeightedDataset d{x, y, w};
            const auto mth = parse_method(method);
            if (!is_supervised(mth)) throw Error("fit_predict needs a supervised method");
            const auto task = method_task(mth);
            PredictorModel model;
            switch (mth) {
            case Method::en_cls: model = fit_en_logistic(d, 0.5, 1e-3); break;
            case Method::en_reg: model = fit_en_linear(d, 0.5, 1e-3); break;
            case Method::rf_cls:
            case Method::rf_reg: {
                ForestConfig cfg;
                cfg.seed = seed;
                model = fit_forest(d, task, cfg);
                break;
            }
            default: model = fit_gboost(d, task, BoostConfig{}); break;
            }
            return model.predict(x_new);
        },
        py::arg("method"), py::arg("x"), py::arg("y"), py::arg("w"), py::arg("x_new"), py::arg("seed") = 0,
        "Fit one weighted learner with default hyperparameters and predict.");
    m.def(
        "boxcox",
        [](const std::vector<double>& y) {
            auto [bc, z] = boxcox(y);
            return py::make_tuple(bc.lambda, z);
        },
        py::arg("y"), "Maximum-likelihood Box-Cox; returns (lambda, transformed values).");
    m.def(
        "regression_to_score",
        [](double pred, double lambda, double residual_sd) {
            return regression_to_score(pred, ScoreConverter::make(BoxCoxTransform::with_lambda(lambda), residual_sd));
        },
        py::arg("pred"), py::arg("lambda_bc"), py::arg("residual_sd"));

    // Correction and evaluation
    m.def(
        "compute_beta",
        [](const std::vector<double>& actual, const std::vector<double>& uncorrected) {
            if (actual.size() != uncorrected.size()) throw Error("compute_beta: series lengths differ");
            std::vector<BetaWindowEntry> w;
            auto p = HalfYearPeriod{2000, Half::H1};
            for (std::size_t i = 0; i < actual.size(); ++i, p = p.next()) w.push_back({p, actual[i], uncorrected[i]});
            return compute_beta(w, BetaMode::expanding_prior, p).beta;
        },
        py::arg("actual"), py::arg("uncorrected"), "Mean of actual/uncorrected over a window.");
    m.def(
        "apply_beta", [](const std::vector<double>& s, double beta) { return apply_beta(s, beta); }, py::arg("scores"),
        py::arg("beta"));
    m.def(
        "mae", [](const std::vector<double>& e, const std::vector<double>& a) { return mae(e, a); },
        py::arg("estimates"), py::arg("actuals"));
    m.def(
        "hln_test",
        [](const std::vector<double>& a, const std::vector<double>& b, int h) {
            const auto r = hln_test(a, b, h);
            py::dict d;
            d["statistic"] = r.statistic ? py::cast(*r.statistic) : py::none();
            d["p_value"] = r.p_value ? py::cast(*r.p_value) : py::none();
            d["n"] = r.n;
            d["degenerate"] = r.degenerate;
            d["nonpositive_variance"] = r.nonpositive_variance;
            return d;
        },
        py::arg("loss_a"), py::arg("loss_b"), py::arg("horizon") = 1);

    // Synthetic data and the pipeline
    m.def(
        "synth",
        [](const std::filesystem::path& out, const std::map<std::string, std::string>& overrides) {
            PopulationSpec spec;
            for (const auto& [k, v] : overrides) set_spec_value(spec, k, v);
            spec.validate();
            const auto data = generate(spec);
            write_synthetic(out, data);
            return truth_to_json(data.truth).dump();
        },
        py::arg("out"), py::arg("overrides") = std::map<std::string, std::string>{},
        "Write a synthetic fixture; returns the ground truth as JSON text.");
    m.def(
        "nowcast",
        [](const std::map<std::string, std::string>& settings) {
            const auto cfg = make_config(settings);
            py::gil_scoped_release release;
            return run_nowcast(cfg).to_json().dump();
        },
        py::arg("settings"), "Run one nowcast from config keys; returns estimate JSON text.");
    m.def(
        "evaluate",
        [](const std::map<std::string, std::string>& settings, bool write_outputs) {
            const auto cfg = make_config(settings);
            EvaluationRun run;
            {
                py::gil_scoped_release release;
                run = run_evaluate(cfg, write_outputs);
            }
            py::list rows;
            for (const auto& r : run.report.summary) rows.append(summary_row(r));
            py::dict d;
            d["summary"] = rows;
            d["lookahead_violations"] = lookahead_violations(run.access_log).size();
            d["warnings"] = run.warnings;
            return d;
        },
        py::arg("settings"), py::arg("write_outputs") = true,
        "Evaluate over window_start..window_end; returns summary rows and the audit count.");
}

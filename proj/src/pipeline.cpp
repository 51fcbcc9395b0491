#include "nowcast/pipeline.hpp"

#include "nowcast/boxcox.hpp"
#include "nowcast/encoding.hpp"
#include "nowcast/error.hpp"
#include "nowcast/schema.hpp"
#include "nowcast/seeding.hpp"
#include "nowcast/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace nowcast {

namespace fs = std::filesystem;

std::string to_string(DreVariant v) { return v == DreVariant::all_items ? "all" : "three"; }

DreVariant parse_dre_variant(const std::string& s) {
    if (s == "all" || s == "all_items") return DreVariant::all_items;
    if (s == "three" || s == "three_items") return DreVariant::three_items;
    throw Error("unknown density-ratio variant '" + s + "' (expected all or three)");
}

namespace {

const std::vector<std::pair<Method, std::string>>& method_names() {
    static const std::vector<std::pair<Method, std::string>> v = {
        {Method::weighting_only, "weighting_only"}, {Method::en_cls, "en_cls"}, {Method::en_reg, "en_reg"},
        {Method::rf_cls, "rf_cls"},                 {Method::rf_reg, "rf_reg"}, {Method::gb_cls, "gb_cls"},
        {Method::gb_reg, "gb_reg"},
    };
    return v;
}

} // namespace

std::string to_string(Method m) {
    for (const auto& [k, name] : method_names()) {
        if (k == m) return name;
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    for (const auto& [k, name] : method_names()) {
        if (name == s) return k;
    }
    throw Error("unknown method '" + s +
                "' (expected weighting_only, en_cls, en_reg, rf_cls, rf_reg, gb_cls or gb_reg)");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> v = [] {
        std::vector<Method> out;
        for (const auto& [k, name] : method_names()) out.push_back(k);
        return out;
    }();
    return v;
}

bool is_supervised(Method m) { return m != Method::weighting_only; }

Task method_task(Method m) {
    switch (m) {
    case Method::en_reg:
    case Method::rf_reg:
    case Method::gb_reg: return Task::regression;
    default: return Task::classification;
    }
}

// ---- configuration ----

fs::path RunConfig::survey_path() const { return survey_dir.empty() ? data_dir / "survey" : survey_dir; }
fs::path RunConfig::agency_path() const { return agency_dir.empty() ? data_dir / "agency" : agency_dir; }
fs::path RunConfig::counts_file() const {
    if (!counts_path.empty()) return counts_path;
    const auto p = data_dir / "counts.csv";
    return fs::exists(p) ? p : fs::path{};
}
fs::path RunConfig::aux_file() const {
    if (!aux_path.empty()) return aux_path;
    const auto p = data_dir / "aux.csv";
    return fs::exists(p) ? p : fs::path{};
}
fs::path RunConfig::indicators_file() const {
    return indicators_path.empty() ? data_dir / "indicators.csv" : indicators_path;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    }
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("expected a boolean, got '" + v + "'");
}

int parse_int(const std::string& v) {
    const double d = parse_double(v);
    if (d != std::floor(d)) throw Error("expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

fs::path resolve(const fs::path& base, const std::string& v) {
    const fs::path p(v);
    return p.is_relative() && !base.empty() ? base / p : p;
}

} // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& raw, const fs::path& base_dir) {
    const std::string v = trim(raw);
    try {
        if (key == "data_dir") cfg.data_dir = resolve(base_dir, v);
        else if (key == "survey_dir") cfg.survey_dir = resolve(base_dir, v);
        else if (key == "agency_dir") cfg.agency_dir = resolve(base_dir, v);
        else if (key == "counts") cfg.counts_path = v.empty() ? fs::path{} : resolve(base_dir, v);
        else if (key == "aux") cfg.aux_path = v.empty() ? fs::path{} : resolve(base_dir, v);
        else if (key == "indicators") cfg.indicators_path = resolve(base_dir, v);
        else if (key == "out") cfg.out_dir = resolve(base_dir, v);
        else if (key == "target") cfg.target = HalfYearPeriod::parse(v);
        else if (key == "window_start") cfg.window_start = HalfYearPeriod::parse(v);
        else if (key == "window_end") cfg.window_end = HalfYearPeriod::parse(v);
        else if (key == "beta_start") cfg.beta_start = HalfYearPeriod::parse(v);
        else if (key == "dre") cfg.dre = parse_dre_variant(v);
        else if (key == "method") cfg.method = parse_method(v);
        else if (key == "beta_mode") cfg.beta_mode = parse_beta_mode(v);
        else if (key == "seed") cfg.seed = std::stoull(v);
        else if (key == "methods") {
            cfg.eval_methods.clear();
            for (const auto& s : split_list(v)) cfg.eval_methods.push_back(parse_method(s));
        } else if (key == "dre_variants") {
            cfg.eval_dre.clear();
            for (const auto& s : split_list(v)) cfg.eval_dre.push_back(parse_dre_variant(s));
        } else if (key == "beta_modes") {
            cfg.eval_beta_modes.clear();
            for (const auto& s : split_list(v)) cfg.eval_beta_modes.push_back(parse_beta_mode(s));
        } else if (key == "hln_horizon") cfg.hln_horizon = parse_int(v);
        else if (key == "use_aux") cfg.use_aux = parse_bool(v);
        else if (key == "timings") cfg.record_timings = parse_bool(v);
        else if (key == "tune") cfg.tune = parse_bool(v);
        else if (key == "folds") cfg.folds = parse_int(v);
        else if (key == "en_alpha_mix") cfg.en_alpha_mix = parse_double(v);
        else if (key == "en_penalty") cfg.en_penalty = parse_double(v);
        else if (key == "rf_trees") cfg.forest.n_trees = parse_int(v);
        else if (key == "rf_max_depth") cfg.forest.max_depth = parse_int(v);
        else if (key == "rf_min_leaf") cfg.forest.min_leaf_weight = parse_double(v);
        else if (key == "rf_mtry") cfg.forest.mtry = parse_int(v);
        else if (key == "gb_rounds") cfg.boost.n_rounds = parse_int(v);
        else if (key == "gb_learning_rate") cfg.boost.learning_rate = parse_double(v);
        else if (key == "gb_max_depth") cfg.boost.max_depth = parse_int(v);
        else if (key == "gb_min_leaf") cfg.boost.min_leaf_weight = parse_double(v);
        else if (key == "ulsif_centers") cfg.ulsif.max_centers = static_cast<std::size_t>(parse_int(v));
        else if (key == "ulsif_folds") cfg.ulsif.folds = static_cast<std::size_t>(parse_int(v));
        else throw Error("unknown configuration key");
    } catch (const std::exception& e) {
        throw Error("config key '" + key + "': " + e.what());
    }
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir, const std::string& origin) {
    RunConfig cfg;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(origin + ":" + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
        } catch (const Error& e) {
            throw Error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path(), path.string());
}

// ---- data catalog ----

DataCatalog::DataCatalog(RunConfig cfg) : cfg_(std::move(cfg)) {}

const SampleTable& DataCatalog::load(Source source, HalfYearPeriod period) {
    const auto key = std::make_pair(static_cast<int>(source), period.index());
    if (auto it = tables_.find(key); it != tables_.end()) return it->second;
    const auto path = source == Source::survey ? survey_file(cfg_.survey_path(), period)
                                               : agency_file(cfg_.agency_path(), period);
    if (!fs::exists(path)) {
        throw Error(std::string(source == Source::survey ? "survey" : "agency") + " data for " +
                    period.to_string() + " not found at " + path.string());
    }
    auto table = load_table(path, source, canonical_schema());
    if (table.period != period) {
        throw Error(path.string() + " holds period " + table.period.to_string() + ", expected " + period.to_string());
    }
    return tables_.emplace(key, std::move(table)).first->second;
}

const SampleTable& DataCatalog::survey(HalfYearPeriod period, HalfYearPeriod target) {
    if (period >= target.shifted(-1)) {
        throw Error("survey data for " + period.to_string() + " is not available when nowcasting " +
                    target.to_string() + ": the government survey is only available up to target - 2 (" +
                    target.shifted(-2).to_string() + ")");
    }
    log_.push_back({"survey", period, target, false});
    return load(Source::survey, period);
}

const SampleTable& DataCatalog::agency(HalfYearPeriod period, HalfYearPeriod target) {
    if (period > target) {
        throw Error("agency data for " + period.to_string() + " lies after the target " + target.to_string());
    }
    log_.push_back({"agency", period, target, false});
    return load(Source::agency, period);
}

namespace {

std::vector<HalfYearPeriod> survey_periods(const fs::path& dir) {
    std::vector<HalfYearPeriod> out;
    if (!fs::is_directory(dir)) throw Error("survey directory " + dir.string() + " not found");
    static const std::regex name(R"(survey_(\d{4}[Hh][12])\.csv)");
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const auto file = e.path().filename().string();
        if (std::regex_match(file, m, name)) out.push_back(HalfYearPeriod::parse(m[1].str()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Replicated row counts per channel, with the table's row count as the
/// replication total.
std::map<std::string, double> replicated_channel_counts(const SampleTable& t) {
    std::map<std::string, double> out;
    if (t.rows.empty()) return out;
    std::vector<double> quotas;
    const double scale = static_cast<double>(t.size()) / t.total_weight();
    for (const auto& r : t.rows) quotas.push_back(r.weight * scale);
    const auto reps = largest_remainder(quotas);
    for (std::size_t i = 0; i < reps.size(); ++i) out[t.rows[i].channel] += static_cast<double>(reps[i]);
    return out;
}

} // namespace

std::vector<ChannelCountSeries> DataCatalog::all_counts() {
    if (!counts_) {
        const auto file = cfg_.counts_file();
        if (file.empty()) throw Error("no counts file configured");
        counts_ = load_counts(file);
    }
    return *counts_;
}

std::vector<ChannelCountSeries> DataCatalog::counts(HalfYearPeriod target) {
    const auto last = target.shifted(-2);
    if (!cfg_.counts_file().empty()) {
        log_.push_back({"counts", last, target, false});
        std::vector<ChannelCountSeries> out;
        for (const auto& s : all_counts()) {
            if (s.start > last) throw Error("count series of channel '" + s.channel + "' starts after " + last.to_string());
            out.push_back(s.truncated(std::min(last, s.end())));
        }
        return out;
    }
    // Derive the series from the survey tables available for this target.
    const auto periods = survey_periods(cfg_.survey_path());
    std::map<std::string, std::vector<double>> by_channel;
    std::optional<HalfYearPeriod> first;
    int n = 0;
    for (const auto p : periods) {
        if (p > last) break;
        if (first && distance(*first, p) != n) {
            throw Error("survey tables are not contiguous: " + p.to_string() + " follows a gap");
        }
        if (!first) first = p;
        const auto totals = replicated_channel_counts(survey(p, target));
        for (const auto& [c, v] : totals) {
            auto& series = by_channel[c];
            series.resize(static_cast<std::size_t>(n), 0.0);
            series.push_back(v);
        }
        ++n;
    }
    if (!first) throw Error("no survey tables up to " + last.to_string());
    std::vector<ChannelCountSeries> out;
    for (auto& [c, v] : by_channel) {
        v.resize(static_cast<std::size_t>(n), 0.0);
        out.push_back({c, *first, v});
    }
    return out;
}

const AuxiliarySeries* DataCatalog::aux() {
    if (!aux_loaded_) {
        aux_loaded_ = true;
        if (const auto file = cfg_.aux_file(); !file.empty()) aux_ = load_aux(file);
    }
    return aux_ ? &*aux_ : nullptr;
}

double DataCatalog::official(HalfYearPeriod period, HalfYearPeriod target, bool oracle) {
    if (!oracle && period >= target) {
        throw Error("the official value for " + period.to_string() + " is not known when nowcasting " +
                    target.to_string());
    }
    if (!indicators_) indicators_ = load_indicators(cfg_.indicators_file());
    const auto v = indicators_->official(period);
    if (!v) throw Error("missing official value (actual) for " + period.to_string());
    log_.push_back({"official", period, target, oracle});
    return *v;
}

double DataCatalog::supplementary(HalfYearPeriod period, HalfYearPeriod target) {
    if (period > target) {
        throw Error("the supplementary value for " + period.to_string() + " lies after the target " +
                    target.to_string());
    }
    if (!indicators_) indicators_ = load_indicators(cfg_.indicators_file());
    log_.push_back({"supplementary", period, target, false});
    if (const auto v = indicators_->supplementary(period)) return *v;
    const auto& t = agency(period, target);
    if (t.rows.empty()) throw Error("no agency rows for " + period.to_string());
    double pos = 0.0;
    for (const auto& r : t.rows) {
        if (!r.label) throw Error("agency row without label in " + period.to_string());
        pos += r.label->binary_view();
    }
    return 100.0 * pos / static_cast<double>(t.size());
}

HalfYearPeriod DataCatalog::earliest_feasible() {
    const auto periods = survey_periods(cfg_.survey_path());
    if (periods.empty()) throw Error("no survey tables in " + cfg_.survey_path().string());
    auto first = periods.front();
    if (!cfg_.counts_file().empty()) {
        for (const auto& s : all_counts()) first = std::max(first, s.start);
    }
    // Eight observations through target - 2.
    return first.shifted(9);
}

std::vector<AccessRecord> lookahead_violations(const std::vector<AccessRecord>& log) {
    std::vector<AccessRecord> out;
    for (const auto& r : log) {
        const bool bad = (r.kind == "survey" && r.period >= r.target.shifted(-1)) ||
                         (r.kind == "counts" && r.period >= r.target.shifted(-1)) ||
                         (r.kind == "official" && !r.oracle && r.period >= r.target) ||
                         ((r.kind == "agency" || r.kind == "supplementary") && r.period > r.target);
        if (bad) out.push_back(r);
    }
    return out;
}

void write_access_log(std::ostream& out, const std::vector<AccessRecord>& log) {
    out << "kind,period,target,oracle\n";
    for (const auto& r : log) {
        out << r.kind << ',' << r.period.to_string() << ',' << r.target.to_string() << ',' << (r.oracle ? 1 : 0)
            << '\n';
    }
}

// ---- stages ----

namespace {

class StageClock {
public:
    StageClock(std::map<std::string, double>& sink, std::string name)
        : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageClock() {
        sink_[name_] += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> variant_fields(DreVariant v, const AttributeSchema& schema) {
    return v == DreVariant::all_items ? all_item_fields(schema) : three_item_fields();
}

template <class F>
decltype(auto) stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw Error(std::string(name) + " stage failed: " + e.what());
    }
}

} // namespace

PreparedPeriod prepare_period(DataCatalog& catalog, HalfYearPeriod target) {
    const auto& cfg = catalog.config();
    PreparedPeriod prep;
    prep.target = target;
    {
        StageClock clock(prep.stage_ms, "counts_forecast");
        prep.forecasts = stage("counts forecast", [&] {
            const auto series = catalog.counts(target);
            return forecast_channel_counts(series, target, cfg.use_aux ? catalog.aux() : nullptr);
        });
    }
    {
        StageClock clock(prep.stage_ms, "resample");
        prep.resampled = stage("resampling", [&] {
            std::vector<double> quotas;
            for (const auto& r : prep.forecasts.rows) quotas.push_back(r.count);
            const auto ints = largest_remainder(quotas);
            std::map<std::string, std::size_t> counts;
            for (std::size_t i = 0; i < ints.size(); ++i) counts[prep.forecasts.rows[i].channel] = ints[i];
            const auto& source = catalog.survey(target.shifted(-2), target);
            if (source.rows.empty()) throw Error("empty survey table for " + source.period.to_string());
            const auto replicated =
                replicate_by_weight(source, static_cast<double>(source.size()) / source.total_weight());
            auto out = resample_attributes(replicated, counts, target,
                                           derive_seed(cfg.seed, "resample:" + target.to_string()));
            if (out.rows.empty()) throw Error("forecast counts are all zero for " + target.to_string());
            return out;
        });
    }
    prep.agency = stage("agency input", [&] {
        auto t = catalog.agency(target, target);
        if (t.rows.size() < 2) throw Error("fewer than two agency rows for " + target.to_string());
        return t;
    });
    return prep;
}

const Eigen::VectorXd& dre_weights(PreparedPeriod& prep, DreVariant variant, const RunConfig& cfg) {
    if (auto it = prep.weights.find(variant); it != prep.weights.end()) return it->second;
    StageClock clock(prep.stage_ms, "density_ratio");
    return stage("density ratio", [&]() -> const Eigen::VectorXd& {
        const auto fields = variant_fields(variant, prep.resampled.schema);
        const auto params = fit_encoding(prep.resampled, fields);
        const auto numer = encode(prep.resampled, params);
        const auto denom = encode(prep.agency, params);
        auto model = fit_ulsif(denom.values, numer.values, cfg.ulsif,
                               derive_seed(cfg.seed, "ulsif:" + to_string(variant) + ":" + prep.target.to_string()));
        auto w = predict_ratio(model, denom.values).weights;
        if (!(w.sum() > 0.0)) throw Error("all density-ratio weights are zero");
        prep.dre_models.emplace(variant, std::move(model));
        return prep.weights.emplace(variant, std::move(w)).first->second;
    });
}

namespace {

PredictorModel fit_learner(const WeightedDataset& data, Method method, const RunConfig& cfg, std::uint64_t seed) {
    const Task task = method_task(method);
    switch (method) {
    case Method::en_cls:
    case Method::en_reg:
        if (cfg.tune) return tune_elastic_net(data, task, ElasticNetGrid{}, cfg.folds, seed);
        return task == Task::classification ? fit_en_logistic(data, cfg.en_alpha_mix, cfg.en_penalty)
                                            : fit_en_linear(data, cfg.en_alpha_mix, cfg.en_penalty);
    case Method::rf_cls:
    case Method::rf_reg: {
        auto fc = cfg.forest;
        fc.seed = seed;
        if (cfg.tune) return tune_forest(data, task, fc, ForestGrid{}, cfg.folds, seed);
        return fit_forest(data, task, fc);
    }
    case Method::gb_cls:
    case Method::gb_reg: {
        auto bc = cfg.boost;
        bc.seed = seed;
        if (cfg.tune) return tune_gboost(data, task, bc, BoostGrid{}, cfg.folds, seed);
        return fit_gboost(data, task, bc);
    }
    case Method::weighting_only: break;
    }
    throw Error("method " + to_string(method) + " has no learner");
}

} // namespace

UncorrectedEstimate estimate_uncorrected(PreparedPeriod& prep, Method method, DreVariant variant,
                                         const RunConfig& cfg) {
    const auto& w = dre_weights(prep, variant, cfg);
    UncorrectedEstimate est;
    StageClock clock(prep.stage_ms, "learn");
    return stage("estimation", [&] {
        const Task task = method_task(method);
        Eigen::VectorXd labels(static_cast<Eigen::Index>(prep.agency.size()));
        for (std::size_t i = 0; i < prep.agency.size(); ++i) {
            const auto& r = prep.agency.rows[i];
            if (!r.label) throw Error("agency row " + std::to_string(i + 1) + " has no label");
            if (task == Task::classification) {
                labels(static_cast<Eigen::Index>(i)) = r.label->binary_view();
            } else {
                const auto ratio = r.label->ratio_value();
                if (!ratio) throw Error("regression needs wage ratios on agency row " + std::to_string(i + 1));
                labels(static_cast<Eigen::Index>(i)) = *ratio;
            }
        }
        if (!is_supervised(method)) {
            WeightedDataset data{Eigen::MatrixXd(labels.size(), 0), labels, w};
            est.percent = weighted_mean_label(data);
            return est;
        }
        const auto params = fit_encoding(prep.resampled, all_item_fields(prep.resampled.schema));
        const auto x_agency = encode(prep.agency, params);
        const auto x_target = encode(prep.resampled, params);
        std::optional<BoxCoxTransform> bc;
        if (task == Task::regression) {
            std::vector<double> raw(labels.data(), labels.data() + labels.size());
            auto [t, z] = boxcox(raw);
            bc = t;
            labels = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
        }
        WeightedDataset data{x_agency.values, labels, w};
        const auto seed =
            derive_seed(cfg.seed, "learn:" + to_string(method) + ":" + to_string(variant) + ":" + prep.target.to_string());
        auto model = fit_learner(data, method, cfg, seed);
        const Eigen::VectorXd pred = model.predict(x_target.values);
        est.scores.resize(static_cast<std::size_t>(pred.size()));
        if (task == Task::classification) {
            for (Eigen::Index i = 0; i < pred.size(); ++i) est.scores[static_cast<std::size_t>(i)] = pred(i);
        } else {
            if (!model.residual_sd) throw Error("regression model carries no residual sd");
            const auto conv = ScoreConverter::make(*bc, *model.residual_sd);
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                est.scores[static_cast<std::size_t>(i)] = regression_to_score(pred(i), conv);
            }
        }
        est.percent = apply_beta(est.scores, 1.0);
        est.model = std::move(model);
        return est;
    });
}

double corrected_estimate(const UncorrectedEstimate& est, double beta) {
    if (est.scores.empty()) return std::min(100.0, beta * est.percent);
    return apply_beta(est.scores, beta);
}

double benchmark_estimate(DataCatalog& catalog, HalfYearPeriod target) {
    const auto prev2 = target.shifted(-2);
    return simple_extrapolation(catalog.official(prev2, target), catalog.supplementary(target, target),
                                catalog.supplementary(prev2, target));
}

// ---- nowcast ----

nlohmann::json NowcastResult::to_json() const {
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [k, v] : stage_ms) timings[k] = v;
    return {{"target", target.to_string()},
            {"method", to_string(method)},
            {"dre_variant", to_string(dre)},
            {"beta_mode", to_string(beta_mode)},
            {"estimate_pct", estimate_pct},
            {"beta", beta.beta},
            {"n_agency", n_agency},
            {"n_resampled", n_resampled},
            {"stage_timings_ms", timings}};
}

namespace {

std::vector<HalfYearPeriod> span(HalfYearPeriod a, HalfYearPeriod b) {
    std::vector<HalfYearPeriod> out;
    for (auto p = a; p <= b; p = p.next()) out.push_back(p);
    return out;
}

HalfYearPeriod default_beta_start(DataCatalog& catalog) {
    const auto& cfg = catalog.config();
    if (cfg.beta_start) return *cfg.beta_start;
    const auto feasible = catalog.earliest_feasible();
    if (cfg.window_start) return std::max(cfg.window_start->prev(), feasible);
    return feasible;
}

/// Beta window periods for `target`.
std::vector<HalfYearPeriod> beta_periods(DataCatalog& catalog, BetaMode mode, HalfYearPeriod target) {
    const auto& cfg = catalog.config();
    if (mode == BetaMode::full_period) {
        if (!cfg.window_start || !cfg.window_end) {
            throw Error("full-period beta needs window_start and window_end");
        }
        return span(*cfg.window_start, *cfg.window_end);
    }
    const auto start = default_beta_start(catalog);
    if (start >= target) {
        throw Error("the expanding beta window starting at " + start.to_string() + " is empty for target " +
                    target.to_string());
    }
    return span(start, target.prev());
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

void write_beta_window(std::ostream& out, const BetaCorrector& b) {
    out << "period,actual,uncorrected\n";
    for (const auto& e : b.window) {
        out << e.period.to_string() << ',' << format_double(e.actual) << ',' << format_double(e.uncorrected) << '\n';
    }
}

} // namespace

NowcastResult run_nowcast(DataCatalog& catalog) {
    const auto& cfg = catalog.config();
    if (!cfg.target) throw Error("no target period configured");
    const auto target = *cfg.target;
    NowcastResult res;
    res.target = target;
    res.method = cfg.method;
    res.dre = cfg.dre;
    res.beta_mode = cfg.beta_mode;

    auto prep = prepare_period(catalog, target);
    const auto est = estimate_uncorrected(prep, cfg.method, cfg.dre, cfg);
    res.uncorrected_pct = est.percent;
    res.n_agency = prep.agency.size();
    res.n_resampled = prep.resampled.size();

    std::map<std::string, double> beta_ms;
    {
        StageClock clock(beta_ms, "beta");
        std::vector<BetaWindowEntry> window;
        for (const auto p : beta_periods(catalog, cfg.beta_mode, target)) {
            double unc = est.percent;
            if (p != target) {
                auto other = prepare_period(catalog, p);
                unc = estimate_uncorrected(other, cfg.method, cfg.dre, cfg).percent;
            }
            const double actual = catalog.official(p, target, cfg.beta_mode == BetaMode::full_period);
            window.push_back({p, actual, unc});
        }
        res.beta = stage("beta correction", [&] { return compute_beta(window, cfg.beta_mode, target); });
    }
    res.estimate_pct = corrected_estimate(est, res.beta.beta);
    if (cfg.record_timings) {
        res.stage_ms = prep.stage_ms;
        res.stage_ms["beta"] = beta_ms["beta"];
    }

    fs::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "estimate.json", res.to_json().dump(2) + "\n");
    {
        std::ostringstream ss;
        write_forecast_report(ss, prep.forecasts);
        write_file(cfg.out_dir / "forecast_counts.csv", ss.str());
    }
    {
        std::ostringstream ss;
        write_beta_window(ss, res.beta);
        write_file(cfg.out_dir / "beta_window.csv", ss.str());
    }
    {
        std::ostringstream ss;
        write_access_log(ss, catalog.log());
        write_file(cfg.out_dir / "access_log.csv", ss.str());
    }
    if (est.model) write_file(cfg.out_dir / "model.json", model_summary(*est.model).dump(2) + "\n");
    return res;
}

NowcastResult run_nowcast(const RunConfig& cfg) {
    DataCatalog catalog(cfg);
    return run_nowcast(catalog);
}

// ---- evaluation ----

EvaluationRun run_evaluate(const RunConfig& cfg, bool write_outputs) {
    if (!cfg.window_start || !cfg.window_end) throw Error("evaluation needs window_start and window_end");
    if (*cfg.window_end < *cfg.window_start) throw Error("window_end precedes window_start");
    DataCatalog catalog(cfg);
    const auto methods = cfg.eval_methods.empty() ? all_methods() : cfg.eval_methods;
    const auto variants =
        cfg.eval_dre.empty() ? std::vector<DreVariant>{DreVariant::all_items, DreVariant::three_items} : cfg.eval_dre;
    const auto modes = cfg.eval_beta_modes.empty()
                           ? std::vector<BetaMode>{BetaMode::expanding_prior, BetaMode::full_period}
                           : cfg.eval_beta_modes;
    const auto window = span(*cfg.window_start, *cfg.window_end);

    // Uncorrected estimates for every period any beta window or target needs.
    std::set<int> needed;
    for (const auto t : window) {
        needed.insert(t.index());
        for (const auto m : modes) {
            for (const auto p : beta_periods(catalog, m, t)) needed.insert(p.index());
        }
    }
    EvaluationRun run;
    using CellKey = std::tuple<int, Method, DreVariant>;
    std::map<CellKey, UncorrectedEstimate> unc;
    for (const int idx : needed) {
        const auto p = HalfYearPeriod::from_index(idx);
        auto prep = prepare_period(catalog, p);
        for (const auto& w : prep.forecasts.warnings) run.warnings.push_back(p.to_string() + " " + w);
        const bool in_window = p >= window.front() && p <= window.back();
        for (const auto v : variants) {
            for (const auto m : methods) {
                auto e = estimate_uncorrected(prep, m, v, cfg);
                e.model.reset();
                if (!in_window) e.scores.clear();
                unc.emplace(CellKey{idx, m, v}, std::move(e));
            }
        }
    }

    // Actuals are read for scoring only; they are not nowcast inputs.
    const auto indicators = load_indicators(cfg.indicators_file());
    const auto actual = [&](HalfYearPeriod p) {
        const auto v = indicators.official(p);
        if (!v) throw Error("missing actual for " + p.to_string());
        return *v;
    };

    MethodSeries bench{kBenchmarkMethod, "-", "-", {}};
    for (const auto t : window) bench.periods.push_back({t, benchmark_estimate(catalog, t), actual(t)});

    std::vector<MethodSeries> cells;
    for (const auto mode : modes) {
        for (const auto v : variants) {
            for (const auto m : methods) {
                MethodSeries s{to_string(m), to_string(v), to_string(mode), {}};
                for (const auto t : window) {
                    std::vector<BetaWindowEntry> entries;
                    for (const auto p : beta_periods(catalog, mode, t)) {
                        const double a = catalog.official(p, t, mode == BetaMode::full_period);
                        entries.push_back({p, a, unc.at(CellKey{p.index(), m, v}).percent});
                    }
                    const auto beta = compute_beta(entries, mode, t);
                    const auto& e = unc.at(CellKey{t.index(), m, v});
                    s.periods.push_back({t, corrected_estimate(e, beta.beta), actual(t)});
                }
                cells.push_back(std::move(s));
            }
        }
    }
    run.report = build_report(cells, bench, cfg.hln_horizon);
    run.access_log = catalog.log();

    if (write_outputs) {
        fs::create_directories(cfg.out_dir);
        std::ostringstream report, summary, table, log;
        write_report_csv(report, run.report);
        write_summary_csv(summary, run.report);
        write_summary_table(table, run.report);
        write_access_log(log, run.access_log);
        write_file(cfg.out_dir / "report.csv", report.str());
        write_file(cfg.out_dir / "summary.csv", summary.str());
        write_file(cfg.out_dir / "summary.txt", table.str());
        write_file(cfg.out_dir / "access_log.csv", log.str());
    }
    return run;
}

} // namespace nowcast

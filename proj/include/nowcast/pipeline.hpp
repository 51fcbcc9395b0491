#pragma once

#include "nowcast/correction.hpp"
#include "nowcast/density_ratio.hpp"
#include "nowcast/forecast.hpp"
#include "nowcast/indicators.hpp"
#include "nowcast/report.hpp"
#include "nowcast/table.hpp"
#include "nowcast/weighted_learn.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace nowcast {

enum class DreVariant { all_items, three_items };
std::string to_string(DreVariant v);
/// Accepts "all"/"all_items" and "three"/"three_items".
DreVariant parse_dre_variant(const std::string& s);

enum class Method { weighting_only, en_cls, en_reg, rf_cls, rf_reg, gb_cls, gb_reg };
std::string to_string(Method m);
Method parse_method(const std::string& s);
/// All seven estimation methods, weighting_only first.
const std::vector<Method>& all_methods();
bool is_supervised(Method m);
Task method_task(Method m);

/// Flat "key = value" run configuration. Paths left empty resolve under
/// data_dir: survey/, agency/, counts.csv, aux.csv, indicators.csv.
struct RunConfig {
    std::filesystem::path data_dir;
    std::filesystem::path survey_dir;
    std::filesystem::path agency_dir;
    std::filesystem::path counts_path; ///< optional; counts are derived from survey tables when absent
    std::filesystem::path aux_path;    ///< optional; enables the auxiliary rule for the public channel
    std::filesystem::path indicators_path;
    std::filesystem::path out_dir = "out";

    std::optional<HalfYearPeriod> target;
    std::optional<HalfYearPeriod> window_start;
    std::optional<HalfYearPeriod> window_end;
    /// First period of the expanding-prior beta window; defaults to the
    /// period before window_start, else the earliest feasible period.
    std::optional<HalfYearPeriod> beta_start;

    DreVariant dre = DreVariant::all_items;
    Method method = Method::weighting_only;
    BetaMode beta_mode = BetaMode::expanding_prior;
    std::uint64_t seed = 1;

    /// Evaluation grid; empty means every value.
    std::vector<Method> eval_methods;
    std::vector<DreVariant> eval_dre;
    std::vector<BetaMode> eval_beta_modes;
    int hln_horizon = 1;

    bool use_aux = true;
    bool record_timings = false;

    /// Hyperparameters: tuned by weighted k-fold CV when `tune`, else fixed.
    bool tune = true;
    int folds = 5;
    double en_alpha_mix = 0.5;
    double en_penalty = 1e-3;
    ForestConfig forest;
    BoostConfig boost;
    UlsifConfig ulsif;

    std::filesystem::path survey_path() const;
    std::filesystem::path agency_path() const;
    std::filesystem::path counts_file() const;
    std::filesystem::path aux_file() const;
    std::filesystem::path indicators_file() const;
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {},
                           const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies one override; relative paths resolve against `base_dir`.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir = {});

/// One data access made on behalf of a nowcast for `target`.
struct AccessRecord {
    std::string kind; ///< survey, agency, counts, official, supplementary
    HalfYearPeriod period;
    HalfYearPeriod target;
    bool oracle = false; ///< full-period beta reads of actuals, which are future by design
};

/// Reads input files on demand, caches them, and logs every access. Survey
/// data for periods at or after target - 1 and actuals at or after the
/// target (outside oracle mode) are refused.
class DataCatalog {
public:
    explicit DataCatalog(RunConfig cfg);

    const SampleTable& survey(HalfYearPeriod period, HalfYearPeriod target);
    const SampleTable& agency(HalfYearPeriod period, HalfYearPeriod target);
    /// Count series truncated at target - 2.
    std::vector<ChannelCountSeries> counts(HalfYearPeriod target);
    const AuxiliarySeries* aux();
    double official(HalfYearPeriod period, HalfYearPeriod target, bool oracle = false);
    double supplementary(HalfYearPeriod period, HalfYearPeriod target);
    /// Earliest period whose counts history through period - 2 is long
    /// enough to forecast and whose survey table at period - 2 exists.
    HalfYearPeriod earliest_feasible();

    const RunConfig& config() const { return cfg_; }
    const std::vector<AccessRecord>& log() const { return log_; }

private:
    const SampleTable& load(Source source, HalfYearPeriod period);
    std::vector<ChannelCountSeries> all_counts();

    RunConfig cfg_;
    std::map<std::pair<int, int>, SampleTable> tables_;
    std::optional<std::vector<ChannelCountSeries>> counts_;
    std::optional<AuxiliarySeries> aux_;
    bool aux_loaded_ = false;
    std::optional<IndicatorSeries> indicators_;
    std::vector<AccessRecord> log_;
};

/// Accesses that break the availability rules: survey periods >= target - 1,
/// or non-oracle actuals at periods >= target.
std::vector<AccessRecord> lookahead_violations(const std::vector<AccessRecord>& log);
void write_access_log(std::ostream& out, const std::vector<AccessRecord>& log);

/// Stage outputs shared by every method for one target period.
struct PreparedPeriod {
    HalfYearPeriod target;
    CountForecastReport forecasts;
    SampleTable resampled; ///< attributes standing in for the target population
    SampleTable agency;    ///< the real-time biased sample with labels
    std::map<DreVariant, UlsifModel> dre_models;
    std::map<DreVariant, Eigen::VectorXd> weights; ///< per agency row
    std::map<std::string, double> stage_ms;
};

/// Counts forecast, replication and attribute resampling for `target`.
PreparedPeriod prepare_period(DataCatalog& catalog, HalfYearPeriod target);
/// Fits uLSIF (agency as denominator, resampled table as numerator) on the
/// variant's fields and caches the agency weights.
const Eigen::VectorXd& dre_weights(PreparedPeriod& prep, DreVariant variant, const RunConfig& cfg);

/// Estimate before beta correction: per-row scores on the resampled table
/// for supervised methods, the weighted agency label mean otherwise.
struct UncorrectedEstimate {
    double percent = 0.0;
    std::vector<double> scores;
    std::optional<PredictorModel> model;
};
UncorrectedEstimate estimate_uncorrected(PreparedPeriod& prep, Method method, DreVariant variant,
                                         const RunConfig& cfg);
double corrected_estimate(const UncorrectedEstimate& est, double beta);

/// simple_extrapolation from the official value at target - 2 and the
/// supplementary values at target and target - 2.
double benchmark_estimate(DataCatalog& catalog, HalfYearPeriod target);

struct NowcastResult {
    HalfYearPeriod target;
    Method method = Method::weighting_only;
    DreVariant dre = DreVariant::all_items;
    BetaMode beta_mode = BetaMode::expanding_prior;
    double estimate_pct = 0.0;
    double uncorrected_pct = 0.0;
    BetaCorrector beta;
    std::size_t n_agency = 0;
    std::size_t n_resampled = 0;
    std::map<std::string, double> stage_ms;
    nlohmann::json to_json() const;
};

/// Runs every stage for cfg.target and writes estimate.json, the count
/// forecast, the beta window and the access log under cfg.out_dir.
NowcastResult run_nowcast(const RunConfig& cfg);
NowcastResult run_nowcast(DataCatalog& catalog);

struct EvaluationRun {
    EvaluationReport report;
    std::vector<AccessRecord> access_log;
    std::vector<std::string> warnings;
};

/// Nowcasts every period of [window_start, window_end] for each cell of the
/// evaluation grid plus the benchmark, then writes report.csv, summary.csv,
/// summary.txt and access_log.csv under cfg.out_dir.
EvaluationRun run_evaluate(const RunConfig& cfg, bool write_outputs = true);

} // namespace nowcast

#pragma once

#include "nowcast/forecast.hpp"
#include "nowcast/indicators.hpp"
#include "nowcast/period.hpp"
#include "nowcast/table.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nowcast {

enum class Selection { mcar, mar, nmar };
std::string to_string(Selection s);

/// Synthetic population over the canonical schema.
///
/// Each period t (0-based) mixes the channels with shares softmax(share +
/// trend t + season [H2]). Given channel c, categorical fields are
/// independent with P(level l) proportional to exp(base_l + (tilt_c + drift t)
/// l/(L-1)), and age is N(age_mean + age_channel_c + age_drift t, age_sd^2).
///
/// Labels follow q(x) = label_cap * logistic(eta) where eta is linear in
/// z = (age - age_mean)/age_sd, gender, education and size_before.
///
/// Agency rows are drawn from the same population with age shifted by
/// agency_age_shift and kept with probability
///   mcar: mcar_p
///   mar:  m(x) = logistic(mar_intercept + mar_age (z - mar_age_drift t)
///                         + mar_education[edu] + mar_size_before[size])
///   nmar: s1 = m min(1, 1/r) if y = 1, s0 = m min(1, r) if y = 0 with
///         r = (1 - kappa q)/(kappa (1 - q)), so p_S(y=1|x) = kappa q(x)
///         exactly and the constant correction is beta = 1/kappa.
struct PopulationSpec {
    std::uint64_t seed = 1;
    HalfYearPeriod start{2008, Half::H1};
    int periods = 20;
    int survey_rows = 5000;
    int agency_rows = 2000;
    double part_time_rate = 0.05;
    double pop_size = 1.0e6;

    std::vector<double> channel_share{0.2, 0.3, 0.1, -0.2, -0.6};
    std::vector<double> channel_trend{-0.02, 0.03, 0.0, -0.01, 0.0};
    std::vector<double> channel_season{0.1, -0.05, 0.05, 0.0, 0.0};
    std::vector<double> survey_oversample{1.0, 1.0, 1.0, 2.0, 1.0};
    std::vector<double> channel_tilt{-0.3, 0.4, 0.0, 0.2, -0.2};
    double level_drift = 0.01;

    double age_mean = 38.0;
    double age_sd = 10.0;
    double age_drift = 0.1;
    std::vector<double> age_channel{3.0, -2.0, 0.0, 1.0, 2.0};

    double label_cap = 0.8;
    double label_intercept = -0.6;
    double label_trend = 0.01;
    double label_age = -1.5;
    std::vector<double> label_gender{0.0, -0.2};
    std::vector<double> label_education{-0.6, -0.4, -0.2, 0.0, 0.3, 0.6};
    std::vector<double> label_size_before{-0.3, -0.1, 0.0, 0.2, 0.4};

    Selection selection = Selection::mar;
    double mcar_p = 0.1;
    double mar_intercept = 1.0;
    double mar_age = -1.5;
    double mar_age_drift = 0.0; ///< per-period shift of the selection age centre, in age sd units
    std::vector<double> mar_education{-0.2, -0.1, 0.0, 0.0, 0.1, 0.2};
    std::vector<double> mar_size_before{-0.1, -0.05, 0.0, 0.05, 0.1};
    double kappa = 1.0;
    double agency_age_shift = 0.0;

    double aux_noise = 0.01;

    /// Throws naming the offending key on invalid settings, including
    /// degenerate mechanisms (no selection or kappa * label_cap >= 1).
    void validate() const;
    HalfYearPeriod period(int t) const { return start.shifted(t); }
};

/// Parses "key = value" lines ('#' starts a comment); vectors are
/// comma-separated. Unknown keys are an error.
PopulationSpec parse_spec(const std::string& text, const std::string& origin = "<spec>");
PopulationSpec load_spec(const std::filesystem::path& path);
/// Applies one "key=value" override.
void set_spec_value(PopulationSpec& spec, const std::string& key, const std::string& value);
std::string spec_to_text(const PopulationSpec& spec);

struct PeriodTruth {
    HalfYearPeriod period;
    double indicator = 0.0;         ///< 100 E_T[q]
    double agency_rate = 0.0;       ///< 100 E_S[y]
    double acceptance = 0.0;        ///< mean selection probability
    std::vector<double> channel_share;
};

struct GroundTruth {
    PopulationSpec spec;
    std::vector<PeriodTruth> periods;
    double beta = 1.0; ///< 1/kappa under nmar, else 1

    const PeriodTruth& at(HalfYearPeriod p) const;
};

struct SyntheticData {
    std::vector<SampleTable> survey; ///< full-time rows
    std::vector<SampleTable> agency;
    std::vector<SampleTable> survey_part_time; ///< written to the same files, dropped on load
    std::vector<SampleTable> agency_part_time;
    std::vector<ChannelCountSeries> counts;
    AuxiliarySeries aux;
    IndicatorSeries indicators;
    GroundTruth truth;
};

/// Exact ground truth for every period of the spec.
GroundTruth compute_truth(const PopulationSpec& spec);

SyntheticData generate(const PopulationSpec& spec);

/// p_T(x) / p_S(x) at a row of canonical-schema attributes for `period`.
double true_ratio(const GroundTruth& gt, HalfYearPeriod period, std::span<const double> attributes);

/// Population label probability q(x) at period t.
double label_probability(const PopulationSpec& spec, int t, std::span<const double> attributes);

nlohmann::json truth_to_json(const GroundTruth& gt);

/// Writes survey/, agency/, counts.csv, aux.csv, indicators.csv, truth.json
/// and spec.cfg under `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

std::filesystem::path survey_file(const std::filesystem::path& dir, HalfYearPeriod p);
std::filesystem::path agency_file(const std::filesystem::path& dir, HalfYearPeriod p);

} // namespace nowcast

#pragma once

#include "nowcast/period.hpp"
#include "nowcast/sarima.hpp"
#include "nowcast/table.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nowcast {

/// Sample counts of one channel over contiguous half-year periods.
struct ChannelCountSeries {
    std::string channel;
    HalfYearPeriod start;
    std::vector<double> counts;

    HalfYearPeriod end() const { return start.shifted(static_cast<int>(counts.size()) - 1); }
    std::optional<double> at(HalfYearPeriod p) const;
    /// The observations up to and including `last`.
    ChannelCountSeries truncated(HalfYearPeriod last) const;
};

/// Reads "channel,period,count"; one series per channel in file order of
/// first appearance. Periods of a channel must be contiguous.
std::vector<ChannelCountSeries> load_counts(const std::filesystem::path& path);
std::vector<ChannelCountSeries> parse_counts(std::istream& in, const std::string& origin = "<stream>");
void write_counts(std::ostream& out, const std::vector<ChannelCountSeries>& series);

/// Per-channel weighted counts (sum of survey weights) of a survey table.
std::map<std::string, double> channel_weight_totals(const SampleTable& table);

/// Monthly auxiliary counts of decisions via public placement.
struct AuxiliarySeries {
    struct Month {
        int year = 0;
        int month = 1;
        double value = 0.0;
    };
    std::vector<Month> months;

    std::optional<double> value(int year, int month) const;
};

AuxiliarySeries load_aux(const std::filesystem::path& path);
AuxiliarySeries parse_aux(std::istream& in, const std::string& origin = "<stream>");
void write_aux(std::ostream& out, const AuxiliarySeries& aux);

/// Five-month average: Jan-May for H1, Jul-Nov for H2.
double aux_window_average(const AuxiliarySeries& aux, HalfYearPeriod period);

SarimaSelection fit_sarima(const ChannelCountSeries& series, const SarimaFitOptions& opts = {});
/// Point forecast `horizon` steps ahead, floored at 0.
double forecast_count(const SarimaModel& model, int horizon);

/// N_prev2 * n_T / n_{T-2} with n the five-month auxiliary average.
double aux_count(double n_prev2, const AuxiliarySeries& aux, HalfYearPeriod target);

enum class CountMethod { sarima, aux };
std::string to_string(CountMethod m);

struct CountForecast {
    std::string channel;
    HalfYearPeriod period;
    CountMethod method = CountMethod::sarima;
    double count = 0.0;
    std::optional<SarimaOrder> order;
};

struct CountForecastReport {
    std::vector<CountForecast> rows;
    std::vector<std::string> warnings;
};

/// Forecasts every channel for `target` from data through target - 2. The
/// public channel uses the auxiliary rule when `aux` is given.
CountForecastReport forecast_channel_counts(const std::vector<ChannelCountSeries>& series, HalfYearPeriod target,
                                            const AuxiliarySeries* aux, const SarimaFitOptions& opts = {});

void write_forecast_report(std::ostream& out, const CountForecastReport& report);

/// Channels in canonical order first, then any others alphabetically.
std::vector<std::string> ordered_channels(const std::vector<std::string>& channels);

/// Draws counts[c] rows with replacement from the rows of channel c in
/// `source`, one seeded stream per channel. Labels are dropped and the
/// output period is `target`.
SampleTable resample_attributes(const SampleTable& source, const std::map<std::string, std::size_t>& counts,
                                HalfYearPeriod target, std::uint64_t seed);

/// o_{T-2} * s_T / s_{T-2}.
double simple_extrapolation(double o_prev2, double s_now, double s_prev2);

} // namespace nowcast

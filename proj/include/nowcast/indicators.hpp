#pragma once

#include "nowcast/period.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace nowcast {

/// Official (o) and supplementary agency (s) indicators in percent.
struct IndicatorPoint {
    std::optional<double> official;
    std::optional<double> supplementary;
};

struct IndicatorSeries {
    std::map<HalfYearPeriod, IndicatorPoint> points;

    std::optional<double> official(HalfYearPeriod p) const;
    std::optional<double> supplementary(HalfYearPeriod p) const;
};

/// CSV "period,official,supplementary"; empty cells are absent values.
IndicatorSeries load_indicators(const std::filesystem::path& path);
IndicatorSeries parse_indicators(std::istream& in, const std::string& origin = "<stream>");
void write_indicators(std::ostream& out, const IndicatorSeries& series);

} // namespace nowcast

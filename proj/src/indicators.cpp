#include "nowcast/indicators.hpp"

#include "nowcast/csv.hpp"
#include "nowcast/table.hpp"

#include <fstream>
#include <ostream>

namespace nowcast {

std::optional<double> IndicatorSeries::official(HalfYearPeriod p) const {
    const auto it = points.find(p);
    return it == points.end() ? std::nullopt : it->second.official;
}

std::optional<double> IndicatorSeries::supplementary(HalfYearPeriod p) const {
    const auto it = points.find(p);
    return it == points.end() ? std::nullopt : it->second.supplementary;
}

IndicatorSeries parse_indicators(std::istream& in, const std::string& origin) {
    const auto doc = read_csv(in, origin);
    const auto c_period = doc.require("period");
    const auto c_o = doc.has("official") ? std::optional(doc.require("official")) : std::nullopt;
    const auto c_s = doc.has("supplementary") ? std::optional(doc.require("supplementary")) : std::nullopt;
    IndicatorSeries out;
    for (const auto& r : doc.records) {
        HalfYearPeriod p;
        IndicatorPoint pt;
        try {
            p = HalfYearPeriod::parse(r.cells[c_period]);
            for (auto [col, dst] : {std::pair{c_o, &pt.official}, std::pair{c_s, &pt.supplementary}}) {
                if (col && !r.cells[*col].empty()) {
                    const double v = parse_double(r.cells[*col]);
                    if (!(v >= 0.0 && v <= 100.0)) {
                        throw Error("indicator must lie in [0, 100]");
                    }
                    *dst = v;
                }
            }
        } catch (const Error& e) {
            throw doc.error(r, e.what());
        }
        if (!out.points.emplace(p, pt).second) {
            throw doc.error(r, "duplicate period " + p.to_string());
        }
    }
    return out;
}

IndicatorSeries load_indicators(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return parse_indicators(in, path.string());
}

void write_indicators(std::ostream& out, const IndicatorSeries& series) {
    out << "period,official,supplementary\n";
    for (const auto& [p, pt] : series.points) {
        out << p.to_string() << ',' << (pt.official ? format_double(*pt.official) : "") << ','
            << (pt.supplementary ? format_double(*pt.supplementary) : "") << '\n';
    }
}

} // namespace nowcast

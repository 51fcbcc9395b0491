#include "nowcast/forecast.hpp"

#include "nowcast/csv.hpp"
#include "nowcast/error.hpp"
#include "nowcast/schema.hpp"
#include "nowcast/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace nowcast {

std::optional<double> ChannelCountSeries::at(HalfYearPeriod p) const {
    const int i = distance(start, p);
    if (i < 0 || i >= static_cast<int>(counts.size())) {
        return std::nullopt;
    }
    return counts[static_cast<std::size_t>(i)];
}

ChannelCountSeries ChannelCountSeries::truncated(HalfYearPeriod last) const {
    ChannelCountSeries out{channel, start, {}};
    const int n = std::clamp(distance(start, last) + 1, 0, static_cast<int>(counts.size()));
    out.counts.assign(counts.begin(), counts.begin() + n);
    return out;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return in;
}

double parse_count(const CsvDocument& doc, const CsvDocument::Record& r, std::size_t col, const char* what) {
    double v = 0.0;
    try {
        v = parse_double(r.cells[col]);
    } catch (const Error&) {
        throw doc.error(r, std::string("invalid ") + what + " '" + r.cells[col] + "'");
    }
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw doc.error(r, std::string(what) + " must be a nonnegative finite number");
    }
    return v;
}

} // namespace

std::vector<ChannelCountSeries> parse_counts(std::istream& in, const std::string& origin) {
    const auto doc = read_csv(in, origin);
    const auto c_channel = doc.require("channel");
    const auto c_period = doc.require("period");
    const auto c_count = doc.require("count");
    std::vector<ChannelCountSeries> out;
    for (const auto& r : doc.records) {
        const auto& ch = r.cells[c_channel];
        if (ch.empty()) {
            throw doc.error(r, "empty channel");
        }
        HalfYearPeriod p;
        try {
            p = HalfYearPeriod::parse(r.cells[c_period]);
        } catch (const Error& e) {
            throw doc.error(r, e.what());
        }
        const double v = parse_count(doc, r, c_count, "count");
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.channel == ch; });
        if (it == out.end()) {
            out.push_back({ch, p, {v}});
            continue;
        }
        if (p != it->end().next()) {
            throw doc.error(r, "periods of channel '" + ch + "' must be contiguous and increasing (expected " +
                                   it->end().next().to_string() + ", found " + p.to_string() + ")");
        }
        it->counts.push_back(v);
    }
    return out;
}

std::vector<ChannelCountSeries> load_counts(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_counts(in, path.string());
}

void write_counts(std::ostream& out, const std::vector<ChannelCountSeries>& series) {
    out << "channel,period,count\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.counts.size(); ++i) {
            out << s.channel << ',' << s.start.shifted(static_cast<int>(i)).to_string() << ','
                << format_double(s.counts[i]) << '\n';
        }
    }
}

std::map<std::string, double> channel_weight_totals(const SampleTable& table) {
    std::map<std::string, double> out;
    for (const auto& r : table.rows) {
        out[r.channel] += r.weight;
    }
    return out;
}

std::optional<double> AuxiliarySeries::value(int year, int month) const {
    for (const auto& m : months) {
        if (m.year == year && m.month == month) {
            return m.value;
        }
    }
    return std::nullopt;
}

AuxiliarySeries parse_aux(std::istream& in, const std::string& origin) {
    const auto doc = read_csv(in, origin);
    const auto c_year = doc.require("year");
    const auto c_month = doc.require("month");
    const auto c_value = doc.require("value");
    AuxiliarySeries aux;
    for (const auto& r : doc.records) {
        AuxiliarySeries::Month m;
        try {
            m.year = static_cast<int>(parse_double(r.cells[c_year]));
            m.month = static_cast<int>(parse_double(r.cells[c_month]));
        } catch (const Error& e) {
            throw doc.error(r, e.what());
        }
        if (m.month < 1 || m.month > 12) {
            throw doc.error(r, "month must be in 1..12");
        }
        m.value = parse_count(doc, r, c_value, "value");
        if (!aux.months.empty()) {
            const auto& prev = aux.months.back();
            const int expect = prev.year * 12 + prev.month;
            if (m.year * 12 + m.month != expect + 1) {
                throw doc.error(r, "auxiliary months must be contiguous");
            }
        }
        aux.months.push_back(m);
    }
    return aux;
}

AuxiliarySeries load_aux(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_aux(in, path.string());
}

void write_aux(std::ostream& out, const AuxiliarySeries& aux) {
    out << "year,month,value\n";
    for (const auto& m : aux.months) {
        out << m.year << ',' << m.month << ',' << format_double(m.value) << '\n';
    }
}

double aux_window_average(const AuxiliarySeries& aux, HalfYearPeriod period) {
    const int first = period.half == Half::H1 ? 1 : 7;
    double s = 0.0;
    for (int m = first; m < first + 5; ++m) {
        const auto v = aux.value(period.year, m);
        if (!v) {
            throw Error("auxiliary series is missing " + std::to_string(period.year) + "-" + std::to_string(m) +
                        " needed for " + period.to_string());
        }
        s += *v;
    }
    return s / 5.0;
}

SarimaSelection fit_sarima(const ChannelCountSeries& series, const SarimaFitOptions& opts) {
    if (series.counts.size() < 8) {
        throw Error("series too short: channel '" + series.channel + "' has " + std::to_string(series.counts.size()) +
                    " observations, at least 8 are required");
    }
    return select_sarima(series.counts, opts);
}

double forecast_count(const SarimaModel& model, int horizon) {
    return std::max(0.0, model.forecast_path(horizon).back());
}

double aux_count(double n_prev2, const AuxiliarySeries& aux, HalfYearPeriod target) {
    const double now = aux_window_average(aux, target);
    const double before = aux_window_average(aux, target.shifted(-2));
    if (before == 0.0) {
        throw Error("auxiliary average for " + target.shifted(-2).to_string() + " is zero");
    }
    return n_prev2 * now / before;
}

std::string to_string(CountMethod m) { return m == CountMethod::aux ? "aux" : "sarima"; }

CountForecastReport forecast_channel_counts(const std::vector<ChannelCountSeries>& series, HalfYearPeriod target,
                                            const AuxiliarySeries* aux, const SarimaFitOptions& opts) {
    const auto last = target.shifted(-2);
    CountForecastReport report;
    std::vector<std::string> names;
    for (const auto& s : series) names.push_back(s.channel);
    for (const auto& name : ordered_channels(names)) {
        const auto& s = *std::find_if(series.begin(), series.end(), [&](const auto& x) { return x.channel == name; });
        if (s.end() < last) {
            throw Error("count series of channel '" + s.channel + "' ends at " + s.end().to_string() +
                        ", data through " + last.to_string() + " is required");
        }
        const auto train = s.truncated(last);
        CountForecast f;
        f.channel = s.channel;
        f.period = target;
        if (aux && s.channel == kPublicChannel) {
            f.method = CountMethod::aux;
            f.count = aux_count(*train.at(last), *aux, target);
        } else {
            auto sel = fit_sarima(train, opts);
            for (auto& w : sel.warnings) report.warnings.push_back(s.channel + ": " + w);
            f.count = forecast_count(sel.model, distance(last, target));
            f.order = sel.model.order;
        }
        report.rows.push_back(std::move(f));
    }
    return report;
}

void write_forecast_report(std::ostream& out, const CountForecastReport& report) {
    out << "channel,period,method,count\n";
    for (const auto& r : report.rows) {
        out << r.channel << ',' << r.period.to_string() << ',' << to_string(r.method) << ',' << format_double(r.count)
            << '\n';
    }
}

std::vector<std::string> ordered_channels(const std::vector<std::string>& channels) {
    std::vector<std::string> out;
    for (const auto c : kChannels) {
        if (std::find(channels.begin(), channels.end(), c) != channels.end()) {
            out.emplace_back(c);
        }
    }
    std::vector<std::string> rest;
    for (const auto& c : channels) {
        if (std::find(out.begin(), out.end(), c) == out.end() && std::find(rest.begin(), rest.end(), c) == rest.end()) {
            rest.push_back(c);
        }
    }
    std::sort(rest.begin(), rest.end());
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

SampleTable resample_attributes(const SampleTable& source, const std::map<std::string, std::size_t>& counts,
                                HalfYearPeriod target, std::uint64_t seed) {
    SampleTable out;
    out.schema = source.schema;
    out.period = target;
    out.source = source.source;
    std::vector<std::string> names;
    for (const auto& [c, n] : counts) names.push_back(c);
    for (const auto& channel : ordered_channels(names)) {
        const std::size_t n = counts.at(channel);
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < source.rows.size(); ++i) {
            if (source.rows[i].channel == channel) pool.push_back(i);
        }
        if (n == 0) {
            continue;
        }
        if (pool.empty()) {
            throw Error("channel '" + channel + "' is absent from the " + source.period.to_string() + " table");
        }
        Rng rng(derive_seed(seed, "resample:" + channel));
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& src = source.rows[pool[pick(rng)]];
            Row r;
            r.attributes = src.attributes;
            r.channel = src.channel;
            r.weight = 1.0;
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

double simple_extrapolation(double o_prev2, double s_now, double s_prev2) {
    if (!(s_prev2 > 0.0)) {
        throw Error("simple extrapolation needs s_{T-2} > 0");
    }
    return o_prev2 * s_now / s_prev2;
}

} // namespace nowcast

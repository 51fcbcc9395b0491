#include "nowcast/report.hpp"

#include "nowcast/error.hpp"
#include "nowcast/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

namespace nowcast {

double PeriodResult::abs_error() const { return std::abs(estimate - actual); }

namespace {

std::vector<double> errors_of(const MethodSeries& s) {
    std::vector<double> e;
    for (const auto& p : s.periods) e.push_back(p.abs_error());
    return e;
}

SummaryRow summarize(const MethodSeries& s, const MethodSeries* benchmark, int horizon) {
    SummaryRow row{s.method, s.dre_variant, s.beta_mode, 0.0, {}};
    std::vector<double> est, act;
    for (const auto& p : s.periods) {
        est.push_back(p.estimate);
        act.push_back(p.actual);
    }
    row.mae = mae(est, act);
    if (benchmark && s.periods.size() >= 3) {
        row.hln = hln_test(errors_of(s), errors_of(*benchmark), horizon);
    }
    return row;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

EvaluationReport build_report(const std::vector<MethodSeries>& results, const MethodSeries& benchmark, int horizon) {
    if (benchmark.periods.empty()) {
        throw Error("benchmark series is empty");
    }
    EvaluationReport rep;
    rep.series.push_back(benchmark);
    rep.summary.push_back(summarize(benchmark, nullptr, horizon));
    for (const auto& s : results) {
        if (s.periods.size() != benchmark.periods.size()) {
            throw Error("series " + s.method + "/" + s.dre_variant + "/" + s.beta_mode + " covers " +
                        std::to_string(s.periods.size()) + " periods, the benchmark " +
                        std::to_string(benchmark.periods.size()));
        }
        for (std::size_t i = 0; i < s.periods.size(); ++i) {
            if (s.periods[i].period != benchmark.periods[i].period) {
                throw Error("series " + s.method + "/" + s.dre_variant + "/" + s.beta_mode +
                            " does not share the benchmark's validation window");
            }
        }
        rep.series.push_back(s);
        rep.summary.push_back(summarize(s, &benchmark, horizon));
    }
    return rep;
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
    out << "method,dre_variant,beta_mode,period,estimate,actual,abs_error\n";
    for (const auto& s : report.series) {
        for (const auto& p : s.periods) {
            out << s.method << ',' << s.dre_variant << ',' << s.beta_mode << ',' << p.period.to_string() << ','
                << format_double(p.estimate) << ',' << format_double(p.actual) << ',' << format_double(p.abs_error())
                << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const EvaluationReport& report) {
    out << "method,dre_variant,beta_mode,mae,hln_stat,hln_p\n";
    for (const auto& r : report.summary) {
        out << r.method << ',' << r.dre_variant << ',' << r.beta_mode << ',' << format_double(r.mae) << ','
            << (r.hln.statistic ? format_double(*r.hln.statistic) : "") << ','
            << (r.hln.p_value ? format_double(*r.hln.p_value) : "") << '\n';
    }
}

void write_summary_table(std::ostream& out, const EvaluationReport& report) {
    // Rows: methods; columns: dre variants; one block per beta mode.
    std::vector<std::string> modes, variants, methods;
    const auto add = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    std::map<std::tuple<std::string, std::string, std::string>, const SummaryRow*> cell;
    const SummaryRow* bench = nullptr;
    for (const auto& r : report.summary) {
        if (r.hln.n == 0 && r.method == kBenchmarkMethod) {
            bench = &r;
            continue;
        }
        add(modes, r.beta_mode);
        add(variants, r.dre_variant);
        add(methods, r.method);
        cell[{r.beta_mode, r.dre_variant, r.method}] = &r;
    }
    char line[256];
    for (const auto& mode : modes) {
        out << "MAE (beta mode: " << mode << ")\n";
        std::snprintf(line, sizeof line, "%-22s", "method");
        out << line;
        for (const auto& v : variants) {
            std::snprintf(line, sizeof line, "%16s", v.c_str());
            out << line;
        }
        out << '\n';
        for (const auto& m : methods) {
            std::snprintf(line, sizeof line, "%-22s", m.c_str());
            out << line;
            for (const auto& v : variants) {
                const auto it = cell.find({mode, v, m});
                std::string text = "-";
                if (it != cell.end()) {
                    text = fixed(it->second->mae, 2) + significance_marker(it->second->hln.p_value);
                }
                // Pad by display width; the dagger is one column but three bytes.
                const auto bytes = text.size();
                const auto width = text.find("†") != std::string::npos ? bytes - 2 : bytes;
                out << std::string(width < 16 ? 16 - width : 1, ' ') << text;
            }
            out << '\n';
        }
        out << '\n';
    }
    if (bench) {
        out << "benchmark " << bench->method << ": MAE " << fixed(bench->mae, 2) << '\n';
    }
    out << "markers: \xe2\x80\xa0 p<.10, * p<.05, ** p<.01 (HLN, one-sided, vs benchmark)\n";
}

} // namespace nowcast

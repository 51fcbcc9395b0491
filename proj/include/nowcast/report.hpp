#pragma once

#include "nowcast/correction.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nowcast {

inline constexpr const char* kBenchmarkMethod = "simple_extrapolation";

struct PeriodResult {
    HalfYearPeriod period;
    double estimate = 0.0;
    double actual = 0.0;
    double abs_error() const;
};

/// Estimates of one (method, dre variant, beta mode) cell over the window.
struct MethodSeries {
    std::string method;
    std::string dre_variant = "-";
    std::string beta_mode = "-";
    std::vector<PeriodResult> periods;
};

struct SummaryRow {
    std::string method;
    std::string dre_variant;
    std::string beta_mode;
    double mae = 0.0;
    HlnResult hln; ///< against the benchmark; n == 0 for the benchmark row itself
};

struct EvaluationReport {
    std::vector<MethodSeries> series; ///< benchmark first
    std::vector<SummaryRow> summary;
};

/// MAE and HLN against the benchmark for every series. All series must
/// cover the benchmark's periods in the same order.
EvaluationReport build_report(const std::vector<MethodSeries>& results, const MethodSeries& benchmark, int horizon = 1);

/// method,dre_variant,beta_mode,period,estimate,actual,abs_error
void write_report_csv(std::ostream& out, const EvaluationReport& report);
/// method,dre_variant,beta_mode,mae,hln_stat,hln_p
void write_summary_csv(std::ostream& out, const EvaluationReport& report);
/// Fixed-width table of MAE with significance markers, grouped by beta mode.
void write_summary_table(std::ostream& out, const EvaluationReport& report);

} // namespace nowcast

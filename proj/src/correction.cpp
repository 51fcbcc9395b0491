#include "nowcast/correction.hpp"

#include "nowcast/error.hpp"
#include "nowcast/stats.hpp"

#include <algorithm>
#include <cmath>

namespace nowcast {

std::string to_string(BetaMode m) { return m == BetaMode::full_period ? "full" : "prior"; }

BetaMode parse_beta_mode(const std::string& s) {
    if (s == "prior" || s == "expanding_prior") return BetaMode::expanding_prior;
    if (s == "full" || s == "full_period") return BetaMode::full_period;
    throw Error("unknown beta mode '" + s + "' (expected prior or full)");
}

BetaCorrector compute_beta(const std::vector<BetaWindowEntry>& window, BetaMode mode, HalfYearPeriod target) {
    if (window.empty()) {
        throw Error("beta window is empty");
    }
    double sum = 0.0;
    for (const auto& e : window) {
        if (mode == BetaMode::expanding_prior && !(e.period < target)) {
            throw Error("beta window for " + target.to_string() + " contains " + e.period.to_string() +
                        "; the prior mode may only use earlier periods");
        }
        if (!(e.uncorrected > 0.0)) {
            throw Error("uncorrected estimate for " + e.period.to_string() + " is not positive");
        }
        sum += e.actual / e.uncorrected;
    }
    return {sum / static_cast<double>(window.size()), mode, window};
}

double apply_beta(std::span<const double> scores, double beta) {
    if (scores.empty()) {
        throw Error("apply_beta needs at least one score");
    }
    if (!(beta > 0.0)) {
        throw Error("beta must be positive");
    }
    double s = 0.0;
    for (const double v : scores) s += std::min(1.0, beta * v);
    return 100.0 * s / static_cast<double>(scores.size());
}

double mae(std::span<const double> estimates, std::span<const double> actuals) {
    if (estimates.size() != actuals.size()) {
        throw Error("mae: series lengths differ (" + std::to_string(estimates.size()) + " vs " +
                    std::to_string(actuals.size()) + ")");
    }
    if (estimates.empty()) {
        throw Error("mae: empty series");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) s += std::abs(estimates[i] - actuals[i]);
    return s / static_cast<double>(estimates.size());
}

HlnResult hln_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon) {
    if (loss_a.size() != loss_b.size()) {
        throw Error("hln_test: loss series lengths differ");
    }
    if (loss_a.size() < 3) {
        throw Error("hln_test needs at least 3 periods");
    }
    if (horizon < 1) {
        throw Error("hln_test needs horizon >= 1");
    }
    const auto n = static_cast<int>(loss_a.size());
    const double nd = n;
    HlnResult r;
    r.n = n;
    r.horizon = horizon;
    std::vector<double> d(loss_a.size());
    bool all_zero = true;
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = loss_a[i] - loss_b[i];
        all_zero = all_zero && d[i] == 0.0;
    }
    if (all_zero) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 0.5;
        return r;
    }
    const double dbar = stats::mean(d);
    const auto gamma = [&](int lag) {
        double s = 0.0;
        for (int t = lag; t < n; ++t) s += (d[static_cast<std::size_t>(t)] - dbar) * (d[static_cast<std::size_t>(t - lag)] - dbar);
        return s / nd;
    };
    double v = gamma(0);
    for (int j = 1; j < horizon; ++j) v += 2.0 * gamma(j);
    if (!(v > 0.0)) {
        r.nonpositive_variance = true;
        return r;
    }
    const double dm = dbar / std::sqrt(v / nd);
    const double h = horizon;
    const double stat = dm * std::sqrt((nd + 1.0 - 2.0 * h + h * (h - 1.0) / nd) / nd);
    r.statistic = stat;
    r.p_value = stats::student_t_cdf(stat, nd - 1.0);
    return r;
}

std::string significance_marker(std::optional<double> p) {
    if (!p) return "";
    if (*p < 0.01) return "**";
    if (*p < 0.05) return "*";
    if (*p < 0.10) return "†";
    return "";
}

} // namespace nowcast

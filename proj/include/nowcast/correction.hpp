#pragma once

#include "nowcast/period.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

enum class BetaMode { expanding_prior, full_period };
std::string to_string(BetaMode m);
/// Accepts "prior"/"expanding_prior" and "full"/"full_period".
BetaMode parse_beta_mode(const std::string& s);

struct BetaWindowEntry {
    HalfYearPeriod period;
    double actual = 0.0;      ///< percent
    double uncorrected = 0.0; ///< percent, > 0
};

struct BetaCorrector {
    double beta = 1.0;
    BetaMode mode = BetaMode::expanding_prior;
    std::vector<BetaWindowEntry> window;
};

/// beta = mean over the window of actual / uncorrected. In expanding_prior
/// mode every window period must precede `target`.
BetaCorrector compute_beta(const std::vector<BetaWindowEntry>& window, BetaMode mode, HalfYearPeriod target);

/// 100 * mean(min(1, beta * score)).
double apply_beta(std::span<const double> scores, double beta);

double mae(std::span<const double> estimates, std::span<const double> actuals);

struct HlnResult {
    std::optional<double> statistic; ///< absent when the variance estimate is not positive
    std::optional<double> p_value;   ///< one-sided: candidate loss smaller
    int n = 0;
    int horizon = 1;
    bool degenerate = false;          ///< all loss differentials zero
    bool nonpositive_variance = false;
};

/// Harvey-Leybourne-Newbold corrected Diebold-Mariano test on absolute
/// losses (power 1), p-value from Student t with n - 1 degrees of freedom.
HlnResult hln_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon = 1);

/// "**" (p < .01), "*" (p < .05), "†" (p < .10), else "".
std::string significance_marker(std::optional<double> p);

} // namespace nowcast

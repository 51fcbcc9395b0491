#pragma once

#include "nowcast/table.hpp"

#include <span>
#include <utility>
#include <vector>

namespace nowcast {

/// y -> (y^lambda - 1)/lambda, or log y at lambda = 0. Positive inputs only.
struct BoxCoxTransform {
    double lambda = 1.0;
    std::size_t n = 0;   ///< size of the fitting sample
    double min = 0.0;    ///< smallest fitted value

    static BoxCoxTransform with_lambda(double lambda);

    double transform(double y) const;
    /// Exact inverse; throws outside the range of the transform.
    double inverse(double z) const;
    std::vector<double> transform(std::span<const double> y) const;
};

/// Profile log-likelihood of the Box-Cox normal model at lambda.
double boxcox_profile_loglik(std::span<const double> y, double lambda);

/// Maximizes the profile log-likelihood over [-3, 3] by golden-section
/// search (tolerance 1e-4).
std::pair<BoxCoxTransform, std::vector<double>> boxcox(std::span<const double> values);

struct ScoreConverter {
    double threshold_raw = kWageRatioThreshold;
    double threshold_bc = 0.0;
    double residual_sd = 1.0;

    static ScoreConverter make(const BoxCoxTransform& bc, double residual_sd);
};

/// P(F + e > threshold_bc) with e ~ N(0, residual_sd^2); exactly 0.5 at the threshold.
double regression_to_score(double pred, const ScoreConverter& conv);

} // namespace nowcast

#include "nowcast/boxcox.hpp"

#include "nowcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nowcast {

BoxCoxTransform BoxCoxTransform::with_lambda(double lambda) {
    BoxCoxTransform t;
    t.lambda = lambda;
    return t;
}

double BoxCoxTransform::transform(double y) const {
    if (!(y > 0.0)) {
        throw Error("Box-Cox transform needs positive values, got " + format_double(y));
    }
    const double ly = std::log(y);
    return lambda == 0.0 ? ly : std::expm1(lambda * ly) / lambda;
}

double BoxCoxTransform::inverse(double z) const {
    if (lambda == 0.0) {
        return std::exp(z);
    }
    const double t = lambda * z;
    if (!(t > -1.0)) {
        throw Error("value " + format_double(z) + " lies outside the range of the Box-Cox transform");
    }
    return std::exp(std::log1p(t) / lambda);
}

std::vector<double> BoxCoxTransform::transform(std::span<const double> y) const {
    std::vector<double> out;
    out.reserve(y.size());
    for (const double v : y) out.push_back(transform(v));
    return out;
}

double boxcox_profile_loglik(std::span<const double> y, double lambda) {
    const auto bc = BoxCoxTransform::with_lambda(lambda);
    const double n = static_cast<double>(y.size());
    double sum_log = 0.0;
    double mean = 0.0;
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        z[i] = bc.transform(y[i]);
        sum_log += std::log(y[i]);
        mean += z[i];
    }
    mean /= n;
    double ss = 0.0;
    for (const double v : z) ss += (v - mean) * (v - mean);
    const double var = ss / n;
    if (!(var > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    return -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log;
}

std::pair<BoxCoxTransform, std::vector<double>> boxcox(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error("Box-Cox fit needs at least two values");
    }
    for (const double v : values) {
        if (!(v > 0.0)) {
            throw Error("Box-Cox fit needs positive values, got " + format_double(v));
        }
    }
    const double lo0 = -3.0;
    const double hi0 = 3.0;
    const double tol = 1e-4;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = lo0, hi = hi0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = boxcox_profile_loglik(values, x1);
    double f2 = boxcox_profile_loglik(values, x2);
    while (hi - lo > tol) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = boxcox_profile_loglik(values, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = boxcox_profile_loglik(values, x2);
        }
    }
    BoxCoxTransform t;
    t.lambda = 0.5 * (lo + hi);
    t.n = values.size();
    t.min = *std::min_element(values.begin(), values.end());
    return {t, t.transform(values)};
}

ScoreConverter ScoreConverter::make(const BoxCoxTransform& bc, double residual_sd) {
    ScoreConverter c;
    c.threshold_bc = bc.transform(c.threshold_raw);
    c.residual_sd = residual_sd;
    return c;
}

double regression_to_score(double pred, const ScoreConverter& conv) {
    if (!(conv.residual_sd > 0.0)) {
        throw Error("residual_sd must be positive: the regression fit is degenerate (zero residuals); "
                    "use a classifier or add regularization");
    }
    // 1 - Phi((t - pred)/sd) written with erfc so the threshold maps to 0.5 exactly.
    return 0.5 * std::erfc((conv.threshold_bc - pred) / (conv.residual_sd * std::sqrt(2.0)));
}

} // namespace nowcast

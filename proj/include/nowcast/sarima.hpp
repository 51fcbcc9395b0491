#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nowcast {

/// SARIMA(p,d,q)(P,D,Q)[2] order for half-yearly data.
struct SarimaOrder {
    static constexpr int season = 2;

    int p = 0, d = 0, q = 0;
    int P = 0, D = 0, Q = 0;

    /// ARMA coefficients plus the innovation variance.
    int parameter_count() const { return p + q + P + Q + 1; }
    std::size_t min_length() const;
    bool admissible(std::size_t n) const;
    std::string to_string() const;

    friend bool operator==(const SarimaOrder&, const SarimaOrder&) = default;
};

/// All orders with p,q,P,Q <= 2 and d,D <= 1 that a series of length n supports.
std::vector<SarimaOrder> sarima_order_grid(std::size_t n);

struct SarimaModel {
    SarimaOrder order;
    std::vector<double> ar, ma, sar, sma;
    double mean = 0.0;   ///< mean of the differenced series (drift when d + D > 0)
    double sigma2 = 0.0; ///< innovation variance (MLE)
    double loglik = 0.0; ///< exact Gaussian log-likelihood of the differenced series
    double aic = 0.0;
    std::vector<double> series;

    /// Point forecasts for steps 1..horizon on the original scale.
    std::vector<double> forecast_path(int horizon) const;
};

/// Evaluates the model at fixed coefficients: mean, concentrated innovation
/// variance, exact likelihood (Kalman filter with stationary initialization).
/// Throws if the coefficients are non-stationary or non-invertible.
SarimaModel sarima_from_parameters(std::span<const double> y, const SarimaOrder& order, std::vector<double> ar,
                                   std::vector<double> ma, std::vector<double> sar, std::vector<double> sma);

struct SarimaFitOptions {
    int max_evaluations_per_parameter = 400;
    double tolerance = 1e-8;
    /// Fits whose AR or MA roots lie closer than this to the unit circle
    /// (inverse-root modulus above 1 - margin) are discarded.
    double boundary_margin = 1e-3;
};

/// Maximum-likelihood fit of one order. Returns nullopt (and a reason) when
/// the optimizer fails to converge or ends at a non-admissible point.
std::optional<SarimaModel> fit_sarima_order(std::span<const double> y, const SarimaOrder& order,
                                            std::string* why = nullptr, const SarimaFitOptions& opts = {});

struct SarimaCandidate {
    SarimaOrder order;
    bool converged = false;
    double aic = 0.0;
    std::string note;
};

struct SarimaSelection {
    SarimaModel model;
    std::vector<SarimaCandidate> candidates;
    std::vector<std::string> warnings;
};

/// Grid search over sarima_order_grid(n); keeps the minimum-AIC converged fit.
SarimaSelection select_sarima(std::span<const double> y, const SarimaFitOptions& opts = {});

/// Largest modulus among the inverse roots of 1 - c1 z - c2 z^2 (c of size <= 2).
double max_inverse_root(std::span<const double> c);

} // namespace nowcast

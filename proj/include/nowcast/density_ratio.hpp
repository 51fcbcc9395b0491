#pragma once

#include "nowcast/encoding.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace nowcast {

/// Gaussian kernels phi_l(x) = exp(-|x - c_l|^2 / (2 sigma^2)) around b centers.
struct GaussianBasis {
    Eigen::MatrixXd centers; // b x d
    double sigma = 1.0;

    Eigen::Index size() const { return centers.rows(); }
    Eigen::Index dim() const { return centers.cols(); }

    /// n x b matrix of kernel values for the rows of x.
    Eigen::MatrixXd design(const Eigen::MatrixXd& x) const;
};

/// Empirical second moment over the denominator sample and first moment over
/// the numerator sample: H = mean phi(x) phi(x)^T, h = mean phi(x').
struct KernelMoments {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;
};

KernelMoments kernel_moments(const GaussianBasis& basis, const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer);

/// J(alpha) = 1/2 alpha^T H alpha - h^T alpha.
double empirical_j(const Eigen::VectorXd& alpha, const KernelMoments& m);
double empirical_j(const Eigen::VectorXd& alpha, const GaussianBasis& basis, const Eigen::MatrixXd& denom,
                   const Eigen::MatrixXd& numer);

struct UlsifSolution {
    Eigen::VectorXd alpha_unclipped; ///< (H + lambda I)^{-1} h
    Eigen::VectorXd alpha;           ///< negatives rounded up to zero
    double residual = 0.0;           ///< |(H + lambda I) alpha_unclipped - h|_inf
};

/// Ridge solve by Cholesky. lambda == 0 is allowed only when H factorizes.
UlsifSolution solve_ulsif(const Eigen::MatrixXd& H, const Eigen::VectorXd& h, double lambda);
UlsifSolution solve_ulsif(const GaussianBasis& basis, const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer,
                          double lambda);

struct UlsifConfig {
    std::size_t max_centers = 100;
    /// Kernel widths are these multiples of the pooled median pairwise distance.
    std::vector<double> sigma_multipliers = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> lambdas = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::size_t folds = 5;
    /// Median distance is taken over at most this many pooled points.
    std::size_t median_subsample = 1000;
};

struct CvEntry {
    double sigma = 0.0;
    double lambda = 0.0;
    std::size_t fold = 0;
    double j_hat = 0.0;
};

struct UlsifModel {
    GaussianBasis basis;
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    double median_distance = 0.0;
    std::vector<CvEntry> cv_report; ///< one entry per (sigma, lambda, fold)

    /// Mean held-out J per grid point, in grid order.
    std::vector<CvEntry> cv_means() const;
};

/// Fits w(x) = p_numer(x) / p_denom(x). Centers are drawn from `numer`;
/// (sigma, lambda) minimize the k-fold held-out J, then the model is refit on
/// all data.
UlsifModel fit_ulsif(const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer, const UlsifConfig& cfg,
                     std::uint64_t seed);
inline UlsifModel fit_ulsif(const EncodedMatrix& denom, const EncodedMatrix& numer, const UlsifConfig& cfg,
                            std::uint64_t seed) {
    return fit_ulsif(denom.values, numer.values, cfg, seed);
}

enum class Normalization { raw, self_normalized };

struct WeightVector {
    Eigen::VectorXd weights;
    Normalization normalization = Normalization::raw;
};

/// phi(x)^T alpha per row; self_normalized rescales to mean 1.
WeightVector predict_ratio(const UlsifModel& model, const Eigen::MatrixXd& x,
                           Normalization norm = Normalization::raw);
WeightVector self_normalize(WeightVector w);

enum class BandwidthRule { scott, silverman };

/// Naive reference estimator: ratio of product-Gaussian KDEs evaluated at the
/// denominator points, denominator density floored at 1e-12.
WeightVector kde_ratio_baseline(const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer,
                                BandwidthRule rule = BandwidthRule::scott);

void write_cv_report(std::ostream& out, const UlsifModel& model);
void write_weights(std::ostream& out, const WeightVector& w);

} // namespace nowcast

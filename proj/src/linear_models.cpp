#include "nowcast/error.hpp"
#include "nowcast/weighted_learn.hpp"

#include <algorithm>
#include <cmath>

namespace nowcast {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

/// Coordinate descent for
///   1/2 sum v_i (z_i - c - x_i'b)^2 + penalty (alpha |b|_1 + (1 - alpha)/2 |b|^2)
/// with sum v = 1. Columns are centered by their v-weighted mean, which
/// decouples the intercept. Returns the number of sweeps.
int weighted_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& v, const Eigen::VectorXd& z, double alpha,
                double penalty, double tol, int max_sweeps, double& intercept, Eigen::VectorXd& beta,
                bool& converged) {
    const Eigen::Index p = x.cols();
    const Eigen::RowVectorXd mean = v.transpose() * x;
    const Eigen::MatrixXd xc = x.rowwise() - mean;
    const double z_mean = v.dot(z);
    Eigen::VectorXd curv(p);
    for (Eigen::Index j = 0; j < p; ++j) curv(j) = v.dot(xc.col(j).cwiseAbs2());

    Eigen::VectorXd r = (z.array() - z_mean).matrix() - xc * beta;
    const double l1 = penalty * alpha;
    const double l2 = penalty * (1.0 - alpha);
    converged = false;
    int sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double denom = curv(j) + l2;
            if (denom <= 0.0) {
                // Constant column with no ridge term: the coefficient is unidentified.
                if (beta(j) != 0.0) {
                    r += xc.col(j) * beta(j);
                    max_change = std::max(max_change, std::abs(beta(j)));
                    beta(j) = 0.0;
                }
                continue;
            }
            const double old = beta(j);
            const double rho = v.dot(xc.col(j).cwiseProduct(r)) + curv(j) * old;
            const double updated = soft_threshold(rho, l1) / denom;
            if (updated != old) {
                r -= xc.col(j) * (updated - old);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        if (max_change < tol) {
            converged = true;
            break;
        }
    }
    intercept = z_mean - mean.dot(beta);
    return sweep;
}

void check_hyper(double alpha_mix, double penalty) {
    if (!(alpha_mix >= 0.0 && alpha_mix <= 1.0)) {
        throw Error("alpha_mix must lie in [0, 1]");
    }
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) {
        throw Error("penalty must be a nonnegative finite number");
    }
}

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

} // namespace

PredictorModel fit_en_linear(const WeightedDataset& data, double alpha_mix, double penalty,
                             const ElasticNetOptions& opts) {
    data.validate(Task::regression);
    check_hyper(alpha_mix, penalty);
    const Eigen::VectorXd v = normalized_weights(data.weights);
    LinearFit fit;
    fit.coef = Eigen::VectorXd::Zero(data.features.cols());
    fit.iterations = weighted_cd(data.features, v, data.labels, alpha_mix, penalty, opts.tolerance,
                                 opts.max_iterations, fit.intercept, fit.coef, fit.converged);

    PredictorModel m;
    m.family = Family::en_linear;
    m.task = Task::regression;
    const Eigen::VectorXd resid =
        data.labels - ((data.features * fit.coef).array() + fit.intercept).matrix();
    m.residual_sd = std::sqrt(v.dot(resid.cwiseAbs2()));
    m.params = std::move(fit);
    m.hyperparameters = {{"alpha_mix", alpha_mix}, {"penalty", penalty}};
    return m;
}

PredictorModel fit_en_logistic(const WeightedDataset& data, double alpha_mix, double penalty,
                               const ElasticNetOptions& opts) {
    data.validate(Task::classification);
    check_hyper(alpha_mix, penalty);
    const Eigen::VectorXd v = normalized_weights(data.weights);
    {
        double pos = 0.0;
        double neg = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) (data.labels(i) > 0.5 ? pos : neg) += v(i);
        if (pos == 0.0 || neg == 0.0) {
            throw Error("logistic fit needs positive weight on both classes");
        }
    }
    const Eigen::Index n = data.rows();
    const Eigen::Index p = data.features.cols();

    LinearFit fit;
    fit.coef = Eigen::VectorXd::Zero(p);
    {
        const double rate = v.dot(data.labels);
        fit.intercept = std::log(rate / (1.0 - rate));
    }
    Eigen::VectorXd working_w(n);
    Eigen::VectorXd working_z(n);
    int outer = 0;
    fit.converged = false;
    while (outer < opts.max_irls_iterations) {
        ++outer;
        const Eigen::VectorXd eta = (data.features * fit.coef).array() + fit.intercept;
        double wsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pr = sigmoid(eta(i));
            const double var = std::max(pr * (1.0 - pr), 1e-5);
            working_w(i) = v(i) * var;
            working_z(i) = eta(i) + (data.labels(i) - pr) / var;
            wsum += working_w(i);
        }
        // The quadratic model of sum v logloss has curvature sum v p(1-p);
        // scale so the solver sees unit total weight and rescale the penalty.
        const Eigen::VectorXd vw = working_w / wsum;
        const double pen = penalty / wsum;
        const double old_intercept = fit.intercept;
        const Eigen::VectorXd old_coef = fit.coef;
        bool inner_ok = false;
        weighted_cd(data.features, vw, working_z, alpha_mix, pen, opts.tolerance * 0.1, opts.max_iterations,
                    fit.intercept, fit.coef, inner_ok);
        double change = std::abs(fit.intercept - old_intercept);
        if (p > 0) change = std::max(change, (fit.coef - old_coef).cwiseAbs().maxCoeff());
        if (!std::isfinite(change)) {
            throw Error("logistic fit diverged; increase the penalty");
        }
        if (change < opts.tolerance) {
            fit.converged = inner_ok;
            break;
        }
    }
    fit.iterations = outer;

    PredictorModel m;
    m.family = Family::en_logistic;
    m.task = Task::classification;
    m.params = std::move(fit);
    m.hyperparameters = {{"alpha_mix", alpha_mix}, {"penalty", penalty}};
    return m;
}

} // namespace nowcast

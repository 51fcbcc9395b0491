#include "nowcast/density_ratio.hpp"

#include "nowcast/error.hpp"
#include "nowcast/seeding.hpp"
#include "nowcast/stats.hpp"
#include "nowcast/table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace nowcast {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
    const Eigen::VectorXd xn = x.rowwise().squaredNorm();
    const Eigen::VectorXd cn = c.rowwise().squaredNorm();
    Eigen::MatrixXd d = -2.0 * (x * c.transpose());
    d.colwise() += xn;
    d.rowwise() += cn.transpose();
    return d.cwiseMax(0.0);
}

void check_dims(const GaussianBasis& basis, const Eigen::MatrixXd& x, const char* what) {
    if (x.cols() != basis.dim()) {
        throw Error(std::string(what) + " has " + std::to_string(x.cols()) + " columns, basis expects " +
                    std::to_string(basis.dim()));
    }
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) {
        fold[idx[i]] = i % k;
    }
    return fold;
}

double median_pairwise_distance(const Eigen::MatrixXd& pooled, std::size_t cap, Rng& rng) {
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(pooled.rows()));
    std::iota(pick.begin(), pick.end(), Eigen::Index{0});
    if (pick.size() > cap) {
        std::shuffle(pick.begin(), pick.end(), rng);
        pick.resize(cap);
    }
    std::vector<double> d;
    d.reserve(pick.size() * (pick.size() - 1) / 2);
    for (std::size_t i = 0; i < pick.size(); ++i) {
        for (std::size_t j = i + 1; j < pick.size(); ++j) {
            d.push_back((pooled.row(pick[i]) - pooled.row(pick[j])).norm());
        }
    }
    return stats::median(d);
}

} // namespace

Eigen::MatrixXd GaussianBasis::design(const Eigen::MatrixXd& x) const {
    check_dims(*this, x, "input");
    if (!(sigma > 0.0)) {
        throw Error("kernel width must be positive");
    }
    return (squared_distances(x, centers) * (-0.5 / (sigma * sigma))).array().exp().matrix();
}

KernelMoments kernel_moments(const GaussianBasis& basis, const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer) {
    check_dims(basis, denom, "denominator sample");
    check_dims(basis, numer, "numerator sample");
    if (denom.rows() == 0 || numer.rows() == 0) {
        throw Error("kernel moments need non-empty samples");
    }
    const Eigen::MatrixXd pd = basis.design(denom);
    const Eigen::MatrixXd pn = basis.design(numer);
    KernelMoments m;
    m.H = (pd.transpose() * pd) / static_cast<double>(denom.rows());
    m.h = pn.colwise().mean().transpose();
    return m;
}

double empirical_j(const Eigen::VectorXd& alpha, const KernelMoments& m) {
    if (alpha.size() != m.h.size()) {
        throw Error("coefficient vector length does not match basis size");
    }
    return 0.5 * alpha.dot(m.H * alpha) - m.h.dot(alpha);
}

double empirical_j(const Eigen::VectorXd& alpha, const GaussianBasis& basis, const Eigen::MatrixXd& denom,
                   const Eigen::MatrixXd& numer) {
    if (alpha.size() != basis.size()) {
        throw Error("coefficient vector length does not match basis size");
    }
    return empirical_j(alpha, kernel_moments(basis, denom, numer));
}

UlsifSolution solve_ulsif(const Eigen::MatrixXd& H, const Eigen::VectorXd& h, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error("regularization lambda must be finite and nonnegative");
    }
    if (H.rows() != H.cols() || H.rows() != h.size()) {
        throw Error("H must be square and match h");
    }
    Eigen::MatrixXd A = H;
    A.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    const auto singular = [] {
        return Error("uLSIF system (H + lambda I) is singular at lambda = 0; increase lambda");
    };
    if (llt.info() != Eigen::Success) {
        if (lambda == 0.0) {
            throw singular();
        }
        throw Error("uLSIF system is not positive definite");
    }
    UlsifSolution s;
    s.alpha_unclipped = llt.solve(h);
    s.residual = (A * s.alpha_unclipped - h).lpNorm<Eigen::Infinity>();
    if (lambda == 0.0 && !(s.residual < 1e-8)) {
        throw singular();
    }
    s.alpha = s.alpha_unclipped.cwiseMax(0.0);
    return s;
}

UlsifSolution solve_ulsif(const GaussianBasis& basis, const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer,
                          double lambda) {
    const auto m = kernel_moments(basis, denom, numer);
    return solve_ulsif(m.H, m.h, lambda);
}

std::vector<CvEntry> UlsifModel::cv_means() const {
    std::vector<CvEntry> out;
    for (const auto& e : cv_report) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const CvEntry& o) { return o.sigma == e.sigma && o.lambda == e.lambda; });
        if (it == out.end()) {
            out.push_back({e.sigma, e.lambda, 0, 0.0});
            it = out.end() - 1;
        }
        it->j_hat += e.j_hat;
        ++it->fold;
    }
    for (auto& o : out) {
        o.j_hat /= static_cast<double>(o.fold);
        o.fold = 0;
    }
    return out;
}

UlsifModel fit_ulsif(const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer, const UlsifConfig& cfg,
                     std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(denom.rows());
    const auto n_num = static_cast<std::size_t>(numer.rows());
    if (n == 0 || n_num == 0) {
        throw Error("uLSIF needs non-empty denominator and numerator samples");
    }
    if (n < 2 || n_num < 2) {
        throw Error("uLSIF needs at least two points in each sample");
    }
    if (denom.cols() != numer.cols()) {
        throw Error("denominator and numerator samples differ in dimension");
    }
    if (cfg.sigma_multipliers.empty() || cfg.lambdas.empty() || cfg.max_centers == 0) {
        throw Error("uLSIF grid is empty");
    }
    const std::size_t k = std::max<std::size_t>(2, std::min({cfg.folds, n, n_num}));

    Rng rng(derive_seed(seed, "ulsif"));

    // Centers: a without-replacement sample of the numerator points.
    std::vector<Eigen::Index> idx(n_num);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t b = std::min(cfg.max_centers, n_num);
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(b), numer.cols());
    for (std::size_t l = 0; l < b; ++l) {
        centers.row(static_cast<Eigen::Index>(l)) = numer.row(idx[l]);
    }

    Eigen::MatrixXd pooled(denom.rows() + numer.rows(), denom.cols());
    pooled << denom, numer;
    const double med = median_pairwise_distance(pooled, std::max<std::size_t>(2, cfg.median_subsample), rng);
    if (!(med > 0.0)) {
        throw Error("degenerate geometry: median pairwise distance of the pooled sample is zero "
                    "(all points identical)");
    }

    const auto fold_d = fold_assignment(n, k, rng);
    const auto fold_n = fold_assignment(n_num, k, rng);
    std::vector<double> cnt_d(k, 0.0), cnt_n(k, 0.0);
    for (auto f : fold_d) {
        cnt_d[f] += 1.0;
    }
    for (auto f : fold_n) {
        cnt_n[f] += 1.0;
    }

    UlsifModel model;
    model.median_distance = med;
    model.basis.centers = centers;

    const auto bi = static_cast<Eigen::Index>(b);
    double best = std::numeric_limits<double>::infinity();
    double best_sigma = 0.0;
    double best_lambda = 0.0;

    for (const double mult : cfg.sigma_multipliers) {
        GaussianBasis basis{centers, mult * med};
        const Eigen::MatrixXd pd = basis.design(denom);
        const Eigen::MatrixXd pn = basis.design(numer);

        std::vector<Eigen::MatrixXd> Hk(k, Eigen::MatrixXd::Zero(bi, bi));
        std::vector<Eigen::VectorXd> hk(k, Eigen::VectorXd::Zero(bi));
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<Eigen::Index> rows;
            for (std::size_t i = 0; i < n; ++i) {
                if (fold_d[i] == f) {
                    rows.push_back(static_cast<Eigen::Index>(i));
                }
            }
            const Eigen::MatrixXd sub = pd(rows, Eigen::all);
            Hk[f].selfadjointView<Eigen::Lower>().rankUpdate(sub.transpose());
            Hk[f] = Hk[f].selfadjointView<Eigen::Lower>();
        }
        for (std::size_t j = 0; j < n_num; ++j) {
            hk[fold_n[j]] += pn.row(static_cast<Eigen::Index>(j)).transpose();
        }
        Eigen::MatrixXd H_all = Eigen::MatrixXd::Zero(bi, bi);
        Eigen::VectorXd h_all = Eigen::VectorXd::Zero(bi);
        for (std::size_t f = 0; f < k; ++f) {
            H_all += Hk[f];
            h_all += hk[f];
        }

        std::vector<double> sum_j(cfg.lambdas.size(), 0.0);
        for (std::size_t f = 0; f < k; ++f) {
            const Eigen::MatrixXd H_tr = (H_all - Hk[f]) / (static_cast<double>(n) - cnt_d[f]);
            const Eigen::VectorXd h_tr = (h_all - hk[f]) / (static_cast<double>(n_num) - cnt_n[f]);
            const KernelMoments test{Hk[f] / cnt_d[f], hk[f] / cnt_n[f]};
            for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
                const auto sol = solve_ulsif(H_tr, h_tr, cfg.lambdas[li]);
                const double j = empirical_j(sol.alpha, test);
                model.cv_report.push_back({basis.sigma, cfg.lambdas[li], f, j});
                sum_j[li] += j;
            }
        }
        for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
            const double mean_j = sum_j[li] / static_cast<double>(k);
            if (mean_j < best) {
                best = mean_j;
                best_sigma = basis.sigma;
                best_lambda = cfg.lambdas[li];
            }
        }
    }

    model.basis.sigma = best_sigma;
    model.lambda = best_lambda;
    model.alpha = solve_ulsif(model.basis, denom, numer, best_lambda).alpha;
    return model;
}

WeightVector self_normalize(WeightVector w) {
    const double s = w.weights.sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw Error("cannot self-normalize weights that sum to zero");
    }
    w.weights *= static_cast<double>(w.weights.size()) / s;
    w.normalization = Normalization::self_normalized;
    return w;
}

WeightVector predict_ratio(const UlsifModel& model, const Eigen::MatrixXd& x, Normalization norm) {
    if (model.alpha.size() != model.basis.size()) {
        throw Error("model coefficients do not match its basis");
    }
    WeightVector w;
    w.weights = (model.basis.design(x) * model.alpha).cwiseMax(0.0);
    w.normalization = Normalization::raw;
    return norm == Normalization::self_normalized ? self_normalize(std::move(w)) : w;
}

namespace {

Eigen::VectorXd kde_bandwidths(const Eigen::MatrixXd& s, BandwidthRule rule) {
    const double n = static_cast<double>(s.rows());
    const double d = static_cast<double>(s.cols());
    const double factor = rule == BandwidthRule::scott ? std::pow(n, -1.0 / (d + 4.0))
                                                       : std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
    Eigen::VectorXd bw(s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const auto col = s.col(j);
        const double m = col.mean();
        const double sd = n > 1 ? std::sqrt((col.array() - m).square().sum() / (n - 1.0)) : 0.0;
        bw(j) = (sd > 0.0 ? sd : 1.0) * factor;
    }
    return bw;
}

Eigen::VectorXd kde_at(const Eigen::MatrixXd& sample, const Eigen::VectorXd& bw, const Eigen::MatrixXd& at) {
    const Eigen::MatrixXd s = sample.array().rowwise() / bw.transpose().array();
    const Eigen::MatrixXd a = at.array().rowwise() / bw.transpose().array();
    const double norm = std::pow(2.0 * M_PI, -0.5 * static_cast<double>(sample.cols())) / bw.prod();
    const Eigen::MatrixXd k = (squared_distances(a, s) * -0.5).array().exp().matrix();
    return k.rowwise().mean() * norm;
}

} // namespace

WeightVector kde_ratio_baseline(const Eigen::MatrixXd& denom, const Eigen::MatrixXd& numer, BandwidthRule rule) {
    if (denom.rows() == 0 || numer.rows() == 0) {
        throw Error("KDE ratio baseline needs non-empty samples");
    }
    if (denom.cols() != numer.cols()) {
        throw Error("denominator and numerator samples differ in dimension");
    }
    const Eigen::VectorXd pn = kde_at(numer, kde_bandwidths(numer, rule), denom);
    const Eigen::VectorXd pd = kde_at(denom, kde_bandwidths(denom, rule), denom);
    WeightVector w;
    w.weights = pn.array() / pd.array().max(1e-12);
    return w;
}

void write_cv_report(std::ostream& out, const UlsifModel& model) {
    out << "sigma,lambda,fold,J_hat\n";
    for (const auto& e : model.cv_report) {
        out << format_double(e.sigma) << ',' << format_double(e.lambda) << ',' << e.fold << ','
            << format_double(e.j_hat) << '\n';
    }
}

void write_weights(std::ostream& out, const WeightVector& w) {
    out << "row_index,weight\n";
    for (Eigen::Index i = 0; i < w.weights.size(); ++i) {
        out << i << ',' << format_double(w.weights(i)) << '\n';
    }
}

} // namespace nowcast

#include "nowcast/sarima.hpp"

#include "nowcast/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace nowcast {

std::size_t SarimaOrder::min_length() const {
    const int s = season;
    return static_cast<std::size_t>(d + s * D + std::max(p + s * P, q + s * Q) + 1);
}

bool SarimaOrder::admissible(std::size_t n) const {
    return p >= 0 && p <= 2 && q >= 0 && q <= 2 && P >= 0 && P <= 2 && Q >= 0 && Q <= 2 && d >= 0 && d <= 1 &&
           D >= 0 && D <= 1 && n >= min_length();
}

std::string SarimaOrder::to_string() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")(" + std::to_string(P) +
           "," + std::to_string(D) + "," + std::to_string(Q) + ")[" + std::to_string(season) + "]";
}

std::vector<SarimaOrder> sarima_order_grid(std::size_t n) {
    std::vector<SarimaOrder> out;
    for (int d = 0; d <= 1; ++d)
        for (int D = 0; D <= 1; ++D)
            for (int p = 0; p <= 2; ++p)
                for (int q = 0; q <= 2; ++q)
                    for (int P = 0; P <= 2; ++P)
                        for (int Q = 0; Q <= 2; ++Q) {
                            SarimaOrder o{p, d, q, P, D, Q};
                            if (o.admissible(n)) {
                                out.push_back(o);
                            }
                        }
    return out;
}

double max_inverse_root(std::span<const double> c) {
    if (c.empty()) {
        return 0.0;
    }
    if (c.size() == 1 || c[1] == 0.0) {
        return std::abs(c[0]);
    }
    if (c.size() > 2) {
        throw Error("max_inverse_root supports polynomials of degree <= 2");
    }
    // Inverse roots solve u^2 - c1 u - c2 = 0.
    const std::complex<double> disc = std::sqrt(std::complex<double>(c[0] * c[0] + 4.0 * c[1], 0.0));
    const auto u1 = 0.5 * (c[0] + disc);
    const auto u2 = 0.5 * (c[0] - disc);
    return std::max(std::abs(u1), std::abs(u2));
}

namespace {

constexpr int kMaxState = 8;
using StateVec = Eigen::Matrix<double, kMaxState, 1>;
using StateMat = Eigen::Matrix<double, kMaxState, kMaxState>;

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

/// Expanded AR and MA lag polynomials: w_t = sum phi_k w_{t-k} + e_t + sum theta_k e_{t-k}.
struct ArmaForm {
    std::vector<double> phi;
    std::vector<double> theta;
};

ArmaForm expand(const std::vector<double>& ar, const std::vector<double>& ma, const std::vector<double>& sar,
                const std::vector<double>& sma) {
    const int s = SarimaOrder::season;
    std::vector<double> a{1.0}, sa{1.0}, m{1.0}, sm{1.0};
    for (double c : ar) a.push_back(-c);
    for (std::size_t j = 0; j < sar.size(); ++j) {
        sa.resize(static_cast<std::size_t>(s) * (j + 1) + 1, 0.0);
        sa.back() = -sar[j];
    }
    for (double c : ma) m.push_back(c);
    for (std::size_t j = 0; j < sma.size(); ++j) {
        sm.resize(static_cast<std::size_t>(s) * (j + 1) + 1, 0.0);
        sm.back() = sma[j];
    }
    const auto full_ar = poly_mul(a, sa);
    const auto full_ma = poly_mul(m, sm);
    ArmaForm f;
    for (std::size_t k = 1; k < full_ar.size(); ++k) f.phi.push_back(-full_ar[k]);
    for (std::size_t k = 1; k < full_ma.size(); ++k) f.theta.push_back(full_ma[k]);
    return f;
}

std::vector<double> difference(std::span<const double> y, int d, int D) {
    std::vector<double> w(y.begin(), y.end());
    for (int k = 0; k < d; ++k) {
        for (std::size_t t = w.size(); t-- > 1;) w[t] -= w[t - 1];
        w.erase(w.begin());
    }
    for (int k = 0; k < D; ++k) {
        const auto s = static_cast<std::size_t>(SarimaOrder::season);
        for (std::size_t t = w.size(); t-- > s;) w[t] -= w[t - s];
        w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(s));
    }
    return w;
}

/// Harvey-form state space, zero-padded to kMaxState. T is the companion
/// matrix with phi in its first column, so T * x costs O(r).
struct StateSpace {
    int r = 1;
    std::array<double, kMaxState + 2> phi{};
    StateVec R = StateVec::Zero();
    StateMat P0 = StateMat::Zero();

    void apply_T(const double* x, double* out) const {
        for (int i = 0; i < r; ++i) out[i] = phi[static_cast<std::size_t>(i)] * x[0] + (i + 1 < r ? x[i + 1] : 0.0);
    }
};

StateSpace build_state_space(const ArmaForm& f) {
    StateSpace ss;
    ss.r = std::max<int>(static_cast<int>(f.phi.size()), static_cast<int>(f.theta.size()) + 1);
    if (ss.r > kMaxState) {
        throw Error("ARMA state dimension exceeds the supported maximum");
    }
    for (int i = 0; i < ss.r; ++i) {
        if (i < static_cast<int>(f.phi.size())) ss.phi[static_cast<std::size_t>(i)] = f.phi[static_cast<std::size_t>(i)];
    }
    ss.R(0) = 1.0;
    for (int i = 1; i < ss.r; ++i) {
        if (i - 1 < static_cast<int>(f.theta.size())) ss.R(i) = f.theta[static_cast<std::size_t>(i - 1)];
    }

    // Stationary covariance P = T P T' + R R'. With the companion T,
    //   P(i,j) = phi_i phi_j P(0,0) + phi_i P(0,j+1) + phi_j P(0,i+1) + P(i+1,j+1) + R_i R_j,
    // so P is fixed by its first row u; unrolling along the diagonal gives
    // r linear equations in u.
    const int r = ss.r;
    const auto& ph = ss.phi;
    using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxState, kMaxState>;
    using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;
    Small A = Small::Identity(r, r);
    SmallVec b = SmallVec::Zero(r);
    for (int j = 0; j < r; ++j) {
        for (int m = 0; j + m < r; ++m) {
            const auto um = static_cast<std::size_t>(m);
            const auto ujm = static_cast<std::size_t>(j + m);
            A(j, 0) -= ph[um] * ph[ujm];
            if (j + m + 1 < r) A(j, j + m + 1) -= ph[um];
            if (m + 1 < r) A(j, m + 1) -= ph[ujm];
            b(j) += ss.R(m) * ss.R(j + m);
        }
    }
    const SmallVec u = A.partialPivLu().solve(b);
    StateMat P = StateMat::Zero();
    for (int i = r - 1; i >= 0; --i) {
        for (int j = r - 1; j >= i; --j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            double v = ph[ui] * ph[uj] * u(0) + ss.R(i) * ss.R(j);
            if (j + 1 < r) v += ph[ui] * u(j + 1) + P(i + 1, j + 1);
            if (i + 1 < r) v += ph[uj] * u(i + 1);
            P(i, j) = v;
            P(j, i) = v;
        }
    }
    ss.P0 = P;
    return ss;
}

struct FilterResult {
    double sum_v2_over_f = 0.0;
    double sum_log_f = 0.0;
    StateVec a_next = StateVec::Zero(); ///< one-step-ahead state after the last observation
};

FilterResult kalman(const StateSpace& ss, std::span<const double> w, double mean) {
    const int r = ss.r;
    // One spare row/column of zeros so the shift in T needs no bounds checks.
    constexpr int M = kMaxState + 1;
    double a[M] = {};
    double P[M][M] = {};
    double TP[M][M] = {};
    double K[M] = {};
    double an[M] = {};
    double RR[M][M] = {};
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            P[i][j] = ss.P0(i, j);
            RR[i][j] = ss.R(i) * ss.R(j);
        }
    }
    const double* ph = ss.phi.data();
    FilterResult out;
    bool steady = false;
    double F = 0.0;
    double logF = 0.0;
    for (const double obs : w) {
        const double v = obs - mean - a[0];
        if (!steady) {
            F = P[0][0];
            logF = std::log(F);
            for (int i = 0; i < r; ++i) {
                for (int j = 0; j < r; ++j) TP[i][j] = ph[i] * P[0][j] + P[i + 1][j];
                K[i] = TP[i][0] / F;
            }
        }
        out.sum_v2_over_f += v * v / F;
        out.sum_log_f += logF;
        for (int i = 0; i < r; ++i) an[i] = ph[i] * a[0] + a[i + 1] + K[i] * v;
        for (int i = 0; i < r; ++i) a[i] = an[i];
        if (steady) {
            continue;
        }
        // P = TP T' + R R' - K K' F; once it stops moving the gain is fixed.
        double change = 0.0;
        for (int i = 0; i < r; ++i) {
            for (int j = i; j < r; ++j) {
                const double val = TP[i][0] * ph[j] + TP[i][j + 1] + RR[i][j] - K[i] * K[j] * F;
                change = std::max(change, std::abs(val - P[i][j]));
                P[i][j] = val;
                P[j][i] = val;
            }
        }
        steady = change < 1e-13 * F;
    }
    for (int i = 0; i < r; ++i) out.a_next(i) = a[i];
    return out;
}

bool factor_ok(std::span<const double> c, double margin) { return max_inverse_root(c) < 1.0 - margin; }

std::vector<double> negated(std::span<const double> c) {
    std::vector<double> out(c.begin(), c.end());
    for (auto& v : out) v = -v;
    return out;
}

bool coefficients_admissible(const SarimaModel& m, double margin) {
    return factor_ok(m.ar, margin) && factor_ok(m.sar, margin) && factor_ok(negated(m.ma), margin) &&
           factor_ok(negated(m.sma), margin);
}

struct LikelihoodEval {
    double loglik;
    double sigma2;
    double mean;
};

double series_scale(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return s / static_cast<double>(std::max<std::size_t>(1, y.size()));
}

LikelihoodEval evaluate(std::span<const double> w, double mean, double scale, const ArmaForm& f) {
    const auto ss = build_state_space(f);
    const auto kf = kalman(ss, w, mean);
    const double n = static_cast<double>(w.size());
    const double floor = 1e-12 * scale + 1e-300;
    const double sigma2 = std::max(kf.sum_v2_over_f / n, floor);
    const double ll = -0.5 * n * (std::log(2.0 * M_PI * sigma2) + 1.0) - 0.5 * kf.sum_log_f;
    return {ll, sigma2, mean};
}

void split_params(const SarimaOrder& o, std::span<const double> x, SarimaModel& m) {
    auto it = x.begin();
    m.ar.assign(it, it + o.p);
    it += o.p;
    m.ma.assign(it, it + o.q);
    it += o.q;
    m.sar.assign(it, it + o.P);
    it += o.P;
    m.sma.assign(it, it + o.Q);
}

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double step, int max_evals, double tol) {
    const std::size_t n = x0.size();
    NelderMeadResult res;
    if (n == 0) {
        res.x = x0;
        res.value = f(x0);
        res.converged = std::isfinite(res.value);
        return res;
    }
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    int evals = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        vals[i] = f(pts[i]);
        ++evals;
    }
    std::vector<std::size_t> order(n + 1);
    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k) size = std::max(size, std::abs(pts[i][k] - pts[best][k]));
        const double spread = std::abs(vals[worst] - vals[best]);
        if (std::isfinite(vals[worst]) && spread <= tol * (std::abs(vals[best]) + 1.0) && size < 1e-3) {
            res.converged = true;
            break;
        }
        if (evals >= max_evals) {
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
        }
        const auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
            return p;
        };
        auto xr = along(-1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < vals[best]) {
            auto xe = along(-2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                pts[worst] = std::move(xe);
                vals[worst] = fe;
            } else {
                pts[worst] = std::move(xr);
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = std::move(xr);
            vals[worst] = fr;
        } else {
            auto xc = fr < vals[worst] ? along(-0.5) : along(0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < std::min(fr, vals[worst])) {
                pts[worst] = std::move(xc);
                vals[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
                    vals[i] = f(pts[i]);
                    ++evals;
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    res.x = pts[best];
    res.value = vals[best];
    return res;
}

} // namespace

SarimaModel sarima_from_parameters(std::span<const double> y, const SarimaOrder& order, std::vector<double> ar,
                                   std::vector<double> ma, std::vector<double> sar, std::vector<double> sma) {
    if (!order.admissible(y.size())) {
        throw Error("order " + order.to_string() + " is not admissible for a series of length " +
                    std::to_string(y.size()));
    }
    if (ar.size() != static_cast<std::size_t>(order.p) || ma.size() != static_cast<std::size_t>(order.q) ||
        sar.size() != static_cast<std::size_t>(order.P) || sma.size() != static_cast<std::size_t>(order.Q)) {
        throw Error("coefficient counts do not match order " + order.to_string());
    }
    SarimaModel m;
    m.order = order;
    m.ar = std::move(ar);
    m.ma = std::move(ma);
    m.sar = std::move(sar);
    m.sma = std::move(sma);
    if (!coefficients_admissible(m, 0.0)) {
        throw Error("coefficients are non-stationary or non-invertible");
    }
    m.series.assign(y.begin(), y.end());
    const auto w = difference(y, order.d, order.D);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    const auto ev = evaluate(w, mean, series_scale(y), expand(m.ar, m.ma, m.sar, m.sma));
    m.mean = ev.mean;
    m.sigma2 = ev.sigma2;
    m.loglik = ev.loglik;
    m.aic = 2.0 * order.parameter_count() - 2.0 * m.loglik;
    return m;
}

std::optional<SarimaModel> fit_sarima_order(std::span<const double> y, const SarimaOrder& order, std::string* why,
                                            const SarimaFitOptions& opts) {
    const auto fail = [&](std::string msg) -> std::optional<SarimaModel> {
        if (why) *why = std::move(msg);
        return std::nullopt;
    };
    if (!order.admissible(y.size())) {
        return fail("series too short for order");
    }
    const auto w = difference(y, order.d, order.D);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    const double scale = series_scale(y);
    const int k = order.p + order.q + order.P + order.Q;

    SarimaModel probe;
    probe.order = order;
    const auto objective = [&](const std::vector<double>& x) {
        split_params(order, x, probe);
        if (!coefficients_admissible(probe, 0.0)) {
            return std::numeric_limits<double>::infinity();
        }
        const auto ev = evaluate(w, mean, scale, expand(probe.ar, probe.ma, probe.sar, probe.sma));
        return std::isfinite(ev.loglik) ? -ev.loglik : std::numeric_limits<double>::infinity();
    };

    const int budget = opts.max_evaluations_per_parameter * std::max(1, k);
    auto nm = nelder_mead(objective, std::vector<double>(static_cast<std::size_t>(k), 0.0), 0.1, budget,
                          opts.tolerance);
    if (!nm.converged && std::isfinite(nm.value)) {
        // One restart from the best vertex with a fresh simplex.
        nm = nelder_mead(objective, nm.x, 0.05, budget, opts.tolerance);
    }
    if (!nm.converged || !std::isfinite(nm.value)) {
        return fail("optimizer did not converge");
    }
    SarimaModel m;
    m.order = order;
    split_params(order, nm.x, m);
    if (!coefficients_admissible(m, opts.boundary_margin)) {
        return fail("fit at the stationarity/invertibility boundary");
    }
    return sarima_from_parameters(y, order, m.ar, m.ma, m.sar, m.sma);
}

SarimaSelection select_sarima(std::span<const double> y, const SarimaFitOptions& opts) {
    const auto grid = sarima_order_grid(y.size());
    if (grid.empty()) {
        throw Error("series of length " + std::to_string(y.size()) + " is too short for any SARIMA order");
    }
    SarimaSelection sel;
    std::optional<SarimaModel> best;
    for (const auto& o : grid) {
        std::string why;
        auto fit = fit_sarima_order(y, o, &why, opts);
        SarimaCandidate c;
        c.order = o;
        if (fit) {
            c.converged = true;
            c.aic = fit->aic;
            if (!best || fit->aic < best->aic) {
                best = std::move(fit);
            }
        } else {
            c.note = why;
            sel.warnings.push_back("skipped SARIMA" + o.to_string() + ": " + why);
        }
        sel.candidates.push_back(std::move(c));
    }
    if (!best) {
        throw Error("all SARIMA candidates failed to fit");
    }
    sel.model = std::move(*best);
    return sel;
}

std::vector<double> SarimaModel::forecast_path(int horizon) const {
    if (horizon < 1) {
        throw Error("forecast horizon must be >= 1");
    }
    const auto w = difference(series, order.d, order.D);
    const auto ss = build_state_space(expand(ar, ma, sar, sma));
    auto a = kalman(ss, w, mean).a_next;

    // Differencing operator (1 - B)^d (1 - B^s)^D = 1 + sum delta_k B^k.
    std::vector<double> delta{1.0};
    for (int i = 0; i < order.d; ++i) delta = poly_mul(delta, {1.0, -1.0});
    for (int i = 0; i < order.D; ++i) {
        std::vector<double> s(static_cast<std::size_t>(SarimaOrder::season) + 1, 0.0);
        s.front() = 1.0;
        s.back() = -1.0;
        delta = poly_mul(delta, s);
    }

    std::vector<double> hist = series;
    std::vector<double> out;
    for (int h = 1; h <= horizon; ++h) {
        const double w_hat = mean + a(0);
        double y_hat = w_hat;
        for (std::size_t k = 1; k < delta.size(); ++k) {
            y_hat -= delta[k] * hist[hist.size() - k];
        }
        hist.push_back(y_hat);
        out.push_back(y_hat);
        StateVec next = StateVec::Zero();
        ss.apply_T(a.data(), next.data());
        a = next;
    }
    return out;
}

} // namespace nowcast

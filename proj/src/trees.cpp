#include "nowcast/error.hpp"
#include "nowcast/seeding.hpp"
#include "nowcast/weighted_learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nowcast {

double Tree::predict(const Eigen::MatrixXd& x, Eigen::Index row) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        k = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (!nodes[k].is_leaf()) {
            d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
            d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
        }
        best = std::max(best, d[k]);
    }
    return best;
}

namespace {

/// Per-row statistics for split search. A node's score is a^2 / b and its
/// leaf value a / b: (w y, w) gives variance reduction (and Gini, which for
/// 0/1 labels is twice the variance), (-gradient, hessian) gives the
/// second-order boosting gain.
struct RowStats {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd weight;
};

struct BuildConfig {
    int max_depth = 3;
    double min_leaf_weight = 0.0;
    int mtry = 0; ///< 0 uses every feature
    Rng* rng = nullptr;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const RowStats& s, const std::vector<std::vector<Eigen::Index>>& sorted,
                BuildConfig cfg)
        : x_(x), s_(s), sorted_(sorted), cfg_(cfg), in_node_(static_cast<std::size_t>(x.rows()), 0) {}

    Tree build(const std::vector<Eigen::Index>& rows) {
        tree_ = Tree{};
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    static double score(double a, double b) { return b > 0.0 ? a * a / b : 0.0; }

    int grow(const std::vector<Eigen::Index>& rows, int depth) {
        double a = 0.0, b = 0.0, w = 0.0;
        for (const auto i : rows) {
            a += s_.a(i);
            b += s_.b(i);
            w += s_.weight(i);
        }
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes.back().value = b > 0.0 ? a / b : 0.0;
        tree_.nodes.back().weight = w;
        if (depth >= cfg_.max_depth || rows.size() < 2) {
            return id;
        }
        const Split sp = best_split(rows, a, b);
        if (sp.feature < 0) {
            return id;
        }
        std::vector<Eigen::Index> left, right;
        for (const auto i : rows) (x_(i, sp.feature) <= sp.threshold ? left : right).push_back(i);
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& nd = tree_.nodes[static_cast<std::size_t>(id)];
        nd.feature = sp.feature;
        nd.threshold = sp.threshold;
        nd.left = l;
        nd.right = r;
        return id;
    }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(x_.cols());
        std::vector<int> f(static_cast<std::size_t>(p));
        std::iota(f.begin(), f.end(), 0);
        if (cfg_.mtry > 0 && cfg_.mtry < p && cfg_.rng) {
            for (int k = 0; k < cfg_.mtry; ++k) {
                std::uniform_int_distribution<int> pick(k, p - 1);
                std::swap(f[static_cast<std::size_t>(k)], f[static_cast<std::size_t>(pick(*cfg_.rng))]);
            }
            f.resize(static_cast<std::size_t>(cfg_.mtry));
            std::sort(f.begin(), f.end());
        }
        return f;
    }

    Split best_split(const std::vector<Eigen::Index>& rows, double a_tot, double b_tot) {
        const double parent = score(a_tot, b_tot);
        Split best;
        // Gains within a relative 1e-12 count as ties so that rounding noise
        // never overrides the lowest-feature, lowest-threshold rule.
        const double min_gain = 1e-12 * std::max(std::abs(parent), 1e-300);
        const bool filter = rows.size() * 16 >= static_cast<std::size_t>(x_.rows());
        if (filter) {
            for (const auto i : rows) in_node_[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<Eigen::Index> order;
        for (const int f : candidate_features()) {
            if (filter) {
                order.clear();
                for (const auto i : sorted_[static_cast<std::size_t>(f)]) {
                    if (in_node_[static_cast<std::size_t>(i)]) order.push_back(i);
                }
            } else {
                order = rows;
                std::stable_sort(order.begin(), order.end(),
                                 [&](Eigen::Index u, Eigen::Index v) { return x_(u, f) < x_(v, f); });
            }
            double a_l = 0.0, b_l = 0.0, w_l = 0.0;
            double w_tot = 0.0;
            for (const auto i : order) w_tot += s_.weight(i);
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                const auto i = order[k];
                a_l += s_.a(i);
                b_l += s_.b(i);
                w_l += s_.weight(i);
                const double xv = x_(i, f);
                const double xn = x_(order[k + 1], f);
                if (!(xv < xn)) continue;
                const double b_r = b_tot - b_l;
                const double w_r = w_tot - w_l;
                if (w_l < cfg_.min_leaf_weight || w_r < cfg_.min_leaf_weight || b_l <= 0.0 || b_r <= 0.0) continue;
                const double gain = score(a_l, b_l) + score(a_tot - a_l, b_r) - parent;
                const double threshold_gain = best.feature < 0 ? min_gain : best.gain + 1e-12 * std::abs(best.gain);
                if (gain > threshold_gain) {
                    best.feature = f;
                    best.threshold = 0.5 * (xv + xn);
                    best.gain = gain;
                }
            }
        }
        if (filter) {
            for (const auto i : rows) in_node_[static_cast<std::size_t>(i)] = 0;
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const RowStats& s_;
    const std::vector<std::vector<Eigen::Index>>& sorted_;
    BuildConfig cfg_;
    std::vector<char> in_node_;
    Tree tree_;
};

std::vector<std::vector<Eigen::Index>> presort(const Eigen::MatrixXd& x) {
    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        auto& o = out[static_cast<std::size_t>(f)];
        o.resize(static_cast<std::size_t>(x.rows()));
        std::iota(o.begin(), o.end(), Eigen::Index{0});
        std::stable_sort(o.begin(), o.end(), [&](Eigen::Index u, Eigen::Index v) { return x(u, f) < x(v, f); });
    }
    return out;
}

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

/// Rows sorted lexicographically by (features, label), identical rows merged
/// with their weights summed.
WeightedDataset merge_identical_rows(const WeightedDataset& d) {
    const Eigen::Index n = d.rows();
    const Eigen::Index p = d.features.cols();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const auto cmp = [&](Eigen::Index u, Eigen::Index v) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (d.features(u, j) != d.features(v, j)) return d.features(u, j) < d.features(v, j);
        }
        return d.labels(u) < d.labels(v);
    };
    std::stable_sort(idx.begin(), idx.end(), cmp);
    std::vector<Eigen::Index> keep;
    std::vector<double> w;
    for (const auto i : idx) {
        if (d.weights(i) == 0.0) continue;
        if (!keep.empty() && !cmp(keep.back(), i) && !cmp(i, keep.back())) {
            w.back() += d.weights(i);
        } else {
            keep.push_back(i);
            w.push_back(d.weights(i));
        }
    }
    WeightedDataset out = d.subset(keep);
    out.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return out;
}

} // namespace

PredictorModel fit_forest(const WeightedDataset& data, Task task, const ForestConfig& cfg) {
    data.validate(task);
    if (cfg.n_trees < 1 || cfg.max_depth < 0) {
        throw Error("forest needs n_trees >= 1 and max_depth >= 0");
    }
    const Eigen::Index n = data.rows();
    const Eigen::Index p = data.features.cols();
    if (static_cast<double>(n) < cfg.min_leaf_weight) {
        throw Error("forest needs at least min_leaf_weight rows");
    }
    int mtry = cfg.mtry;
    if (mtry <= 0) {
        mtry = task == Task::classification ? static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))))
                                            : static_cast<int>(p / 3);
        mtry = std::max(1, mtry);
    }
    mtry = std::min<int>(mtry, static_cast<int>(p));

    const auto sorted = presort(data.features);
    const Eigen::VectorXd prob = normalized_weights(data.weights);
    std::discrete_distribution<Eigen::Index> draw(prob.data(), prob.data() + prob.size());

    TreeEnsemble ens;
    Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi oob_count = Eigen::VectorXi::Zero(n);
    RowStats st;
    st.a.resize(n);
    st.b.resize(n);
    st.weight.resize(n);
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        Eigen::VectorXd mult = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) mult(draw(rng)) += 1.0;
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (mult(i) > 0.0) rows.push_back(i);
        }
        st.weight = mult;
        st.b = mult;
        st.a = mult.cwiseProduct(data.labels);
        TreeBuilder builder(data.features, st, sorted, {cfg.max_depth, cfg.min_leaf_weight, mtry, &rng});
        ens.trees.push_back(builder.build(rows));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (mult(i) == 0.0) {
                oob_sum(i) += ens.trees.back().predict(data.features, i);
                oob_count(i) += 1;
            }
        }
    }

    PredictorModel m;
    m.family = Family::random_forest;
    m.task = task;
    if (task == Task::regression) {
        // Out-of-bag residuals: in-bag residuals of deep trees are near zero.
        double ss = 0.0, ws = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (oob_count(i) == 0) continue;
            const double e = data.labels(i) - oob_sum(i) / oob_count(i);
            ss += data.weights(i) * e * e;
            ws += data.weights(i);
        }
        m.residual_sd = ws > 0.0 ? std::sqrt(ss / ws) : 0.0;
    }
    m.params = std::move(ens);
    m.hyperparameters = {{"n_trees", cfg.n_trees},
                         {"max_depth", cfg.max_depth},
                         {"min_leaf_weight", cfg.min_leaf_weight},
                         {"mtry", mtry},
                         {"seed", cfg.seed}};
    return m;
}

PredictorModel fit_gboost(const WeightedDataset& data, Task task, const BoostConfig& cfg) {
    data.validate(task);
    if (cfg.n_rounds < 0 || cfg.max_depth < 0 || !(cfg.learning_rate > 0.0)) {
        throw Error("boosting needs n_rounds >= 0, max_depth >= 0 and learning_rate > 0");
    }
    const WeightedDataset d = merge_identical_rows(data);
    const Eigen::Index n = d.rows();
    const Eigen::VectorXd w = normalized_weights(d.weights);

    TreeEnsemble ens;
    ens.boosted = true;
    ens.learning_rate = cfg.learning_rate;
    const double base_rate = w.dot(d.labels);
    if (task == Task::classification) {
        if (base_rate <= 0.0 || base_rate >= 1.0) {
            throw Error("boosted classifier needs positive weight on both classes");
        }
        ens.base = std::log(base_rate / (1.0 - base_rate));
    } else {
        ens.base = base_rate;
    }

    const auto sorted = presort(d.features);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    Eigen::VectorXd f = Eigen::VectorXd::Constant(n, ens.base);
    RowStats st;
    st.weight = w;
    st.a.resize(n);
    st.b.resize(n);
    for (int round = 0; round < cfg.n_rounds; ++round) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (task == Task::classification) {
                const double pr = std::clamp(sigmoid(f(i)), 1e-15, 1.0 - 1e-15);
                st.a(i) = w(i) * (d.labels(i) - pr);
                st.b(i) = w(i) * pr * (1.0 - pr);
            } else {
                st.a(i) = w(i) * (d.labels(i) - f(i));
                st.b(i) = w(i);
            }
        }
        TreeBuilder builder(d.features, st, sorted, {cfg.max_depth, cfg.min_leaf_weight, 0, nullptr});
        ens.trees.push_back(builder.build(all));
        const auto& tree = ens.trees.back();
        for (Eigen::Index i = 0; i < n; ++i) f(i) += cfg.learning_rate * tree.predict(d.features, i);
    }

    PredictorModel m;
    m.family = Family::grad_boost;
    m.task = task;
    if (task == Task::regression) {
        m.residual_sd = std::sqrt(w.dot((d.labels - f).cwiseAbs2()));
    }
    m.params = std::move(ens);
    m.hyperparameters = {{"n_rounds", cfg.n_rounds},
                         {"learning_rate", cfg.learning_rate},
                         {"max_depth", cfg.max_depth},
                         {"min_leaf_weight", cfg.min_leaf_weight}};
    return m;
}

} // namespace nowcast

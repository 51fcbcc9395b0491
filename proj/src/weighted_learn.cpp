#include "nowcast/weighted_learn.hpp"

#include "nowcast/error.hpp"
#include "nowcast/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nowcast {

std::string to_string(Task t) { return t == Task::classification ? "classification" : "regression"; }

std::string to_string(Family f) {
    switch (f) {
    case Family::en_logistic: return "en_logistic";
    case Family::en_linear: return "en_linear";
    case Family::random_forest: return "random_forest";
    case Family::grad_boost: return "grad_boost";
    }
    return "unknown";
}

void WeightedDataset::validate(Task task) const {
    if (labels.size() != features.rows() || weights.size() != features.rows()) {
        throw Error("dataset has mismatched row counts (features " + std::to_string(features.rows()) + ", labels " +
                    std::to_string(labels.size()) + ", weights " + std::to_string(weights.size()) + ")");
    }
    if (features.rows() == 0) {
        throw Error("dataset is empty");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!std::isfinite(weights(i)) || weights(i) < 0.0) {
            throw Error("weights must be finite and nonnegative");
        }
        total += weights(i);
    }
    if (!(total > 0.0)) {
        throw Error("degenerate weights: total weight is zero");
    }
    if (!features.allFinite() || !labels.allFinite()) {
        throw Error("features and labels must be finite");
    }
    if (task == Task::classification) {
        for (Eigen::Index i = 0; i < labels.size(); ++i) {
            if (labels(i) != 0.0 && labels(i) != 1.0) {
                throw Error("classification labels must be 0 or 1");
            }
        }
    }
}

WeightedDataset WeightedDataset::subset(const std::vector<Eigen::Index>& idx) const {
    WeightedDataset out;
    const auto n = static_cast<Eigen::Index>(idx.size());
    out.features.resize(n, features.cols());
    out.labels.resize(n);
    out.weights.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto i = idx[static_cast<std::size_t>(k)];
        out.features.row(k) = features.row(i);
        out.labels(k) = labels(i);
        out.weights(k) = weights(i);
    }
    return out;
}

Eigen::VectorXd normalized_weights(const Eigen::VectorXd& w) {
    const Eigen::Index n = w.size();
    if (n > 0 && (w.array() == w(0)).all() && w(0) > 0.0) {
        return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    }
    const double s = w.sum();
    if (!(s > 0.0)) {
        throw Error("degenerate weights: total weight is zero");
    }
    return w / s;
}

namespace {

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

nlohmann::json tree_json(const Tree& t) {
    auto nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes) {
        if (nd.is_leaf()) {
            nodes.push_back({{"value", nd.value}, {"weight", nd.weight}});
        } else {
            nodes.push_back({{"feature", nd.feature},
                             {"threshold", nd.threshold},
                             {"left", nd.left},
                             {"right", nd.right},
                             {"weight", nd.weight}});
        }
    }
    return nodes;
}

} // namespace

Eigen::VectorXd PredictorModel::predict(const Eigen::MatrixXd& x) const {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd out(n);
    if (const auto* lin = std::get_if<LinearFit>(&params)) {
        if (x.cols() != lin->coef.size()) {
            throw Error("feature width " + std::to_string(x.cols()) + " does not match the model (" +
                        std::to_string(lin->coef.size()) + ")");
        }
        out = (x * lin->coef).array() + lin->intercept;
        if (family == Family::en_logistic) {
            for (Eigen::Index i = 0; i < n; ++i) out(i) = sigmoid(out(i));
        }
        return out;
    }
    const auto& ens = std::get<TreeEnsemble>(params);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& t : ens.trees) s += t.predict(x, i);
        if (ens.boosted) {
            const double f = ens.base + ens.learning_rate * s;
            out(i) = task == Task::classification ? sigmoid(f) : f;
        } else {
            out(i) = ens.trees.empty() ? 0.0 : s / static_cast<double>(ens.trees.size());
        }
    }
    return out;
}

double weighted_mean_label(const WeightedDataset& data) {
    if (data.labels.size() != data.weights.size()) {
        throw Error("labels and weights differ in length");
    }
    const double s = data.weights.sum();
    if (!(s > 0.0)) {
        throw Error("weighted mean needs a positive total weight");
    }
    return 100.0 * data.weights.dot(data.labels) / s;
}

double weighted_loss(const PredictorModel& model, const WeightedDataset& data) {
    const Eigen::VectorXd pred = model.predict(data.features);
    const Eigen::VectorXd w = normalized_weights(data.weights);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (model.task == Task::classification) {
            const double p = std::clamp(pred(i), 1e-12, 1.0 - 1e-12);
            loss -= w(i) * (data.labels(i) > 0.5 ? std::log(p) : std::log(1.0 - p));
        } else {
            const double e = data.labels(i) - pred(i);
            loss += w(i) * e * e;
        }
    }
    return loss;
}

std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    if (folds < 2) {
        throw Error("cross-validation needs at least 2 folds");
    }
    std::vector<std::size_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < perm.size(); ++k) fold[perm[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    return fold;
}

namespace {

template <class Fit>
double cv_loss(const WeightedDataset& data, const std::vector<int>& fold, int folds, Fit&& fit) {
    double total = 0.0;
    double used = 0.0;
    for (int k = 0; k < folds; ++k) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < data.rows(); ++i) (fold[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        if (train.empty() || test.empty()) continue;
        const auto tr = data.subset(train);
        const auto te = data.subset(test);
        if (!(te.weights.sum() > 0.0)) continue;
        try {
            const auto model = fit(tr);
            total += weighted_loss(model, te) * te.weights.sum();
            used += te.weights.sum();
        } catch (const Error&) {
            // A fold that cannot be fitted (e.g. one class only) disqualifies the setting.
            return std::numeric_limits<double>::infinity();
        }
    }
    return used > 0.0 ? total / used : std::numeric_limits<double>::infinity();
}

template <class Setting, class Fit>
PredictorModel tune(const WeightedDataset& data, const std::vector<Setting>& settings, int folds, std::uint64_t seed,
                    Fit&& fit, nlohmann::json (*describe)(const Setting&)) {
    if (settings.empty()) {
        throw Error("hyperparameter grid is empty");
    }
    const auto fold = fold_assignment(data.rows(), folds, seed);
    std::vector<CvRow> table;
    std::size_t best = 0;
    for (std::size_t s = 0; s < settings.size(); ++s) {
        const double loss = cv_loss(data, fold, folds, [&](const WeightedDataset& d) { return fit(d, settings[s]); });
        table.push_back({describe(settings[s]), loss});
        if (loss < table[best].loss) best = s;
    }
    if (!std::isfinite(table[best].loss)) {
        throw Error("cross-validation failed for every hyperparameter setting");
    }
    auto model = fit(data, settings[best]);
    model.cv_table = std::move(table);
    return model;
}

} // namespace

PredictorModel tune_elastic_net(const WeightedDataset& data, Task task, const ElasticNetGrid& grid, int folds,
                                std::uint64_t seed) {
    std::vector<std::pair<double, double>> settings;
    for (const double a : grid.alpha_mix)
        for (const double p : grid.penalty) settings.emplace_back(a, p);
    return tune(
        data, settings, folds, seed,
        [&](const WeightedDataset& d, const std::pair<double, double>& s) {
            return task == Task::classification ? fit_en_logistic(d, s.first, s.second)
                                                : fit_en_linear(d, s.first, s.second);
        },
        +[](const std::pair<double, double>& s) {
            return nlohmann::json{{"alpha_mix", s.first}, {"penalty", s.second}};
        });
}

PredictorModel tune_forest(const WeightedDataset& data, Task task, const ForestConfig& base, const ForestGrid& grid,
                           int folds, std::uint64_t seed) {
    std::vector<ForestConfig> settings;
    for (const int depth : grid.max_depth) {
        for (const double leaf : grid.min_leaf_weight) {
            auto c = base;
            c.max_depth = depth;
            c.min_leaf_weight = leaf;
            settings.push_back(c);
        }
    }
    return tune(
        data, settings, folds, seed,
        [&](const WeightedDataset& d, const ForestConfig& c) { return fit_forest(d, task, c); },
        +[](const ForestConfig& c) {
            return nlohmann::json{{"max_depth", c.max_depth}, {"min_leaf_weight", c.min_leaf_weight}};
        });
}

PredictorModel tune_gboost(const WeightedDataset& data, Task task, const BoostConfig& base, const BoostGrid& grid,
                           int folds, std::uint64_t seed) {
    std::vector<BoostConfig> settings;
    for (const int depth : grid.max_depth) {
        for (const int rounds : grid.n_rounds) {
            auto c = base;
            c.max_depth = depth;
            c.n_rounds = rounds;
            settings.push_back(c);
        }
    }
    return tune(
        data, settings, folds, seed,
        [&](const WeightedDataset& d, const BoostConfig& c) { return fit_gboost(d, task, c); },
        +[](const BoostConfig& c) { return nlohmann::json{{"max_depth", c.max_depth}, {"n_rounds", c.n_rounds}}; });
}

nlohmann::json model_summary(const PredictorModel& model) {
    nlohmann::json j;
    j["family"] = to_string(model.family);
    j["task"] = to_string(model.task);
    j["hyperparameters"] = model.hyperparameters;
    if (const auto* lin = std::get_if<LinearFit>(&model.params)) {
        j["intercept"] = lin->intercept;
        j["coefficients"] = std::vector<double>(lin->coef.data(), lin->coef.data() + lin->coef.size());
        j["iterations"] = lin->iterations;
        j["converged"] = lin->converged;
    } else {
        const auto& ens = std::get<TreeEnsemble>(model.params);
        j["boosted"] = ens.boosted;
        if (ens.boosted) {
            j["base"] = ens.base;
            j["learning_rate"] = ens.learning_rate;
        }
        auto trees = nlohmann::json::array();
        for (const auto& t : ens.trees) trees.push_back(tree_json(t));
        j["trees"] = std::move(trees);
    }
    j["residual_sd"] = model.residual_sd ? nlohmann::json(*model.residual_sd) : nlohmann::json(nullptr);
    auto cv = nlohmann::json::array();
    for (const auto& row : model.cv_table) {
        cv.push_back({{"params", row.params}, {"loss", std::isfinite(row.loss) ? nlohmann::json(row.loss) : nlohmann::json(nullptr)}});
    }
    j["cv_table"] = std::move(cv);
    return j;
}

} // namespace nowcast

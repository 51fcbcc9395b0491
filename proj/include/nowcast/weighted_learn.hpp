#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nowcast {

enum class Task { classification, regression };
enum class Family { en_logistic, en_linear, random_forest, grad_boost };

std::string to_string(Task t);
std::string to_string(Family f);

/// Encoded features, labels (0/1 or continuous) and nonnegative weights.
struct WeightedDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd labels;
    Eigen::VectorXd weights;

    Eigen::Index rows() const { return features.rows(); }
    /// Throws on size mismatch, negative or non-finite weights, zero total
    /// weight, and (for classification) non-binary labels.
    void validate(Task task) const;
    WeightedDataset subset(const std::vector<Eigen::Index>& idx) const;
};

/// Weights divided by their sum. Uniform weights map to exactly 1/n so that
/// rescaling uniform weights never changes a fit.
Eigen::VectorXd normalized_weights(const Eigen::VectorXd& w);

struct LinearFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    int iterations = 0;
    bool converged = false;
};

/// Axis-aligned binary tree: x[feature] <= threshold goes left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const Eigen::MatrixXd& x, Eigen::Index row) const;
    int depth() const;
};

/// Forest: average of tree outputs. Boosting: base + learning_rate * sum.
struct TreeEnsemble {
    std::vector<Tree> trees;
    bool boosted = false;
    double base = 0.0;
    double learning_rate = 1.0;
};

struct CvRow {
    nlohmann::json params;
    double loss = 0.0;
};

struct PredictorModel {
    Family family = Family::en_logistic;
    Task task = Task::classification;
    std::variant<LinearFit, TreeEnsemble> params;
    std::optional<double> residual_sd; ///< regression only
    nlohmann::json hyperparameters = nlohmann::json::object();
    std::vector<CvRow> cv_table;

    /// Scores in [0,1] for classification, predictions on the label scale
    /// for regression.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct ElasticNetOptions {
    double tolerance = 1e-7;
    int max_iterations = 10000;
    int max_irls_iterations = 100;
};

/// Weighted elastic-net logistic regression:
/// sum w_i logloss_i / sum w_i + penalty (alpha_mix |b|_1 + (1 - alpha_mix)/2 |b|^2),
/// intercept unpenalized. IRLS outer loop, coordinate descent inside.
PredictorModel fit_en_logistic(const WeightedDataset& data, double alpha_mix, double penalty,
                               const ElasticNetOptions& opts = {});

/// Weighted elastic-net least squares with half squared loss; residual_sd is
/// the weighted RMS of training residuals.
PredictorModel fit_en_linear(const WeightedDataset& data, double alpha_mix, double penalty,
                             const ElasticNetOptions& opts = {});

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 8;
    double min_leaf_weight = 5.0; ///< bootstrap multiplicity per leaf
    int mtry = 0;                 ///< 0 picks sqrt(p) (classification) or p/3 (regression)
    std::uint64_t seed = 0;
};

/// Random forest whose bootstrap draws rows with probability proportional
/// to the weights; splits use the bootstrap multiplicities.
PredictorModel fit_forest(const WeightedDataset& data, Task task, const ForestConfig& cfg);

struct BoostConfig {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    double min_leaf_weight = 0.01; ///< fraction of the total weight
    std::uint64_t seed = 0;        ///< unused: boosting draws no random numbers
};

/// Second-order gradient boosting on the normalized weights, exact greedy
/// splits over all features, no subsampling. Identical rows are merged
/// first, so duplicating a row and doubling its weight give the same model.
PredictorModel fit_gboost(const WeightedDataset& data, Task task, const BoostConfig& cfg);

/// 100 * sum w_i y_i / sum w_i.
double weighted_mean_label(const WeightedDataset& data);

/// Weighted loss on held-out data: log loss (classification) or squared
/// error (regression), both divided by the total weight.
double weighted_loss(const PredictorModel& model, const WeightedDataset& data);

/// Deterministic fold labels 0..folds-1, shuffled by seed.
std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed);

struct ElasticNetGrid {
    std::vector<double> alpha_mix{0.0, 0.5, 1.0};
    std::vector<double> penalty{1e-4, 1e-3, 1e-2, 1e-1};
};

struct ForestGrid {
    std::vector<int> max_depth{4, 8};
    std::vector<double> min_leaf_weight{5.0};
};

struct BoostGrid {
    std::vector<int> max_depth{2, 3};
    std::vector<int> n_rounds{50, 150};
};

/// Picks hyperparameters by weighted k-fold CV and refits on all rows; the
/// returned model carries the CV table.
PredictorModel tune_elastic_net(const WeightedDataset& data, Task task, const ElasticNetGrid& grid, int folds,
                                std::uint64_t seed);
PredictorModel tune_forest(const WeightedDataset& data, Task task, const ForestConfig& base, const ForestGrid& grid,
                           int folds, std::uint64_t seed);
PredictorModel tune_gboost(const WeightedDataset& data, Task task, const BoostConfig& base, const BoostGrid& grid,
                           int folds, std::uint64_t seed);

/// Family, task, hyperparameters, coefficients or tree dumps, residual_sd
/// and the CV table.
nlohmann::json model_summary(const PredictorModel& model);

} // namespace nowcast

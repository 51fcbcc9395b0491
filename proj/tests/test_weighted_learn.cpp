#include "nowcast/boxcox.hpp"
#include "nowcast/error.hpp"
#include "nowcast/weighted_learn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nowcast;

namespace {

WeightedDataset linear_data(int n, std::uint64_t seed, double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.5, 2.0);
    WeightedDataset d{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        d.features(i, 0) = g(rng);
        d.features(i, 1) = g(rng);
        d.labels(i) = 2.0 * d.features(i, 0) + 1.0 + noise * g(rng);
        d.weights(i) = u(rng);
    }
    return d;
}

WeightedDataset logistic_data(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u;
    WeightedDataset d{Eigen::MatrixXd(n, 1), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
    for (int i = 0; i < n; ++i) {
        d.features(i, 0) = g(rng);
        const double p = 1.0 / (1.0 + std::exp(-(1.5 - 2.0 * d.features(i, 0))));
        d.labels(i) = u(rng) < p ? 1.0 : 0.0;
    }
    return d;
}

/// Every row appears twice with half the weight.
WeightedDataset duplicated(const WeightedDataset& d) {
    const auto n = d.rows();
    WeightedDataset out{Eigen::MatrixXd(2 * n, d.features.cols()), Eigen::VectorXd(2 * n), Eigen::VectorXd(2 * n)};
    out.features << d.features, d.features;
    out.labels << d.labels, d.labels;
    out.weights << 0.5 * d.weights, 0.5 * d.weights;
    return out;
}

WeightedDataset xor_data(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    WeightedDataset d{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
    for (int i = 0; i < n; ++i) {
        d.features(i, 0) = u(rng);
        d.features(i, 1) = u(rng);
        d.labels(i) = (d.features(i, 0) > 0) != (d.features(i, 1) > 0) ? 1.0 : 0.0;
    }
    return d;
}

double accuracy(const PredictorModel& m, const WeightedDataset& d) {
    const auto p = m.predict(d.features);
    int ok = 0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) ok += (p(i) > 0.5) == (d.labels(i) > 0.5);
    return static_cast<double>(ok) / static_cast<double>(d.rows());
}

} // namespace

TEST(Dataset, Validation) {
    auto d = linear_data(10, 1);
    EXPECT_NO_THROW(d.validate(Task::regression));
    EXPECT_THROW(d.validate(Task::classification), Error);
    d.weights(3) = -1.0;
    EXPECT_THROW(d.validate(Task::regression), Error);
    d.weights.setZero();
    EXPECT_THROW(d.validate(Task::regression), Error);
    EXPECT_EQ(normalized_weights(Eigen::VectorXd::Constant(4, 7.0)), Eigen::VectorXd::Constant(4, 0.25));
}

TEST(ElasticNet, ExactLinearFit) {
    const auto d = linear_data(200, 2);
    const auto m = fit_en_linear(d, 0.5, 0.0);
    const auto& fit = std::get<LinearFit>(m.params);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-5);
    EXPECT_NEAR(fit.coef(0), 2.0, 1e-5);
    EXPECT_NEAR(fit.coef(1), 0.0, 1e-5);
}

TEST(ElasticNet, FullShrinkageGivesWeightedMean) {
    const auto d = linear_data(100, 3, 0.5);
    const auto m = fit_en_linear(d, 1.0, 1e3);
    const auto& fit = std::get<LinearFit>(m.params);
    EXPECT_EQ(fit.coef.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(fit.intercept, d.weights.dot(d.labels) / d.weights.sum(), 1e-9);
}

TEST(ElasticNet, UniformWeightScalingAndDuplication) {
    auto d = logistic_data(300, 4);
    const auto base = fit_en_logistic(d, 0.5, 1e-2);
    d.weights.setConstant(3.7);
    const auto scaled = fit_en_logistic(d, 0.5, 1e-2);
    EXPECT_EQ(std::get<LinearFit>(base.params).coef, std::get<LinearFit>(scaled.params).coef);

    const auto w = linear_data(150, 5, 0.3);
    const auto a = fit_en_linear(w, 0.5, 1e-2);
    const auto b = fit_en_linear(duplicated(w), 0.5, 1e-2);
    EXPECT_TRUE(std::get<LinearFit>(a.params).coef.isApprox(std::get<LinearFit>(b.params).coef, 1e-6));
    EXPECT_NEAR(std::get<LinearFit>(a.params).intercept, std::get<LinearFit>(b.params).intercept, 1e-6);
}

TEST(ElasticNet, LogisticRecovery) {
    const auto d = logistic_data(20000, 6);
    const auto m = fit_en_logistic(d, 0.5, 0.0);
    const auto& fit = std::get<LinearFit>(m.params);
    EXPECT_NEAR(fit.intercept, 1.5, 0.1);
    EXPECT_NEAR(fit.coef(0), -2.0, 0.1);
    const auto p = m.predict(d.features);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
}

TEST(ElasticNet, ResidualSdIsWeightedRms) {
    const auto d = linear_data(300, 7, 0.5);
    const auto m = fit_en_linear(d, 0.5, 0.0);
    ASSERT_TRUE(m.residual_sd.has_value());
    const Eigen::VectorXd r = d.labels - m.predict(d.features);
    EXPECT_NEAR(*m.residual_sd, std::sqrt(d.weights.dot(r.cwiseAbs2()) / d.weights.sum()), 1e-9);
}

TEST(Forest, PureSeparableData) {
    WeightedDataset d{Eigen::MatrixXd(40, 1), Eigen::VectorXd(40), Eigen::VectorXd::Ones(40)};
    for (int i = 0; i < 40; ++i) {
        d.features(i, 0) = i;
        d.labels(i) = i < 20 ? 0.0 : 1.0;
    }
    ForestConfig cfg;
    cfg.n_trees = 50;
    cfg.min_leaf_weight = 1.0;
    cfg.seed = 3;
    const auto m = fit_forest(d, Task::classification, cfg);
    const auto p = m.predict(d.features);
    for (int i = 0; i < 40; ++i) {
        if (i < 15) {
            EXPECT_LT(p(i), 0.2);
        }
        if (i >= 25) {
            EXPECT_GT(p(i), 0.8);
        }
    }
    EXPECT_EQ(accuracy(m, d), 1.0);
}

TEST(Forest, Deterministic) {
    const auto d = xor_data(300, 8);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 11;
    EXPECT_EQ(fit_forest(d, Task::classification, cfg).predict(d.features),
              fit_forest(d, Task::classification, cfg).predict(d.features));
}

TEST(Boost, ZeroRoundsGiveBaseRate) {
    auto d = logistic_data(200, 9);
    BoostConfig cfg;
    cfg.n_rounds = 0;
    const auto m = fit_gboost(d, Task::classification, cfg);
    const double rate = d.weights.dot(d.labels) / d.weights.sum();
    EXPECT_NEAR(m.predict(d.features)(0), rate, 1e-12);
}

TEST(Boost, DuplicationIsExact) {
    auto d = xor_data(200, 10);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (Eigen::Index i = 0; i < d.rows(); ++i) d.weights(i) = u(rng);
    BoostConfig cfg;
    cfg.n_rounds = 30;
    const auto a = fit_gboost(d, Task::classification, cfg);
    const auto b = fit_gboost(duplicated(d), Task::classification, cfg);
    EXPECT_TRUE(a.predict(d.features).isApprox(b.predict(d.features), 1e-12));
}

TEST(Boost, LearnsXor) {
    const auto train = xor_data(2000, 12);
    const auto test = xor_data(1000, 13);
    BoostConfig cfg;
    cfg.n_rounds = 100;
    cfg.max_depth = 3;
    EXPECT_GE(accuracy(fit_gboost(train, Task::classification, cfg), test), 0.95);
}

TEST(Tuning, CvTablesAndFolds) {
    const auto folds = fold_assignment(103, 5, 7);
    std::vector<int> sizes(5, 0);
    for (int f : folds) ++sizes[static_cast<std::size_t>(f)];
    for (int s : sizes) EXPECT_TRUE(s == 20 || s == 21);
    EXPECT_EQ(folds, fold_assignment(103, 5, 7));

    const auto d = logistic_data(400, 14);
    const auto m = tune_elastic_net(d, Task::classification, {}, 5, 3);
    EXPECT_EQ(m.cv_table.size(), 12u);
    double best = m.cv_table.front().loss;
    for (const auto& r : m.cv_table) best = std::min(best, r.loss);
    bool chosen = false;
    for (const auto& r : m.cv_table)
        if (r.params == m.hyperparameters) chosen = r.loss == best;
    EXPECT_TRUE(chosen);
    EXPECT_TRUE(model_summary(m).contains("cv_table"));
}

TEST(WeightedMean, ExamplesAndScaling) {
    WeightedDataset d{Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd(3), Eigen::VectorXd(3)};
    d.labels << 1, 0, 1;
    d.weights << 1, 1, 2;
    EXPECT_DOUBLE_EQ(weighted_mean_label(d), 75.0);
    for (double c : {0.1, 7.3}) {
        auto s = d;
        s.weights *= c;
        EXPECT_NEAR(weighted_mean_label(s), 75.0, 1e-12);
    }
    d.weights << 1, 1, 1;
    EXPECT_NEAR(weighted_mean_label(d), 200.0 / 3.0, 1e-12);
}

TEST(BoxCox, FixedLambdaBranches) {
    const auto one = BoxCoxTransform::with_lambda(1.0);
    EXPECT_DOUBLE_EQ(one.transform(3.0), 2.0);
    const auto zero = BoxCoxTransform::with_lambda(0.0);
    EXPECT_DOUBLE_EQ(zero.transform(std::exp(1.5)), 1.5);
    EXPECT_THROW(zero.transform(0.0), Error);
    const auto half = BoxCoxTransform::with_lambda(0.5);
    for (double y : {0.3, 1.0, 1.1, 4.0}) EXPECT_NEAR(half.inverse(half.transform(y)), y, 1e-12);
    EXPECT_THROW(half.inverse(-3.0), Error);
}

TEST(BoxCox, LognormalPicksLog) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.1, 0.3);
    std::vector<double> y;
    for (int i = 0; i < 5000; ++i) y.push_back(std::exp(g(rng)));
    const auto [bc, z] = boxcox(y);
    EXPECT_GE(bc.lambda, -0.1);
    EXPECT_LE(bc.lambda, 0.1);
    EXPECT_EQ(z.size(), y.size());
    for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(bc.inverse(z[i]), y[i], 1e-9);
    EXPECT_GE(boxcox_profile_loglik(y, bc.lambda), boxcox_profile_loglik(y, 1.0));
}

TEST(Score, ThresholdAndMonotone) {
    const auto bc = BoxCoxTransform::with_lambda(0.0);
    const auto conv = ScoreConverter::make(bc, 0.2);
    EXPECT_DOUBLE_EQ(conv.threshold_bc, std::log(1.1));
    EXPECT_DOUBLE_EQ(regression_to_score(conv.threshold_bc, conv), 0.5);
    EXPECT_NEAR(regression_to_score(conv.threshold_bc + 0.2, conv), 0.841345, 1e-6);
    double prev = 0.0;
    for (double f = -1.0; f <= 1.0; f += 0.05) {
        const double s = regression_to_score(f, conv);
        EXPECT_GE(s, prev);
        prev = s;
    }
    EXPECT_THROW(regression_to_score(0.0, ScoreConverter::make(bc, 0.0)), Error);
}

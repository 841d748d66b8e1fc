#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "krsml/errors.hpp"
#include "krsml/evaluation.hpp"
#include "krsml/learners.hpp"
#include "test_support.hpp"

using namespace krsml;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

TrainConfig small_config(int k = 8) {
    TrainConfig cfg;
    cfg.kernel.k_neighbors = k;
    return cfg;
}

double sml_fd_error(const Dataset& data, const MatrixXd& point, double mu, double sigma, int k) {
    KernelConfig kernel;
    kernel.k_neighbors = k;
    kernel.sigma = sigma;
    const LooEvaluation eval = evaluate_loo(data, MetricMatrix(point), kernel);
    const MatrixXd analytic = krsml_gradient(data, eval, sigma, mu);
    const auto loss = [&](const MatrixXd& m) {
        return testing::oracle_frozen_loss(data, m, eval.neighbors, sigma) + mu * m.trace();
    };
    return fd_gradient_check(loss, point, analytic, 1e-5).max_rel_error;
}

double mlkr_fd_error(const Dataset& data, const MatrixXd& a, double sigma, int k) {
    KernelConfig kernel;
    kernel.k_neighbors = k;
    kernel.sigma = sigma;
    const MatrixXd m = a.transpose() * a;
    const LooEvaluation eval = evaluate_loo(data, MetricMatrix(0.5 * (m + m.transpose())), kernel);
    const MatrixXd analytic = mlkr_gradient(data, a, eval, sigma);
    const auto loss = [&](const MatrixXd& x) {
        return testing::oracle_frozen_loss(data, x.transpose() * x, eval.neighbors, sigma);
    };
    return fd_gradient_check(loss, a, analytic, 1e-5).max_rel_error;
}

} // namespace

TEST_CASE("fd_gradient_check on closed-form functions") {
    std::mt19937_64 rng(1);
    const MatrixXd x = testing::random_matrix(3, 4, rng);
    const auto fro = [](const MatrixXd& m) { return m.squaredNorm(); };
    CHECK(fd_gradient_check(fro, x, 2.0 * x).max_rel_error < 1e-8);
    const MatrixXd sq = testing::random_matrix(4, 4, rng);
    const auto tr = [](const MatrixXd& m) { return m.trace(); };
    CHECK(fd_gradient_check(tr, sq, MatrixXd::Identity(4, 4)).max_rel_error < 1e-8);
    CHECK(fd_gradient_check(tr, sq, MatrixXd::Zero(4, 4)).max_rel_error == doctest::Approx(1.0));

    const auto bad = [](const MatrixXd&) { return NAN; };
    CHECK_THROWS_AS(fd_gradient_check(bad, sq, sq), NumericError);
    CHECK_THROWS_AS(fd_gradient_check(tr, sq, sq, 0.0), InvalidArgument);
}

TEST_CASE("krsml_gradient examples") {
    std::mt19937_64 rng(2);
    Dataset data = testing::random_dataset(15, 4, rng);
    data.targets.setConstant(1.75);
    TrainConfig cfg = small_config(5);
    CHECK(krsml_gradient(data, MetricMatrix::identity(4), cfg).cwiseAbs().maxCoeff() <= 1e-12);
    cfg.mu = 0.3;
    CHECK((krsml_gradient(data, MetricMatrix::identity(4), cfg) - 0.3 * MatrixXd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    const MatrixXd g = krsml_gradient(testing::random_dataset(15, 4, rng), MetricMatrix::identity(4), cfg);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);

    const Dataset one(MatrixXd::Ones(1, 2), VectorXd::Ones(1));
    CHECK_THROWS_AS(krsml_gradient(one, MetricMatrix::identity(2), cfg), InsufficientData);
}

TEST_CASE("krsml_gradient matches central differences with frozen neighbours") {
    std::mt19937_64 rng(77);
    const Dataset fixed = testing::random_dataset(15, 4, rng);
    CHECK(sml_fd_error(fixed, MatrixXd::Identity(4, 4), 0.1, 1.0 / std::sqrt(2.0), 6) < 1e-4);

    for (int trial = 0; trial < 6; ++trial) {
        const Index n = 10 + 4 * trial;
        const Index d = 2 + trial % 5;
        const Dataset data = testing::random_dataset(n, d, rng);
        const MatrixXd point = MatrixXd::Identity(d, d) + 0.2 * testing::random_psd(d, rng);
        for (const double mu : {0.0, 0.1}) CHECK(sml_fd_error(data, point, mu, 1.0 / std::sqrt(2.0), 7) < 1e-4);
        // Non-default bandwidth: the 1/sigma^2 factor must follow.
        CHECK(sml_fd_error(data, point, 0.0, 1.3, 7) < 1e-4);
    }
}

TEST_CASE("mlkr_gradient examples and central differences") {
    std::mt19937_64 rng(3);
    Dataset data = testing::random_dataset(12, 3, rng);
    TrainConfig cfg = small_config(5);
    const MatrixXd a = MatrixXd::Identity(3, 3) + 0.3 * testing::random_matrix(3, 3, rng);
    CHECK(mlkr_gradient(data, MatrixXd::Zero(3, 3), cfg).cwiseAbs().maxCoeff() == 0.0);

    CHECK(mlkr_fd_error(data, a, cfg.kernel.sigma, 5) < 1e-4);
    for (int trial = 0; trial < 5; ++trial) {
        const Index d = 2 + trial;
        const Dataset inst = testing::random_dataset(10 + 5 * trial, d, rng);
        const MatrixXd factor = MatrixXd::Identity(d, d) + 0.3 * testing::random_matrix(d, d, rng);
        CHECK(mlkr_fd_error(inst, factor, cfg.kernel.sigma, 6) < 1e-4);
    }

    data.targets.setConstant(3.0);
    CHECK(mlkr_gradient(data, a, cfg).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(mlkr_gradient(data, MatrixXd::Identity(2, 2), cfg), InvalidArgument);
}

TEST_CASE("krsml_train with no iterations is Euclidean KR") {
    std::mt19937_64 rng(4);
    const Dataset data = testing::random_dataset(40, 3, rng);
    TrainConfig cfg = small_config();
    cfg.max_iters = 0;
    const TrainResult r = krsml_train(data, cfg);
    CHECK(r.model.metric().entries() == MatrixXd::Identity(3, 3));
    CHECK(r.trace.records.size() == 1);
    const MatrixXd queries = testing::random_matrix(20, 3, rng);
    CHECK(r.model.predict(queries) == kr_model(data, cfg.kernel).predict(queries));
}

TEST_CASE("krsml_train keeps every iterate PSD and reports consistent objectives") {
    std::mt19937_64 rng(5);
    const Dataset data = testing::random_dataset(40, 5, rng);
    TrainConfig cfg = small_config();
    cfg.alpha = 0.05;
    cfg.mu = 0.5;
    cfg.theta = 1e-12;
    cfg.max_iters = 60;
    const TrainResult r = krsml_train(data, cfg);
    CHECK(r.trace.records.size() > 2);
    int last_iter = -1;
    double last_objective = INFINITY;
    for (const auto& rec : r.trace.records) {
        CHECK(rec.iteration > last_iter);
        last_iter = rec.iteration;
        CHECK(rec.min_eigenvalue >= -1e-10);
        CHECK(std::isfinite(rec.objective));
        if (rec.accepted) {
            CHECK(rec.objective <= last_objective);
            last_objective = rec.objective;
        }
    }
    const MetricMatrix& m = r.model.metric();
    CHECK(min_eigenvalue(m.entries()) >= -1e-10);
    const double recomputed = quadratic_loss(data.targets, loo_predictions(data, m, cfg.kernel)) + cfg.mu * trace(m);
    CHECK(std::abs(recomputed - r.trace.best().objective) <= 1e-10 * std::max(1.0, recomputed));
    CHECK(std::abs(krsml_objective(data, m, cfg) - recomputed) <= 1e-10 * std::max(1.0, recomputed));
}

TEST_CASE("a dominant trace penalty shrinks the trace step after step") {
    std::mt19937_64 rng(6);
    const Dataset data = testing::random_dataset(30, 4, rng);
    TrainConfig cfg = small_config();
    cfg.mu = 1e3;
    cfg.alpha = 1e-5;
    cfg.theta = 1e-12;
    cfg.max_iters = 40;
    const TrainResult r = krsml_train(data, cfg);
    double previous = INFINITY;
    int accepted = 0;
    for (const auto& rec : r.trace.records) {
        if (!rec.accepted) continue;
        CHECK(rec.trace < previous);
        previous = rec.trace;
        ++accepted;
    }
    CHECK(accepted > 10);
    CHECK(previous < 0.8 * 4.0);
}

TEST_CASE("krsml_train objective ignores example order") {
    std::mt19937_64 rng(7);
    const Dataset data = testing::random_dataset(30, 3, rng);
    std::vector<Index> perm(30);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    TrainConfig cfg = small_config();
    cfg.alpha = 0.02;
    cfg.mu = 0.2;
    cfg.max_iters = 25;
    const double a = krsml_train(data, cfg).trace.best().objective;
    const double b = krsml_train(data.subset(perm), cfg).trace.best().objective;
    CHECK(std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)));
}

TEST_CASE("training rejects bad input") {
    TrainConfig cfg;
    const Dataset one(MatrixXd::Ones(1, 2), VectorXd::Ones(1));
    CHECK_THROWS_AS(krsml_train(one, cfg), InsufficientData);
    CHECK_THROWS_AS(mlkr_train(one, cfg), InsufficientData);
    cfg.alpha = -1.0;
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(krsml_train(testing::random_dataset(10, 2, rng), cfg), InvalidArgument);
}

TEST_CASE("mlkr_train examples") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset data;
    data.features = testing::random_matrix(300, 2, rng);
    data.targets.resize(300);
    for (Index i = 0; i < 300; ++i) data.targets(i) = 5.0 * data.features(i, 0) + 0.1 * g(rng);

    TrainConfig cfg;
    cfg.max_iters = 0;
    CHECK(mlkr_train(data, cfg).model.metric().entries() == MatrixXd::Identity(2, 2));

    cfg.max_iters = 60;
    cfg.alpha = 1e-4;
    cfg.theta = 1e-8;
    const TrainResult r = mlkr_train(data, cfg);
    const MatrixXd& m = r.model.metric().entries();
    CHECK(m(0, 0) / m(1, 1) > 1.0);
    CHECK(r.trace.best().loss < r.trace.records.front().loss);
    double previous = INFINITY;
    for (const auto& rec : r.trace.records) {
        if (!rec.accepted) continue;
        CHECK(rec.loss <= previous);
        previous = rec.loss;
        CHECK(rec.min_eigenvalue >= -1e-10);
    }
}

TEST_CASE("with mu = 0 both parameterizations reach similar training losses") {
    std::mt19937_64 rng(9);
    const Dataset data = testing::random_dataset(80, 3, rng, 0.05);
    TrainConfig cfg = small_config(10);
    cfg.theta = 1e-6;
    cfg.max_iters = 150;
    cfg.alpha = 5e-3;
    const double sml = krsml_train(data, cfg).trace.best().loss;
    const double mlkr = mlkr_train(data, cfg).trace.best().loss;
    const double start = evaluate_loo(data, MetricMatrix::identity(3), cfg.kernel).loss;
    CHECK(sml < start);
    CHECK(mlkr < start);
    CHECK(std::abs(sml - mlkr) <= 0.05 * std::max(sml, mlkr));
}

TEST_CASE("pca_fit examples") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset line;
    line.features.resize(50, 3);
    line.targets = VectorXd::Zero(50);
    for (Index i = 0; i < 50; ++i) {
        const double t = g(rng);
        line.features.row(i) << t, -2 * t, 0.5 * t;
    }
    CHECK(pca_fit(line, 0.95).projection.basis.cols() == 1);

    // Symmetric cloud with identical variance on every axis.
    Dataset sphere;
    sphere.features.resize(8, 4);
    sphere.targets = VectorXd::Zero(8);
    for (Index j = 0; j < 4; ++j) {
        sphere.features.row(2 * j) = VectorXd::Unit(4, j).transpose();
        sphere.features.row(2 * j + 1) = -VectorXd::Unit(4, j).transpose();
    }
    CHECK(pca_fit(sphere, 1.0).projection.basis.cols() == 4);

    // Variances in ratio 4 : 1 : 0.01.
    Dataset three;
    three.features = MatrixXd::Zero(6, 3);
    three.targets = VectorXd::Zero(6);
    three.features(0, 0) = 2, three.features(1, 0) = -2;
    three.features(2, 1) = 1, three.features(3, 1) = -1;
    three.features(4, 2) = 0.1, three.features(5, 2) = -0.1;
    const PcaFit fit = pca_fit(three, 0.95);
    CHECK(fit.projection.basis.cols() == 2);
    CHECK((fit.projection.basis.transpose() * fit.projection.basis - MatrixXd::Identity(2, 2)).norm() < 1e-12);

    Dataset flat(MatrixXd::Constant(5, 2, 3.0), VectorXd::Zero(5));
    CHECK_THROWS_AS(pca_fit(flat, 0.9), DegenerateData);
    CHECK_THROWS_AS(pca_fit(three, 0.0), InvalidArgument);
}

TEST_CASE("krpca_train examples") {
    std::mt19937_64 rng(11);
    const Dataset data = testing::random_dataset(60, 4, rng);
    TrainConfig cfg = small_config(6);
    const Model full = krpca_train(data, cfg, 1.0);
    CHECK(full.metric().dim() == 4);
    const MatrixXd queries = testing::random_matrix(15, 4, rng);
    CHECK((full.predict(queries) - kr_model(data, cfg.kernel).predict(queries)).cwiseAbs().maxCoeff() <= 1e-10);

    const Model collapsed = krpca_train(data, cfg, 0.01);
    CHECK(collapsed.metric().dim() == 1);
    const VectorXd p = collapsed.predict(queries);
    CHECK(p.minCoeff() >= data.targets.minCoeff() - 1e-12);
    CHECK(p.maxCoeff() <= data.targets.maxCoeff() + 1e-12);
}

TEST_CASE("KR_PCA keeps noise while KR_SML keeps signal when noise dominates variance") {
    std::mt19937_64 rng(12);
    const Dataset train = testing::planted_task(300, rng, 7, 2.0);
    const Dataset test = testing::planted_task(150, rng, 7, 2.0);
    FitOptions opt;
    opt.train.alpha = 1e-3;
    opt.train.mu = 1.0;
    opt.train.max_iters = 100;
    opt.variance_threshold = 0.6;
    const double sml = evaluate(fit(Learner::KR_SML, train, opt).model, test).rmse;
    const double pca = evaluate(fit(Learner::KR_PCA, train, opt).model, test).rmse;
    CHECK(sml < pca);
}

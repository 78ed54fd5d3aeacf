#include "efi/detail/rng.hpp"
#include "efi/learn/training.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace efi;
using namespace efi::learn;

namespace {

// n x p standard normal columns, standardized so the solver's preconditions hold.
DesignMatrix random_problem(efi::detail::Rng& rng, std::size_t n, std::size_t p, double noise) {
    Matrix raw(n, p);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) {
        names.push_back("f" + std::to_string(j));
        for (std::size_t i = 0; i < n; ++i)
            raw(i, j) = rng.normal();
    }
    const auto norm = fit_normalizer(raw, names);
    DesignMatrix d{apply_normalizer(norm, raw), norm.names, {}};
    std::vector<double> beta(d.features());
    for (auto& b : beta)
        b = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
        double y = 1.5 + rng.normal(0, noise);
        for (std::size_t j = 0; j < d.features(); ++j)
            y += beta[j] * d.x(i, j);
        d.targets.push_back(y);
    }
    return d;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(i, j) = m(i, j);
    return e;
}

// (XᵀX/n + λI)⁻¹ Xᵀ(y - ȳ)/n, with X already centred.
Eigen::VectorXd ridge_oracle(const DesignMatrix& d, double lambda) {
    const Eigen::MatrixXd x = to_eigen(d.x);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.targets.data(), d.targets.size());
    y.array() -= y.mean();
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd a = x.transpose() * x / n + lambda * Eigen::MatrixXd::Identity(x.cols(), x.cols());
    return a.ldlt().solve(x.transpose() * y / n);
}

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double b : v)
        s += std::abs(b);
    return s;
}

} // namespace

TEST(Normalizer, TwoPointColumnIsPlusMinusOne) {
    const Matrix m = Matrix::from_rows({{1.0}, {3.0}});
    const auto norm = fit_normalizer(m, {"a"});
    EXPECT_DOUBLE_EQ(norm.means[0], 2.0);
    EXPECT_DOUBLE_EQ(norm.stds[0], 1.0);
    const Matrix z = apply_normalizer(norm, m);
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(Normalizer, ConstantColumnDropped) {
    const Matrix m = Matrix::from_rows({{1.0, 7.0, 2.0}, {3.0, 7.0, 5.0}, {4.0, 7.0, 1.0}});
    const auto norm = fit_normalizer(m, {"a", "flat", "c"});
    EXPECT_EQ(norm.names, (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(norm.dropped, (std::vector<std::string>{"flat"}));
    const Matrix z = apply_normalizer(norm, m);
    ASSERT_EQ(z.cols(), 2u);
    EXPECT_NEAR(z(2, 1), (1.0 - 8.0 / 3.0) / std::sqrt((4.0 / 9 + 49.0 / 9 + 25.0 / 9) / 3.0), 1e-12);
}

TEST(Normalizer, FittingRowsHaveZeroMeanUnitStd) {
    efi::detail::Rng rng(3);
    Matrix m(37, 6);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < 6; ++j) {
        names.push_back("n" + std::to_string(j));
        for (std::size_t i = 0; i < 37; ++i)
            m(i, j) = rng.uniform(-1e3, 1e3) * static_cast<double>(j + 1);
    }
    const Matrix z = apply_normalizer(fit_normalizer(m, names), m);
    for (std::size_t j = 0; j < 6; ++j) {
        double s = 0.0, ss = 0.0;
        for (double v : z.column(j)) {
            s += v;
            ss += v * v;
        }
        EXPECT_NEAR(s / 37.0, 0.0, 1e-12);
        EXPECT_NEAR(ss / 37.0, 1.0, 1e-12);
    }
}

TEST(Normalizer, Errors) {
    EXPECT_THROW(fit_normalizer(Matrix::from_rows({{1.0}}), {"a"}), DataError);
    EXPECT_THROW(fit_normalizer(Matrix::from_rows({{1.0}, {NAN}}), {"a"}), NumericError);
}

TEST(Selection, PaperFractionOnTenFeatures) {
    EXPECT_EQ(selection_count(10, 0.4375), static_cast<std::size_t>(std::ceil(10 * 0.4375)));
    EXPECT_EQ(selection_count(10, 0.4375), 5u);
    EXPECT_EQ(selection_count(1600, 0.4375), 700u);
    EXPECT_EQ(selection_count(7, 1.0), 7u);
    EXPECT_EQ(selection_count(3, 0.01), 1u);
    EXPECT_THROW(selection_count(3, 0.0), DomainError);
}

TEST(Selection, KeepsStrongestCorrelations) {
    efi::detail::Rng rng(11);
    DesignMatrix d;
    const std::size_t n = 40;
    d.x = Matrix(n, 10);
    for (std::size_t i = 0; i < n; ++i)
        d.targets.push_back(rng.normal());
    for (std::size_t j = 0; j < 10; ++j) {
        d.feature_names.push_back("g" + std::to_string(j));
        // column j mixes in the target with weight decreasing in j
        const double w = 1.0 / static_cast<double>(j + 1);
        for (std::size_t i = 0; i < n; ++i)
            d.x(i, j) = w * d.targets[i] + rng.normal(0, 0.05);
    }
    const auto out = select_features(d, 0.4375);
    ASSERT_EQ(out.features(), 5u);
    EXPECT_EQ(out.feature_names, (std::vector<std::string>{"g0", "g1", "g2", "g3", "g4"}));
}

TEST(Selection, TargetCopyAlwaysRetained) {
    efi::detail::Rng rng(4);
    for (double frac : {0.01, 0.34, 0.5, 1.0}) {
        DesignMatrix d;
        d.x = Matrix(20, 3);
        d.feature_names = {"f0", "f1", "f2"};
        for (std::size_t i = 0; i < 20; ++i) {
            d.targets.push_back(rng.normal());
            d.x(i, 0) = rng.normal();
            d.x(i, 1) = d.targets[i];
            d.x(i, 2) = rng.normal();
        }
        const auto out = select_features(d, frac);
        EXPECT_NE(std::find(out.feature_names.begin(), out.feature_names.end(), "f1"), out.feature_names.end());
    }
}

TEST(Selection, FullFractionIsIdentity) {
    efi::detail::Rng rng(8);
    const auto d = random_problem(rng, 15, 6, 1.0);
    const auto out = select_features(d, 1.0);
    EXPECT_EQ(out.feature_names, d.feature_names);
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t i = 0; i < 15; ++i)
            EXPECT_EQ(out.x(i, j), d.x(i, j));
}

TEST(Selection, TiesGoToSmallerName) {
    DesignMatrix d;
    d.x = Matrix::from_rows({{1, 1}, {2, 2}, {3, 3}});
    d.feature_names = {"zeta", "alpha"};
    d.targets = {1, 2, 3};
    const auto out = select_features(d, 0.5);
    EXPECT_EQ(out.feature_names, (std::vector<std::string>{"alpha"}));
}

TEST(SoftThreshold, Examples) {
    EXPECT_DOUBLE_EQ(soft_threshold(3, 1), 2);
    EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 1), 0);
    EXPECT_DOUBLE_EQ(soft_threshold(-3, 1), -2);
    EXPECT_DOUBLE_EQ(soft_threshold(0.7, 0), 0.7);
}

TEST(ElasticNet, OlsLimit) {
    DesignMatrix d{Matrix::from_rows({{-1}, {0}, {1}}), {"x"}, {-2, 0, 2}};
    const auto m = fit_elastic_net(d, 0.0, 0.5);
    EXPECT_NEAR(m.coefficients[0], 2.0, 1e-9);
    EXPECT_NEAR(m.intercept, 0.0, 1e-12);
    EXPECT_TRUE(m.converged);
}

TEST(ElasticNet, LambdaMaxZeroesEverything) {
    efi::detail::Rng rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const auto d = random_problem(rng, 10 + rng.below(30), 1 + rng.below(8), 0.5);
        const double top = lambda_max(d.x, d.targets, 1.0);
        for (double lam : {top, top * 1.5}) {
            const auto m = fit_elastic_net(d, lam, 1.0);
            for (double b : m.coefficients)
                EXPECT_EQ(b, 0.0);
            double ybar = 0.0;
            for (double y : d.targets)
                ybar += y;
            EXPECT_NEAR(m.intercept, ybar / static_cast<double>(d.samples()), 1e-12);
        }
        // just below, something must enter
        EXPECT_GT(fit_elastic_net(d, top * 0.99, 1.0).nonzero_count(), 0u);
    }
}

TEST(ElasticNet, SingleCoordinateClosedForm) {
    efi::detail::Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        DesignMatrix d = random_problem(rng, 5 + rng.below(40), 1, 1.0);
        double xty = 0.0;
        double ybar = 0.0;
        for (double y : d.targets)
            ybar += y;
        ybar /= static_cast<double>(d.samples());
        for (std::size_t i = 0; i < d.samples(); ++i)
            xty += d.x(i, 0) * (d.targets[i] - ybar);
        const double n = static_cast<double>(d.samples());
        const double expected = soft_threshold(xty / n, 0.25) / (1.0 + 0.25);
        const auto m = fit_elastic_net(d, 0.5, 0.5);
        EXPECT_NEAR(m.coefficients[0], expected, 1e-9);
    }
}

TEST(ElasticNet, RidgeMatchesClosedForm) {
    efi::detail::Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = random_problem(rng, 20 + rng.below(40), 1 + rng.below(10), 1.0);
        const double lam = rng.uniform(0.01, 2.0);
        const auto m = fit_elastic_net(d, lam, 0.0, {1e-12, 100000, nullptr});
        const Eigen::VectorXd oracle = ridge_oracle(d, lam);
        for (std::size_t j = 0; j < d.features(); ++j)
            EXPECT_NEAR(m.coefficients[j], oracle[static_cast<Eigen::Index>(j)],
                        1e-4 * std::max(1e-3, std::abs(oracle[static_cast<Eigen::Index>(j)])));
    }
}

TEST(ElasticNet, UnpenalizedMatchesLeastSquares) {
    efi::detail::Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = random_problem(rng, 30 + rng.below(30), 1 + rng.below(6), 0.3);
        const auto m = fit_elastic_net(d, 0.0, 1.0, {1e-12, 100000, nullptr});
        const Eigen::VectorXd oracle = ridge_oracle(d, 0.0);
        for (std::size_t j = 0; j < d.features(); ++j)
            EXPECT_NEAR(m.coefficients[j], oracle[static_cast<Eigen::Index>(j)], 1e-6);
    }
}

TEST(ElasticNet, ObjectiveNeverIncreases) {
    efi::detail::Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        // correlated columns make coordinate descent take many sweeps
        auto d = random_problem(rng, 25, 12, 2.0);
        for (std::size_t i = 0; i < d.samples(); ++i)
            d.x(i, 1) = 0.9 * d.x(i, 0) + 0.1 * d.x(i, 1);
        std::vector<double> trace;
        fit_elastic_net(d, rng.uniform(0.001, 0.5), rng.uniform(0, 1), {1e-10, 10000, &trace});
        ASSERT_FALSE(trace.empty());
        for (std::size_t s = 1; s < trace.size(); ++s)
            EXPECT_LE(trace[s], trace[s - 1] + 1e-12 * std::max(1.0, std::abs(trace[s - 1])));
    }
}

TEST(ElasticNet, L1NormShrinksAlongPath) {
    efi::detail::Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = random_problem(rng, 40, 8, 1.0);
        const double alpha = rng.uniform(0.05, 1.0);
        const auto path = lambda_path(d, alpha, 30, 1e-3);
        double previous = -1.0;
        // path runs from large to small lambda, so |b|_1 must not shrink as we go
        for (double lam : path) {
            const double norm = l1_norm(fit_elastic_net(d, lam, alpha, {1e-12, 100000, nullptr}).coefficients);
            EXPECT_GE(norm, previous - 1e-8);
            previous = norm;
        }
    }
}

TEST(ElasticNet, RowPermutationInvariant) {
    efi::detail::Rng rng(71);
    for (int trial = 0; trial < 15; ++trial) {
        const auto d = random_problem(rng, 30, 5, 1.0);
        std::vector<std::size_t> order(d.samples());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        rng.shuffle(order);
        DesignMatrix p{d.x.select_rows(order), d.feature_names, {}};
        for (std::size_t i : order)
            p.targets.push_back(d.targets[i]);
        const double lam = rng.uniform(0.01, 0.5), alpha = rng.uniform(0, 1);
        const auto a = fit_elastic_net(d, lam, alpha, {1e-12, 100000, nullptr});
        const auto b = fit_elastic_net(p, lam, alpha, {1e-12, 100000, nullptr});
        EXPECT_NEAR(a.intercept, b.intercept, 1e-9);
        for (std::size_t j = 0; j < 5; ++j)
            EXPECT_NEAR(a.coefficients[j], b.coefficients[j], 1e-9);
    }
}

TEST(ElasticNet, BadInputs) {
    DesignMatrix d{Matrix::from_rows({{-1}, {0}, {1}}), {"x"}, {-2, 0, 2}};
    EXPECT_THROW(fit_elastic_net(d, -1.0, 0.5), DomainError);
    EXPECT_THROW(fit_elastic_net(d, 0.1, 1.5), DomainError);
    d.targets[1] = INFINITY;
    EXPECT_THROW(fit_elastic_net(d, 0.1, 0.5), NumericError);
}

TEST(ElasticNet, SweepCapFlagsModel) {
    efi::detail::Rng rng(81);
    const auto d = random_problem(rng, 20, 10, 1.0);
    const auto m = fit_elastic_net(d, 1e-6, 0.5, {1e-15, 1, nullptr});
    EXPECT_FALSE(m.converged);
    EXPECT_EQ(m.sweeps, 1);
}

TEST(LambdaPath, EndpointsAndSpacing) {
    efi::detail::Rng rng(91);
    const auto d = random_problem(rng, 30, 4, 1.0);
    const auto two = lambda_path(d, 1.0, 2, 1e-3);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_DOUBLE_EQ(two[0], lambda_max(d.x, d.targets, 1.0));
    EXPECT_NEAR(two[1], 1e-3 * two[0], 1e-15 * two[0]);
    const auto path = lambda_path(d, 0.3, 50, 1e-3);
    ASSERT_EQ(path.size(), 50u);
    const double step = std::log(path[1] / path[0]);
    for (std::size_t i = 1; i < path.size(); ++i)
        EXPECT_NEAR(std::log(path[i] / path[i - 1]), step, 1e-12);
    // the top of an alpha=1 path fits to zero
    for (double b : fit_elastic_net(d, lambda_path(d, 1.0)[0], 1.0).coefficients)
        EXPECT_EQ(b, 0.0);
    // alpha=0 borrows the alpha=0.01 scale
    EXPECT_DOUBLE_EQ(lambda_path(d, 0.0, 5)[0], lambda_max(d.x, d.targets, 0.01));
}

TEST(Folds, LeaveOneOut) {
    const auto f = assign_folds(5, 5, 9);
    std::vector<int> sorted = f;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Folds, BalancedAndSeeded) {
    const auto a = assign_folds(23, 5, 1);
    EXPECT_EQ(a, assign_folds(23, 5, 1));
    std::vector<int> count(5, 0);
    for (int v : a)
        ++count[static_cast<std::size_t>(v)];
    EXPECT_EQ(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()), 1);
    EXPECT_NE(a, assign_folds(23, 5, 2));
}

TEST(Folds, Errors) {
    EXPECT_THROW(assign_folds(10, 1, 0), DomainError);
    EXPECT_THROW(assign_folds(3, 5, 0), DataError);
}

TEST(CrossValidation, RecoversSparseSignalAmongDecoys) {
    efi::detail::Rng rng(101);
    const std::size_t n = 120, p = 51;
    Matrix raw(n, p);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) {
        names.push_back("x" + std::to_string(j + 1));
        for (std::size_t i = 0; i < n; ++i)
            raw(i, j) = rng.normal();
    }
    const auto norm = fit_normalizer(raw, names);
    DesignMatrix d{apply_normalizer(norm, raw), norm.names, {}};
    for (std::size_t i = 0; i < n; ++i)
        d.targets.push_back(3.0 * d.x(i, 0));
    CvOptions opts;
    opts.seed = 7;
    const auto [model, report] = cv_grid_search(d, opts);
    EXPECT_NEAR(model.coefficients[0], 3.0, 0.05);
    EXPECT_GE(report.best.cv_r2, 0.99);
    EXPECT_EQ(report.grid.size(), 10u * 50u);
    for (const auto& g : report.grid)
        EXPECT_GE(g.mean_rmse, report.best.mean_rmse);
}

TEST(CrossValidation, ConstantTargetGivesInterceptOnly) {
    efi::detail::Rng rng(111);
    auto d = random_problem(rng, 30, 4, 1.0);
    std::fill(d.targets.begin(), d.targets.end(), 12.5);
    const auto [model, report] = cv_grid_search(d, {});
    EXPECT_EQ(model.nonzero_count(), 0u);
    EXPECT_DOUBLE_EQ(model.intercept, 12.5);
    EXPECT_NEAR(report.best.mean_rmse, 0.0, 1e-12);
}

TEST(CrossValidation, DeterministicForSeed) {
    efi::detail::Rng rng(121);
    const auto d = random_problem(rng, 40, 6, 2.0);
    CvOptions opts;
    opts.alphas = {0.2, 0.8};
    opts.lambda_count = 12;
    opts.seed = 5;
    const auto a = cv_grid_search(d, opts);
    const auto b = cv_grid_search(d, opts);
    EXPECT_EQ(a.first.coefficients, b.first.coefficients);
    EXPECT_EQ(a.first.intercept, b.first.intercept);
    ASSERT_EQ(a.second.grid.size(), b.second.grid.size());
    for (std::size_t g = 0; g < a.second.grid.size(); ++g)
        EXPECT_EQ(a.second.grid[g].mean_rmse, b.second.grid[g].mean_rmse);
    opts.folds = 1;
    EXPECT_THROW(cv_grid_search(d, opts), DomainError);
}

TEST(Metrics, Examples) {
    const std::vector<double> y{1, 2, 3}, off{2, 1, 3};
    EXPECT_DOUBLE_EQ(rmse(std::vector<double>{0, 0}, std::vector<double>{1, -1}), 1.0);
    EXPECT_DOUBLE_EQ(rmse(y, y), 0.0);
    EXPECT_DOUBLE_EQ(r2(y, y), 1.0);
    EXPECT_DOUBLE_EQ(r2(y, std::vector<double>{2, 2, 2}), 0.0);
    EXPECT_DOUBLE_EQ(rmse(y, off), std::sqrt(2.0 / 3.0));
    EXPECT_DOUBLE_EQ(r2(std::vector<double>{4, 4}, std::vector<double>{4, 4}), 0.0);
    EXPECT_EQ(r2(std::vector<double>{4, 4}, std::vector<double>{4, 5}), kR2Sentinel);
    EXPECT_THROW(rmse(y, std::vector<double>{1}), ConsistencyError);
}

TEST(ModelIo, ExactRoundTrip) {
    efi::detail::Rng rng(131);
    TrainedModel m;
    m.attribute = "bapa";
    m.model.lambda = rng.uniform(0, 1);
    m.model.alpha = 0.3;
    m.model.intercept = rng.normal(100, 30);
    m.model.converged = false;
    m.model.sweeps = 321;
    for (int k = 0; k < 7; ++k) {
        m.normalizer.names.push_back("feat_" + std::to_string(k));
        m.normalizer.source_index.push_back(static_cast<std::size_t>(k));
        m.normalizer.means.push_back(rng.normal(0, 1e4));
        m.normalizer.stds.push_back(rng.uniform(1e-6, 1e3));
        m.model.coefficients.push_back(k == 3 ? 0.0 : rng.normal(0, 1e-3));
    }
    m.model.selected_features = m.normalizer.names;
    std::stringstream buf;
    write_model(buf, m);
    const auto back = read_model(buf, "mem");
    EXPECT_EQ(back.attribute, m.attribute);
    EXPECT_EQ(back.model.lambda, m.model.lambda);
    EXPECT_EQ(back.model.intercept, m.model.intercept);
    EXPECT_EQ(back.model.coefficients, m.model.coefficients);
    EXPECT_EQ(back.normalizer.means, m.normalizer.means);
    EXPECT_EQ(back.normalizer.stds, m.normalizer.stds);
    EXPECT_EQ(back.normalizer.names, m.normalizer.names);
    EXPECT_FALSE(back.model.converged);
    EXPECT_EQ(back.model.sweeps, 321);
    std::stringstream again;
    write_model(again, back);
    EXPECT_EQ(again.str(), buf.str());
}

TEST(ModelIo, RejectsBadDocuments) {
    std::istringstream wrong_version("efi-elastic-net-model 9\n");
    EXPECT_THROW(read_model(wrong_version, "m"), FormatError);
    std::istringstream truncated("efi-elastic-net-model 1\nattribute ht\nlambda 1\n");
    EXPECT_THROW(read_model(truncated, "m"), FormatError);
}

TEST(Training, PipelineOnRawFeatures) {
    efi::detail::Rng rng(141);
    const std::size_t n = 60;
    Matrix raw(n, 4);
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        raw(i, 0) = rng.uniform(0, 100);
        raw(i, 1) = 5.0;
        raw(i, 2) = rng.normal();
        raw(i, 3) = rng.normal();
        y.push_back(2.0 * raw(i, 0) + 10.0);
    }
    CvOptions cv;
    cv.alphas = {1.0};
    cv.lambda_count = 20;
    const auto res = train_attribute("ht", raw, {"chm", "flat", "n1", "n2"}, y, 0.5, cv);
    EXPECT_EQ(res.dropped, (std::vector<std::string>{"flat"}));
    ASSERT_FALSE(res.model.normalizer.names.empty());
    EXPECT_EQ(res.model.normalizer.names[0], "chm");
    // raw-space prediction goes through the stored normalizer
    const double x0 = 42.0;
    const double z = res.model.normalizer.transform(0, x0);
    double pred = res.model.model.intercept + res.model.model.coefficients[0] * z;
    EXPECT_NEAR(pred, 2.0 * x0 + 10.0, 0.5);
}

#pragma once

#include "efi/detail/rng.hpp"
#include "efi/error.hpp"
#include "efi/learn/elastic_net.hpp"
#include "efi/learn/matrix.hpp"
#include "efi/learn/metrics.hpp"

#include <cstdint>
#include <limits>
#include <tuple>
#include <vector>

namespace efi::learn {

struct CvOptions {
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int lambda_count = 50;
    double lambda_ratio = 1e-3;
    int folds = 5;
    std::uint64_t seed = 0;
    FitOptions fit;
};

struct GridPoint {
    double lambda = 0.0;
    double alpha = 0.0;
    double mean_rmse = 0.0; // mean of per-fold held-out RMSE
    double cv_r2 = 0.0;     // R² of the pooled out-of-fold predictions
};

struct CVReport {
    std::vector<GridPoint> grid;
    GridPoint best;
    int folds = 0;
};

// Row i of the shuffled order goes to fold i mod k.
inline std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2)
        throw DomainError("cross-validation needs k >= 2");
    if (n < static_cast<std::size_t>(k))
        throw DataError("cross-validation needs at least k = " + std::to_string(k) + " rows, got " +
                        std::to_string(n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    efi::detail::Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < n; ++i)
        fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return fold;
}

// Grid search over alphas x per-alpha lambda paths. Along each path the fits
// are warm-started from the previous lambda. The winner has the lowest mean
// held-out RMSE; ties prefer larger lambda, then larger alpha. The returned
// model is refitted on all rows at the winning point.
inline std::pair<ElasticNetModel, CVReport> cv_grid_search(const DesignMatrix& data, const CvOptions& opts) {
    data.validate();
    if (opts.alphas.empty())
        throw DomainError("alpha grid is empty");
    const std::size_t n = data.samples();
    const auto fold = assign_folds(n, opts.folds, opts.seed);
    detail::check_fit_inputs(data.x, data.targets, 0.0, opts.alphas.front());

    struct FoldData {
        Matrix train_x;
        std::vector<double> train_y;
        std::vector<std::size_t> test_rows;
    };
    std::vector<FoldData> folds(static_cast<std::size_t>(opts.folds));
    for (int f = 0; f < opts.folds; ++f) {
        std::vector<std::size_t> train;
        auto& fd = folds[static_cast<std::size_t>(f)];
        for (std::size_t i = 0; i < n; ++i) {
            if (fold[i] == f)
                fd.test_rows.push_back(i);
            else
                train.push_back(i);
        }
        fd.train_x = data.x.select_rows(train);
        for (std::size_t i : train)
            fd.train_y.push_back(data.targets[i]);
    }

    CVReport report;
    report.folds = opts.folds;
    for (double alpha : opts.alphas) {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw DomainError("alpha grid values must lie in [0, 1]");
        const auto path = lambda_path(data, alpha, opts.lambda_count, opts.lambda_ratio);
        std::vector<std::vector<double>> warm(folds.size());
        std::vector<double> fold_rmse_sum(path.size(), 0.0);
        std::vector<std::vector<double>> oof(path.size(), std::vector<double>(n, 0.0));
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto& fd = folds[f];
            std::vector<double> beta;
            for (std::size_t l = 0; l < path.size(); ++l) {
                const auto res = detail::coordinate_descent(fd.train_x, fd.train_y, path[l], alpha, beta, opts.fit);
                std::vector<double> obs, pred;
                for (std::size_t i : fd.test_rows) {
                    double yhat = res.intercept;
                    for (std::size_t j = 0; j < beta.size(); ++j)
                        yhat += beta[j] * data.x(i, j);
                    oof[l][i] = yhat;
                    obs.push_back(data.targets[i]);
                    pred.push_back(yhat);
                }
                fold_rmse_sum[l] += rmse(obs, pred);
            }
        }
        for (std::size_t l = 0; l < path.size(); ++l)
            report.grid.push_back({path[l], alpha, fold_rmse_sum[l] / static_cast<double>(folds.size()),
                                   r2(data.targets, oof[l])});
    }

    const GridPoint* best = &report.grid.front();
    for (const auto& g : report.grid) {
        if (std::tie(g.mean_rmse) < std::tie(best->mean_rmse))
            best = &g;
        else if (g.mean_rmse == best->mean_rmse &&
                 (g.lambda > best->lambda || (g.lambda == best->lambda && g.alpha > best->alpha)))
            best = &g;
    }
    report.best = *best;
    ElasticNetModel model = fit_elastic_net(data, best->lambda, best->alpha, opts.fit);
    return {std::move(model), std::move(report)};
}

} // namespace efi::learn

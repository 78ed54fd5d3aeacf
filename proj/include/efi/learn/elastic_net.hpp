#pragma once

#include "efi/error.hpp"
#include "efi/learn/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace efi::learn {

struct ElasticNetModel {
    double intercept = 0.0;
    std::vector<double> coefficients;
    double lambda = 0.0;
    double alpha = 1.0;
    std::vector<std::string> selected_features;
    bool converged = true; // false: max_sweeps reached before tol
    int sweeps = 0;

    double predict(std::span<const double> x) const {
        return intercept + detail::dot(coefficients, x);
    }
    std::size_t nonzero_count() const {
        return static_cast<std::size_t>(std::count_if(coefficients.begin(), coefficients.end(),
                                                       [](double b) { return b != 0.0; }));
    }
};

struct FitOptions {
    double tol = 1e-7;
    int max_sweeps = 10000;
    // When set, receives the objective value after every sweep.
    std::vector<double>* objective_trace = nullptr;
};

inline double soft_threshold(double z, double gamma) {
    if (z > gamma)
        return z - gamma;
    if (z < -gamma)
        return z + gamma;
    return 0.0;
}

// (1/2n)|y - b0 - Xb|² + lambda (alpha |b|_1 + (1 - alpha)/2 |b|²)
inline double elastic_net_objective(std::span<const double> residuals, std::span<const double> beta, double lambda,
                                    double alpha) {
    const double n = static_cast<double>(residuals.size());
    double l1 = 0.0, l2 = 0.0;
    for (double b : beta) {
        l1 += std::abs(b);
        l2 += b * b;
    }
    return detail::dot(residuals, residuals) / (2.0 * n) + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
}

namespace detail {

inline void check_fit_inputs(const Matrix& x, std::span<const double> y, double lambda, double alpha) {
    if (x.rows() != y.size())
        throw DimensionError("design matrix rows and target length differ");
    if (x.rows() == 0)
        throw DataError("cannot fit on zero rows");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw DomainError("lambda must be a finite value >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw DomainError("alpha must lie in [0, 1]");
    for (double v : y)
        if (!std::isfinite(v))
            throw NumericError("non-finite target value");
    for (std::size_t j = 0; j < x.cols(); ++j)
        for (double v : x.column(j))
            if (!std::isfinite(v))
                throw NumericError("non-finite value in design column " + std::to_string(j));
}

struct CoreResult {
    double intercept = 0.0;
    bool converged = false;
    int sweeps = 0;
};

// Cyclic coordinate descent starting from `beta` (warm start), which is
// updated in place. Inputs are assumed validated.
inline CoreResult coordinate_descent(const Matrix& x, std::span<const double> y, double lambda, double alpha,
                                     std::vector<double>& beta, const FitOptions& opts) {
    const std::size_t n = x.rows(), p = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    beta.resize(p, 0.0);

    std::vector<double> r(y.begin(), y.end());
    for (std::size_t j = 0; j < p; ++j)
        if (beta[j] != 0.0) {
            const auto col = x.column(j);
            for (std::size_t i = 0; i < n; ++i)
                r[i] -= col[i] * beta[j];
        }
    CoreResult res;
    res.intercept = mean(r);
    for (double& v : r)
        v -= res.intercept;

    std::vector<double> z(p);
    for (std::size_t j = 0; j < p; ++j)
        z[j] = dot(x.column(j), x.column(j)) * inv_n;

    const double l1 = lambda * alpha;
    const double l2 = lambda * (1.0 - alpha);
    double previous = elastic_net_objective(r, beta, lambda, alpha);
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double denom = z[j] + l2;
            if (denom <= 0.0) {
                beta[j] = 0.0;
                continue;
            }
            const auto col = x.column(j);
            const double rho = dot(col, r) * inv_n + z[j] * beta[j];
            const double updated = soft_threshold(rho, l1) / denom;
            const double delta = updated - beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i)
                    r[i] -= col[i] * delta;
                beta[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        const double shift = mean(r);
        if (shift != 0.0) {
            res.intercept += shift;
            for (double& v : r)
                v -= shift;
            max_change = std::max(max_change, std::abs(shift));
        }
        const double objective = elastic_net_objective(r, beta, lambda, alpha);
        assert(objective <= previous + 1e-12 * std::max(1.0, std::abs(previous)));
        previous = objective;
        if (opts.objective_trace)
            opts.objective_trace->push_back(objective);
        res.sweeps = sweep;
        if (max_change < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace detail

// X is expected to be standardized; the intercept is unpenalized.
inline ElasticNetModel fit_elastic_net(const DesignMatrix& data, double lambda, double alpha,
                                       const FitOptions& opts = {}) {
    data.validate();
    detail::check_fit_inputs(data.x, data.targets, lambda, alpha);
    ElasticNetModel m;
    m.lambda = lambda;
    m.alpha = alpha;
    m.selected_features = data.feature_names;
    const auto res = detail::coordinate_descent(data.x, data.targets, lambda, alpha, m.coefficients, opts);
    m.intercept = res.intercept;
    m.converged = res.converged;
    m.sweeps = res.sweeps;
    return m;
}

// Smallest lambda at which every coefficient is zero for this alpha
// (alpha = 0 uses the alpha = 0.01 value). Nudged upward so that
// lambda_max * alpha reproduces the solver's zero test exactly.
inline double lambda_max(const Matrix& x, std::span<const double> y, double alpha) {
    if (x.rows() == 0)
        throw DataError("lambda_max needs at least one row");
    const double a = alpha > 0.0 ? alpha : 0.01;
    const double ybar = detail::mean(y);
    std::vector<double> centred(y.begin(), y.end());
    for (double& v : centred)
        v -= ybar;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    double best = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j)
        best = std::max(best, std::abs(detail::dot(x.column(j), centred) * inv_n));
    double lam = best / a;
    while (lam * a < best)
        lam = std::nextafter(lam, std::numeric_limits<double>::infinity());
    return lam;
}

inline std::vector<double> lambda_path(const DesignMatrix& data, double alpha, int count = 50, double ratio = 1e-3) {
    data.validate();
    if (count < 2)
        throw DomainError("lambda path needs at least 2 points");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw DomainError("lambda ratio must lie in (0, 1)");
    const double top = lambda_max(data.x, data.targets, alpha);
    std::vector<double> path(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        path[static_cast<std::size_t>(i)] =
            top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(count - 1));
    return path;
}

} // namespace efi::learn

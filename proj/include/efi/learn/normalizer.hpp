#pragma once

#include "efi/error.hpp"
#include "efi/learn/matrix.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace efi::learn {

// Column standardization fitted on training rows (population std).
// Zero-variance columns are dropped and their names kept in `dropped`.
struct Normalizer {
    std::vector<std::string> names;      // retained, in source order
    std::vector<std::size_t> source_index; // column of each retained name in the fitting matrix
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::string> dropped;

    double transform(std::size_t k, double value) const { return (value - means[k]) / stds[k]; }
};

inline Normalizer fit_normalizer(const Matrix& rows, const std::vector<std::string>& names) {
    if (rows.rows() < 2)
        throw DataError("normalizer needs at least 2 rows, got " + std::to_string(rows.rows()));
    if (names.size() != rows.cols())
        throw DimensionError("feature name count does not match columns");
    Normalizer norm;
    const double n = static_cast<double>(rows.rows());
    for (std::size_t j = 0; j < rows.cols(); ++j) {
        const auto col = rows.column(j);
        double mean = 0.0;
        for (double v : col) {
            if (!std::isfinite(v))
                throw NumericError("non-finite value in feature '" + names[j] + "'");
            mean += v;
        }
        mean /= n;
        double ss = 0.0;
        for (double v : col)
            ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / n);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            norm.dropped.push_back(names[j]);
            continue;
        }
        norm.names.push_back(names[j]);
        norm.source_index.push_back(j);
        norm.means.push_back(mean);
        norm.stds.push_back(sd);
    }
    return norm;
}

// Returns the retained columns, standardized. `rows` must have the column
// layout the normalizer was fitted on.
inline Matrix apply_normalizer(const Normalizer& norm, const Matrix& rows) {
    Matrix out(rows.rows(), norm.names.size());
    for (std::size_t k = 0; k < norm.names.size(); ++k) {
        const std::size_t j = norm.source_index[k];
        if (j >= rows.cols())
            throw DimensionError("normalizer column " + norm.names[k] + " is out of range");
        const auto src = rows.column(j);
        auto dst = out.column(k);
        for (std::size_t i = 0; i < rows.rows(); ++i)
            dst[i] = norm.transform(k, src[i]);
    }
    return out;
}

} // namespace efi::learn

#pragma once

#include "efi/error.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace efi::learn {

// Dense column-major matrix; coordinate descent walks columns.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t n = rows.size();
        const std::size_t p = n ? rows.front().size() : 0;
        Matrix m(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != p)
                throw DimensionError("ragged rows: row " + std::to_string(i) + " has " +
                                     std::to_string(rows[i].size()) + " values, expected " + std::to_string(p));
            for (std::size_t j = 0; j < p; ++j)
                m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<const double> column(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
    std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> r(cols_);
        for (std::size_t j = 0; j < cols_; ++j)
            r[j] = (*this)(i, j);
        return r;
    }

    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix m(idx.size(), cols_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t k = 0; k < idx.size(); ++k)
                m(k, j) = (*this)(idx[k], j);
        return m;
    }

    Matrix select_cols(std::span<const std::size_t> idx) const {
        Matrix m(rows_, idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto src = column(idx[k]);
            auto dst = m.column(k);
            for (std::size_t i = 0; i < rows_; ++i)
                dst[i] = src[i];
        }
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct DesignMatrix {
    Matrix x;
    std::vector<std::string> feature_names;
    std::vector<double> targets;

    std::size_t samples() const { return x.rows(); }
    std::size_t features() const { return x.cols(); }

    void validate() const {
        if (feature_names.size() != x.cols())
            throw DimensionError("feature name count does not match design matrix columns");
        if (targets.size() != x.rows())
            throw DimensionError("target count does not match design matrix rows");
    }
};

namespace detail {

// Shared by the solver and the lambda path so that lambda_max comparisons
// see bit-identical sums.
inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace detail

} // namespace efi::learn

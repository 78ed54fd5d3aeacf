#pragma once

#include "efi/error.hpp"

#include <cmath>
#include <span>

namespace efi::learn {

// Returned by r2 when the target is constant but the fit is not exact.
inline constexpr double kR2Sentinel = -1.0e12;

inline void check_lengths(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw ConsistencyError("observed and predicted lengths differ");
    if (y.empty())
        throw ConsistencyError("metrics need at least one observation");
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(y.size()));
}

inline double r2(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double mean = 0.0;
    for (double v : y)
        mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0)
        return ss_res == 0.0 ? 0.0 : kR2Sentinel;
    return std::max(1.0 - ss_res / ss_tot, kR2Sentinel);
}

} // namespace efi::learn

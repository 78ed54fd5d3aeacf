#pragma once

#include "efi/error.hpp"
#include "efi/learn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace efi::learn {

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = detail::mean(a), mb = detail::mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline std::size_t selection_count(std::size_t p, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw DomainError("keep_fraction must lie in (0, 1]");
    const double raw = static_cast<double>(p) * keep_fraction;
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::clamp<std::size_t>(k, p ? 1 : 0, p);
}

struct Selection {
    std::vector<std::size_t> columns; // indices into the input, in input order
    std::vector<double> correlations; // |r| of each selected column
};

// Keeps the ceil(p * keep_fraction) columns with the largest |Pearson r| to
// the target; ties go to the lexicographically smaller feature name.
inline Selection rank_features(const DesignMatrix& x, double keep_fraction) {
    x.validate();
    const std::size_t p = x.features();
    const std::size_t keep = selection_count(p, keep_fraction);
    std::vector<double> score(p);
    for (std::size_t j = 0; j < p; ++j)
        score[j] = std::abs(pearson(x.x.column(j), x.targets));
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b])
            return score[a] > score[b];
        return x.feature_names[a] < x.feature_names[b];
    });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    Selection s;
    s.columns = order;
    for (std::size_t j : order)
        s.correlations.push_back(score[j]);
    return s;
}

inline DesignMatrix select_features(const DesignMatrix& x, double keep_fraction) {
    const Selection s = rank_features(x, keep_fraction);
    DesignMatrix out;
    out.x = x.x.select_cols(s.columns);
    for (std::size_t j : s.columns)
        out.feature_names.push_back(x.feature_names[j]);
    out.targets = x.targets;
    return out;
}

} // namespace efi::learn

#pragma once

#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/geodata/grid_frame.hpp"
#include "efi/geodata/point_cloud.hpp"
#include "efi/geodata/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace efi {

// Half-open height bins [b0,b1), [b1,b2), ..., [bk, inf).
struct StrataSpec {
    std::vector<double> boundaries{0.0, 6.0, 16.0, 32.0, 64.0, 96.0};

    void validate() const {
        if (boundaries.empty())
            throw DomainError("strata boundaries must not be empty");
        if (boundaries.front() < 0.0)
            throw DomainError("first stratum boundary must be >= 0");
        for (std::size_t i = 1; i < boundaries.size(); ++i)
            if (!(boundaries[i] > boundaries[i - 1]))
                throw DomainError("strata boundaries must be strictly ascending");
    }
    std::size_t bin_count() const { return boundaries.size(); }
};

struct FeatureConfig {
    StrataSpec strata;
    std::vector<double> percentiles{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95};
    double cover_threshold = 6.0; // ft
    std::vector<std::string> bands{"nir", "red", "blue"};
};

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

// Per-cell feature rows sharing one name list.
struct FeatureTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return i;
        return std::nullopt;
    }
    FeatureVector row_vector(std::size_t i) const { return {names, rows.at(i)}; }
};

// ---------------------------------------------------------------------------
// Terrain and canopy surfaces

inline RasterGrid build_dtm(const PointCloud& cloud, const GridFrame& frame) {
    frame.validate();
    const double empty = std::numeric_limits<double>::quiet_NaN();
    RasterGrid dtm(frame, empty, -9999.0);
    std::size_t ground = 0;
    for (const auto& p : cloud.points) {
        if (!p.is_ground())
            continue;
        const auto cell = frame.cell_of(p.x, p.y);
        if (!cell)
            continue;
        double& v = dtm.at(*cell);
        if (std::isnan(v) || p.z < v)
            v = p.z;
        ++ground;
    }
    if (ground == 0)
        throw DataError("no ground-classified points inside the DTM extent");

    // Fill holes with the mean of filled 8-neighbours, one ring per pass.
    std::vector<double> next = dtm.values;
    for (;;) {
        bool any_empty = false;
        bool progressed = false;
        for (int r = 0; r < frame.nrows; ++r) {
            for (int c = 0; c < frame.ncols; ++c) {
                if (!std::isnan(dtm.at(r, c)))
                    continue;
                any_empty = true;
                double sum = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!dr && !dc)
                            continue;
                        const CellIndex nb{r + dr, c + dc};
                        if (!frame.contains(nb) || std::isnan(dtm.at(nb)))
                            continue;
                        sum += dtm.at(nb);
                        ++n;
                    }
                if (n) {
                    next[frame.linear({r, c})] = sum / n;
                    progressed = true;
                }
            }
        }
        if (!any_empty)
            break;
        if (!progressed)
            throw DataError("DTM hole filling stalled");
        dtm.values = next;
    }
    return dtm;
}

// Cells with no returns are 0; heights below the terrain floor at 0.
inline RasterGrid build_chm(const PointCloud& cloud, const RasterGrid& dtm) {
    dtm.validate();
    RasterGrid chm(dtm.frame, 0.0, dtm.nodata);
    for (const auto& p : cloud.points) {
        const auto cell = dtm.frame.cell_of(p.x, p.y);
        if (!cell)
            continue;
        const double h = p.z - dtm.at(*cell);
        double& v = chm.at(*cell);
        v = std::max(v, h);
    }
    return chm;
}

inline PointCloud normalize_heights(const PointCloud& cloud, const RasterGrid& dtm) {
    dtm.validate();
    PointCloud out = cloud;
    for (auto& p : out.points) {
        const auto cell = dtm.frame.cell_of(p.x, p.y);
        if (!cell)
            throw ExtentError("point (" + detail::format_double(p.x) + ", " + detail::format_double(p.y) +
                              ") lies outside the DTM");
        p.z = std::max(0.0, p.z - dtm.at(*cell));
    }
    return out;
}

// Slope in degrees from central differences, one-sided on the borders.
inline RasterGrid slope_grid(const RasterGrid& dtm) {
    dtm.validate();
    const GridFrame& f = dtm.frame;
    if (f.nrows < 2 || f.ncols < 2)
        throw DomainError("slope requires a DTM of at least 2x2 cells");
    RasterGrid out(f, 0.0, dtm.nodata);
    auto diff = [&](int r0, int c0, int r1, int c1, double span) { return (dtm.at(r1, c1) - dtm.at(r0, c0)) / span; };
    for (int r = 0; r < f.nrows; ++r) {
        for (int c = 0; c < f.ncols; ++c) {
            const int cl = std::max(c - 1, 0), cr = std::min(c + 1, f.ncols - 1);
            const int rl = std::max(r - 1, 0), rh = std::min(r + 1, f.nrows - 1);
            const double dzdx = diff(r, cl, r, cr, (cr - cl) * f.cellsize);
            const double dzdy = diff(rl, c, rh, c, (rh - rl) * f.cellsize);
            out.at(r, c) = std::atan(std::sqrt(dzdx * dzdx + dzdy * dzdy)) * 180.0 / std::numbers::pi;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point statistics

inline std::vector<double> strata_densities(std::span<const double> heights, const StrataSpec& spec) {
    spec.validate();
    const auto& b = spec.boundaries;
    std::vector<double> counts(b.size(), 0.0);
    if (heights.empty())
        return counts;
    for (double h : heights) {
        // Heights below the first boundary fall into the first bin.
        const auto it = std::upper_bound(b.begin(), b.end(), h);
        const std::size_t bin = it == b.begin() ? 0 : static_cast<std::size_t>(it - b.begin()) - 1;
        counts[bin] += 1.0;
    }
    for (double& c : counts)
        c /= static_cast<double>(heights.size());
    return counts;
}

// Linear interpolation between closest ranks over already sorted input.
inline double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty())
        throw DomainError("percentile of an empty list");
    if (!(p >= 0.0 && p <= 100.0))
        throw DomainError("percentile must lie in [0, 100]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double height_percentile(std::span<const double> heights, double p) {
    std::vector<double> sorted(heights.begin(), heights.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p);
}

// Percent of first returns above the threshold height.
inline double cover_proxy(std::span<const double> heights, std::span<const char> first_return, double threshold) {
    if (heights.size() != first_return.size())
        throw ConsistencyError("heights and first-return flags differ in length");
    std::size_t first = 0, above = 0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (!first_return[i])
            continue;
        ++first;
        if (heights[i] > threshold)
            ++above;
    }
    return first ? 100.0 * static_cast<double>(above) / static_cast<double>(first) : 0.0;
}

// ---------------------------------------------------------------------------
// Spectral indices

inline double ndvi(double nir, double red) {
    const double s = nir + red;
    return s == 0.0 ? 0.0 : (nir - red) / s;
}

inline double evi(double nir, double red, double blue) {
    double d = nir + 6.0 * red - 7.5 * blue + 1.0;
    if (std::abs(d) < 1e-6)
        d = d < 0.0 ? -1e-6 : 1e-6;
    return 2.5 * (nir - red) / d;
}

// ---------------------------------------------------------------------------
// Per-cell assembly

// Everything that falls inside one analysis cell. Band samples are aligned
// across bands (band_values[b][i] are the same pixel for every b).
struct CellCohort {
    std::vector<double> heights; // normalized, all returns
    std::vector<char> first_return;
    std::vector<std::vector<double>> band_values;
    std::vector<double> elevations;
    std::vector<double> slopes;
};

namespace detail {

inline std::string percentile_label(double p) {
    if (p == std::floor(p)) {
        const int v = static_cast<int>(p);
        return (v < 10 ? "h_p0" : "h_p") + std::to_string(v);
    }
    return "h_p" + format_double(p);
}

inline std::string boundary_label(double b) {
    return b == std::floor(b) && std::abs(b) < 1e15 ? std::to_string(static_cast<long long>(b)) : format_double(b);
}

inline void mean_std(std::span<const double> v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty())
        return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
}

inline int band_index(const FeatureConfig& cfg, const char* name) {
    for (std::size_t i = 0; i < cfg.bands.size(); ++i)
        if (cfg.bands[i] == name)
            return static_cast<int>(i);
    return -1;
}

} // namespace detail

inline std::vector<std::string> feature_names(const FeatureConfig& cfg) {
    cfg.strata.validate();
    std::vector<std::string> names{"h_mean", "h_std", "h_max"};
    for (double p : cfg.percentiles)
        names.push_back(detail::percentile_label(p));
    const auto& b = cfg.strata.boundaries;
    for (std::size_t i = 0; i < b.size(); ++i)
        names.push_back("dens_" + detail::boundary_label(b[i]) + "_" +
                        (i + 1 < b.size() ? detail::boundary_label(b[i + 1]) : std::string("inf")));
    names.push_back("cover");
    for (const auto& band : cfg.bands) {
        names.push_back(band + "_mean");
        names.push_back(band + "_std");
    }
    const int nir = detail::band_index(cfg, "nir"), red = detail::band_index(cfg, "red"),
              blue = detail::band_index(cfg, "blue");
    if (nir >= 0 && red >= 0)
        names.push_back("ndvi_mean");
    if (nir >= 0 && red >= 0 && blue >= 0)
        names.push_back("evi_mean");
    names.push_back("elev_mean");
    names.push_back("slope_mean");
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j])
                throw ConsistencyError("duplicate feature name '" + names[i] + "'");
    return names;
}

inline std::vector<double> assemble_feature_values(const CellCohort& cell, const FeatureConfig& cfg) {
    std::vector<double> v;
    v.reserve(64);
    std::vector<double> sorted = cell.heights;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0, sd = 0.0;
    detail::mean_std(sorted, mean, sd);
    v.push_back(mean);
    v.push_back(sd);
    v.push_back(sorted.empty() ? 0.0 : sorted.back());
    for (double p : cfg.percentiles)
        v.push_back(sorted.empty() ? 0.0 : percentile_sorted(sorted, p));
    for (double d : strata_densities(cell.heights, cfg.strata))
        v.push_back(d);
    v.push_back(cover_proxy(cell.heights, cell.first_return, cfg.cover_threshold));

    if (!cell.band_values.empty() && cell.band_values.size() != cfg.bands.size())
        throw ConsistencyError("cell cohort band count does not match the band list");
    for (std::size_t b = 0; b < cfg.bands.size(); ++b) {
        if (cell.band_values.empty()) {
            v.push_back(0.0);
            v.push_back(0.0);
            continue;
        }
        detail::mean_std(cell.band_values[b], mean, sd);
        v.push_back(mean);
        v.push_back(sd);
    }
    const int nir = detail::band_index(cfg, "nir"), red = detail::band_index(cfg, "red"),
              blue = detail::band_index(cfg, "blue");
    const std::size_t pixels = cell.band_values.empty() ? 0 : cell.band_values.front().size();
    if (nir >= 0 && red >= 0) {
        double s = 0.0;
        for (std::size_t i = 0; i < pixels; ++i)
            s += ndvi(cell.band_values[static_cast<std::size_t>(nir)][i], cell.band_values[static_cast<std::size_t>(red)][i]);
        v.push_back(pixels ? s / static_cast<double>(pixels) : 0.0);
    }
    if (nir >= 0 && red >= 0 && blue >= 0) {
        double s = 0.0;
        for (std::size_t i = 0; i < pixels; ++i)
            s += evi(cell.band_values[static_cast<std::size_t>(nir)][i], cell.band_values[static_cast<std::size_t>(red)][i],
                     cell.band_values[static_cast<std::size_t>(blue)][i]);
        v.push_back(pixels ? s / static_cast<double>(pixels) : 0.0);
    }
    detail::mean_std(cell.elevations, mean, sd);
    v.push_back(mean);
    detail::mean_std(cell.slopes, mean, sd);
    v.push_back(mean);
    return v;
}

inline FeatureVector assemble_features(const CellCohort& cell, const FeatureConfig& cfg) {
    return {feature_names(cfg), assemble_feature_values(cell, cfg)};
}

// Bins normalized returns, band pixels and terrain cells into the analysis
// cells of `cells`. Raster samples are assigned by their centre point;
// anything outside the frame is ignored.
inline std::vector<CellCohort> build_cell_cohorts(const PointCloud& normalized, const GridFrame& cells,
                                                  const BandSet& bands, const std::vector<std::string>& band_list,
                                                  const RasterGrid& dtm, const RasterGrid& slope) {
    cells.validate();
    std::vector<CellCohort> out(cells.cell_count());
    for (const auto& p : normalized.points) {
        const auto c = cells.cell_of(p.x, p.y);
        if (!c)
            continue;
        auto& cohort = out[cells.linear(*c)];
        cohort.heights.push_back(p.z);
        cohort.first_return.push_back(p.is_first_return() ? 1 : 0);
    }
    std::vector<const RasterGrid*> grids;
    for (const auto& name : band_list) {
        const RasterGrid* g = bands.find(name);
        if (!g)
            throw ConsistencyError("band '" + name + "' not loaded");
        grids.push_back(g);
    }
    if (!grids.empty()) {
        for (auto& cohort : out)
            cohort.band_values.resize(grids.size());
        const GridFrame& bf = grids.front()->frame;
        for (int r = 0; r < bf.nrows; ++r)
            for (int c = 0; c < bf.ncols; ++c) {
                bool valid = true;
                for (const auto* g : grids)
                    valid = valid && !g->is_nodata(g->at(r, c));
                if (!valid)
                    continue;
                const auto cell = cells.cell_of(bf.center_x(c), bf.center_y(r));
                if (!cell)
                    continue;
                auto& cohort = out[cells.linear(*cell)];
                for (std::size_t b = 0; b < grids.size(); ++b)
                    cohort.band_values[b].push_back(grids[b]->at(r, c));
            }
    }
    auto bin_raster = [&](const RasterGrid& g, auto member) {
        for (int r = 0; r < g.nrows(); ++r)
            for (int c = 0; c < g.ncols(); ++c) {
                if (g.is_nodata(g.at(r, c)))
                    continue;
                const auto cell = cells.cell_of(g.frame.center_x(c), g.frame.center_y(r));
                if (cell)
                    (out[cells.linear(*cell)].*member).push_back(g.at(r, c));
            }
    };
    bin_raster(dtm, &CellCohort::elevations);
    bin_raster(slope, &CellCohort::slopes);
    return out;
}

inline FeatureTable assemble_feature_table(const std::vector<CellCohort>& cohorts, const FeatureConfig& cfg) {
    FeatureTable t;
    t.names = feature_names(cfg);
    t.rows.reserve(cohorts.size());
    for (const auto& c : cohorts)
        t.rows.push_back(assemble_feature_values(c, cfg));
    return t;
}

} // namespace efi

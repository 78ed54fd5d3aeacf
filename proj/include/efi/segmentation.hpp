#pragma once

#include "efi/error.hpp"
#include "efi/geodata/grid_frame.hpp"
#include "efi/units.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace efi {

struct Extent {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double acres() const { return width() * height() / kSquareFeetPerAcre; }
    friend bool operator==(const Extent&, const Extent&) = default;
};

// Tier-1 analysis cells: square cells anchored at the extent's lower-left
// corner, with the last row/column snapped outward to cover the extent.
struct Tessellation {
    Extent extent;
    double cellsize = 0.0;
    int nrows = 0;
    int ncols = 0;

    GridFrame frame() const { return {ncols, nrows, extent.xmin, extent.ymin, cellsize}; }
    std::size_t cell_count() const { return static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols); }
    double cell_acres() const { return cell_area(cellsize); }
};

inline Tessellation tessellate(const Extent& extent, double analysis_unit_area_ac) {
    if (!(analysis_unit_area_ac > 0.0))
        throw DomainError("analysis unit area must be positive");
    if (!(extent.width() > 0.0) || !(extent.height() > 0.0) || !std::isfinite(extent.width()) ||
        !std::isfinite(extent.height()))
        throw DomainError("extent has no area");
    Tessellation t;
    t.extent = extent;
    t.cellsize = std::sqrt(analysis_unit_area_ac * kSquareFeetPerAcre);
    // Tolerate rounding noise so an extent that is an exact multiple of the
    // cell side does not gain a sliver column.
    auto count = [&](double span) {
        const double n = span / t.cellsize;
        return std::max(1, static_cast<int>(std::ceil(n - 1e-9 * std::max(1.0, n))));
    };
    t.ncols = count(extent.width());
    t.nrows = count(extent.height());
    return t;
}

struct Region {
    int id = 0;
    std::vector<CellIndex> members; // sorted by (row, col)
    std::array<double, 2> centroid_features{0.0, 0.0}; // mean (CHM, NDVI)
    double area = 0.0; // acres
};

// Per-cell area in acres, with edge cells clipped to the extent so the
// cells sum to the extent's area.
inline std::vector<double> clipped_cell_areas(const Tessellation& tess) {
    const auto f = tess.frame();
    std::vector<double> widths(static_cast<std::size_t>(tess.ncols)), heights(static_cast<std::size_t>(tess.nrows));
    for (int c = 0; c < tess.ncols; ++c)
        widths[static_cast<std::size_t>(c)] =
            std::min(tess.extent.xmax, f.x_origin + (c + 1) * tess.cellsize) - (f.x_origin + c * tess.cellsize);
    for (int r = 0; r < tess.nrows; ++r)
        heights[static_cast<std::size_t>(r)] =
            std::min(tess.extent.ymax, f.y_origin + (r + 1) * tess.cellsize) - (f.y_origin + r * tess.cellsize);
    std::vector<double> out;
    out.reserve(tess.cell_count());
    for (int r = 0; r < tess.nrows; ++r)
        for (int c = 0; c < tess.ncols; ++c)
            out.push_back(widths[static_cast<std::size_t>(c)] * heights[static_cast<std::size_t>(r)] /
                          kSquareFeetPerAcre);
    return out;
}

inline double region_area(const Region& region, const Tessellation& tess) {
    if (region.members.empty())
        throw DomainError("region " + std::to_string(region.id) + " has no members");
    return static_cast<double>(region.members.size()) * tess.cell_acres();
}

struct SegmentationOptions {
    double target_area = 0.5;               // acres, mean reporting-unit size
    std::array<double, 2> channel_weights{1.0, 1.0}; // applied after z-scoring
};

namespace detail {

inline std::vector<double> zscore(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / n);
    std::vector<double> out(v.size(), 0.0);
    if (sd > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = (v[i] - mean) / sd;
    return out;
}

} // namespace detail

// Greedy agglomeration of 4-adjacent regions. Cost of merging a and b is
// (area_a + area_b) * |centroid_a - centroid_b|² on z-scored channels; the
// cheapest pair merges first, ties going to the lexicographically smallest
// (id, id) pair. Merging stops once the mean region area reaches the target.
inline std::vector<Region> grow_reporting_units(const Tessellation& tess, std::span<const double> chm_means,
                                                std::span<const double> ndvi_means,
                                                const SegmentationOptions& opts = {}) {
    const std::size_t n = tess.cell_count();
    if (chm_means.size() != n || ndvi_means.size() != n)
        throw DimensionError("per-cell feature arrays must have one value per analysis cell");
    if (!(opts.target_area > 0.0))
        throw DomainError("reporting target area must be positive");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(chm_means[i]) || !std::isfinite(ndvi_means[i]))
            throw NumericError("non-finite segmentation feature at cell " + std::to_string(i));

    const GridFrame frame = tess.frame();
    const double cell_ac = tess.cell_acres();
    const auto z0 = detail::zscore(chm_means);
    const auto z1 = detail::zscore(ndvi_means);

    // Region state indexed by id; a region keeps the smallest id of its parts.
    std::vector<std::array<double, 2>> sum(n);
    std::vector<std::size_t> count(n, 1);
    std::vector<std::uint32_t> version(n, 0);
    std::vector<int> parent(n, -1); // -1 while alive
    std::vector<std::vector<int>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i) {
        sum[i] = {opts.channel_weights[0] * z0[i], opts.channel_weights[1] * z1[i]};
        const CellIndex c = frame.cell_at(i);
        const CellIndex nb[4] = {{c.row - 1, c.col}, {c.row, c.col - 1}, {c.row, c.col + 1}, {c.row + 1, c.col}};
        for (const auto& k : nb)
            if (frame.contains(k))
                neighbours[i].push_back(static_cast<int>(frame.linear(k)));
    }

    struct Candidate {
        double cost;
        int a, b;
        std::uint32_t va, vb;
        bool operator>(const Candidate& o) const { return std::tie(cost, a, b) > std::tie(o.cost, o.a, o.b); }
    };
    auto cost_of = [&](int a, int b) {
        const double ca = static_cast<double>(count[static_cast<std::size_t>(a)]);
        const double cb = static_cast<double>(count[static_cast<std::size_t>(b)]);
        const double d0 = sum[static_cast<std::size_t>(a)][0] / ca - sum[static_cast<std::size_t>(b)][0] / cb;
        const double d1 = sum[static_cast<std::size_t>(a)][1] / ca - sum[static_cast<std::size_t>(b)][1] / cb;
        return (ca + cb) * cell_ac * (d0 * d0 + d1 * d1);
    };
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
    auto push = [&](int a, int b) {
        if (a > b)
            std::swap(a, b);
        queue.push({cost_of(a, b), a, b, version[static_cast<std::size_t>(a)], version[static_cast<std::size_t>(b)]});
    };
    for (std::size_t i = 0; i < n; ++i)
        for (int j : neighbours[i])
            if (static_cast<int>(i) < j)
                push(static_cast<int>(i), j);

    const double total_area = static_cast<double>(n) * cell_ac;
    std::size_t regions = n;
    while (regions > 1 && total_area / static_cast<double>(regions) < opts.target_area && !queue.empty()) {
        const Candidate top = queue.top();
        queue.pop();
        const auto ua = static_cast<std::size_t>(top.a), ub = static_cast<std::size_t>(top.b);
        if (parent[ua] != -1 || parent[ub] != -1 || version[ua] != top.va || version[ub] != top.vb)
            continue;
        // b is absorbed into a (a < b).
        parent[ub] = top.a;
        sum[ua][0] += sum[ub][0];
        sum[ua][1] += sum[ub][1];
        count[ua] += count[ub];
        ++version[ua];
        std::vector<int> merged;
        merged.reserve(neighbours[ua].size() + neighbours[ub].size());
        for (int k : neighbours[ua])
            if (k != top.b)
                merged.push_back(k);
        for (int k : neighbours[ub])
            if (k != top.a)
                merged.push_back(k);
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        for (int k : neighbours[ub]) {
            if (k == top.a)
                continue;
            auto& list = neighbours[static_cast<std::size_t>(k)];
            list.erase(std::remove(list.begin(), list.end(), top.b), list.end());
            if (std::find(list.begin(), list.end(), top.a) == list.end())
                list.push_back(top.a);
        }
        neighbours[ua] = std::move(merged);
        neighbours[ub].clear();
        for (int k : neighbours[ua])
            push(top.a, k);
        --regions;
    }

    // Resolve each cell to its surviving root and emit regions in order of
    // their first (row-major) cell.
    auto root = [&](std::size_t i) {
        while (parent[i] != -1)
            i = static_cast<std::size_t>(parent[i]);
        return i;
    };
    std::vector<int> region_of_root(n, -1);
    std::vector<Region> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = root(i);
        if (region_of_root[r] < 0) {
            region_of_root[r] = static_cast<int>(out.size());
            Region reg;
            reg.id = static_cast<int>(out.size());
            out.push_back(std::move(reg));
        }
        out[static_cast<std::size_t>(region_of_root[r])].members.push_back(frame.cell_at(i));
    }
    for (auto& reg : out) {
        double c0 = 0.0, c1 = 0.0;
        for (const auto& c : reg.members) {
            c0 += chm_means[frame.linear(c)];
            c1 += ndvi_means[frame.linear(c)];
        }
        const double m = static_cast<double>(reg.members.size());
        reg.centroid_features = {c0 / m, c1 / m};
        reg.area = region_area(reg, tess);
    }
    return out;
}

// Region id of every analysis cell; throws unless regions partition the grid.
inline std::vector<int> region_index(const std::vector<Region>& regions, std::size_t cell_count,
                                     const GridFrame& frame) {
    std::vector<int> owner(cell_count, -1);
    for (std::size_t r = 0; r < regions.size(); ++r)
        for (const auto& c : regions[r].members) {
            if (!frame.contains(c))
                throw PartitionError("region " + std::to_string(regions[r].id) + " references a cell outside the grid");
            int& o = owner[frame.linear(c)];
            if (o != -1)
                throw PartitionError("cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                                     ") belongs to more than one region");
            o = static_cast<int>(r);
        }
    for (std::size_t i = 0; i < cell_count; ++i)
        if (owner[i] == -1) {
            const auto c = frame.cell_at(i);
            throw PartitionError("cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                                 ") belongs to no region");
        }
    return owner;
}

} // namespace efi

#pragma once

#include "efi/attributes.hpp"
#include "efi/detail/rng.hpp"
#include "efi/error.hpp"
#include "efi/geodata/point_cloud.hpp"
#include "efi/geodata/raster.hpp"
#include "efi/plots.hpp"
#include "efi/segmentation.hpp"
#include "efi/units.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

namespace efi::synth {

struct StandPatch {
    Extent region;
    double stems_per_acre = 0.0;
    double dbh_mean = 12.0; // in
    double dbh_std = 3.0;
    double height_intercept = 20.0; // height = intercept + slope * dbh (ft)
    double height_slope = 3.5;
    double softwood_fraction = 0.5;
    double snag_fraction = 0.0;
};

struct SceneSpec {
    Extent extent{0.0, 0.0, 3000.0, 3000.0};
    std::vector<StandPatch> patches;
    double pulse_density = 0.02;          // pulses per ft²
    std::array<double, 3> terrain{0.0, 0.0, 1000.0}; // z = a x + b y + c
    double noise_std = 0.3;               // ft, on every return
    std::uint64_t seed = 1;
    int plot_count = 60;
    double plot_radius = 48.07;            // ft; ~1/6 acre footprint
    double band_cellsize = 30.0;           // ft
    double crown_radius_base = 4.0;        // crown radius = base + per_ft * height
    double crown_radius_per_ft = 0.1;
    double crown_depth_fraction = 0.6;     // paraboloid depth / tree height
    double ground_penetration = 0.5;       // chance of a ground return under a crown hit

    void validate() const {
        if (!(extent.width() > 0.0 && extent.height() > 0.0))
            throw DomainError("scene extent has no area");
        if (!(pulse_density > 0.0))
            throw DomainError("pulse density must be positive");
        if (noise_std < 0.0 || plot_count < 0 || !(plot_radius > 0.0) || !(band_cellsize > 0.0))
            throw DomainError("invalid scene sampling parameters");
        for (const auto& p : patches) {
            if (p.stems_per_acre < 0.0 || p.dbh_std < 0.0 || p.dbh_mean < 0.0)
                throw DomainError("stand densities and diameters must be nonnegative");
            if (p.softwood_fraction < 0.0 || p.softwood_fraction > 1.0 || p.snag_fraction < 0.0 ||
                p.snag_fraction > 1.0)
                throw DomainError("stand fractions must lie in [0, 1]");
            if (!(p.region.width() > 0.0 && p.region.height() > 0.0))
                throw DomainError("stand patch has no area");
        }
    }
};

inline constexpr int kSoftwoodSpecies = 122; // ponderosa pine
inline constexpr int kHardwoodSpecies = 818; // California black oak
inline constexpr int kVegetationClass = 5;

struct SyntheticTree {
    double x = 0.0;
    double y = 0.0;
    int patch = 0;
    int status = kLiveStatus;
    int species_code = kSoftwoodSpecies;
    double dbh = 0.0;
    double height = 0.0;
    double crown_radius = 0.0; // 0 for snags
    double crown_depth = 0.0;
    double carbon_ag = 0.0; // lb
};

struct PatchTruth {
    Extent region;
    AttributeVector attributes;
};

struct Scene {
    SceneSpec spec;
    std::vector<SyntheticTree> trees;
    PointCloud cloud;
    BandSet bands;
    std::vector<PlotData> plots;
    std::vector<PatchTruth> truth;
};

// Above-ground carbon per stem: half of a softwood biomass allometry
// (kg from dbh in cm), in pounds.
inline double carbon_pounds(double dbh_in) {
    if (dbh_in <= 0.0)
        return 0.0;
    const double dbh_cm = dbh_in * 2.54;
    const double biomass_kg = std::exp(-2.5356 + 2.4349 * std::log(dbh_cm));
    return 0.5 * biomass_kg * 2.20462;
}

namespace detail {

inline std::uint64_t mix(std::uint64_t h, double v) { return efi::detail::splitmix64(h ^ std::bit_cast<std::uint64_t>(v)); }

// Depends on the stand parameters and patch size but not on its position,
// so identical patches produce identical stands.
inline std::uint64_t patch_seed(std::uint64_t seed, const StandPatch& p) {
    std::uint64_t h = efi::detail::sub_seed(seed, "synth.patch");
    for (double v : {p.region.width(), p.region.height(), p.stems_per_acre, p.dbh_mean, p.dbh_std,
                     p.height_intercept, p.height_slope, p.softwood_fraction, p.snag_fraction})
        h = mix(h, v);
    return h;
}

// Uniform bucket grid over live crowns for surface and coverage queries.
class CrownIndex {
public:
    CrownIndex(const std::vector<SyntheticTree>& trees, const Extent& extent) : trees_(trees), extent_(extent) {
        double max_r = 0.0;
        for (const auto& t : trees)
            max_r = std::max(max_r, t.crown_radius);
        bucket_ = std::max(max_r, 1.0);
        nx_ = std::max(1, static_cast<int>(std::ceil(extent.width() / bucket_)));
        ny_ = std::max(1, static_cast<int>(std::ceil(extent.height() / bucket_)));
        std::vector<std::size_t> counts(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_) + 1, 0);
        for (std::size_t i = 0; i < trees.size(); ++i)
            if (trees[i].crown_radius > 0.0)
                ++counts[bucket_of(trees[i].x, trees[i].y) + 1];
        for (std::size_t b = 1; b < counts.size(); ++b)
            counts[b] += counts[b - 1];
        start_ = counts;
        order_.resize(counts.back());
        for (std::size_t i = 0; i < trees.size(); ++i)
            if (trees[i].crown_radius > 0.0)
                order_[counts[bucket_of(trees[i].x, trees[i].y)]++] = i;
    }

    // Highest crown surface height above ground at (x, y), or a negative
    // value when no crown covers the point.
    double surface(double x, double y) const {
        double best = -1.0;
        visit(x, y, [&](const SyntheticTree& t) {
            const double dx = x - t.x, dy = y - t.y;
            const double r2 = dx * dx + dy * dy, R2 = t.crown_radius * t.crown_radius;
            if (r2 <= R2)
                best = std::max(best, t.height - t.crown_depth * r2 / R2);
        });
        return best;
    }

    bool covered(double x, double y) const { return surface(x, y) >= 0.0; }

private:
    std::size_t bucket_of(double x, double y) const {
        int bx = std::clamp(static_cast<int>(std::floor((x - extent_.xmin) / bucket_)), 0, nx_ - 1);
        int by = std::clamp(static_cast<int>(std::floor((y - extent_.ymin) / bucket_)), 0, ny_ - 1);
        return static_cast<std::size_t>(by) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(bx);
    }

    template <typename F>
    void visit(double x, double y, F&& f) const {
        const int bx = static_cast<int>(std::floor((x - extent_.xmin) / bucket_));
        const int by = static_cast<int>(std::floor((y - extent_.ymin) / bucket_));
        for (int j = std::max(by - 1, 0); j <= std::min(by + 1, ny_ - 1); ++j)
            for (int i = std::max(bx - 1, 0); i <= std::min(bx + 1, nx_ - 1); ++i) {
                const std::size_t b = static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
                                      static_cast<std::size_t>(i);
                for (std::size_t k = start_[b]; k < start_[b + 1]; ++k)
                    f(trees_[order_[k]]);
            }
    }

    const std::vector<SyntheticTree>& trees_;
    Extent extent_;
    double bucket_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> order_;
};

// Percent of a regular sample lattice (spacing `step`) inside live crowns,
// restricted to points accepted by `inside`.
template <typename Inside>
double crown_cover(const CrownIndex& crowns, const Extent& box, double step, Inside&& inside) {
    std::size_t total = 0, hit = 0;
    for (double y = box.ymin + 0.5 * step; y < box.ymax; y += step)
        for (double x = box.xmin + 0.5 * step; x < box.xmax; x += step) {
            if (!inside(x, y))
                continue;
            ++total;
            if (crowns.covered(x, y))
                ++hit;
        }
    return total ? 100.0 * static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

inline double ground_z(const SceneSpec& s, double x, double y) {
    return s.terrain[0] * x + s.terrain[1] * y + s.terrain[2];
}

inline int patch_of(const SceneSpec& s, double x, double y) {
    for (std::size_t i = 0; i < s.patches.size(); ++i) {
        const auto& r = s.patches[i].region;
        if (x >= r.xmin && x < r.xmax && y >= r.ymin && y < r.ymax)
            return static_cast<int>(i);
    }
    return -1;
}

} // namespace detail

inline std::vector<SyntheticTree> generate_trees(const SceneSpec& spec) {
    std::vector<SyntheticTree> trees;
    for (std::size_t pi = 0; pi < spec.patches.size(); ++pi) {
        const auto& p = spec.patches[pi];
        efi::detail::Rng rng(detail::patch_seed(spec.seed, p));
        const auto count = static_cast<std::size_t>(std::llround(p.stems_per_acre * p.region.acres()));
        for (std::size_t k = 0; k < count; ++k) {
            SyntheticTree t;
            t.patch = static_cast<int>(pi);
            t.x = rng.uniform(p.region.xmin, p.region.xmax);
            t.y = rng.uniform(p.region.ymin, p.region.ymax);
            t.dbh = std::max(1.0, rng.normal(p.dbh_mean, p.dbh_std));
            t.height = std::max(4.5, p.height_intercept + p.height_slope * t.dbh);
            const bool snag = rng.uniform() < p.snag_fraction;
            const bool soft = rng.uniform() < p.softwood_fraction;
            t.status = snag ? kDeadStatus : kLiveStatus;
            t.species_code = soft ? kSoftwoodSpecies : kHardwoodSpecies;
            t.carbon_ag = carbon_pounds(t.dbh);
            if (!snag) {
                t.crown_radius = spec.crown_radius_base + spec.crown_radius_per_ft * t.height;
                t.crown_depth = spec.crown_depth_fraction * t.height;
            }
            trees.push_back(t);
        }
    }
    return trees;
}

inline TreeRecord to_tree_record(const SyntheticTree& t, const std::string& plot_id, double tpa_expansion) {
    TreeRecord r;
    r.plot_id = plot_id;
    r.status = t.status;
    r.species_code = t.species_code;
    r.dbh = t.dbh;
    r.height = t.height;
    r.tpa_expansion = tpa_expansion;
    r.carbon_ag = t.carbon_ag;
    return r;
}

// Exact per-patch attributes from every tree in the patch.
inline std::vector<PatchTruth> scene_truth_table(const SceneSpec& spec, const std::vector<SyntheticTree>& trees,
                                                 double cover_step = 5.0) {
    const detail::CrownIndex crowns(trees, spec.extent);
    std::vector<PatchTruth> out;
    for (std::size_t pi = 0; pi < spec.patches.size(); ++pi) {
        const auto& region = spec.patches[pi].region;
        const double expansion = 1.0 / region.acres();
        std::vector<TreeRecord> records;
        for (const auto& t : trees)
            if (t.patch == static_cast<int>(pi))
                records.push_back(to_tree_record(t, "patch", expansion));
        PlotRecord plot;
        plot.plot_id = "patch";
        plot.measured_canopy_cover =
            detail::crown_cover(crowns, region, cover_step, [](double, double) { return true; });
        out.push_back({region, compile_plot_attributes(plot, records)});
    }
    return out;
}

inline std::vector<PatchTruth> scene_truth_table(const Scene& scene) {
    return scene_truth_table(scene.spec, scene.trees);
}

inline PointCloud simulate_lidar(const SceneSpec& spec, const detail::CrownIndex& crowns) {
    efi::detail::Rng rng(efi::detail::sub_seed(spec.seed, "synth.lidar"));
    const double step = 1.0 / std::sqrt(spec.pulse_density);
    const auto nx = static_cast<long long>(std::ceil(spec.extent.width() / step));
    const auto ny = static_cast<long long>(std::ceil(spec.extent.height() / step));
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(nx * ny * 3 / 2));
    for (long long j = 0; j < ny; ++j)
        for (long long i = 0; i < nx; ++i) {
            const double x = std::min(spec.extent.xmin + (static_cast<double>(i) + rng.uniform()) * step,
                                      spec.extent.xmax);
            const double y = std::min(spec.extent.ymin + (static_cast<double>(j) + rng.uniform()) * step,
                                      spec.extent.ymax);
            const double ground = detail::ground_z(spec, x, y);
            const double canopy = crowns.surface(x, y);
            if (canopy >= 0.0) {
                cloud.points.push_back({x, y, ground + canopy + rng.normal(0.0, spec.noise_std), 1, kVegetationClass});
                if (rng.uniform() < spec.ground_penetration)
                    cloud.points.push_back({x, y, ground + rng.normal(0.0, spec.noise_std), 2, kGroundClass});
            } else {
                cloud.points.push_back({x, y, ground + rng.normal(0.0, spec.noise_std), 1, kGroundClass});
            }
        }
    return cloud;
}

// Reflectance-like bands driven by sub-pixel crown cover: NIR rises and red
// and blue fall with cover, so NDVI increases with canopy closure.
inline BandSet simulate_bands(const SceneSpec& spec, const detail::CrownIndex& crowns) {
    efi::detail::Rng rng(efi::detail::sub_seed(spec.seed, "synth.bands"));
    GridFrame f;
    f.cellsize = spec.band_cellsize;
    f.x_origin = spec.extent.xmin;
    f.y_origin = spec.extent.ymin;
    f.ncols = std::max(1, static_cast<int>(std::ceil(spec.extent.width() / f.cellsize - 1e-9)));
    f.nrows = std::max(1, static_cast<int>(std::ceil(spec.extent.height() / f.cellsize - 1e-9)));
    RasterGrid nir(f, 0.0), red(f, 0.0), blue(f, 0.0);
    constexpr int sub = 4;
    for (int r = 0; r < f.nrows; ++r)
        for (int c = 0; c < f.ncols; ++c) {
            int hit = 0;
            for (int sj = 0; sj < sub; ++sj)
                for (int si = 0; si < sub; ++si)
                    hit += crowns.covered(f.x_origin + (c + (si + 0.5) / sub) * f.cellsize,
                                          f.y_origin + (r + (sj + 0.5) / sub) * f.cellsize);
            const double cover = static_cast<double>(hit) / (sub * sub);
            nir.at(r, c) = std::max(0.001, 0.12 + 0.30 * cover + rng.normal(0.0, 0.01));
            red.at(r, c) = std::max(0.001, 0.10 - 0.06 * cover + rng.normal(0.0, 0.004));
            blue.at(r, c) = std::max(0.001, 0.06 - 0.03 * cover + rng.normal(0.0, 0.003));
        }
    BandSet bands;
    bands.add("nir", std::move(nir));
    bands.add("red", std::move(red));
    bands.add("blue", std::move(blue));
    return bands;
}

// Circular fixed-radius plots placed round-robin across patches (or anywhere
// in the extent when there are no patches), fully inside their patch.
inline std::vector<PlotData> sample_plots(const SceneSpec& spec, const std::vector<SyntheticTree>& trees,
                                          const detail::CrownIndex& crowns) {
    efi::detail::Rng rng(efi::detail::sub_seed(spec.seed, "synth.plots"));
    const double r = spec.plot_radius;
    const double expansion = kSquareFeetPerAcre / (std::numbers::pi * r * r);
    std::vector<PlotData> plots;
    for (int k = 0; k < spec.plot_count; ++k) {
        Extent box = spec.patches.empty() ? spec.extent
                                          : spec.patches[static_cast<std::size_t>(k) % spec.patches.size()].region;
        Extent inner{box.xmin + r, box.ymin + r, box.xmax - r, box.ymax - r};
        if (!(inner.xmax > inner.xmin) || !(inner.ymax > inner.ymin))
            inner = {box.xmin, box.ymin, box.xmax, box.ymax};
        PlotData d;
        char id[32];
        std::snprintf(id, sizeof(id), "P%05d", k + 1);
        d.plot.plot_id = id;
        d.plot.x = rng.uniform(inner.xmin, inner.xmax);
        d.plot.y = rng.uniform(inner.ymin, inner.ymax);
        for (const auto& t : trees) {
            const double dx = t.x - d.plot.x, dy = t.y - d.plot.y;
            if (dx * dx + dy * dy <= r * r)
                d.trees.push_back(to_tree_record(t, d.plot.plot_id, expansion));
        }
        const Extent circle_box{d.plot.x - r, d.plot.y - r, d.plot.x + r, d.plot.y + r};
        const double px = d.plot.x, py = d.plot.y;
        d.plot.measured_canopy_cover = detail::crown_cover(crowns, circle_box, 2.0, [&](double x, double y) {
            return (x - px) * (x - px) + (y - py) * (y - py) <= r * r;
        });
        plots.push_back(std::move(d));
    }
    return plots;
}

inline Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.spec = spec;
    scene.trees = generate_trees(spec);
    const detail::CrownIndex crowns(scene.trees, spec.extent);
    scene.cloud = simulate_lidar(spec, crowns);
    scene.bands = simulate_bands(spec, crowns);
    scene.plots = sample_plots(spec, scene.trees, crowns);
    scene.truth = scene_truth_table(spec, scene.trees);
    return scene;
}

// Three contrasting stands in vertical strips: closed-canopy large conifer,
// dense young mixed, and open hardwood-leaning.
inline SceneSpec three_stand_scene(double side_ft = 9360.0, std::uint64_t seed = 1) {
    SceneSpec s;
    s.extent = {0.0, 0.0, side_ft, side_ft};
    s.seed = seed;
    s.plot_count = 120;
    s.terrain = {0.05, 0.02, 2000.0};
    const double w = side_ft / 3.0;
    StandPatch old_growth{{0.0, 0.0, w, side_ft}, 60.0, 28.0, 7.0, 20.0, 3.5, 0.9, 0.08};
    StandPatch young{{w, 0.0, 2.0 * w, side_ft}, 220.0, 10.0, 3.0, 20.0, 3.5, 0.6, 0.05};
    StandPatch open{{2.0 * w, 0.0, side_ft, side_ft}, 50.0, 18.0, 5.0, 20.0, 3.5, 0.3, 0.15};
    s.patches = {old_growth, young, open};
    return s;
}

} // namespace efi::synth

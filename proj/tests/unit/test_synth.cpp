#include "efi/features.hpp"
#include "efi/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace efi;
using namespace efi::synth;

namespace {

SceneSpec small_spec(std::uint64_t seed) {
    SceneSpec s;
    s.extent = {0, 0, 1200, 600};
    s.seed = seed;
    s.plot_count = 12;
    s.pulse_density = 0.05;
    s.terrain = {0.02, -0.01, 500};
    s.patches = {StandPatch{{0, 0, 600, 600}, 80, 20, 5, 20, 3.5, 0.7, 0.1},
                 StandPatch{{600, 0, 1200, 600}, 150, 12, 3, 20, 3.5, 0.4, 0.0}};
    return s;
}

double band_mean_in(const RasterGrid& g, const Extent& box) {
    double sum = 0.0;
    int n = 0;
    for (int r = 0; r < g.frame.nrows; ++r)
        for (int c = 0; c < g.frame.ncols; ++c) {
            const double x = g.frame.x_origin + (c + 0.5) * g.frame.cellsize;
            const double y = g.frame.y_origin + (r + 0.5) * g.frame.cellsize;
            if (x > box.xmin && x < box.xmax && y > box.ymin && y < box.ymax) {
                sum += g.at(r, c);
                ++n;
            }
        }
    return sum / n;
}

} // namespace

TEST(Synth, DeterministicForSeed) {
    const auto a = generate_scene(small_spec(9));
    const auto b = generate_scene(small_spec(9));
    EXPECT_EQ(a.cloud.points, b.cloud.points);
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t i = 0; i < a.trees.size(); ++i) {
        EXPECT_EQ(a.trees[i].x, b.trees[i].x);
        EXPECT_EQ(a.trees[i].dbh, b.trees[i].dbh);
    }
    for (std::size_t k = 0; k < a.bands.grids.size(); ++k)
        EXPECT_EQ(a.bands.grids[k].values, b.bands.grids[k].values);
    ASSERT_EQ(a.plots.size(), b.plots.size());
    for (std::size_t k = 0; k < a.plots.size(); ++k) {
        EXPECT_EQ(a.plots[k].plot.x, b.plots[k].plot.x);
        EXPECT_EQ(a.plots[k].trees.size(), b.plots[k].trees.size());
    }
    const auto c = generate_scene(small_spec(10));
    EXPECT_NE(a.cloud.points, c.cloud.points);
}

TEST(Synth, ZeroDensityIsBareGround) {
    SceneSpec s;
    s.extent = {0, 0, 400, 400};
    s.noise_std = 0.2;
    s.plot_count = 5;
    s.patches = {StandPatch{{0, 0, 400, 400}, 0.0}};
    const auto scene = generate_scene(s);
    EXPECT_TRUE(scene.trees.empty());
    ASSERT_FALSE(scene.cloud.empty());
    for (const auto& p : scene.cloud.points) {
        EXPECT_TRUE(p.is_ground());
        EXPECT_LT(std::abs(p.z - 1000.0), 6 * s.noise_std);
    }
    EXPECT_EQ(scene.truth[0].attributes, AttributeVector{});
    for (const auto& plot : scene.plots)
        EXPECT_TRUE(plot.trees.empty());
}

TEST(Synth, SingleTreeHeightRecovered) {
    SceneSpec s;
    const double side = std::sqrt(kSquareFeetPerAcre);
    s.extent = {0, 0, side, side};
    s.terrain = {0, 0, 100};
    s.noise_std = 0.1;
    s.pulse_density = 1.0;
    s.plot_count = 0;
    s.patches = {StandPatch{{0, 0, side, side}, 1.0, 20.0, 0.0, 50.0, 0.0, 1.0, 0.0}};
    const auto scene = generate_scene(s);
    ASSERT_EQ(scene.trees.size(), 1u);
    EXPECT_DOUBLE_EQ(scene.trees[0].height, 50.0);
    double top = -1e300;
    for (const auto& p : scene.cloud.points)
        top = std::max(top, p.z - 100.0);
    EXPECT_NEAR(top, 50.0, 1.0);
    // one tree of dbh 20 on one acre
    EXPECT_NEAR(scene.truth[0].attributes.bapa, 0.005454154 * 400 * 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(scene.truth[0].attributes.tpa, 1.0);
}

TEST(Synth, AllSoftwoodPatch) {
    auto s = small_spec(3);
    s.patches[0].softwood_fraction = 1.0;
    s.patches[0].snag_fraction = 0.0;
    const auto truth = scene_truth_table(generate_scene(s));
    EXPECT_GT(truth[0].attributes.bapa, 0.0);
    EXPECT_DOUBLE_EQ(truth[0].attributes.bapa_softwood, truth[0].attributes.bapa);
    EXPECT_LT(truth[1].attributes.bapa_softwood, truth[1].attributes.bapa);
}

TEST(Synth, IdenticalPatchesHaveIdenticalTruth) {
    SceneSpec s;
    s.extent = {0, 0, 800, 400};
    s.plot_count = 0;
    s.patches = {StandPatch{{0, 0, 400, 400}, 90, 15, 4}, StandPatch{{400, 0, 800, 400}, 90, 15, 4}};
    const auto truth = scene_truth_table(generate_scene(s));
    ASSERT_EQ(truth.size(), 2u);
    EXPECT_EQ(truth[0].attributes.bapa, truth[1].attributes.bapa);
    EXPECT_EQ(truth[0].attributes.ht, truth[1].attributes.ht);
    EXPECT_GT(truth[0].attributes.bapa, 0.0);
}

TEST(Synth, PlotMeansConvergeToTruth) {
    SceneSpec s;
    s.extent = {0, 0, 3000, 3000};
    s.pulse_density = 0.001;
    s.plot_count = 150;
    s.patches = {StandPatch{{0, 0, 3000, 3000}, 120, 16, 5, 20, 3.5, 0.6, 0.1}};
    const auto scene = generate_scene(s);
    double mean_bapa = 0.0;
    for (const auto& p : scene.plots)
        mean_bapa += compile_plot_attributes(p.plot, p.trees).bapa;
    mean_bapa /= static_cast<double>(scene.plots.size());
    const double truth = scene.truth[0].attributes.bapa;
    EXPECT_LT(std::abs(mean_bapa - truth) / truth, 0.10) << mean_bapa << " vs " << truth;
}

TEST(Synth, NdviIncreasesWithCover) {
    SceneSpec s;
    s.extent = {0, 0, 2400, 600};
    s.pulse_density = 0.001;
    s.plot_count = 0;
    s.patches = {StandPatch{{0, 0, 600, 600}, 150, 14, 3}, StandPatch{{600, 0, 1200, 600}, 10, 14, 3},
                 StandPatch{{1200, 0, 1800, 600}, 300, 14, 3}, StandPatch{{1800, 0, 2400, 600}, 60, 14, 3}};
    const auto scene = generate_scene(s);
    const RasterGrid& nir = *scene.bands.find("nir");
    const RasterGrid& red = *scene.bands.find("red");
    std::vector<std::pair<double, double>> cover_ndvi;
    for (const auto& t : scene.truth) {
        const double n = band_mean_in(nir, t.region), r = band_mean_in(red, t.region);
        cover_ndvi.emplace_back(t.attributes.cncvr_pct, ndvi(n, r));
    }
    std::sort(cover_ndvi.begin(), cover_ndvi.end());
    for (std::size_t i = 1; i < cover_ndvi.size(); ++i) {
        EXPECT_GT(cover_ndvi[i].first, cover_ndvi[i - 1].first);
        EXPECT_GT(cover_ndvi[i].second, cover_ndvi[i - 1].second);
    }
}

TEST(Synth, PlotTreesUseFixedRadiusExpansion) {
    const auto scene = generate_scene(small_spec(4));
    const double expansion = kSquareFeetPerAcre / (std::numbers::pi * 48.07 * 48.07);
    std::size_t seen = 0;
    for (const auto& p : scene.plots)
        for (const auto& t : p.trees) {
            EXPECT_DOUBLE_EQ(t.tpa_expansion, expansion);
            ++seen;
        }
    EXPECT_GT(seen, 0u);
}

TEST(Synth, InvalidSpecRejected) {
    auto s = small_spec(1);
    s.pulse_density = 0;
    EXPECT_THROW(generate_scene(s), DomainError);
    s = small_spec(1);
    s.patches[0].softwood_fraction = 1.5;
    EXPECT_THROW(generate_scene(s), DomainError);
}

TEST(Synth, PresetHasThreeStrips) {
    const auto s = three_stand_scene(9360, 42);
    ASSERT_EQ(s.patches.size(), 3u);
    double area = 0.0;
    for (const auto& p : s.patches)
        area += p.region.acres();
    EXPECT_NEAR(area, s.extent.acres(), 1e-9);
    EXPECT_EQ(s.plot_count, 120);
}

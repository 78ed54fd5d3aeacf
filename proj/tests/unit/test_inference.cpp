#include "efi/detail/rng.hpp"
#include "efi/inference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

using namespace efi;

namespace {

learn::TrainedModel linear_model(Attribute a, double intercept, std::vector<std::string> names,
                                 std::vector<double> coefs, std::vector<double> means = {},
                                 std::vector<double> stds = {}) {
    learn::TrainedModel m;
    m.attribute = std::string(name_of(a));
    m.model.intercept = intercept;
    m.model.coefficients = coefs;
    m.model.selected_features = names;
    m.normalizer.names = names;
    for (std::size_t k = 0; k < names.size(); ++k) {
        m.normalizer.source_index.push_back(k);
        m.normalizer.means.push_back(means.empty() ? 0.0 : means[k]);
        m.normalizer.stds.push_back(stds.empty() ? 1.0 : stds[k]);
    }
    return m;
}

std::vector<learn::TrainedModel> constant_models(double value) {
    std::vector<learn::TrainedModel> out;
    for (Attribute a : kAllAttributes)
        out.push_back(linear_model(a, value, {}, {}));
    return out;
}

// Random labelling of an r x c grid into up to k regions (not necessarily connected).
std::vector<Region> random_partition(efi::detail::Rng& rng, const GridFrame& f, int k) {
    std::vector<Region> regs(static_cast<std::size_t>(k));
    for (int r = 0; r < f.nrows; ++r)
        for (int c = 0; c < f.ncols; ++c)
            regs[rng.below(static_cast<std::uint64_t>(k))].members.push_back({r, c});
    std::erase_if(regs, [](const Region& g) { return g.members.empty(); });
    for (std::size_t i = 0; i < regs.size(); ++i)
        regs[i].id = static_cast<int>(i);
    return regs;
}

} // namespace

TEST(PredictCells, ZeroCoefficientsGiveIntercept) {
    FeatureTable t{{"a", "b"}, {{1, 2}, {3, 4}, {-5, 9}}};
    auto models = constant_models(0.0);
    models[3] = linear_model(kAllAttributes[3], 17.5, {"b"}, {0.0});
    const auto out = predict_cells(models, t);
    ASSERT_EQ(out.size(), 3u);
    for (const auto& v : out)
        EXPECT_DOUBLE_EQ(v[kAllAttributes[3]], 17.5);
}

TEST(PredictCells, LinearForm) {
    FeatureTable t{{"other", "f"}, {{100, 3}}};
    auto models = constant_models(0.0);
    models[0] = linear_model(kAllAttributes[0], 0.0, {"f"}, {2.0});
    EXPECT_DOUBLE_EQ(predict_cells(models, t)[0][kAllAttributes[0]], 6.0);
    // raw feature values go through the model's normalizer
    models[0] = linear_model(kAllAttributes[0], 1.0, {"f"}, {2.0}, {1.0}, {0.5});
    EXPECT_DOUBLE_EQ(predict_cells(models, t)[0][kAllAttributes[0]], 1.0 + 2.0 * (3.0 - 1.0) / 0.5);
}

TEST(PredictCells, EachModelUsesItsOwnSubset) {
    FeatureTable t{{"p", "q", "r"}, {{1, 10, 100}}};
    auto models = constant_models(0.0);
    models[1] = linear_model(kAllAttributes[1], 0.0, {"r", "p"}, {1.0, 1.0});
    models[2] = linear_model(kAllAttributes[2], 0.0, {"q"}, {1.0});
    const auto out = predict_cells(models, t)[0];
    EXPECT_DOUBLE_EQ(out[kAllAttributes[1]], 101.0);
    EXPECT_DOUBLE_EQ(out[kAllAttributes[2]], 10.0);
}

TEST(PredictCells, MissingFeatureNamed) {
    FeatureTable t{{"a"}, {{1}}};
    auto models = constant_models(0.0);
    models[5] = linear_model(kAllAttributes[5], 0.0, {"zq_missing"}, {1.0});
    try {
        predict_cells(models, t);
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("zq_missing"), std::string::npos);
    }
    models.pop_back();
    EXPECT_THROW(predict_cells(models, t), SchemaError);
}

TEST(Clamp, Examples) {
    AttributeVector v;
    v.cncvr_pct = 104;
    v.tpa = -3;
    v.bapa = 40;
    v.bapa_softwood = 50;
    const auto c = clamp_attributes(v);
    EXPECT_DOUBLE_EQ(c.cncvr_pct, 100);
    EXPECT_DOUBLE_EQ(c.tpa, 0);
    EXPECT_DOUBLE_EQ(c.bapa_softwood, 40);
    EXPECT_DOUBLE_EQ(c.bapa, 40);
}

TEST(Clamp, IdempotentAndPhysical) {
    efi::detail::Rng rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        AttributeVector v;
        for (Attribute a : kAllAttributes)
            v[a] = rng.uniform(-200, 300);
        const auto c = clamp_attributes(v);
        EXPECT_EQ(clamp_attributes(c), c);
        for (Attribute a : kAllAttributes)
            EXPECT_GE(c[a], 0.0);
        EXPECT_LE(c.cncvr_pct, 100.0);
        EXPECT_LE(c.bapa_softwood, c.bapa);
    }
}

TEST(Aggregate, WeightedMeanExample) {
    const GridFrame f{2, 1, 0, 0, 10};
    AttributeVector a, b;
    a.ht = 2;
    b.ht = 6;
    const std::vector<Region> regs{{0, {{0, 0}, {0, 1}}, {}, 0.4}};
    const auto u = aggregate_to_reporting({a, b}, {0.1, 0.3}, regs, f);
    ASSERT_EQ(u.size(), 1u);
    EXPECT_DOUBLE_EQ(u[0].attributes.ht, 5.0);
    EXPECT_DOUBLE_EQ(u[0].area, 0.4);
}

TEST(Aggregate, SingleCellIdentityAndEqualAreaMean) {
    const GridFrame f{3, 1, 0, 0, 10};
    std::vector<AttributeVector> cells(3);
    for (int i = 0; i < 3; ++i)
        for (Attribute k : kAllAttributes)
            cells[static_cast<std::size_t>(i)][k] = 1.5 * i + static_cast<double>(k);
    const std::vector<double> areas(3, 0.25);
    const auto solo = aggregate_to_reporting(cells, areas, {{0, {{0, 0}}, {}, 0}, {1, {{0, 1}, {0, 2}}, {}, 0}}, f);
    EXPECT_EQ(solo[0].attributes, cells[0]);
    for (Attribute k : kAllAttributes)
        EXPECT_DOUBLE_EQ(solo[1].attributes[k], (cells[1][k] + cells[2][k]) / 2.0);
}

TEST(Aggregate, ConservationAndBounds) {
    efi::detail::Rng rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        const GridFrame f{1 + static_cast<int>(rng.below(9)), 1 + static_cast<int>(rng.below(9)), 0, 0, 5};
        const std::size_t n = f.cell_count();
        std::vector<AttributeVector> cells(n);
        std::vector<double> areas(n);
        for (std::size_t i = 0; i < n; ++i) {
            areas[i] = rng.uniform(0.01, 1.0);
            for (Attribute k : kAllAttributes)
                cells[i][k] = rng.uniform(0, 500);
        }
        const auto regs = random_partition(rng, f, 1 + static_cast<int>(rng.below(6)));
        const auto units = aggregate_to_reporting(cells, areas, regs, f);
        ASSERT_EQ(units.size(), regs.size());
        for (Attribute k : kAllAttributes) {
            double cell_sum = 0.0, cell_area = 0.0, unit_sum = 0.0, unit_area = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cell_sum += areas[i] * cells[i][k];
                cell_area += areas[i];
            }
            for (const auto& u : units) {
                unit_sum += u.area * u.attributes[k];
                unit_area += u.area;
            }
            EXPECT_NEAR(unit_sum / unit_area, cell_sum / cell_area, 1e-9 * std::abs(cell_sum / cell_area));
            EXPECT_NEAR(unit_area, cell_area, 1e-9 * cell_area);
        }
        for (std::size_t r = 0; r < regs.size(); ++r)
            for (Attribute k : kAllAttributes) {
                double lo = 1e300, hi = -1e300;
                for (const auto& c : regs[r].members) {
                    lo = std::min(lo, cells[f.linear(c)][k]);
                    hi = std::max(hi, cells[f.linear(c)][k]);
                }
                EXPECT_GE(units[r].attributes[k], lo - 1e-9 * std::abs(lo));
                EXPECT_LE(units[r].attributes[k], hi + 1e-9 * std::abs(hi));
            }
    }
}

TEST(Aggregate, PartitionErrors) {
    const GridFrame f{2, 2, 0, 0, 10};
    const std::vector<AttributeVector> cells(4);
    const std::vector<double> areas(4, 0.1);
    // cell (1,1) unclaimed
    EXPECT_THROW(aggregate_to_reporting(cells, areas, {{0, {{0, 0}, {0, 1}, {1, 0}}, {}, 0}}, f), PartitionError);
    // cell (0,1) claimed twice
    EXPECT_THROW(aggregate_to_reporting(cells, areas,
                                        {{0, {{0, 0}, {0, 1}}, {}, 0}, {1, {{0, 1}, {1, 0}, {1, 1}}, {}, 0}}, f),
                 PartitionError);
    EXPECT_THROW(aggregate_to_reporting(cells, {0.1}, {{0, {{0, 0}}, {}, 0}}, f), DimensionError);
}

TEST(UnitsCsv, RoundTrip) {
    efi::detail::Rng rng(37);
    std::vector<PredictedUnit> units;
    for (int i = 0; i < 20; ++i) {
        PredictedUnit u;
        u.unit_id = i;
        u.area = rng.uniform(0.1, 2.0);
        for (Attribute k : kAllAttributes)
            u.attributes[k] = rng.uniform(0, 300);
        units.push_back(u);
    }
    const auto path = (std::filesystem::temp_directory_path() / "efi_units_roundtrip.csv").string();
    write_units_csv(path, units);
    const auto back = read_units_csv(path);
    std::filesystem::remove(path);
    ASSERT_EQ(back.size(), units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        EXPECT_EQ(back[i].unit_id, units[i].unit_id);
        EXPECT_EQ(back[i].area, units[i].area);
        EXPECT_EQ(back[i].attributes, units[i].attributes);
    }
    std::ostringstream header;
    write_units_csv(header, {});
    EXPECT_EQ(header.str(), "unit_id,area_ac,pred_bapa,pred_bapa_softwood,pred_bapa_snag,pred_ht,pred_dia,pred_tpa,"
                            "pred_cagpa,pred_cncvr_pct\n");
}

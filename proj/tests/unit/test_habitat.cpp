#include "efi/detail/rng.hpp"
#include "efi/habitat.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace efi;

namespace {

AttributeVector attrs(double cover, double tpa, double dia, double bapa, double softwood) {
    AttributeVector a;
    a.cncvr_pct = cover;
    a.tpa = tpa;
    a.dia = dia;
    a.bapa = bapa;
    a.bapa_softwood = softwood;
    return a;
}

PredictedUnit unit(int id, double area, double dia = 0.0) {
    PredictedUnit u;
    u.unit_id = id;
    u.area = area;
    u.attributes.dia = dia;
    return u;
}

// Sort-and-interpolate quartile, written independently of the library.
double q3_oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double pos = 0.75 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] + frac * (v[lo + 1] - v[lo]) : v[lo];
}

int cso_rank(CsoClass c) { return c == CsoClass::Nesting ? 2 : c == CsoClass::Foraging ? 1 : 0; }

} // namespace

TEST(DiaThreshold, Quartile) {
    EXPECT_DOUBLE_EQ(compute_dia_threshold({unit(0, 1, 10), unit(1, 1, 20), unit(2, 1, 30), unit(3, 1, 40)}), 32.5);
    EXPECT_DOUBLE_EQ(compute_dia_threshold({unit(0, 1, 7), unit(1, 5, 7), unit(2, 2, 7)}), 7.0);
    EXPECT_THROW(compute_dia_threshold({}), DomainError);
}

TEST(DiaThreshold, MatchesOracleAndIgnoresArea) {
    efi::detail::Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<PredictedUnit> units;
        std::vector<double> dia;
        const auto n = 1 + rng.below(40);
        for (std::uint64_t i = 0; i < n; ++i) {
            dia.push_back(rng.uniform(0, 40));
            units.push_back(unit(static_cast<int>(i), rng.uniform(0.1, 5), dia.back()));
        }
        EXPECT_NEAR(compute_dia_threshold(units), q3_oracle(dia), 1e-12);
        for (auto& u : units)
            u.area = 1.0;
        EXPECT_NEAR(compute_dia_threshold(units), q3_oracle(dia), 1e-12);
    }
}

TEST(ClassifyCso, TableExamples) {
    const HabitatThresholds th;
    EXPECT_EQ(classify_cso(attrs(65, 12, 26, 120, 80), th), CsoClass::Nesting);
    EXPECT_EQ(classify_cso(attrs(45, 12, 26, 120, 80), th), CsoClass::Foraging);
    EXPECT_EQ(classify_cso(attrs(65, 12, 26, 120, 60), th), CsoClass::Unlikely);
    EXPECT_EQ(classify_cso(attrs(40, 12, 26, 120, 80), th), CsoClass::Unlikely);
    EXPECT_EQ(classify_cso(attrs(65, 9, 26, 120, 80), th), CsoClass::Unlikely);
    EXPECT_EQ(classify_cso(attrs(65, 12, 25, 120, 80), th), CsoClass::Unlikely);
    EXPECT_EQ(classify_cso(attrs(60, 12, 26, 120, 80), th), CsoClass::Foraging);
    EXPECT_EQ(classify_cso(attrs(90, 50, 30, 0, 0), th), CsoClass::Unlikely);
}

TEST(ClassifyFisher, TableExamples) {
    const HabitatThresholds th;
    EXPECT_EQ(classify_fisher(attrs(61, 0, 26, 100, 60), th), FisherClass::Likely);
    EXPECT_EQ(classify_fisher(attrs(60, 0, 26, 100, 60), th), FisherClass::Unlikely);
    EXPECT_EQ(classify_fisher(attrs(90, 50, 10, 100, 60), th), FisherClass::Unlikely);
    EXPECT_EQ(classify_fisher(attrs(90, 50, 30, 100, 50), th), FisherClass::Unlikely);
}

TEST(Classify, BoundaryGridAgainstRuleTable) {
    const HabitatThresholds th;
    const double covers[] = {39, 40, 41, 59, 60, 61, 100};
    const double tpas[] = {0, 9, 9.5, 30};
    const double dias[] = {24, 25, 25.01, 40};
    const double soft[] = {0, 49.99, 50, 50.01, 100};
    for (double c : covers)
        for (double t : tpas)
            for (double d : dias)
                for (double s : soft) {
                    const auto a = attrs(c, t, d, 100, s);
                    const bool base = t > 9 && d > 25 && s > 50;
                    const auto expect_cso = base && c > 60   ? CsoClass::Nesting
                                            : base && c > 40 ? CsoClass::Foraging
                                                             : CsoClass::Unlikely;
                    EXPECT_EQ(classify_cso(a, th), expect_cso) << c << ' ' << t << ' ' << d << ' ' << s;
                    const bool fisher = c > 60 && d > 25 && s > 50;
                    EXPECT_EQ(classify_fisher(a, th), fisher ? FisherClass::Likely : FisherClass::Unlikely);
                }
}

TEST(Classify, CoverMonotoneAndNestingImpliesFisher) {
    efi::detail::Rng rng(13);
    HabitatThresholds th;
    for (int trial = 0; trial < 3000; ++trial) {
        th.cncvr_nesting = rng.uniform(30, 80);
        th.cncvr_foraging = rng.uniform(0, th.cncvr_nesting);
        th.dia_min = rng.uniform(5, 30);
        auto a = attrs(rng.uniform(0, 100), rng.uniform(0, 30), rng.uniform(0, 40), rng.uniform(0, 200), 0);
        a.bapa_softwood = rng.uniform(0, a.bapa);
        auto b = a;
        b.cncvr_pct = std::min(100.0, a.cncvr_pct + rng.uniform(0, 50));
        EXPECT_GE(cso_rank(classify_cso(b, th)), cso_rank(classify_cso(a, th)));
        if (classify_fisher(a, th) == FisherClass::Likely)
            EXPECT_EQ(classify_fisher(b, th), FisherClass::Likely);
        if (classify_cso(a, th) == CsoClass::Nesting) {
            EXPECT_EQ(classify_fisher(a, th), FisherClass::Likely);
            EXPECT_GT(a.cncvr_pct, th.cncvr_foraging);
        }
    }
}

TEST(Thresholds, Validation) {
    HabitatThresholds th;
    th.cncvr_foraging = 70;
    EXPECT_THROW(th.validate(), DomainError);
    th = {};
    th.tpa_min = -1;
    EXPECT_THROW(classify_units({}, th), DomainError);
}

TEST(Acreage, TwoNestingUnits) {
    const std::vector<PredictedUnit> units{unit(0, 0.5), unit(1, 0.5)};
    const std::vector<HabitatResult> res{{0, CsoClass::Nesting, FisherClass::Likely},
                                         {1, CsoClass::Nesting, FisherClass::Unlikely}};
    const auto rows = acreage_report(res, units);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].habitat_class, "Nesting");
    EXPECT_DOUBLE_EQ(rows[0].acres, 1.0);
    EXPECT_EQ(rows[0].unit_count, 2u);
    EXPECT_DOUBLE_EQ(rows[3].acres, 0.5);
    EXPECT_DOUBLE_EQ(rows[4].acres, 0.5);
    std::ostringstream out;
    write_acreage_csv(out, rows);
    EXPECT_EQ(out.str(), "species,class,acres,unit_count\n"
                         "california_spotted_owl,Nesting,1,2\n"
                         "california_spotted_owl,Foraging,0,0\n"
                         "california_spotted_owl,Unlikely,0,0\n"
                         "pacific_fisher,Likely,0.5,1\n"
                         "pacific_fisher,Unlikely,0.5,1\n");
}

TEST(Acreage, SpeciesTotalsEqualSceneArea) {
    efi::detail::Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<PredictedUnit> units;
        double total = 0.0;
        const auto n = 1 + rng.below(60);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto u = unit(static_cast<int>(i), rng.uniform(0.05, 3));
            u.attributes = attrs(rng.uniform(0, 100), rng.uniform(0, 30), rng.uniform(0, 40), 100, rng.uniform(0, 100));
            total += u.area;
            units.push_back(u);
        }
        const auto res = classify_units(units, {});
        ASSERT_EQ(res.size(), units.size());
        const auto rows = acreage_report(res, units);
        const double owl = rows[0].acres + rows[1].acres + rows[2].acres;
        const double fisher = rows[3].acres + rows[4].acres;
        EXPECT_NEAR(owl, total, 1e-6 * total);
        EXPECT_NEAR(fisher, total, 1e-6 * total);
        EXPECT_EQ(rows[0].unit_count + rows[1].unit_count + rows[2].unit_count, units.size());
        EXPECT_EQ(rows[3].unit_count + rows[4].unit_count, units.size());
    }
}

TEST(Acreage, AllUnlikelyCoversScene) {
    const std::vector<PredictedUnit> units{unit(4, 0.25), unit(9, 1.75)};
    const auto rows = acreage_report(classify_units(units, {}), units);
    EXPECT_DOUBLE_EQ(rows[2].acres, 2.0);
    EXPECT_DOUBLE_EQ(rows[4].acres, 2.0);
}

TEST(Acreage, UnmatchedResult) {
    EXPECT_THROW(acreage_report({{7, CsoClass::Unlikely, FisherClass::Unlikely}}, {unit(0, 1)}), ConsistencyError);
}

TEST(ClassNames, Strings) {
    EXPECT_EQ(to_string(CsoClass::Foraging), "Foraging");
    EXPECT_EQ(to_string(FisherClass::Likely), "Likely");
}

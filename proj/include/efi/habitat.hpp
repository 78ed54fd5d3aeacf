#pragma once

#include "efi/attributes.hpp"
#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/features.hpp"
#include "efi/inference.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace efi {

enum class CsoClass { Nesting, Foraging, Unlikely };
enum class FisherClass { Likely, Unlikely };

inline constexpr std::string_view to_string(CsoClass c) {
    switch (c) {
    case CsoClass::Nesting: return "Nesting";
    case CsoClass::Foraging: return "Foraging";
    case CsoClass::Unlikely: break;
    }
    return "Unlikely";
}

inline constexpr std::string_view to_string(FisherClass c) {
    return c == FisherClass::Likely ? "Likely" : "Unlikely";
}

// All comparisons are strict (>). dia_min is normally the third quartile of
// predicted mean diameter over the mapped units.
struct HabitatThresholds {
    double cncvr_nesting = 60.0;      // %
    double cncvr_foraging = 40.0;     // %
    double tpa_min = 9.0;             // stems/ac
    double dia_min = 25.0;            // in
    double softwood_fraction_min = 0.5;

    void validate() const {
        if (cncvr_nesting < 0 || cncvr_foraging < 0 || tpa_min < 0 || dia_min < 0 || softwood_fraction_min < 0)
            throw DomainError("habitat thresholds must be nonnegative");
        if (cncvr_foraging > cncvr_nesting)
            throw DomainError("foraging cover threshold exceeds nesting cover threshold");
    }
};

struct HabitatResult {
    int unit_id = 0;
    CsoClass cso_class = CsoClass::Unlikely;
    FisherClass fisher_class = FisherClass::Unlikely;
};

inline double compute_dia_threshold(const std::vector<PredictedUnit>& units) {
    if (units.empty())
        throw DomainError("diameter quartile of an empty unit list");
    std::vector<double> dia;
    dia.reserve(units.size());
    for (const auto& u : units)
        dia.push_back(u.attributes.dia);
    return height_percentile(dia, 75.0);
}

namespace detail {

inline bool structure_ok(const AttributeVector& a, const HabitatThresholds& th) {
    return a.dia > th.dia_min && a.bapa_softwood > th.softwood_fraction_min * a.bapa;
}

} // namespace detail

inline CsoClass classify_cso(const AttributeVector& a, const HabitatThresholds& th) {
    if (!(a.tpa > th.tpa_min) || !detail::structure_ok(a, th))
        return CsoClass::Unlikely;
    if (a.cncvr_pct > th.cncvr_nesting)
        return CsoClass::Nesting;
    if (a.cncvr_pct > th.cncvr_foraging)
        return CsoClass::Foraging;
    return CsoClass::Unlikely;
}

inline FisherClass classify_fisher(const AttributeVector& a, const HabitatThresholds& th) {
    return a.cncvr_pct > th.cncvr_nesting && detail::structure_ok(a, th) ? FisherClass::Likely
                                                                       : FisherClass::Unlikely;
}

inline std::vector<HabitatResult> classify_units(const std::vector<PredictedUnit>& units,
                                                 const HabitatThresholds& th) {
    th.validate();
    std::vector<HabitatResult> out;
    out.reserve(units.size());
    for (const auto& u : units)
        out.push_back({u.unit_id, classify_cso(u.attributes, th), classify_fisher(u.attributes, th)});
    return out;
}

struct AcreageRow {
    std::string species;
    std::string habitat_class;
    double acres = 0.0;
    std::size_t unit_count = 0;
};

// One row per species and class (including empty classes), in the order
// CSO Nesting, Foraging, Unlikely, then Fisher Likely, Unlikely.
inline std::vector<AcreageRow> acreage_report(const std::vector<HabitatResult>& results,
                                              const std::vector<PredictedUnit>& units) {
    std::vector<AcreageRow> rows = {{"california_spotted_owl", "Nesting"},
                                    {"california_spotted_owl", "Foraging"},
                                    {"california_spotted_owl", "Unlikely"},
                                    {"pacific_fisher", "Likely"},
                                    {"pacific_fisher", "Unlikely"}};
    std::vector<std::pair<int, double>> area_by_id;
    area_by_id.reserve(units.size());
    for (const auto& u : units)
        area_by_id.emplace_back(u.unit_id, u.area);
    std::sort(area_by_id.begin(), area_by_id.end());
    for (const auto& r : results) {
        auto it = std::lower_bound(area_by_id.begin(), area_by_id.end(), std::make_pair(r.unit_id, -1e300));
        if (it == area_by_id.end() || it->first != r.unit_id)
            throw ConsistencyError("habitat result for unit " + std::to_string(r.unit_id) + " has no matching unit");
        const double area = it->second;
        const std::size_t cso = r.cso_class == CsoClass::Nesting ? 0 : r.cso_class == CsoClass::Foraging ? 1 : 2;
        const std::size_t fisher = r.fisher_class == FisherClass::Likely ? 3 : 4;
        rows[cso].acres += area;
        ++rows[cso].unit_count;
        rows[fisher].acres += area;
        ++rows[fisher].unit_count;
    }
    return rows;
}

inline void write_acreage_csv(std::ostream& out, const std::vector<AcreageRow>& rows) {
    out << "species,class,acres,unit_count\n";
    for (const auto& r : rows)
        out << r.species << ',' << r.habitat_class << ',' << detail::format_double(r.acres) << ',' << r.unit_count
            << '\n';
}

inline void write_acreage_csv(const std::string& path, const std::vector<AcreageRow>& rows) {
    auto out = detail::open_output(path);
    write_acreage_csv(out, rows);
    if (!out)
        throw IoError("failed writing " + path);
}

} // namespace efi

#pragma once

#include "efi/attributes.hpp"
#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/features.hpp"
#include "efi/learn/model_io.hpp"
#include "efi/segmentation.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace efi {

struct PredictedUnit {
    int unit_id = 0;
    AttributeVector attributes;
    double area = 0.0; // acres
};

inline const learn::TrainedModel& model_for(const std::vector<learn::TrainedModel>& models, Attribute a) {
    for (const auto& m : models)
        if (m.attribute == name_of(a))
            return m;
    throw SchemaError("no model for attribute '" + std::string(name_of(a)) + "'");
}

// Raw linear predictions (unclamped) for every row of the table. Each model
// looks up its own features by name and applies its own normalizer.
inline std::vector<AttributeVector> predict_cells(const std::vector<learn::TrainedModel>& models,
                                                  const FeatureTable& cells) {
    std::vector<AttributeVector> out(cells.rows.size());
    for (Attribute a : kAllAttributes) {
        const auto& m = model_for(models, a);
        const auto& nm = m.normalizer;
        if (nm.names.size() != m.model.coefficients.size())
            throw ConsistencyError("model '" + m.attribute + "' is misaligned");
        std::vector<std::size_t> cols;
        for (const auto& name : nm.names) {
            const auto c = cells.column(name);
            if (!c)
                throw SchemaError("feature '" + name + "' required by model '" + m.attribute +
                                  "' is missing from the cell features");
            cols.push_back(*c);
        }
        for (std::size_t i = 0; i < cells.rows.size(); ++i) {
            const auto& row = cells.rows[i];
            if (row.size() != cells.names.size())
                throw DimensionError("feature row " + std::to_string(i) + " does not match the name list");
            double y = m.model.intercept;
            for (std::size_t k = 0; k < cols.size(); ++k)
                y += m.model.coefficients[k] * nm.transform(k, row[cols[k]]);
            out[i][a] = y;
        }
    }
    return out;
}

// Floors every attribute at 0, caps cover at 100 and softwood basal area at
// total basal area.
inline AttributeVector clamp_attributes(AttributeVector v) {
    for (Attribute a : kAllAttributes)
        v[a] = std::max(0.0, v[a]);
    v.cncvr_pct = std::min(v.cncvr_pct, 100.0);
    v.bapa_softwood = std::min(v.bapa_softwood, v.bapa);
    return v;
}

// Area-weighted mean of member cells per reporting unit.
inline std::vector<PredictedUnit> aggregate_to_reporting(const std::vector<AttributeVector>& cells,
                                                         const std::vector<double>& cell_areas,
                                                         const std::vector<Region>& regions, const GridFrame& frame) {
    if (cells.size() != cell_areas.size() || cells.size() != frame.cell_count())
        throw DimensionError("cell attributes, areas and grid size disagree");
    region_index(regions, cells.size(), frame); // throws unless a partition
    std::vector<PredictedUnit> out;
    out.reserve(regions.size());
    for (const auto& reg : regions) {
        PredictedUnit u;
        u.unit_id = reg.id;
        AttributeVector sum;
        for (const auto& c : reg.members) {
            const std::size_t i = frame.linear(c);
            const double w = cell_areas[i];
            u.area += w;
            for (Attribute a : kAllAttributes)
                sum[a] += w * cells[i][a];
        }
        if (!(u.area > 0.0))
            throw DomainError("reporting unit " + std::to_string(reg.id) + " has no area");
        for (Attribute a : kAllAttributes)
            u.attributes[a] = sum[a] / u.area;
        out.push_back(u);
    }
    return out;
}

inline void write_units_csv(std::ostream& out, const std::vector<PredictedUnit>& units) {
    out << "unit_id,area_ac";
    for (auto n : kPredictionNames)
        out << ',' << n;
    out << '\n';
    for (const auto& u : units) {
        out << u.unit_id << ',' << detail::format_double(u.area);
        for (Attribute a : kAllAttributes)
            out << ',' << detail::format_double(u.attributes[a]);
        out << '\n';
    }
}

inline void write_units_csv(const std::string& path, const std::vector<PredictedUnit>& units) {
    auto out = detail::open_output(path);
    write_units_csv(out, units);
    if (!out)
        throw IoError("failed writing " + path);
}

inline std::vector<PredictedUnit> read_units_csv(const std::string& path) {
    const auto t = detail::read_csv(path);
    const auto id = t.require_column("unit_id");
    const auto area = t.require_column("area_ac");
    std::vector<std::size_t> cols;
    for (auto n : kPredictionNames)
        cols.push_back(t.require_column(n));
    std::vector<PredictedUnit> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto where = path + " line " + std::to_string(t.line_numbers[r]);
        if (t.rows[r].size() != t.header.size())
            throw FormatError(where + ": wrong field count");
        PredictedUnit u;
        u.unit_id = static_cast<int>(detail::parse_int(t.rows[r][id], where));
        u.area = detail::parse_double(t.rows[r][area], where);
        for (std::size_t k = 0; k < kAttributeCount; ++k)
            u.attributes[kAllAttributes[k]] = detail::parse_double(t.rows[r][cols[k]], where);
        out.push_back(u);
    }
    return out;
}

} // namespace efi

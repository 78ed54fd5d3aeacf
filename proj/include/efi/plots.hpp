#pragma once

#include "efi/attributes.hpp"
#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/units.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace efi {

inline constexpr int kLiveStatus = 1;
inline constexpr int kDeadStatus = 2;
inline constexpr double kBasalAreaFactor = 0.005454154; // ft² per in² of DBH²
inline constexpr double kPoundsPerTon = 2000.0;

struct TreeRecord {
    std::string plot_id;
    int status = kLiveStatus;
    int species_code = 0;
    double dbh = 0.0;           // in
    double height = 0.0;        // ft
    double tpa_expansion = 0.0; // stems/ac represented by this record
    double carbon_ag = 0.0;     // lb per stem
};

struct PlotRecord {
    std::string plot_id;
    double x = 0.0;
    double y = 0.0;
    std::optional<double> measured_canopy_cover; // percent
};

struct PlotData {
    PlotRecord plot;
    std::vector<TreeRecord> trees;
};

inline double basal_area_per_tree(double dbh_in) {
    if (dbh_in < 0.0 || std::isnan(dbh_in))
        throw DomainError("dbh must be nonnegative");
    return kBasalAreaFactor * dbh_in * dbh_in;
}

// FIA species codes below 300 are softwoods. An explicit code list, when
// given, replaces the range rule.
struct SoftwoodRule {
    int code_limit = 300;
    std::set<int> explicit_codes;

    bool operator()(int species_code) const {
        if (!explicit_codes.empty())
            return explicit_codes.count(species_code) > 0;
        return species_code < code_limit;
    }
};

inline bool is_softwood(int species_code) { return SoftwoodRule{}(species_code); }

inline AttributeVector compile_plot_attributes(const PlotRecord& plot, const std::vector<TreeRecord>& trees,
                                               const SoftwoodRule& softwood = {}) {
    AttributeVector a;
    double height_sum = 0.0;
    double dbh_sum = 0.0;
    double carbon_lb = 0.0;
    for (const auto& t : trees) {
        const double ba = basal_area_per_tree(t.dbh) * t.tpa_expansion;
        if (t.status == kDeadStatus) {
            a.bapa_snag += ba;
            continue;
        }
        if (t.status != kLiveStatus)
            continue;
        a.bapa += ba;
        if (softwood(t.species_code))
            a.bapa_softwood += ba;
        a.tpa += t.tpa_expansion;
        height_sum += t.height * t.tpa_expansion;
        dbh_sum += t.dbh * t.tpa_expansion;
        carbon_lb += t.carbon_ag * t.tpa_expansion;
    }
    if (a.tpa > 0.0) {
        a.ht = height_sum / a.tpa;
        a.dia = dbh_sum / a.tpa;
    }
    a.cagpa = carbon_lb / kPoundsPerTon;
    a.cncvr_pct = plot.measured_canopy_cover.value_or(0.0);
    return a;
}

namespace detail {

inline double optional_number(const std::string& field, const std::string& where) {
    if (trim(field).empty())
        return 0.0;
    return parse_double(field, where);
}

} // namespace detail

// Joins TREE and COND rows to PLOT rows by PLT_CN = CN. Output follows PLOT
// row order; plots without trees are kept with an empty tree list. Blank
// numeric tree fields read as 0. When a plot has several COND rows, the
// first nonblank canopy value wins.
inline std::vector<PlotData> join_plot_tables(const detail::CsvTable& plot_t, const detail::CsvTable& tree_t,
                                              const detail::CsvTable& cond_t) {
    const auto p_cn = plot_t.require_column("CN");
    const auto p_x = plot_t.require_column("X");
    const auto p_y = plot_t.require_column("Y");
    const auto t_plt = tree_t.require_column("PLT_CN");
    const auto t_status = tree_t.require_column("STATUSCD");
    const auto t_spcd = tree_t.require_column("SPCD");
    const auto t_dia = tree_t.require_column("DIA");
    const auto t_ht = tree_t.require_column("HT");
    const auto t_tpa = tree_t.require_column("TPA_UNADJ");
    const auto t_carbon = tree_t.require_column("CARBON_AG");
    const auto c_plt = cond_t.require_column("PLT_CN");
    const auto c_cvr = cond_t.require_column("LIVE_CANOPY_CVR_PCT");

    auto field = [](const detail::CsvTable& t, std::size_t row, std::size_t col) -> const std::string& {
        static const std::string empty;
        return col < t.rows[row].size() ? t.rows[row][col] : empty;
    };
    auto where = [](const detail::CsvTable& t, std::size_t row) {
        return t.source + " line " + std::to_string(t.line_numbers[row]);
    };

    std::vector<PlotData> out;
    std::map<std::string, std::size_t> by_cn;
    for (std::size_t i = 0; i < plot_t.rows.size(); ++i) {
        PlotData d;
        d.plot.plot_id = field(plot_t, i, p_cn);
        if (d.plot.plot_id.empty())
            throw FormatError(where(plot_t, i) + ": empty CN");
        d.plot.x = detail::parse_double(field(plot_t, i, p_x), where(plot_t, i));
        d.plot.y = detail::parse_double(field(plot_t, i, p_y), where(plot_t, i));
        if (!by_cn.emplace(d.plot.plot_id, out.size()).second)
            throw FormatError(where(plot_t, i) + ": duplicate plot CN '" + d.plot.plot_id + "'");
        out.push_back(std::move(d));
    }

    std::vector<std::string> orphans;
    for (std::size_t i = 0; i < tree_t.rows.size(); ++i) {
        TreeRecord t;
        t.plot_id = field(tree_t, i, t_plt);
        auto it = by_cn.find(t.plot_id);
        if (it == by_cn.end()) {
            if (std::find(orphans.begin(), orphans.end(), t.plot_id) == orphans.end())
                orphans.push_back(t.plot_id);
            continue;
        }
        const auto w = where(tree_t, i);
        t.status = static_cast<int>(detail::parse_int(field(tree_t, i, t_status), w));
        t.species_code = static_cast<int>(detail::parse_int(field(tree_t, i, t_spcd), w));
        t.dbh = detail::optional_number(field(tree_t, i, t_dia), w);
        t.height = detail::optional_number(field(tree_t, i, t_ht), w);
        t.tpa_expansion = detail::optional_number(field(tree_t, i, t_tpa), w);
        t.carbon_ag = detail::optional_number(field(tree_t, i, t_carbon), w);
        if (t.dbh < 0.0 || t.height < 0.0 || t.tpa_expansion < 0.0)
            throw DomainError(w + ": DIA, HT and TPA_UNADJ must be nonnegative");
        out[it->second].trees.push_back(std::move(t));
    }
    if (!orphans.empty()) {
        std::string list;
        for (const auto& o : orphans)
            list += (list.empty() ? "" : ", ") + o;
        throw OrphanError("trees reference plots absent from the PLOT table: " + list);
    }

    for (std::size_t i = 0; i < cond_t.rows.size(); ++i) {
        auto it = by_cn.find(field(cond_t, i, c_plt));
        if (it == by_cn.end())
            continue;
        auto& plot = out[it->second].plot;
        const auto& raw = field(cond_t, i, c_cvr);
        if (plot.measured_canopy_cover || detail::trim(raw).empty())
            continue;
        const double v = detail::parse_double(raw, where(cond_t, i));
        if (v < 0.0 || v > 100.0)
            throw DomainError(where(cond_t, i) + ": LIVE_CANOPY_CVR_PCT outside [0, 100]");
        plot.measured_canopy_cover = v;
    }
    return out;
}

inline std::vector<PlotData> load_plot_tables(const std::string& plot_csv, const std::string& tree_csv,
                                              const std::string& cond_csv) {
    return join_plot_tables(detail::read_csv(plot_csv), detail::read_csv(tree_csv), detail::read_csv(cond_csv));
}

} // namespace efi

#pragma once

#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/features.hpp"
#include "efi/habitat.hpp"
#include "efi/plots.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace efi::pipeline {

// Flat run configuration. Text form is one `key = value` per line; `#`
// starts a comment; lists are comma separated. Unknown keys are errors.
struct RunConfig {
    std::string output_dir = "efi_out";

    // Inputs. Empty paths default to the files `simulate` writes under
    // <output_dir>/scene.
    std::string plot_csv;
    std::string tree_csv;
    std::string cond_csv;
    std::string point_cloud;
    std::vector<std::pair<std::string, std::string>> bands; // name -> path

    double dtm_cellsize = 10.0;                     // ft
    double analysis_unit_area = 1.0 / 6.0;          // acres
    double reporting_target_area = 0.5;            // acres
    std::array<double, 2> segment_weights{1.0, 1.0}; // CHM, NDVI after z-scoring

    FeatureConfig features;

    double keep_fraction = 0.4375;
    std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int lambda_count = 50;
    double lambda_ratio = 1e-3;
    int cv_folds = 5;
    std::uint64_t seed = 42;

    HabitatThresholds habitat;
    std::optional<double> dia_min_override; // unset: third quartile of predicted dia
    std::set<int> softwood_species;         // empty: FIA code < 300 rule

    // Synthetic scene used by `simulate`.
    std::string sim_preset = "three_stands"; // three_stands | empty
    double sim_side_ft = 9360.0;
    double sim_pulse_density = 0.02;
    int sim_plot_count = 120;
    double sim_noise_std = 0.3;

    std::string scene_dir() const { return (std::filesystem::path(output_dir) / "scene").string(); }
    std::string stage_dir(const std::string& stage) const { return (std::filesystem::path(output_dir) / stage).string(); }

    std::string plot_path() const { return plot_csv.empty() ? scene_dir() + "/plot.csv" : plot_csv; }
    std::string tree_path() const { return tree_csv.empty() ? scene_dir() + "/tree.csv" : tree_csv; }
    std::string cond_path() const { return cond_csv.empty() ? scene_dir() + "/cond.csv" : cond_csv; }
    std::string cloud_path() const { return point_cloud.empty() ? scene_dir() + "/cloud.las" : point_cloud; }
    std::vector<std::pair<std::string, std::string>> band_paths() const {
        if (!bands.empty())
            return bands;
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& name : features.bands)
            out.emplace_back(name, scene_dir() + "/" + name + ".asc");
        return out;
    }

    SoftwoodRule softwood_rule() const {
        SoftwoodRule r;
        r.explicit_codes = softwood_species;
        return r;
    }

    void validate() const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok)
                throw UsageError("config: " + what);
        };
        require(!output_dir.empty(), "output_dir must not be empty");
        require(dtm_cellsize > 0.0, "dtm_cellsize must be > 0");
        require(analysis_unit_area > 0.0, "analysis_unit_area must be > 0");
        require(reporting_target_area > 0.0, "reporting_target_area must be > 0");
        require(segment_weights[0] >= 0.0 && segment_weights[1] >= 0.0, "segment_weights must be >= 0");
        require(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction must lie in (0, 1]");
        require(!alpha_grid.empty(), "alpha_grid must not be empty");
        for (double a : alpha_grid)
            require(a >= 0.0 && a <= 1.0, "alpha_grid values must lie in [0, 1]");
        require(lambda_count >= 2, "lambda_count must be >= 2");
        require(lambda_ratio > 0.0 && lambda_ratio < 1.0, "lambda_ratio must lie in (0, 1)");
        require(cv_folds >= 2, "cv_folds must be >= 2");
        require(features.cover_threshold >= 0.0, "cover_threshold must be >= 0");
        for (double p : features.percentiles)
            require(p >= 0.0 && p <= 100.0, "percentiles must lie in [0, 100]");
        try {
            features.strata.validate();
            habitat.validate();
        } catch (const Error& e) {
            throw UsageError(std::string("config: ") + e.what());
        }
        require(!dia_min_override || *dia_min_override >= 0.0, "dia_min must be >= 0 or 'auto'");
        require(sim_preset == "three_stands" || sim_preset == "empty", "sim_preset must be three_stands or empty");
        require(sim_side_ft > 0.0, "sim_side_ft must be > 0");
        require(sim_pulse_density > 0.0, "sim_pulse_density must be > 0");
        require(sim_plot_count >= 0, "sim_plot_count must be >= 0");
        require(sim_noise_std >= 0.0, "sim_noise_std must be >= 0");
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = efi::detail::trim(item); !t.empty())
            out.emplace_back(t);
    return out;
}

inline std::vector<double> number_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) {
        double d = 0.0;
        if (!efi::detail::try_parse_double(s, d) || !std::isfinite(d))
            throw UsageError("config: '" + key + "' expects numbers, got '" + s + "'");
        out.push_back(d);
    }
    return out;
}

} // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    auto number = [&]() {
        double d = 0.0;
        if (!efi::detail::try_parse_double(value, d) || !std::isfinite(d))
            throw UsageError("config: '" + key + "' expects a number, got '" + value + "'");
        return d;
    };
    auto integer = [&]() {
        const double d = number();
        if (d != std::floor(d) || std::abs(d) > 9.0e15)
            throw UsageError("config: '" + key + "' expects an integer, got '" + value + "'");
        return static_cast<long long>(d);
    };
    using Setter = std::function<void()>;
    const std::map<std::string, Setter> setters = {
        {"output_dir", [&] { c.output_dir = value; }},
        {"plot_csv", [&] { c.plot_csv = value; }},
        {"tree_csv", [&] { c.tree_csv = value; }},
        {"cond_csv", [&] { c.cond_csv = value; }},
        {"point_cloud", [&] { c.point_cloud = value; }},
        {"bands",
         [&] {
             c.bands.clear();
             c.features.bands.clear();
             for (const auto& item : detail::split_list(value)) {
                 const auto eq = item.find(':');
                 const std::string name(efi::detail::trim(item.substr(0, eq)));
                 if (name.empty())
                     throw UsageError("config: 'bands' entries are name or name:path");
                 c.features.bands.push_back(name);
                 if (eq != std::string::npos)
                     c.bands.emplace_back(name, std::string(efi::detail::trim(item.substr(eq + 1))));
             }
             if (!c.bands.empty() && c.bands.size() != c.features.bands.size())
                 throw UsageError("config: give a path for every band or for none");
         }},
        {"dtm_cellsize", [&] { c.dtm_cellsize = number(); }},
        {"analysis_unit_area", [&] { c.analysis_unit_area = number(); }},
        {"reporting_target_area", [&] { c.reporting_target_area = number(); }},
        {"segment_weights",
         [&] {
             const auto w = detail::number_list(key, value);
             if (w.size() != 2)
                 throw UsageError("config: 'segment_weights' expects two numbers (chm, ndvi)");
             c.segment_weights = {w[0], w[1]};
         }},
        {"strata_boundaries", [&] { c.features.strata.boundaries = detail::number_list(key, value); }},
        {"percentiles", [&] { c.features.percentiles = detail::number_list(key, value); }},
        {"cover_threshold", [&] { c.features.cover_threshold = number(); }},
        {"keep_fraction", [&] { c.keep_fraction = number(); }},
        {"alpha_grid", [&] { c.alpha_grid = detail::number_list(key, value); }},
        {"lambda_count", [&] { c.lambda_count = static_cast<int>(integer()); }},
        {"lambda_ratio", [&] { c.lambda_ratio = number(); }},
        {"cv_folds", [&] { c.cv_folds = static_cast<int>(integer()); }},
        {"seed",
         [&] {
             const long long s = integer();
             if (s < 0)
                 throw UsageError("config: 'seed' must be >= 0");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"cncvr_nesting", [&] { c.habitat.cncvr_nesting = number(); }},
        {"cncvr_foraging", [&] { c.habitat.cncvr_foraging = number(); }},
        {"tpa_min", [&] { c.habitat.tpa_min = number(); }},
        {"softwood_fraction_min", [&] { c.habitat.softwood_fraction_min = number(); }},
        {"dia_min",
         [&] {
             if (value == "auto")
                 c.dia_min_override.reset();
             else
                 c.dia_min_override = number();
         }},
        {"softwood_species",
         [&] {
             c.softwood_species.clear();
             for (double d : detail::number_list(key, value))
                 c.softwood_species.insert(static_cast<int>(d));
         }},
        {"sim_preset", [&] { c.sim_preset = value; }},
        {"sim_side_ft", [&] { c.sim_side_ft = number(); }},
        {"sim_pulse_density", [&] { c.sim_pulse_density = number(); }},
        {"sim_plot_count", [&] { c.sim_plot_count = static_cast<int>(integer()); }},
        {"sim_noise_std", [&] { c.sim_noise_std = number(); }},
    };
    auto it = setters.find(key);
    if (it == setters.end())
        throw UsageError("config: unknown key '" + key + "'");
    it->second();
}

inline RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto t = efi::detail::trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(source + " line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(efi::detail::trim(t.substr(0, eq)));
        const std::string value(efi::detail::trim(t.substr(eq + 1)));
        if (!seen.insert(key).second)
            throw UsageError(source + " line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        set_config_value(base, key, value);
    }
    base.validate();
    return base;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open config " + path);
    return parse_config(in, path);
}

} // namespace efi::pipeline

#pragma once

#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/detail/rng.hpp"
#include "efi/features.hpp"
#include "efi/geodata/geojson.hpp"
#include "efi/geodata/point_cloud.hpp"
#include "efi/geodata/raster.hpp"
#include "efi/habitat.hpp"
#include "efi/inference.hpp"
#include "efi/learn/model_io.hpp"
#include "efi/learn/training.hpp"
#include "efi/pipeline/config.hpp"
#include "efi/pipeline/log.hpp"
#include "efi/plots.hpp"
#include "efi/segmentation.hpp"
#include "efi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace efi::pipeline {

namespace fs = std::filesystem;

// Artifact locations under the output directory.
struct Layout {
    fs::path root;

    explicit Layout(const RunConfig& cfg) : root(cfg.output_dir) {}

    fs::path scene(const std::string& f) const { return root / "scene" / f; }
    fs::path dtm() const { return root / "segment" / "dtm.asc"; }
    fs::path chm() const { return root / "segment" / "chm.asc"; }
    fs::path tessellation() const { return root / "segment" / "tessellation.txt"; }
    fs::path regions() const { return root / "segment" / "regions.csv"; }
    fs::path cell_features() const { return root / "features" / "cell_features.csv"; }
    fs::path plot_attributes() const { return root / "plots" / "plot_attributes.csv"; }
    fs::path model(Attribute a) const { return root / "models" / (std::string(name_of(a)) + ".model"); }
    fs::path metrics() const { return root / "models" / "metrics.csv"; }
    fs::path cv_grid() const { return root / "models" / "cv_grid.csv"; }
    fs::path training_plots() const { return root / "models" / "training_plots.csv"; }
    fs::path cell_predictions() const { return root / "predict" / "cells.csv"; }
    fs::path units_csv() const { return root / "predict" / "units.csv"; }
    fs::path units_geojson() const { return root / "predict" / "units.geojson"; }
    fs::path prediction_notes() const { return root / "predict" / "metadata.txt"; }
    fs::path habitat_geojson() const { return root / "habitat" / "habitat.geojson"; }
    fs::path acreage() const { return root / "habitat" / "acreage.csv"; }
    fs::path unit_classes() const { return root / "habitat" / "unit_classes.csv"; }
    fs::path thresholds() const { return root / "habitat" / "thresholds.txt"; }
    fs::path report() const { return root / "report.md"; }
};

namespace detail {

inline void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string());
}

inline void require_artifact(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path))
        throw DependencyError("missing " + path.string() + "; run the '" + stage + "' stage first");
}

inline void require_input(const std::string& path, const std::string& what) {
    if (!fs::exists(path))
        throw ConsistencyError(what + " " + path + " does not exist");
}

inline void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out)
        throw IoError("failed writing " + path.string());
}

inline Extent frame_extent(const GridFrame& f) { return {f.x_origin, f.y_origin, f.x_max(), f.y_max()}; }

inline GridFrame covering_frame(const Extent& e, double cellsize) {
    auto count = [&](double span) {
        const double n = span / cellsize;
        return std::max(1, static_cast<int>(std::ceil(n - 1e-9 * std::max(1.0, n))));
    };
    return {count(e.width()), count(e.height()), e.xmin, e.ymin, cellsize};
}

inline BandSet load_bands(const RunConfig& cfg) {
    BandSet bands;
    for (const auto& [name, path] : cfg.band_paths()) {
        require_input(path, "band '" + name + "'");
        bands.add(name, read_ascii_grid(path));
    }
    if (bands.grids.empty())
        throw ConsistencyError("no bands configured");
    return bands;
}

inline PointCloud load_cloud(const RunConfig& cfg) {
    const auto path = cfg.cloud_path();
    require_input(path, "point cloud");
    return read_point_cloud(path);
}

// Mean of raster samples whose centres fall in each analysis cell. Cells
// without samples take the mean over all samples.
inline std::vector<double> cell_means(const GridFrame& cells, const std::vector<const RasterGrid*>& grids,
                                      double (*combine)(const std::vector<double>&)) {
    std::vector<double> sum(cells.cell_count(), 0.0);
    std::vector<std::size_t> count(cells.cell_count(), 0);
    double total = 0.0;
    std::size_t total_n = 0;
    const GridFrame& f = grids.front()->frame;
    std::vector<double> px(grids.size());
    for (int r = 0; r < f.nrows; ++r)
        for (int c = 0; c < f.ncols; ++c) {
            bool valid = true;
            for (std::size_t g = 0; g < grids.size(); ++g) {
                px[g] = grids[g]->at(r, c);
                valid = valid && !grids[g]->is_nodata(px[g]);
            }
            if (!valid)
                continue;
            const auto cell = cells.cell_of(f.center_x(c), f.center_y(r));
            if (!cell)
                continue;
            const double v = combine(px);
            sum[cells.linear(*cell)] += v;
            ++count[cells.linear(*cell)];
            total += v;
            ++total_n;
        }
    const double fallback = total_n ? total / static_cast<double>(total_n) : 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i)
        sum[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : fallback;
    return sum;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Artifact readers and writers shared by stages and tests

inline void write_tessellation(const fs::path& path, const Tessellation& t) {
    auto out = efi::detail::open_output(path.string());
    using efi::detail::format_double;
    out << "efi-tessellation 1\n"
        << "xmin " << format_double(t.extent.xmin) << '\n'
        << "ymin " << format_double(t.extent.ymin) << '\n'
        << "xmax " << format_double(t.extent.xmax) << '\n'
        << "ymax " << format_double(t.extent.ymax) << '\n'
        << "cellsize " << format_double(t.cellsize) << '\n'
        << "nrows " << t.nrows << '\n'
        << "ncols " << t.ncols << '\n';
    detail::finish(out, path);
}

inline Tessellation read_tessellation(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "efi-tessellation" || version != 1)
        throw FormatError(path.string() + ": not a tessellation file");
    std::map<std::string, std::string> kv;
    std::string k, v;
    while (in >> k >> v)
        kv[k] = v;
    auto get = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end())
            throw FormatError(path.string() + ": missing '" + key + "'");
        return efi::detail::parse_double(it->second, path.string());
    };
    Tessellation t;
    t.extent = {get("xmin"), get("ymin"), get("xmax"), get("ymax")};
    t.cellsize = get("cellsize");
    t.nrows = static_cast<int>(get("nrows"));
    t.ncols = static_cast<int>(get("ncols"));
    t.frame().validate();
    return t;
}

inline void write_regions(const fs::path& path, const std::vector<Region>& regions, const Tessellation& tess) {
    const auto owner = region_index(regions, tess.cell_count(), tess.frame());
    auto out = efi::detail::open_output(path.string());
    out << "row,col,region\n";
    const auto frame = tess.frame();
    for (std::size_t i = 0; i < owner.size(); ++i) {
        const auto c = frame.cell_at(i);
        out << c.row << ',' << c.col << ',' << regions[static_cast<std::size_t>(owner[i])].id << '\n';
    }
    detail::finish(out, path);
}

inline std::vector<Region> read_regions(const fs::path& path, const Tessellation& tess) {
    const auto t = efi::detail::read_csv(path.string());
    const auto rc = t.require_column("row"), cc = t.require_column("col"), gc = t.require_column("region");
    std::map<int, Region> by_id;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[i]);
        if (t.rows[i].size() != t.header.size())
            throw FormatError(where + ": wrong field count");
        const CellIndex c{static_cast<int>(efi::detail::parse_int(t.rows[i][rc], where)),
                          static_cast<int>(efi::detail::parse_int(t.rows[i][cc], where))};
        const int id = static_cast<int>(efi::detail::parse_int(t.rows[i][gc], where));
        auto& reg = by_id[id];
        reg.id = id;
        reg.members.push_back(c);
    }
    std::vector<Region> out;
    for (auto& [id, reg] : by_id) {
        std::sort(reg.members.begin(), reg.members.end());
        reg.area = region_area(reg, tess);
        out.push_back(std::move(reg));
    }
    region_index(out, tess.cell_count(), tess.frame());
    return out;
}

inline void write_feature_table(const fs::path& path, const FeatureTable& table) {
    auto out = efi::detail::open_output(path.string());
    out << "cell";
    for (const auto& n : table.names)
        out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out << i;
        for (double v : table.rows[i])
            out << ',' << efi::detail::format_double(v);
        out << '\n';
    }
    detail::finish(out, path);
}

inline FeatureTable read_feature_table(const fs::path& path) {
    const auto t = efi::detail::read_csv(path.string());
    if (t.header.empty() || t.header.front() != "cell")
        throw SchemaError(path.string() + ": first column must be 'cell'");
    FeatureTable table;
    table.names.assign(t.header.begin() + 1, t.header.end());
    table.rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[i]);
        if (t.rows[i].size() != t.header.size())
            throw FormatError(where + ": wrong field count");
        if (efi::detail::parse_int(t.rows[i][0], where) != static_cast<long long>(i))
            throw FormatError(where + ": cells must be listed in order");
        std::vector<double> row;
        row.reserve(table.names.size());
        for (std::size_t j = 1; j < t.rows[i].size(); ++j)
            row.push_back(efi::detail::parse_double(t.rows[i][j], where));
        table.rows.push_back(std::move(row));
    }
    return table;
}

struct PlotAttributes {
    std::string plot_id;
    double x = 0.0;
    double y = 0.0;
    AttributeVector attributes;
};

inline void write_plot_attributes(const fs::path& path, const std::vector<PlotAttributes>& plots) {
    auto out = efi::detail::open_output(path.string());
    out << "plot_id,x,y";
    for (auto n : kAttributeNames)
        out << ',' << n;
    out << '\n';
    for (const auto& p : plots) {
        out << efi::detail::csv_escape(p.plot_id) << ',' << efi::detail::format_double(p.x) << ','
            << efi::detail::format_double(p.y);
        for (Attribute a : kAllAttributes)
            out << ',' << efi::detail::format_double(p.attributes[a]);
        out << '\n';
    }
    detail::finish(out, path);
}

inline std::vector<PlotAttributes> read_plot_attributes(const fs::path& path) {
    const auto t = efi::detail::read_csv(path.string());
    const auto id = t.require_column("plot_id"), xc = t.require_column("x"), yc = t.require_column("y");
    std::vector<std::size_t> cols;
    for (auto n : kAttributeNames)
        cols.push_back(t.require_column(n));
    std::vector<PlotAttributes> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[i]);
        if (t.rows[i].size() != t.header.size())
            throw FormatError(where + ": wrong field count");
        PlotAttributes p;
        p.plot_id = t.rows[i][id];
        p.x = efi::detail::parse_double(t.rows[i][xc], where);
        p.y = efi::detail::parse_double(t.rows[i][yc], where);
        for (std::size_t k = 0; k < kAttributeCount; ++k)
            p.attributes[kAllAttributes[k]] = efi::detail::parse_double(t.rows[i][cols[k]], where);
        out.push_back(std::move(p));
    }
    return out;
}

struct MetricsRow {
    std::string attribute;
    double best_lambda = 0.0;
    double best_alpha = 0.0;
    double cv_rmse = 0.0;
    double cv_r2 = 0.0;
};

inline std::vector<MetricsRow> read_metrics(const fs::path& path) {
    const auto t = efi::detail::read_csv(path.string());
    const auto a = t.require_column("attribute"), l = t.require_column("best_lambda"),
               al = t.require_column("best_alpha"), e = t.require_column("cv_rmse"), r = t.require_column("cv_r2");
    std::vector<MetricsRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[i]);
        if (t.rows[i].size() != t.header.size())
            throw FormatError(where + ": wrong field count");
        out.push_back({t.rows[i][a], efi::detail::parse_double(t.rows[i][l], where),
                       efi::detail::parse_double(t.rows[i][al], where), efi::detail::parse_double(t.rows[i][e], where),
                       efi::detail::parse_double(t.rows[i][r], where)});
    }
    return out;
}

// Polygon area is the full-cell outline; units on the scene edge also carry
// their clipped in-scene area.
inline std::vector<PolygonRecord> unit_polygons(const std::vector<Region>& regions,
                                                const std::vector<PredictedUnit>& units, const Tessellation& tess) {
    std::map<int, const PredictedUnit*> by_id;
    for (const auto& u : units)
        by_id[u.unit_id] = &u;
    std::vector<PolygonRecord> out;
    out.reserve(regions.size());
    for (const auto& reg : regions) {
        auto it = by_id.find(reg.id);
        if (it == by_id.end())
            throw ConsistencyError("reporting unit " + std::to_string(reg.id) + " has no predictions");
        PolygonRecord rec;
        rec.id = std::to_string(reg.id);
        rec.cell_members = reg.members;
        rec.area = static_cast<double>(reg.members.size()) * tess.cell_acres();
        rec.set("scene_area_ac", it->second->area);
        for (Attribute a : kAllAttributes)
            rec.set(std::string(prediction_name(a)), it->second->attributes[a]);
        out.push_back(std::move(rec));
    }
    if (out.size() != units.size())
        throw ConsistencyError("prediction table lists units absent from the segmentation");
    return out;
}

// ---------------------------------------------------------------------------
// Stages

inline synth::SceneSpec scene_spec(const RunConfig& cfg) {
    const auto seed = efi::detail::sub_seed(cfg.seed, "simulate");
    synth::SceneSpec spec;
    if (cfg.sim_preset == "three_stands") {
        spec = synth::three_stand_scene(cfg.sim_side_ft, seed);
    } else {
        spec.extent = {0.0, 0.0, cfg.sim_side_ft, cfg.sim_side_ft};
        spec.seed = seed;
    }
    spec.pulse_density = cfg.sim_pulse_density;
    spec.plot_count = cfg.sim_plot_count;
    spec.noise_std = cfg.sim_noise_std;
    return spec;
}

inline void run_simulate(const RunConfig& cfg) {
    const Layout at(cfg);
    const auto spec = scene_spec(cfg);
    log("simulate", "generating " + cfg.sim_preset + " scene, " +
                        efi::detail::format_double(spec.extent.acres()) + " ac");
    const auto scene = synth::generate_scene(spec);
    detail::make_dir(at.root / "scene");
    using efi::detail::format_double;

    {
        const auto path = at.scene("plot.csv");
        auto out = efi::detail::open_output(path.string());
        out << "CN,X,Y\n";
        for (const auto& p : scene.plots)
            out << p.plot.plot_id << ',' << format_double(p.plot.x) << ',' << format_double(p.plot.y) << '\n';
        detail::finish(out, path);
    }
    {
        const auto path = at.scene("tree.csv");
        auto out = efi::detail::open_output(path.string());
        out << "PLT_CN,STATUSCD,SPCD,DIA,HT,TPA_UNADJ,CARBON_AG\n";
        for (const auto& p : scene.plots)
            for (const auto& t : p.trees)
                out << t.plot_id << ',' << t.status << ',' << t.species_code << ',' << format_double(t.dbh) << ','
                    << format_double(t.height) << ',' << format_double(t.tpa_expansion) << ','
                    << format_double(t.carbon_ag) << '\n';
        detail::finish(out, path);
    }
    {
        const auto path = at.scene("cond.csv");
        auto out = efi::detail::open_output(path.string());
        out << "PLT_CN,CONDID,LIVE_CANOPY_CVR_PCT\n";
        for (const auto& p : scene.plots)
            out << p.plot.plot_id << ",1," << format_double(p.plot.measured_canopy_cover.value_or(0.0)) << '\n';
        detail::finish(out, path);
    }
    {
        const auto path = at.scene("truth.csv");
        auto out = efi::detail::open_output(path.string());
        out << "patch,xmin,ymin,xmax,ymax";
        for (auto n : kAttributeNames)
            out << ',' << n;
        out << '\n';
        for (std::size_t i = 0; i < scene.truth.size(); ++i) {
            const auto& t = scene.truth[i];
            out << i << ',' << format_double(t.region.xmin) << ',' << format_double(t.region.ymin) << ','
                << format_double(t.region.xmax) << ',' << format_double(t.region.ymax);
            for (Attribute a : kAllAttributes)
                out << ',' << format_double(t.attributes[a]);
            out << '\n';
        }
        detail::finish(out, path);
    }
    write_las(at.scene("cloud.las").string(), scene.cloud);
    for (std::size_t b = 0; b < scene.bands.names.size(); ++b)
        write_ascii_grid(at.scene(scene.bands.names[b] + ".asc").string(), scene.bands.grids[b]);
    log("simulate", std::to_string(scene.trees.size()) + " trees, " + std::to_string(scene.cloud.points.size()) +
                        " returns, " + std::to_string(scene.plots.size()) + " plots");
}

inline void run_segment(const RunConfig& cfg) {
    const Layout at(cfg);
    const BandSet bands = detail::load_bands(cfg);
    const RasterGrid* nir = bands.find("nir");
    const RasterGrid* red = bands.find("red");
    if (!nir || !red)
        throw ConsistencyError("segmentation needs 'nir' and 'red' bands");
    const PointCloud cloud = detail::load_cloud(cfg);
    cloud.validate();
    if (cloud.points.empty())
        throw DataError("point cloud has no returns");

    const Extent extent = detail::frame_extent(bands.frame());
    const double tol = 1e-9 * std::max(extent.width(), extent.height());
    for (const auto& p : cloud.points)
        if (p.x < extent.xmin - tol || p.x > extent.xmax + tol || p.y < extent.ymin - tol || p.y > extent.ymax + tol)
            throw ConsistencyError("point cloud extends beyond the band extent (return at " +
                                   efi::detail::format_double(p.x) + ", " + efi::detail::format_double(p.y) + ")");

    const RasterGrid dtm = build_dtm(cloud, detail::covering_frame(extent, cfg.dtm_cellsize));
    const RasterGrid chm = build_chm(cloud, dtm);
    const Tessellation tess = tessellate(extent, cfg.analysis_unit_area);
    const auto frame = tess.frame();

    const auto chm_means = detail::cell_means(frame, {&chm}, [](const std::vector<double>& v) { return v[0]; });
    const auto ndvi_means =
        detail::cell_means(frame, {nir, red}, [](const std::vector<double>& v) { return ndvi(v[0], v[1]); });

    SegmentationOptions opts;
    opts.target_area = cfg.reporting_target_area;
    opts.channel_weights = cfg.segment_weights;
    const auto regions = grow_reporting_units(tess, chm_means, ndvi_means, opts);

    detail::make_dir(at.root / "segment");
    write_ascii_grid(at.dtm().string(), dtm);
    write_ascii_grid(at.chm().string(), chm);
    write_tessellation(at.tessellation(), tess);
    write_regions(at.regions(), regions, tess);
    const double mean_area = static_cast<double>(tess.cell_count()) * tess.cell_acres() /
                              static_cast<double>(regions.size());
    log("segment", std::to_string(tess.cell_count()) + " analysis cells, " + std::to_string(regions.size()) +
                       " reporting units, mean area " + efi::detail::format_double(mean_area) + " ac");
}

inline void run_features(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_artifact(at.tessellation(), "segment");
    detail::require_artifact(at.dtm(), "segment");
    const Tessellation tess = read_tessellation(at.tessellation());
    const RasterGrid dtm = read_ascii_grid(at.dtm().string());
    const BandSet bands = detail::load_bands(cfg);
    const PointCloud normalized = normalize_heights(detail::load_cloud(cfg), dtm);
    const RasterGrid slope = slope_grid(dtm);
    const auto cohorts = build_cell_cohorts(normalized, tess.frame(), bands, cfg.features.bands, dtm, slope);
    const FeatureTable table = assemble_feature_table(cohorts, cfg.features);
    detail::make_dir(at.root / "features");
    write_feature_table(at.cell_features(), table);
    log("features", std::to_string(table.rows.size()) + " cells x " + std::to_string(table.names.size()) +
                        " features");
}

inline void run_compile_plots(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_input(cfg.plot_path(), "plot table");
    detail::require_input(cfg.tree_path(), "tree table");
    detail::require_input(cfg.cond_path(), "condition table");
    const auto plots = load_plot_tables(cfg.plot_path(), cfg.tree_path(), cfg.cond_path());
    const auto rule = cfg.softwood_rule();
    std::vector<PlotAttributes> out;
    out.reserve(plots.size());
    for (const auto& p : plots)
        out.push_back({p.plot.plot_id, p.plot.x, p.plot.y, compile_plot_attributes(p.plot, p.trees, rule)});
    detail::make_dir(at.root / "plots");
    write_plot_attributes(at.plot_attributes(), out);
    log("compile-plots", std::to_string(out.size()) + " plots compiled");
}

inline void run_train(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_artifact(at.tessellation(), "segment");
    detail::require_artifact(at.cell_features(), "features");
    detail::require_artifact(at.plot_attributes(), "compile-plots");
    const Tessellation tess = read_tessellation(at.tessellation());
    const FeatureTable cells = read_feature_table(at.cell_features());
    if (cells.rows.size() != tess.cell_count())
        throw ConsistencyError("cell feature table does not match the tessellation");
    const auto plots = read_plot_attributes(at.plot_attributes());

    const auto frame = tess.frame();
    std::vector<const PlotAttributes*> used;
    std::vector<std::size_t> used_cells;
    std::size_t excluded = 0;
    for (const auto& p : plots) {
        const auto& e = tess.extent;
        const auto cell = frame.cell_of(p.x, p.y);
        if (!cell || p.x < e.xmin || p.x > e.xmax || p.y < e.ymin || p.y > e.ymax) {
            ++excluded;
            continue;
        }
        used.push_back(&p);
        used_cells.push_back(frame.linear(*cell));
    }
    if (excluded)
        log("train", "warning: " + std::to_string(excluded) + " plot(s) outside the scene extent excluded");
    log("train", std::to_string(used.size()) + " plots assigned to analysis cells");

    std::vector<std::vector<double>> rows;
    rows.reserve(used.size());
    for (std::size_t c : used_cells)
        rows.push_back(cells.rows[c]);
    const learn::Matrix x = learn::Matrix::from_rows(rows);

    detail::make_dir(at.root / "models");
    {
        const auto path = at.training_plots();
        auto out = efi::detail::open_output(path.string());
        out << "plot_id,cell\n";
        for (std::size_t i = 0; i < used.size(); ++i)
            out << efi::detail::csv_escape(used[i]->plot_id) << ',' << used_cells[i] << '\n';
        detail::finish(out, path);
    }

    std::ostringstream metrics, grid;
    metrics << "attribute,best_lambda,best_alpha,cv_rmse,cv_r2\n";
    grid << "attribute,lambda,alpha,mean_rmse,cv_r2\n";
    using efi::detail::format_double;
    for (Attribute a : kAllAttributes) {
        const std::string name(name_of(a));
        std::vector<double> y;
        y.reserve(used.size());
        for (const auto* p : used)
            y.push_back(p->attributes[a]);
        learn::CvOptions cv;
        cv.alphas = cfg.alpha_grid;
        cv.lambda_count = cfg.lambda_count;
        cv.lambda_ratio = cfg.lambda_ratio;
        cv.folds = cfg.cv_folds;
        cv.seed = efi::detail::sub_seed(cfg.seed, "train." + name);
        const auto result = learn::train_attribute(name, x, cells.names, y, cfg.keep_fraction, cv);
        write_model(at.model(a).string(), result.model);
        const auto& best = result.report.best;
        metrics << name << ',' << format_double(best.lambda) << ',' << format_double(best.alpha) << ','
                << format_double(best.mean_rmse) << ',' << format_double(best.cv_r2) << '\n';
        for (const auto& g : result.report.grid)
            grid << name << ',' << format_double(g.lambda) << ',' << format_double(g.alpha) << ','
                 << format_double(g.mean_rmse) << ',' << format_double(g.cv_r2) << '\n';
        std::string msg = name + ": " + std::to_string(result.model.model.nonzero_count()) + "/" +
                          std::to_string(result.model.normalizer.names.size()) + " selected features active, cv_r2 " +
                          format_double(best.cv_r2);
        if (!result.model.model.converged)
            msg += " (final fit hit the sweep limit)";
        log("train", msg);
    }
    for (const auto& [path, text] : {std::pair{at.metrics(), metrics.str()}, std::pair{at.cv_grid(), grid.str()}}) {
        auto out = efi::detail::open_output(path.string());
        out << text;
        detail::finish(out, path);
    }
}

inline std::vector<learn::TrainedModel> load_models(const RunConfig& cfg) {
    const Layout at(cfg);
    std::vector<learn::TrainedModel> models;
    for (Attribute a : kAllAttributes) {
        detail::require_artifact(at.model(a), "train");
        models.push_back(learn::read_model(at.model(a).string()));
    }
    return models;
}

inline void run_predict(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_artifact(at.tessellation(), "segment");
    detail::require_artifact(at.regions(), "segment");
    detail::require_artifact(at.cell_features(), "features");
    const auto models = load_models(cfg);
    const Tessellation tess = read_tessellation(at.tessellation());
    const auto regions = read_regions(at.regions(), tess);
    const FeatureTable cells = read_feature_table(at.cell_features());
    if (cells.rows.size() != tess.cell_count())
        throw ConsistencyError("cell feature table does not match the tessellation");

    auto predicted = predict_cells(models, cells);
    for (auto& v : predicted)
        v = clamp_attributes(v);
    const std::vector<double> areas = clipped_cell_areas(tess);
    const auto units = aggregate_to_reporting(predicted, areas, regions, tess.frame());

    detail::make_dir(at.root / "predict");
    {
        const auto path = at.cell_predictions();
        auto out = efi::detail::open_output(path.string());
        out << "cell,row,col,area_ac";
        for (auto n : kPredictionNames)
            out << ',' << n;
        out << '\n';
        const auto frame = tess.frame();
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            const auto c = frame.cell_at(i);
            out << i << ',' << c.row << ',' << c.col << ',' << efi::detail::format_double(areas[i]);
            for (Attribute a : kAllAttributes)
                out << ',' << efi::detail::format_double(predicted[i][a]);
            out << '\n';
        }
        detail::finish(out, path);
    }
    write_units_csv(at.units_csv().string(), units);
    write_geojson(unit_polygons(regions, units, tess), tess.frame(), at.units_geojson().string());
    {
        const auto path = at.prediction_notes();
        auto out = efi::detail::open_output(path.string());
        out << "clamped = true\n"
            << "clamp_rule = floor 0, cncvr_pct <= 100, bapa_softwood <= bapa\n"
            << "clamp_order = per analysis cell, before area-weighted aggregation\n";
        detail::finish(out, path);
    }
    log("predict", std::to_string(predicted.size()) + " cells predicted, " + std::to_string(units.size()) +
                       " reporting units written");
}

inline void run_habitat(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_artifact(at.tessellation(), "segment");
    detail::require_artifact(at.regions(), "segment");
    detail::require_artifact(at.units_csv(), "predict");
    const Tessellation tess = read_tessellation(at.tessellation());
    const auto regions = read_regions(at.regions(), tess);
    const auto units = read_units_csv(at.units_csv().string());

    HabitatThresholds th = cfg.habitat;
    std::string source;
    if (cfg.dia_min_override) {
        th.dia_min = *cfg.dia_min_override;
        source = "override";
    } else {
        th.dia_min = compute_dia_threshold(units);
        source = "third quartile of predicted dia";
    }
    th.validate();
    log("habitat", "dia_min = " + efi::detail::format_double(th.dia_min) + " in (" + source + ")");

    const auto results = classify_units(units, th);
    const auto rows = acreage_report(results, units);

    detail::make_dir(at.root / "habitat");
    write_acreage_csv(at.acreage().string(), rows);
    {
        const auto path = at.unit_classes();
        auto out = efi::detail::open_output(path.string());
        out << "unit_id,cso_class,fisher_class\n";
        for (const auto& r : results)
            out << r.unit_id << ',' << to_string(r.cso_class) << ',' << to_string(r.fisher_class) << '\n';
        detail::finish(out, path);
    }
    {
        const auto path = at.thresholds();
        auto out = efi::detail::open_output(path.string());
        using efi::detail::format_double;
        out << "cncvr_nesting = " << format_double(th.cncvr_nesting) << '\n'
            << "cncvr_foraging = " << format_double(th.cncvr_foraging) << '\n'
            << "tpa_min = " << format_double(th.tpa_min) << '\n'
            << "dia_min = " << format_double(th.dia_min) << '\n'
            << "dia_min_source = " << source << '\n'
            << "softwood_fraction_min = " << format_double(th.softwood_fraction_min) << '\n';
        detail::finish(out, path);
    }
    auto polygons = unit_polygons(regions, units, tess);
    std::map<int, const HabitatResult*> by_id;
    for (const auto& r : results)
        by_id[r.unit_id] = &r;
    for (auto& p : polygons) {
        const auto* r = by_id.at(std::stoi(p.id));
        p.set("cso_class", std::string(to_string(r->cso_class)));
        p.set("fisher_class", std::string(to_string(r->fisher_class)));
    }
    write_geojson(polygons, tess.frame(), at.habitat_geojson().string());
    for (const auto& r : rows)
        log("habitat", r.species + " " + r.habitat_class + ": " + efi::detail::format_double(r.acres) + " ac, " +
                           std::to_string(r.unit_count) + " units");
}

inline void run_report(const RunConfig& cfg) {
    const Layout at(cfg);
    detail::require_artifact(at.metrics(), "train");
    detail::require_artifact(at.acreage(), "habitat");
    const auto metrics = read_metrics(at.metrics());
    const auto acreage = efi::detail::read_csv(at.acreage().string());
    using efi::detail::format_double;
    std::ostringstream md;
    md << "# EFI run summary\n\n## Model performance (cross-validated)\n\n"
       << "| attribute | lambda | alpha | cv_rmse | cv_r2 |\n|---|---|---|---|---|\n";
    for (const auto& m : metrics)
        md << "| " << m.attribute << " | " << format_double(m.best_lambda) << " | " << format_double(m.best_alpha)
           << " | " << format_double(m.cv_rmse) << " | " << format_double(m.cv_r2) << " |\n";
    md << "\n## Habitat acreage\n\n| species | class | acres | units |\n|---|---|---|---|\n";
    for (const auto& row : acreage.rows) {
        if (row.size() != 4)
            throw FormatError(at.acreage().string() + ": wrong field count");
        md << "| " << row[0] << " | " << row[1] << " | " << row[2] << " | " << row[3] << " |\n";
    }
    const auto path = at.report();
    auto out = efi::detail::open_output(path.string());
    out << md.str();
    detail::finish(out, path);
    log("report", "wrote " + path.string());
}

// Every stage after `simulate`, in dependency order.
inline void run_all(const RunConfig& cfg) {
    run_segment(cfg);
    run_features(cfg);
    run_compile_plots(cfg);
    run_train(cfg);
    run_predict(cfg);
    run_habitat(cfg);
    run_report(cfg);
}

} // namespace efi::pipeline

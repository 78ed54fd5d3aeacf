#pragma once

#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/geodata/grid_frame.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace efi {

// Gridded band data. Values are row-major with row 0 at the bottom, so
// values[row * ncols + col] is the cell whose lower-left corner is
// (x_origin + col * cellsize, y_origin + row * cellsize).
struct RasterGrid {
    GridFrame frame;
    double nodata = -9999.0;
    std::vector<double> values;

    RasterGrid() = default;
    RasterGrid(GridFrame f, double fill, double nodata_value = -9999.0)
        : frame(f), nodata(nodata_value), values(f.cell_count(), fill) {
        frame.validate();
    }

    int ncols() const { return frame.ncols; }
    int nrows() const { return frame.nrows; }

    double& at(int row, int col) { return values[frame.linear({row, col})]; }
    double at(int row, int col) const { return values[frame.linear({row, col})]; }
    double& at(const CellIndex& c) { return values[frame.linear(c)]; }
    double at(const CellIndex& c) const { return values[frame.linear(c)]; }

    bool is_nodata(double v) const { return v == nodata || std::isnan(v); }
    bool is_nodata(const CellIndex& c) const { return is_nodata(at(c)); }

    void validate() const {
        frame.validate();
        if (values.size() != frame.cell_count())
            throw DimensionError("raster holds " + std::to_string(values.size()) + " values, expected " +
                                 std::to_string(frame.cell_count()));
    }
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool starts_numeric(const std::string& token) {
    if (token.empty())
        return false;
    const char c = token[0];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

} // namespace detail

inline RasterGrid parse_ascii_grid(std::istream& in, const std::string& source) {
    std::map<std::string, std::string> header;
    std::string line;
    std::vector<std::string> data_lines;
    bool in_data = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (detail::trim(line).empty())
            continue;
        std::istringstream ls(line);
        std::string first;
        ls >> first;
        if (!in_data && !detail::starts_numeric(first)) {
            std::string value, extra;
            if (!(ls >> value) || (ls >> extra))
                throw FormatError(source + ": malformed header line for key '" + first + "'");
            const std::string key = detail::lower(first);
            static const char* known[] = {"ncols", "nrows", "xllcorner", "yllcorner", "xllcenter",
                                          "yllcenter", "cellsize", "nodata_value"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
                std::end(known))
                throw FormatError(source + ": unknown header key '" + first + "'");
            header[key] = value;
            continue;
        }
        in_data = true;
        data_lines.push_back(line);
    }

    auto number = [&](const std::string& key) -> double {
        auto it = header.find(key);
        if (it == header.end())
            throw FormatError(source + ": missing header key '" + key + "'");
        double v = 0.0;
        if (!detail::try_parse_double(it->second, v) || !std::isfinite(v))
            throw FormatError(source + ": bad value for header key '" + key + "': '" + it->second + "'");
        return v;
    };
    auto integer = [&](const std::string& key) -> int {
        const double v = number(key);
        if (v != std::floor(v) || v < 1 || v > 1e9)
            throw FormatError(source + ": header key '" + key + "' must be a positive integer");
        return static_cast<int>(v);
    };

    GridFrame frame;
    frame.ncols = integer("ncols");
    frame.nrows = integer("nrows");
    frame.cellsize = number("cellsize");
    if (!(frame.cellsize > 0.0))
        throw FormatError(source + ": header key 'cellsize' must be positive");
    if (header.count("xllcorner"))
        frame.x_origin = number("xllcorner");
    else if (header.count("xllcenter"))
        frame.x_origin = number("xllcenter") - 0.5 * frame.cellsize;
    else
        throw FormatError(source + ": missing header key 'xllcorner'");
    if (header.count("yllcorner"))
        frame.y_origin = number("yllcorner");
    else if (header.count("yllcenter"))
        frame.y_origin = number("yllcenter") - 0.5 * frame.cellsize;
    else
        throw FormatError(source + ": missing header key 'yllcorner'");

    RasterGrid grid;
    grid.frame = frame;
    grid.nodata = header.count("nodata_value") ? number("nodata_value") : -9999.0;
    grid.values.assign(frame.cell_count(), grid.nodata);

    if (data_lines.size() != static_cast<std::size_t>(frame.nrows))
        throw DimensionError(source + ": expected " + std::to_string(frame.nrows) + " data rows, found " +
                             std::to_string(data_lines.size()));
    for (int file_row = 0; file_row < frame.nrows; ++file_row) {
        std::istringstream ls(data_lines[static_cast<std::size_t>(file_row)]);
        const int row = frame.nrows - 1 - file_row;
        std::string tok;
        int col = 0;
        while (ls >> tok) {
            if (col >= frame.ncols)
                throw DimensionError(source + ": data row " + std::to_string(file_row + 1) + " has more than " +
                                     std::to_string(frame.ncols) + " values");
            grid.at(row, col) =
                detail::parse_double(tok, source + " row " + std::to_string(file_row + 1));
            ++col;
        }
        if (col != frame.ncols)
            throw DimensionError(source + ": data row " + std::to_string(file_row + 1) + " has " +
                                 std::to_string(col) + " values, expected " + std::to_string(frame.ncols));
    }
    return grid;
}

inline RasterGrid read_ascii_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    return parse_ascii_grid(in, path);
}

// Values are written in shortest round-trip form, so write/read is exact.
inline void write_ascii_grid(std::ostream& out, const RasterGrid& grid) {
    grid.validate();
    const GridFrame& f = grid.frame;
    out << "ncols " << f.ncols << '\n'
        << "nrows " << f.nrows << '\n'
        << "xllcorner " << detail::format_double(f.x_origin) << '\n'
        << "yllcorner " << detail::format_double(f.y_origin) << '\n'
        << "cellsize " << detail::format_double(f.cellsize) << '\n'
        << "NODATA_value " << detail::format_double(grid.nodata) << '\n';
    for (int row = f.nrows - 1; row >= 0; --row) {
        for (int col = 0; col < f.ncols; ++col) {
            if (col)
                out << ' ';
            out << detail::format_double(grid.at(row, col));
        }
        out << '\n';
    }
}

inline void write_ascii_grid(const std::string& path, const RasterGrid& grid) {
    auto out = detail::open_output(path);
    write_ascii_grid(out, grid);
    if (!out)
        throw IoError("failed writing " + path);
}

// Named, co-registered bands (e.g. nir/red/blue). All bands share one frame.
struct BandSet {
    std::vector<std::string> names;
    std::vector<RasterGrid> grids;

    void add(std::string name, RasterGrid grid) {
        grid.validate();
        if (!grids.empty() && !(grid.frame == grids.front().frame))
            throw ConsistencyError("band '" + name + "' is not co-registered with band '" + names.front() + "'");
        if (find(name))
            throw ConsistencyError("duplicate band '" + name + "'");
        names.push_back(std::move(name));
        grids.push_back(std::move(grid));
    }

    const RasterGrid* find(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return &grids[i];
        return nullptr;
    }

    const GridFrame& frame() const {
        if (grids.empty())
            throw DataError("band set is empty");
        return grids.front().frame;
    }
};

} // namespace efi

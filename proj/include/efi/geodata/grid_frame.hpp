#pragma once

#include "efi/error.hpp"
#include "efi/units.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

namespace efi {

struct CellIndex {
    int row = 0;
    int col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

// Axis-aligned lattice of square cells. Row 0 is the southernmost row and
// (x_origin, y_origin) is the lower-left corner of cell (0, 0).
struct GridFrame {
    int ncols = 0;
    int nrows = 0;
    double x_origin = 0.0;
    double y_origin = 0.0;
    double cellsize = 1.0;

    void validate() const {
        if (ncols < 1 || nrows < 1)
            throw DimensionError("grid must have at least one row and column");
        if (!(cellsize > 0.0) || !std::isfinite(cellsize))
            throw DomainError("cellsize must be positive");
        if (!std::isfinite(x_origin) || !std::isfinite(y_origin))
            throw DomainError("grid origin must be finite");
    }

    std::size_t cell_count() const { return static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows); }
    double x_max() const { return x_origin + ncols * cellsize; }
    double y_max() const { return y_origin + nrows * cellsize; }
    double cell_acres() const { return cell_area(cellsize); }

    bool contains(const CellIndex& c) const { return c.row >= 0 && c.row < nrows && c.col >= 0 && c.col < ncols; }

    std::size_t linear(const CellIndex& c) const {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(ncols) + static_cast<std::size_t>(c.col);
    }

    CellIndex cell_at(std::size_t linear_index) const {
        return {static_cast<int>(linear_index / static_cast<std::size_t>(ncols)),
                static_cast<int>(linear_index % static_cast<std::size_t>(ncols))};
    }

    // Cell containing (x, y). Points on the far east/north edge belong to the
    // last column/row so the closed extent is covered.
    std::optional<CellIndex> cell_of(double x, double y) const {
        if (!(x >= x_origin && x <= x_max() && y >= y_origin && y <= y_max()))
            return std::nullopt;
        int col = static_cast<int>(std::floor((x - x_origin) / cellsize));
        int row = static_cast<int>(std::floor((y - y_origin) / cellsize));
        if (col >= ncols)
            col = ncols - 1;
        if (row >= nrows)
            row = nrows - 1;
        return CellIndex{row, col};
    }

    double center_x(int col) const { return x_origin + (col + 0.5) * cellsize; }
    double center_y(int row) const { return y_origin + (row + 0.5) * cellsize; }

    friend bool operator==(const GridFrame&, const GridFrame&) = default;
};

} // namespace efi

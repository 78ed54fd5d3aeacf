#pragma once

#include "efi/error.hpp"

#include <string>

namespace efi {

// Linear units are feet throughout; areas are acres.
inline constexpr double kSquareFeetPerAcre = 43560.0;

inline double cell_area(double cellsize_ft) {
    if (!(cellsize_ft > 0.0))
        throw DomainError("cellsize must be positive, got " + std::to_string(cellsize_ft));
    return cellsize_ft * cellsize_ft / kSquareFeetPerAcre;
}

} // namespace efi

#pragma once

#include "efi/detail/csv.hpp"
#include "efi/error.hpp"
#include "efi/geodata/grid_frame.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace efi {

using PropertyValue = std::variant<double, std::string>;

// A reporting-unit polygon expressed as a union of lattice cells.
struct PolygonRecord {
    std::string id;
    std::vector<CellIndex> cell_members;
    double area = 0.0; // acres
    std::vector<std::pair<std::string, PropertyValue>> properties;

    void set(const std::string& key, PropertyValue value) {
        for (auto& [k, v] : properties)
            if (k == key) {
                v = std::move(value);
                return;
            }
        properties.emplace_back(key, std::move(value));
    }
};

// Integer lattice vertex: (col, row) corner indices of the grid.
struct LatticePoint {
    long long x = 0;
    long long y = 0;
    friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
    friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

using LatticeRing = std::vector<LatticePoint>; // closed: front() == back()

struct LatticePolygon {
    LatticeRing exterior;
    std::vector<LatticeRing> holes;
};

// Twice the signed area; positive for counter-clockwise rings.
inline long long ring_area2(const LatticeRing& ring) {
    long long s = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        s += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
    return s;
}

namespace detail {

inline bool point_in_ring(double px, double py, const LatticeRing& ring) {
    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double xi = static_cast<double>(ring[i].x), yi = static_cast<double>(ring[i].y);
        const double xj = static_cast<double>(ring[i + 1].x), yj = static_cast<double>(ring[i + 1].y);
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

} // namespace detail

// Outline of a union of cells. Boundary edges are oriented with the cells on
// their left, so exteriors come out counter-clockwise and holes clockwise.
// Where two member cells touch only at a corner, the tracer takes the
// left-most turn so each ring wraps one 4-connected piece; separate rings may
// touch at that corner but no ring touches itself. Vertices between collinear
// cell edges are kept.
inline std::vector<LatticePolygon> trace_outline(const std::vector<CellIndex>& members) {
    if (members.empty())
        return {};
    std::vector<std::pair<int, int>> sorted;
    sorted.reserve(members.size());
    for (const auto& c : members)
        sorted.emplace_back(c.row, c.col);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto in = [&](int r, int c) { return std::binary_search(sorted.begin(), sorted.end(), std::make_pair(r, c)); };

    struct Edge {
        LatticePoint from, to;
        bool used = false;
    };
    std::vector<Edge> edges;
    for (const auto& [r, c] : sorted) {
        const long long x = c, y = r;
        if (!in(r - 1, c))
            edges.push_back({{x, y}, {x + 1, y}});
        if (!in(r, c + 1))
            edges.push_back({{x + 1, y}, {x + 1, y + 1}});
        if (!in(r + 1, c))
            edges.push_back({{x + 1, y + 1}, {x, y + 1}});
        if (!in(r, c - 1))
            edges.push_back({{x, y + 1}, {x, y}});
    }
    // Order by start point (y, x) so ring start points are canonical.
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.from.y != b.from.y)
            return a.from.y < b.from.y;
        if (a.from.x != b.from.x)
            return a.from.x < b.from.x;
        return std::tie(a.to.y, a.to.x) < std::tie(b.to.y, b.to.x);
    });
    std::map<LatticePoint, std::vector<std::size_t>> outgoing;
    for (std::size_t i = 0; i < edges.size(); ++i)
        outgoing[edges[i].from].push_back(i);

    std::vector<LatticeRing> rings;
    for (std::size_t start = 0; start < edges.size(); ++start) {
        if (edges[start].used)
            continue;
        LatticeRing ring{edges[start].from};
        std::size_t cur = start;
        edges[cur].used = true;
        for (;;) {
            const Edge& e = edges[cur];
            ring.push_back(e.to);
            const long long dx = e.to.x - e.from.x, dy = e.to.y - e.from.y;
            std::size_t best = edges.size();
            long long best_turn = 0;
            for (std::size_t cand : outgoing[e.to]) {
                if (edges[cand].used && cand != start)
                    continue;
                const long long ox = edges[cand].to.x - edges[cand].from.x;
                const long long oy = edges[cand].to.y - edges[cand].from.y;
                const long long turn = dx * oy - dy * ox; // <0 right, 0 straight, >0 left
                if (best == edges.size() || turn > best_turn) {
                    best = cand;
                    best_turn = turn;
                }
            }
            if (best == edges.size())
                throw ConsistencyError("open boundary while tracing cell outline");
            if (best == start)
                break;
            edges[best].used = true;
            cur = best;
        }
        rings.push_back(std::move(ring));
    }

    std::vector<LatticePolygon> polygons;
    std::vector<LatticeRing> holes;
    for (auto& r : rings) {
        if (ring_area2(r) > 0)
            polygons.push_back({std::move(r), {}});
        else
            holes.push_back(std::move(r));
    }
    for (auto& h : holes) {
        if (polygons.size() == 1) {
            polygons.front().holes.push_back(std::move(h));
            continue;
        }
        // Centre of the complement cell to the right of the first hole edge.
        const double dx = static_cast<double>(h[1].x - h[0].x), dy = static_cast<double>(h[1].y - h[0].y);
        const double px = 0.5 * static_cast<double>(h[0].x + h[1].x) + 0.5 * dy;
        const double py = 0.5 * static_cast<double>(h[0].y + h[1].y) - 0.5 * dx;
        std::size_t owner = polygons.size();
        long long owner_area = 0;
        for (std::size_t i = 0; i < polygons.size(); ++i) {
            if (!detail::point_in_ring(px, py, polygons[i].exterior))
                continue;
            const long long a = ring_area2(polygons[i].exterior);
            if (owner == polygons.size() || a < owner_area) {
                owner = i;
                owner_area = a;
            }
        }
        if (owner == polygons.size())
            throw ConsistencyError("hole ring without enclosing exterior");
        polygons[owner].holes.push_back(std::move(h));
    }
    return polygons;
}

inline nlohmann::ordered_json polygon_record_feature(const PolygonRecord& unit, const GridFrame& frame) {
    frame.validate();
    if (unit.cell_members.empty())
        throw ConsistencyError("unit '" + unit.id + "' has no member cells");
    for (const auto& c : unit.cell_members)
        if (!frame.contains(c))
            throw ConsistencyError("unit '" + unit.id + "' references cell (" + std::to_string(c.row) + ", " +
                                   std::to_string(c.col) + ") outside the " + std::to_string(frame.nrows) + "x" +
                                   std::to_string(frame.ncols) + " tessellation");
    const double expected = static_cast<double>(unit.cell_members.size()) * frame.cell_acres();
    if (!(std::abs(unit.area - expected) <= 1e-9 * expected))
        throw ConsistencyError("unit '" + unit.id + "' area does not match its member cells");

    auto to_coords = [&](const LatticeRing& ring) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& p : ring)
            arr.push_back({frame.x_origin + static_cast<double>(p.x) * frame.cellsize,
                           frame.y_origin + static_cast<double>(p.y) * frame.cellsize});
        return arr;
    };
    const auto polys = trace_outline(unit.cell_members);
    auto polygon_coords = [&](const LatticePolygon& poly) {
        nlohmann::ordered_json rings = nlohmann::ordered_json::array();
        rings.push_back(to_coords(poly.exterior));
        for (const auto& h : poly.holes)
            rings.push_back(to_coords(h));
        return rings;
    };

    nlohmann::ordered_json geometry;
    if (polys.size() == 1) {
        geometry["type"] = "Polygon";
        geometry["coordinates"] = polygon_coords(polys.front());
    } else {
        geometry["type"] = "MultiPolygon";
        nlohmann::ordered_json all = nlohmann::ordered_json::array();
        for (const auto& p : polys)
            all.push_back(polygon_coords(p));
        geometry["coordinates"] = std::move(all);
    }

    nlohmann::ordered_json props;
    props["id"] = unit.id;
    props["area_ac"] = unit.area;
    for (const auto& [key, value] : unit.properties) {
        if (const double* d = std::get_if<double>(&value)) {
            if (std::isfinite(*d))
                props[key] = *d;
            else
                props[key] = nullptr;
        } else {
            props[key] = std::get<std::string>(value);
        }
    }

    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["id"] = unit.id;
    feature["geometry"] = std::move(geometry);
    feature["properties"] = std::move(props);
    return feature;
}

inline nlohmann::ordered_json to_geojson(const std::vector<PolygonRecord>& units, const GridFrame& frame) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::ordered_json::array();
    for (const auto& u : units)
        fc["features"].push_back(polygon_record_feature(u, frame));
    return fc;
}

inline void write_geojson(const std::vector<PolygonRecord>& units, const GridFrame& frame, const std::string& path) {
    const auto doc = to_geojson(units, frame);
    auto out = detail::open_output(path);
    out << doc.dump() << '\n';
    if (!out)
        throw IoError("failed writing " + path);
}

} // namespace efi

#pragma once

#include "efi/detail/binary_io.hpp"
#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace efi {

inline constexpr int kGroundClass = 2;

struct LidarPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    int return_number = 1;
    int classification = 1;

    bool is_ground() const { return classification == kGroundClass; }
    bool is_first_return() const { return return_number == 1; }

    friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct PointCloud {
    std::vector<LidarPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                throw DomainError("point " + std::to_string(i) + " has non-finite coordinates");
            if (p.return_number < 1)
                throw DomainError("point " + std::to_string(i) + " has return_number < 1");
        }
    }
};

// ---------------------------------------------------------------------------
// CSV fallback: header row with x,y,z,return_number,classification (any order).

inline PointCloud parse_point_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            for (auto& h : header)
                h = std::string(detail::trim(h));
        }
    }
    if (header.empty())
        throw FormatError(source + ": missing header row");
    static const std::array<const char*, 5> names = {"x", "y", "z", "return_number", "classification"};
    std::array<std::size_t, 5> col{};
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), names[k]);
        if (it == header.end())
            throw SchemaError(source + ": missing required column '" + names[k] + "'");
        col[k] = static_cast<std::size_t>(it - header.begin());
    }
    const std::size_t need = *std::max_element(col.begin(), col.end()) + 1;

    PointCloud cloud;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        const auto f = detail::split_csv_line(line);
        const std::string where = source + " line " + std::to_string(lineno);
        if (f.size() < 5 || f.size() < need)
            throw FormatError(where + ": expected 5 fields, found " + std::to_string(f.size()));
        LidarPoint p;
        p.x = detail::parse_double(f[col[0]], where);
        p.y = detail::parse_double(f[col[1]], where);
        p.z = detail::parse_double(f[col[2]], where);
        p.return_number = static_cast<int>(detail::parse_int(f[col[3]], where));
        p.classification = static_cast<int>(detail::parse_int(f[col[4]], where));
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw FormatError(where + ": non-finite coordinate");
        if (p.return_number < 1)
            throw FormatError(where + ": return_number must be >= 1");
        cloud.points.push_back(p);
    }
    return cloud;
}

inline void write_point_csv(std::ostream& out, const PointCloud& cloud) {
    out << "x,y,z,return_number,classification\n";
    for (const auto& p : cloud.points)
        out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << ',' << detail::format_double(p.z)
            << ',' << p.return_number << ',' << p.classification << '\n';
}

// ---------------------------------------------------------------------------
// LAS 1.2-1.4, point data record formats 0-3. LAZ is not supported.

namespace las {

inline constexpr std::size_t kHeaderSize12 = 227;

struct Header {
    std::uint8_t version_major = 1;
    std::uint8_t version_minor = 2;
    std::uint16_t header_size = 0;
    std::uint32_t offset_to_points = 0;
    std::uint8_t point_format = 0;
    std::uint16_t record_length = 0;
    std::uint64_t point_count = 0;
    std::array<double, 3> scale{0.01, 0.01, 0.01};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
};

inline std::size_t min_record_length(std::uint8_t format) {
    switch (format) {
    case 0: return 20;
    case 1: return 28;
    case 2: return 26;
    case 3: return 34;
    default: return 0;
    }
}

inline Header parse_header(const std::vector<unsigned char>& bytes, const std::string& source) {
    if (bytes.size() < kHeaderSize12 || std::memcmp(bytes.data(), "LASF", 4) != 0)
        throw FormatError(source + ": not a LAS file (missing LASF signature)");
    const unsigned char* b = bytes.data();
    Header h;
    h.version_major = b[24];
    h.version_minor = b[25];
    if (h.version_major != 1 || h.version_minor < 2 || h.version_minor > 4)
        throw CapabilityError(source + ": LAS version " + std::to_string(h.version_major) + "." +
                              std::to_string(h.version_minor) + " (supported: 1.2-1.4)");
    h.header_size = detail::load_le<std::uint16_t>(b + 94);
    h.offset_to_points = detail::load_le<std::uint32_t>(b + 96);
    const std::uint8_t raw_format = b[104];
    if (raw_format & 0xC0)
        throw CapabilityError(source + ": compressed (LAZ) point data");
    h.point_format = raw_format;
    if (h.point_format > 3)
        throw CapabilityError(source + ": point data record format " + std::to_string(h.point_format) +
                              " (supported: 0-3)");
    h.record_length = detail::load_le<std::uint16_t>(b + 105);
    if (h.record_length < min_record_length(h.point_format))
        throw FormatError(source + ": point record length " + std::to_string(h.record_length) +
                          " too short for format " + std::to_string(h.point_format));
    h.point_count = detail::load_le<std::uint32_t>(b + 107);
    if (h.version_minor == 4 && bytes.size() >= 255) {
        const auto wide = detail::load_le<std::uint64_t>(b + 247);
        if (h.point_count == 0 || wide > h.point_count)
            h.point_count = wide;
    }
    for (int k = 0; k < 3; ++k) {
        h.scale[k] = detail::load_le<double>(b + 131 + 8 * k);
        h.offset[k] = detail::load_le<double>(b + 155 + 8 * k);
    }
    if (h.header_size < kHeaderSize12 || h.offset_to_points < h.header_size)
        throw FormatError(source + ": inconsistent header size / point offset");
    return h;
}

} // namespace las

inline PointCloud parse_las(const std::vector<unsigned char>& bytes, const std::string& source) {
    const las::Header h = las::parse_header(bytes, source);
    const std::uint64_t needed = h.offset_to_points + h.point_count * h.record_length;
    if (needed > bytes.size())
        throw FormatError(source + ": truncated point data (" + std::to_string(h.point_count) + " points declared)");
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(h.point_count));
    const unsigned char* p = bytes.data() + h.offset_to_points;
    for (std::uint64_t i = 0; i < h.point_count; ++i, p += h.record_length) {
        LidarPoint pt;
        pt.x = detail::load_le<std::int32_t>(p + 0) * h.scale[0] + h.offset[0];
        pt.y = detail::load_le<std::int32_t>(p + 4) * h.scale[1] + h.offset[1];
        pt.z = detail::load_le<std::int32_t>(p + 8) * h.scale[2] + h.offset[2];
        pt.return_number = p[14] & 0x07;
        pt.classification = p[15] & 0x1F;
        if (pt.return_number < 1)
            pt.return_number = 1;
        cloud.points.push_back(pt);
    }
    return cloud;
}

// Writes LAS 1.2, point format 0. Offsets are chosen from the data minimum,
// rounded down to a multiple of the scale.
inline std::vector<unsigned char> encode_las(const PointCloud& cloud, double scale = 0.01) {
    if (!(scale > 0.0))
        throw DomainError("LAS scale must be positive");
    cloud.validate();
    std::array<double, 3> lo{0.0, 0.0, 0.0}, hi{0.0, 0.0, 0.0};
    if (!cloud.empty()) {
        lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
              std::numeric_limits<double>::max()};
        hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
              std::numeric_limits<double>::lowest()};
        for (const auto& p : cloud.points) {
            const double v[3] = {p.x, p.y, p.z};
            for (int k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], v[k]);
                hi[k] = std::max(hi[k], v[k]);
            }
        }
    }
    std::array<double, 3> offset{};
    for (int k = 0; k < 3; ++k) {
        offset[k] = std::floor(lo[k]);
        if ((hi[k] - offset[k]) / scale > 2147483000.0)
            throw DomainError("coordinate range too large for LAS scale " + detail::format_double(scale));
    }

    const std::size_t record = 20;
    std::vector<unsigned char> out(las::kHeaderSize12 + record * cloud.size(), 0);
    unsigned char* b = out.data();
    std::memcpy(b, "LASF", 4);
    b[24] = 1;
    b[25] = 2;
    const char software[] = "efi";
    std::memcpy(b + 58, software, sizeof(software) - 1);
    detail::store_le<std::uint16_t>(b + 94, static_cast<std::uint16_t>(las::kHeaderSize12));
    detail::store_le<std::uint32_t>(b + 96, static_cast<std::uint32_t>(las::kHeaderSize12));
    detail::store_le<std::uint32_t>(b + 100, 0);
    b[104] = 0;
    detail::store_le<std::uint16_t>(b + 105, static_cast<std::uint16_t>(record));
    if (cloud.size() > 0xFFFFFFFFull)
        throw CapabilityError("more than 2^32 points in a LAS 1.2 file");
    detail::store_le<std::uint32_t>(b + 107, static_cast<std::uint32_t>(cloud.size()));
    std::array<std::uint32_t, 5> by_return{};
    for (int k = 0; k < 3; ++k) {
        detail::store_le<double>(b + 131 + 8 * k, scale);
        detail::store_le<double>(b + 155 + 8 * k, offset[k]);
    }
    detail::store_le<double>(b + 179, hi[0]);
    detail::store_le<double>(b + 187, lo[0]);
    detail::store_le<double>(b + 195, hi[1]);
    detail::store_le<double>(b + 203, lo[1]);
    detail::store_le<double>(b + 211, hi[2]);
    detail::store_le<double>(b + 219, lo[2]);

    unsigned char* p = b + las::kHeaderSize12;
    for (const auto& pt : cloud.points) {
        if (pt.return_number > 7)
            throw CapabilityError("return_number " + std::to_string(pt.return_number) + " exceeds LAS 3-bit field");
        if (pt.classification < 0 || pt.classification > 31)
            throw CapabilityError("classification " + std::to_string(pt.classification) +
                                  " exceeds LAS 5-bit field");
        const double v[3] = {pt.x, pt.y, pt.z};
        for (int k = 0; k < 3; ++k)
            detail::store_le<std::int32_t>(p + 4 * k,
                                           static_cast<std::int32_t>(std::llround((v[k] - offset[k]) / scale)));
        p[14] = static_cast<unsigned char>((pt.return_number & 0x07) | ((pt.return_number & 0x07) << 3));
        p[15] = static_cast<unsigned char>(pt.classification & 0x1F);
        if (pt.return_number <= 5)
            ++by_return[static_cast<std::size_t>(pt.return_number - 1)];
        p += record;
    }
    for (int k = 0; k < 5; ++k)
        detail::store_le<std::uint32_t>(b + 111 + 4 * k, by_return[static_cast<std::size_t>(k)]);
    return out;
}

inline void write_las(const std::string& path, const PointCloud& cloud, double scale = 0.01) {
    const auto bytes = encode_las(cloud, scale);
    auto out = detail::open_output(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("failed writing " + path);
}

inline void write_point_csv(const std::string& path, const PointCloud& cloud) {
    auto out = detail::open_output(path);
    write_point_csv(out, cloud);
    if (!out)
        throw IoError("failed writing " + path);
}

// Dispatches on content: a LASF signature selects the LAS reader, anything
// else is read as the CSV fallback.
inline PointCloud read_point_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "LASF", 4) == 0)
        return parse_las(bytes, path);
    std::istringstream text(std::string(bytes.begin(), bytes.end()));
    return parse_point_csv(text, path);
}

} // namespace efi

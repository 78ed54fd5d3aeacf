#pragma once

#include "efi/detail/csv.hpp"
#include "efi/detail/numfmt.hpp"
#include "efi/error.hpp"
#include "efi/learn/elastic_net.hpp"
#include "efi/learn/normalizer.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace efi::learn {

// A fitted per-attribute model: the normalizer restricted to the selected
// features, and the elastic-net fit over those standardized features.
struct TrainedModel {
    std::string attribute;
    Normalizer normalizer;
    ElasticNetModel model;
};

inline constexpr const char* kModelMagic = "efi-elastic-net-model";
inline constexpr int kModelVersion = 1;

// Plain-text document; numbers use shortest round-trip decimals.
//
//   efi-elastic-net-model 1
//   attribute <name>
//   lambda <v>
//   alpha <v>
//   intercept <v>
//   converged <0|1>
//   sweeps <n>
//   features <p>
//   feature <name> <mean> <std> <coefficient>   (p lines)
//   end
inline void write_model(std::ostream& out, const TrainedModel& m) {
    const auto& nm = m.normalizer;
    if (nm.names.size() != m.model.coefficients.size() || nm.means.size() != nm.names.size() ||
        nm.stds.size() != nm.names.size())
        throw ConsistencyError("model '" + m.attribute + "': normalizer and coefficients are misaligned");
    auto token = [](const std::string& s, const char* what) {
        if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos)
            throw FormatError(std::string(what) + " '" + s + "' must be a nonempty token without whitespace");
        return s;
    };
    using efi::detail::format_double;
    out << kModelMagic << ' ' << kModelVersion << '\n'
        << "attribute " << token(m.attribute, "attribute") << '\n'
        << "lambda " << format_double(m.model.lambda) << '\n'
        << "alpha " << format_double(m.model.alpha) << '\n'
        << "intercept " << format_double(m.model.intercept) << '\n'
        << "converged " << (m.model.converged ? 1 : 0) << '\n'
        << "sweeps " << m.model.sweeps << '\n'
        << "features " << nm.names.size() << '\n';
    for (std::size_t k = 0; k < nm.names.size(); ++k)
        out << "feature " << token(nm.names[k], "feature name") << ' ' << format_double(nm.means[k]) << ' '
            << format_double(nm.stds[k]) << ' ' << format_double(m.model.coefficients[k]) << '\n';
    out << "end\n";
}

inline TrainedModel read_model(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    auto next = [&](const std::string& key) {
        while (std::getline(in, line)) {
            ++lineno;
            if (!efi::detail::trim(line).empty())
                break;
            line.clear();
        }
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key)
            throw FormatError(source + " line " + std::to_string(lineno) + ": expected '" + key + "'");
        std::string rest;
        std::getline(ls, rest);
        return std::string(efi::detail::trim(rest));
    };
    const std::string where = source;
    const std::string version = next(kModelMagic);
    if (version != std::to_string(kModelVersion))
        throw FormatError(where + ": unsupported model version '" + version + "'");
    TrainedModel m;
    m.attribute = next("attribute");
    m.model.lambda = efi::detail::parse_double(next("lambda"), where + " lambda");
    m.model.alpha = efi::detail::parse_double(next("alpha"), where + " alpha");
    m.model.intercept = efi::detail::parse_double(next("intercept"), where + " intercept");
    m.model.converged = efi::detail::parse_int(next("converged"), where + " converged") != 0;
    m.model.sweeps = static_cast<int>(efi::detail::parse_int(next("sweeps"), where + " sweeps"));
    const auto count = efi::detail::parse_int(next("features"), where + " features");
    if (count < 0)
        throw FormatError(where + ": negative feature count");
    for (long long k = 0; k < count; ++k) {
        std::istringstream ls(next("feature"));
        std::string name, mean, sd, coef, extra;
        if (!(ls >> name >> mean >> sd >> coef) || (ls >> extra))
            throw FormatError(where + " line " + std::to_string(lineno) + ": malformed feature line");
        m.normalizer.names.push_back(name);
        m.normalizer.source_index.push_back(static_cast<std::size_t>(k));
        m.normalizer.means.push_back(efi::detail::parse_double(mean, where));
        const double s = efi::detail::parse_double(sd, where);
        if (!(s > 0.0))
            throw FormatError(where + ": feature '" + name + "' has nonpositive std");
        m.normalizer.stds.push_back(s);
        m.model.coefficients.push_back(efi::detail::parse_double(coef, where));
    }
    next("end");
    m.model.selected_features = m.normalizer.names;
    return m;
}

inline void write_model(const std::string& path, const TrainedModel& m) {
    auto out = efi::detail::open_output(path);
    write_model(out, m);
    if (!out)
        throw IoError("failed writing " + path);
}

inline TrainedModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    return read_model(in, path);
}

} // namespace efi::learn

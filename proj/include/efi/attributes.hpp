#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace efi {

// The eight modelled forest attributes, in reporting order.
enum class Attribute : std::size_t { bapa, bapa_softwood, bapa_snag, ht, dia, tpa, cagpa, cncvr_pct };

inline constexpr std::size_t kAttributeCount = 8;

inline constexpr std::array<Attribute, kAttributeCount> kAllAttributes = {
    Attribute::bapa, Attribute::bapa_softwood, Attribute::bapa_snag, Attribute::ht,
    Attribute::dia,  Attribute::tpa,           Attribute::cagpa,     Attribute::cncvr_pct};

inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "bapa", "bapa_softwood", "bapa_snag", "ht", "dia", "tpa", "cagpa", "cncvr_pct"};

// Column names of the prediction outputs.
inline constexpr std::array<std::string_view, kAttributeCount> kPredictionNames = {
    "pred_bapa", "pred_bapa_softwood", "pred_bapa_snag", "pred_ht",
    "pred_dia",  "pred_tpa",           "pred_cagpa",     "pred_cncvr_pct"};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }
constexpr std::string_view name_of(Attribute a) { return kAttributeNames[index_of(a)]; }
constexpr std::string_view prediction_name(Attribute a) { return kPredictionNames[index_of(a)]; }

// Units: bapa* ft²/ac, ht ft, dia in, tpa stems/ac, cagpa tons/ac, cncvr_pct %.
struct AttributeVector {
    double bapa = 0.0;
    double bapa_softwood = 0.0;
    double bapa_snag = 0.0;
    double ht = 0.0;
    double dia = 0.0;
    double tpa = 0.0;
    double cagpa = 0.0;
    double cncvr_pct = 0.0;

    double& operator[](Attribute a) {
        switch (a) {
        case Attribute::bapa: return bapa;
        case Attribute::bapa_softwood: return bapa_softwood;
        case Attribute::bapa_snag: return bapa_snag;
        case Attribute::ht: return ht;
        case Attribute::dia: return dia;
        case Attribute::tpa: return tpa;
        case Attribute::cagpa: return cagpa;
        case Attribute::cncvr_pct: break;
        }
        return cncvr_pct;
    }
    double operator[](Attribute a) const { return const_cast<AttributeVector&>(*this)[a]; }

    friend bool operator==(const AttributeVector&, const AttributeVector&) = default;
};

} // namespace efi

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpart/errors.hpp"
#include "kpart/search.hpp"
#include "kpart/series.hpp"

namespace kpart {

/// On-disk fitted-model record. Coefficients live in scaled predictor space;
/// knots are stored in raw units with the transform alongside, which is
/// enough to evaluate the curve anywhere in the observed range.
struct ModelDocument {
    std::string schema_version = "1";
    std::string series_name;
    std::size_t k_requested = 0;
    std::vector<double> knots_raw_units;  // winning knots, increasing
    std::vector<int> selected_years;      // aligned with knots_raw_units
    std::vector<double> coefficients_scaled;
    ScaleTransform scale;
    double r2 = 0.0;
    double r2_adj = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> t_stats;

    std::vector<double> knots_scaled() const {
        std::vector<double> out;
        out.reserve(knots_raw_units.size());
        for (const double k : knots_raw_units) out.push_back(scale.forward(k));
        return out;
    }

    /// Field-wise equality with NaN == NaN, so round-trip checks work even
    /// when a zero-residual fit produced NaN t-statistics.
    friend bool operator==(const ModelDocument& a, const ModelDocument& b) {
        auto eq = [](const std::vector<double>& u, const std::vector<double>& v) {
            if (u.size() != v.size()) return false;
            for (std::size_t i = 0; i < u.size(); ++i)
                if (u[i] != v[i] && !(std::isnan(u[i]) && std::isnan(v[i]))) return false;
            return true;
        };
        return a.schema_version == b.schema_version && a.series_name == b.series_name &&
               a.k_requested == b.k_requested && eq(a.knots_raw_units, b.knots_raw_units) &&
               a.selected_years == b.selected_years &&
               eq(a.coefficients_scaled, b.coefficients_scaled) &&
               a.scale.shift == b.scale.shift && a.scale.scale == b.scale.scale &&
               a.r2 == b.r2 && a.r2_adj == b.r2_adj && a.bic == b.bic && a.n == b.n &&
               a.p == b.p && eq(a.t_stats, b.t_stats);
    }
};

inline ModelDocument make_document(const std::string& series_name,
                                   const ModelSelectionResult& result) {
    ModelDocument doc;
    doc.series_name = series_name;
    doc.k_requested = result.k_requested;
    doc.knots_raw_units = result.winning_knots_raw();
    doc.selected_years = result.selected_years;
    doc.coefficients_scaled = result.winner.coefficients;
    doc.scale = result.scale;
    doc.r2 = result.winner.r2;
    doc.r2_adj = result.winner.r2_adj;
    doc.bic = result.winner_bic;
    doc.n = result.winner.n;
    doc.p = result.winner.p;
    doc.t_stats = result.winner.t_stats;
    return doc;
}

namespace detail {

// JSON has no NaN; non-finite stats are stored as null.
inline nlohmann::json number_array(const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const double x : v) {
        if (std::isfinite(x))
            arr.push_back(x);
        else
            arr.push_back(nullptr);
    }
    return arr;
}

inline std::vector<double> read_number_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array())
        throw format_error(std::string("model document: missing array '") + key + "'");
    std::vector<double> out;
    for (const auto& e : j[key]) {
        if (e.is_null())
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        else if (e.is_number())
            out.push_back(e.get<double>());
        else
            throw format_error(std::string("model document: non-numeric entry in '") + key + "'");
    }
    return out;
}

template <typename T>
T read_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key))
        throw format_error(std::string("model document: missing field '") + key + "'");
    try {
        return j[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw format_error(std::string("model document: bad type for '") + key + "'");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const ModelDocument& doc) {
    nlohmann::json j;
    j["schema_version"] = doc.schema_version;
    j["series_name"] = doc.series_name;
    j["k_requested"] = doc.k_requested;
    j["knots_raw_units"] = detail::number_array(doc.knots_raw_units);
    j["selected_years"] = doc.selected_years;
    j["coefficients_scaled"] = detail::number_array(doc.coefficients_scaled);
    j["scale"] = {{"shift", doc.scale.shift}, {"scale", doc.scale.scale}};
    j["r2"] = doc.r2;
    j["r2_adj"] = doc.r2_adj;
    j["bic"] = doc.bic;
    j["n"] = doc.n;
    j["p"] = doc.p;
    j["t_stats"] = detail::number_array(doc.t_stats);
    return j;
}

inline ModelDocument document_from_json(const nlohmann::json& j) {
    ModelDocument doc;
    doc.schema_version = detail::read_field<std::string>(j, "schema_version");
    doc.series_name = detail::read_field<std::string>(j, "series_name");
    doc.k_requested = detail::read_field<std::size_t>(j, "k_requested");
    doc.knots_raw_units = detail::read_number_array(j, "knots_raw_units");
    doc.selected_years = detail::read_field<std::vector<int>>(j, "selected_years");
    doc.coefficients_scaled = detail::read_number_array(j, "coefficients_scaled");
    if (!j.contains("scale"))
        throw format_error("model document: missing field 'scale'");
    doc.scale.shift = detail::read_field<double>(j["scale"], "shift");
    doc.scale.scale = detail::read_field<double>(j["scale"], "scale");
    doc.r2 = detail::read_field<double>(j, "r2");
    doc.r2_adj = detail::read_field<double>(j, "r2_adj");
    doc.bic = detail::read_field<double>(j, "bic");
    doc.n = detail::read_field<std::size_t>(j, "n");
    doc.p = detail::read_field<std::size_t>(j, "p");
    doc.t_stats = detail::read_number_array(j, "t_stats");
    if (doc.scale.scale <= 0.0)
        throw format_error("model document: scale must be positive");
    if (doc.coefficients_scaled.size() != 4 + doc.knots_raw_units.size())
        throw format_error("model document: coefficient count does not match knots");
    return doc;
}

inline void save_document(const ModelDocument& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot write model file: " + path.string());
    out << to_json(doc).dump(2) << '\n';
}

inline ModelDocument load_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("model file is not valid JSON: " + std::string(e.what()));
    }
    return document_from_json(j);
}

/// Fitted values of a stored model at raw predictor positions.
inline std::vector<double> evaluate_document(const ModelDocument& doc,
                                             std::span<const double> x_raw) {
    const KnotSet knots = knot_set_from_locations(doc.knots_scaled());
    std::vector<double> xs;
    xs.reserve(x_raw.size());
    for (const double u : x_raw) xs.push_back(doc.scale.forward(u));
    return evaluate_spline(doc.coefficients_scaled, knots, full_mask(knots.size()), xs);
}

}  // namespace kpart

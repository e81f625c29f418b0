#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kpart/errors.hpp"
#include "kpart/linalg.hpp"

namespace kpart {

/// Truncated cubic basis function, zero at and left of the knot.
inline double truncated_cubic(double x, double t) {
    const double d = x - t;
    return d > 0.0 ? d * d * d : 0.0;
}

/// Candidate knot: a predictor value plus where it came from.
/// partition_index and source_index are 0-based.
struct Knot {
    double location = 0.0;
    std::size_t partition_index = 0;
    std::size_t source_index = 0;

    bool operator==(const Knot&) const = default;
};

struct KnotSet {
    std::vector<Knot> knots;  // strictly increasing locations

    std::size_t size() const { return knots.size(); }
    bool empty() const { return knots.empty(); }

    std::vector<double> locations() const {
        std::vector<double> out;
        out.reserve(knots.size());
        for (const auto& k : knots) out.push_back(k.location);
        return out;
    }

    bool operator==(const KnotSet&) const = default;
};

/// Normalizes candidates into a KnotSet: sorts by location, drops duplicates
/// (keeping the lower partition index), and drops any knot at or beyond
/// x_max, whose basis column would be identically zero.
inline KnotSet make_knot_set(std::vector<Knot> candidates, double x_max) {
    std::sort(candidates.begin(), candidates.end(), [](const Knot& a, const Knot& b) {
        if (a.location != b.location) return a.location < b.location;
        return a.partition_index < b.partition_index;
    });
    KnotSet out;
    for (const auto& k : candidates) {
        if (k.location >= x_max) continue;
        if (!out.knots.empty() && out.knots.back().location == k.location) continue;
        out.knots.push_back(k);
    }
    return out;
}

inline KnotSet knot_set_from_locations(std::vector<double> locations,
                                       double x_max = std::numeric_limits<double>::infinity()) {
    std::vector<Knot> ks;
    ks.reserve(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i) ks.push_back({locations[i], i, i});
    return make_knot_set(std::move(ks), x_max);
}

/// Bit k set selects knot k (knots in increasing-location order).
using KnotMask = std::uint32_t;

inline KnotMask full_mask(std::size_t n_knots) {
    if (n_knots > 20) throw contract_error("at most 20 knots supported");
    return static_cast<KnotMask>((1u << n_knots) - 1u);
}

struct ColumnRole {
    enum class Kind { intercept, power, knot };
    Kind kind = Kind::intercept;
    int degree = 0;             // for Kind::power
    double knot_location = 0.0; // for Kind::knot

    static ColumnRole intercept() { return {Kind::intercept, 0, 0.0}; }
    static ColumnRole power(int degree) { return {Kind::power, degree, 0.0}; }
    static ColumnRole knot(double location) { return {Kind::knot, 0, location}; }

    std::string label() const {
        switch (kind) {
            case Kind::intercept: return "intercept";
            case Kind::power: return degree == 1 ? "x" : "x^" + std::to_string(degree);
            case Kind::knot: {
                char buf[40];
                std::snprintf(buf, sizeof buf, "knot(%.12g)", knot_location);
                return buf;
            }
        }
        return "?";
    }

    bool operator==(const ColumnRole&) const = default;
};

struct DesignMatrix {
    Matrix values;
    std::vector<ColumnRole> column_roles;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

/// Columns: intercept, x, x^2, x^3, then the masked knot columns in
/// increasing-location order.
inline DesignMatrix build_design_matrix(std::span<const double> x, const KnotSet& knots,
                                        KnotMask mask) {
    if (x.empty()) throw contract_error("build_design_matrix: empty x");
    if (knots.size() < 32 && (mask >> knots.size()) != 0)
        throw contract_error("build_design_matrix: mask has bits beyond the knot set");

    const std::size_t n = x.size();
    const std::size_t p = 4 + static_cast<std::size_t>(std::popcount(mask));
    DesignMatrix d{Matrix(n, p), {}};
    d.column_roles.reserve(p);
    for (std::size_t i = 0; i < n; ++i) {
        d.values(i, 0) = 1.0;
        d.values(i, 1) = x[i];
        d.values(i, 2) = x[i] * x[i];
        d.values(i, 3) = x[i] * x[i] * x[i];
    }
    d.column_roles.push_back(ColumnRole::intercept());
    d.column_roles.push_back(ColumnRole::power(1));
    d.column_roles.push_back(ColumnRole::power(2));
    d.column_roles.push_back(ColumnRole::power(3));

    std::size_t col = 4;
    for (std::size_t k = 0; k < knots.size(); ++k) {
        if (!(mask & (KnotMask{1} << k))) continue;
        const double t = knots.knots[k].location;
        for (std::size_t i = 0; i < n; ++i) d.values(i, col) = truncated_cubic(x[i], t);
        d.column_roles.push_back(ColumnRole::knot(t));
        ++col;
    }
    return d;
}

inline DesignMatrix build_design_matrix(std::span<const double> x, const KnotSet& knots) {
    return build_design_matrix(x, knots, full_mask(knots.size()));
}

/// Mean function of the cubic spline model at each grid point.
inline std::vector<double> evaluate_spline(std::span<const double> coefficients,
                                           const KnotSet& knots, KnotMask mask,
                                           std::span<const double> x_grid) {
    const std::size_t n_terms = 4 + static_cast<std::size_t>(std::popcount(mask));
    if (coefficients.size() != n_terms)
        throw contract_error("evaluate_spline: expected " + std::to_string(n_terms) +
                             " coefficients, got " + std::to_string(coefficients.size()));
    if (knots.size() < 32 && (mask >> knots.size()) != 0)
        throw contract_error("evaluate_spline: mask has bits beyond the knot set");

    std::vector<double> active;
    for (std::size_t k = 0; k < knots.size(); ++k)
        if (mask & (KnotMask{1} << k)) active.push_back(knots.knots[k].location);

    std::vector<double> out;
    out.reserve(x_grid.size());
    for (const double g : x_grid) {
        double s = coefficients[0];
        s += coefficients[1] * g;
        s += coefficients[2] * (g * g);
        s += coefficients[3] * (g * g * g);
        for (std::size_t k = 0; k < active.size(); ++k)
            s += coefficients[4 + k] * truncated_cubic(g, active[k]);
        out.push_back(s);
    }
    return out;
}

}  // namespace kpart

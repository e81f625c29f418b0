#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpart/errors.hpp"

namespace kpart {

/// Crime rate: offenses divided by persons, per locality-year.
inline double compute_rate(double crime_count, double population) {
    if (!(population > 0.0))
        throw data_error("population must be positive, got " + std::to_string(population));
    if (!(crime_count >= 0.0))
        throw data_error("crime count must be nonnegative, got " + std::to_string(crime_count));
    return crime_count / population;
}

struct Observation {
    int year = 0;
    double population = 0.0;
    std::optional<double> crime_count;
    std::optional<double> rate;

    double vcr() const {
        if (rate) return *rate;
        if (crime_count) return compute_rate(*crime_count, population);
        throw data_error("observation for year " + std::to_string(year) +
                         " has neither a crime count nor a rate");
    }

    bool operator==(const Observation&) const = default;
};

struct CrimeSeries {
    std::string name;
    std::vector<Observation> observations;

    std::size_t size() const { return observations.size(); }

    std::vector<double> populations() const {
        std::vector<double> out;
        out.reserve(observations.size());
        for (const auto& o : observations) out.push_back(o.population);
        return out;
    }
    std::vector<double> rates() const {
        std::vector<double> out;
        out.reserve(observations.size());
        for (const auto& o : observations) out.push_back(o.vcr());
        return out;
    }
    std::vector<int> years() const {
        std::vector<int> out;
        out.reserve(observations.size());
        for (const auto& o : observations) out.push_back(o.year);
        return out;
    }

    bool operator==(const CrimeSeries&) const = default;
};

/// Affine map raw predictor -> conditioned predictor, x = (u - shift) / scale.
struct ScaleTransform {
    double shift = 0.0;
    double scale = 1.0;

    double forward(double u) const { return (u - shift) / scale; }
    double inverse(double x) const { return x * scale + shift; }

    std::vector<double> forward(std::span<const double> u) const {
        std::vector<double> out;
        out.reserve(u.size());
        for (double v : u) out.push_back(forward(v));
        return out;
    }
};

/// Maps the observed range onto [0, 1]; a constant vector gets scale 1 so the
/// transform stays invertible.
inline ScaleTransform make_scale(std::span<const double> x) {
    if (x.empty()) throw contract_error("make_scale: empty input");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double span = *hi - *lo;
    return {*lo, span > 0.0 ? span : 1.0};
}

struct ColumnMap {
    std::string year = "year";
    std::string population = "population";
    std::string count = "count";
    std::string rate = "rate";
};

struct LoadReport {
    std::size_t rows_read = 0;     // data rows seen
    std::size_t rows_skipped = 0;  // rows with no crime value
    bool had_counts = false;
    bool had_rates = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

inline double parse_double(std::string_view cell, std::string_view column, std::size_t line_no) {
    double v = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw format_error("non-numeric value '" + std::string(cell) + "' in column '" +
                           std::string(column) + "' at row " + std::to_string(line_no));
    return v;
}

inline int parse_year(std::string_view cell, std::string_view column, std::size_t line_no) {
    const double v = parse_double(cell, column, line_no);
    const double r = std::round(v);
    if (std::fabs(v - r) > 1e-9)
        throw format_error("non-integer year '" + std::string(cell) + "' at row " +
                           std::to_string(line_no));
    return static_cast<int>(r);
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Reads one locality's series from header-first CSV. Rows whose crime cell
/// (count and rate alike) is blank are skipped and counted in the report;
/// everything else must parse. Rows come back sorted by year.
inline CrimeSeries load_series(std::istream& in, const ColumnMap& columns,
                               std::string name, LoadReport* report = nullptr) {
    std::string line;
    if (!std::getline(in, line)) throw format_error("empty file: no header row");
    const auto header = detail::split_csv(line);

    auto find_col = [&](const std::string& want) -> std::optional<std::size_t> {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == want) return j;
        return std::nullopt;
    };
    const auto year_col = find_col(columns.year);
    if (!year_col) throw format_error("missing column '" + columns.year + "'");
    const auto pop_col = find_col(columns.population);
    if (!pop_col) throw format_error("missing column '" + columns.population + "'");
    const auto count_col = find_col(columns.count);
    const auto rate_col = find_col(columns.rate);
    if (!count_col && !rate_col)
        throw format_error("missing column: need '" + columns.count + "' or '" +
                           columns.rate + "'");

    LoadReport rep;
    rep.had_counts = count_col.has_value();
    rep.had_rates = rate_col.has_value();

    CrimeSeries series;
    series.name = std::move(name);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        auto cell = [&](std::size_t j) -> std::string_view {
            return j < cells.size() ? cells[j] : std::string_view{};
        };
        ++rep.rows_read;

        const auto count_cell = count_col ? cell(*count_col) : std::string_view{};
        const auto rate_cell = rate_col ? cell(*rate_col) : std::string_view{};
        if (count_cell.empty() && rate_cell.empty()) {
            ++rep.rows_skipped;
            continue;
        }

        Observation obs;
        obs.year = detail::parse_year(cell(*year_col), columns.year, line_no);
        obs.population = detail::parse_double(cell(*pop_col), columns.population, line_no);
        if (!(obs.population > 0.0))
            throw data_error("non-positive population in year " + std::to_string(obs.year));
        if (!count_cell.empty()) {
            obs.crime_count = detail::parse_double(count_cell, columns.count, line_no);
            if (*obs.crime_count < 0.0)
                throw data_error("negative crime count in year " + std::to_string(obs.year));
        }
        if (!rate_cell.empty()) {
            obs.rate = detail::parse_double(rate_cell, columns.rate, line_no);
            if (*obs.rate < 0.0)
                throw data_error("negative rate in year " + std::to_string(obs.year));
        }
        if (obs.crime_count && obs.rate) {
            const double derived = compute_rate(*obs.crime_count, obs.population);
            const double tol = 1e-12 * std::max(std::fabs(derived), std::fabs(*obs.rate));
            if (std::fabs(derived - *obs.rate) > tol)
                throw data_error("count and rate disagree in year " + std::to_string(obs.year));
        } else if (obs.crime_count) {
            obs.rate = compute_rate(*obs.crime_count, obs.population);
        }
        series.observations.push_back(obs);
    }

    if (series.observations.empty())
        throw data_error("no usable rows in series '" + series.name + "'");
    std::stable_sort(series.observations.begin(), series.observations.end(),
                     [](const Observation& a, const Observation& b) { return a.year < b.year; });
    for (std::size_t i = 1; i < series.observations.size(); ++i)
        if (series.observations[i].year == series.observations[i - 1].year)
            throw data_error("duplicate year " + std::to_string(series.observations[i].year) +
                             " in series '" + series.name + "'");

    if (report) *report = rep;
    return series;
}

inline CrimeSeries load_series(const std::filesystem::path& path,
                               const ColumnMap& columns = {}, LoadReport* report = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open file: " + path.string());
    return load_series(in, columns, path.stem().string(), report);
}

/// Writes year,population[,count],rate with shortest round-trip formatting,
/// so a written series reloads to an equal one.
inline void write_series(const CrimeSeries& series, std::ostream& out) {
    const bool any_count =
        std::any_of(series.observations.begin(), series.observations.end(),
                    [](const Observation& o) { return o.crime_count.has_value(); });
    out << (any_count ? "year,population,count,rate\n" : "year,population,rate\n");
    for (const auto& o : series.observations) {
        out << o.year << ',' << detail::format_double(o.population) << ',';
        if (any_count) {
            if (o.crime_count) out << detail::format_double(*o.crime_count);
            out << ',';
        }
        if (o.rate) out << detail::format_double(*o.rate);
        out << '\n';
    }
}

}  // namespace kpart

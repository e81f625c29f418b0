#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kpart/errors.hpp"
#include "kpart/model_io.hpp"
#include "kpart/search.hpp"
#include "kpart/series.hpp"

namespace kpart::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 2;
inline constexpr int exit_infeasible = 3;
inline constexpr int exit_usage = 4;

struct RateOptions {
    std::filesystem::path input;
    ColumnMap columns;
};

struct FitOptions {
    std::filesystem::path input;
    std::size_t k = 10;
    std::optional<std::filesystem::path> out;
    ColumnMap columns;
    std::size_t max_k = 20;
};

struct CurveOptions {
    std::filesystem::path model;
    std::size_t points = 200;
    std::optional<std::filesystem::path> out;
};

struct ReportOptions {
    std::filesystem::path input_dir;
    std::size_t k = 10;
    std::optional<std::filesystem::path> out;
    ColumnMap columns;
    std::size_t max_k = 20;
};

namespace detail {

inline std::string fmt(double v) { return kpart::detail::format_double(v); }

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const format_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const data_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const fit_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_infeasible;
    } catch (const contract_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

// Writes to --out when given, otherwise to the fallback stream.
inline int with_sink(const std::optional<std::filesystem::path>& out_path,
                     std::ostream& fallback, std::ostream& err,
                     const std::string& text) {
    if (out_path) {
        std::ofstream f(*out_path, std::ios::binary);
        if (!f) {
            err << "error: cannot write output file: " << out_path->string() << '\n';
            return exit_input;
        }
        f << text;
    } else {
        fallback << text;
    }
    return exit_ok;
}

}  // namespace detail

/// `kpart rate`: emit year,population,rate for one input series.
inline int run_rate(const RateOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        LoadReport report;
        const CrimeSeries series = load_series(opt.input, opt.columns, &report);
        if (!report.had_counts)
            err << "warning: input has no '" << opt.columns.count
                << "' column; passing stored rates through\n";
        std::ostringstream body;
        body << "year,population,rate\n";
        for (const auto& o : series.observations)
            body << o.year << ',' << detail::fmt(o.population) << ','
                 << detail::fmt(o.vcr()) << '\n';
        out << body.str();
        if (report.rows_skipped > 0)
            err << "note: " << report.rows_skipped << " rows skipped (no crime value)\n";
        return exit_ok;
    });
}

/// `kpart fit`: run the pipeline, print a summary, optionally store the model.
inline int run_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.k < 1 || opt.k > opt.max_k) {
        err << "error: --k must be between 1 and " << opt.max_k << '\n';
        return exit_usage;
    }
    return detail::guarded(err, [&] {
        LoadReport report;
        const CrimeSeries series = load_series(opt.input, opt.columns, &report);
        if (opt.k > series.size()) {
            err << "error: --k (" << opt.k << ") exceeds the number of observations ("
                << series.size() << ")\n";
            return exit_usage;
        }
        const ModelSelectionResult result = fit_kpart(series, opt.k, opt.max_k);
        const ModelDocument doc = make_document(series.name, result);
        if (opt.out) save_document(doc, *opt.out);

        out << "series: " << series.name << " (n = " << result.winner.n << ")\n";
        if (report.rows_skipped > 0)
            out << "rows skipped on load: " << report.rows_skipped << '\n';
        out << "K requested: " << result.k_requested << " (candidate knots: "
            << result.knots.size() << ")\n";
        out << "knots selected: " << doc.knots_raw_units.size() << '\n';
        out << "knot locations (raw units):";
        for (const double k : doc.knots_raw_units) out << ' ' << detail::fmt(k);
        out << '\n';
        out << "knot years:";
        for (const int y : doc.selected_years) out << ' ' << y;
        out << '\n';
        out << "parameters: " << doc.p << '\n';
        out << "R^2: " << detail::fmt(doc.r2) << '\n';
        out << "adjusted R^2: " << detail::fmt(doc.r2_adj) << '\n';
        out << "BIC: " << detail::fmt(doc.bic) << '\n';
        return exit_ok;
    });
}

/// `kpart curve`: sample a stored model on an even raw-unit grid as TSV,
/// with a trailing comment block carrying the knot locations.
inline int run_curve(const CurveOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.points < 2) {
        err << "error: --points must be at least 2\n";
        return exit_usage;
    }
    return detail::guarded(err, [&] {
        const ModelDocument doc = load_document(opt.model);
        const std::size_t m = opt.points;
        std::vector<double> grid_raw;
        grid_raw.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double s = static_cast<double>(i) / static_cast<double>(m - 1);
            grid_raw.push_back(doc.scale.inverse(s));
        }
        const std::vector<double> fitted = evaluate_document(doc, grid_raw);

        std::ostringstream body;
        for (std::size_t i = 0; i < m; ++i)
            body << detail::fmt(grid_raw[i]) << '\t' << detail::fmt(fitted[i]) << '\n';
        body << "# knots:\n";
        for (const double k : doc.knots_raw_units) body << "# " << detail::fmt(k) << '\n';
        return detail::with_sink(opt.out, out, err, body.str());
    });
}

/// `kpart report`: fit every CSV in a directory with one K; per-series
/// failures become rows, not batch failures.
inline int run_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.k < 1 || opt.k > opt.max_k) {
        err << "error: --k must be between 1 and " << opt.max_k << '\n';
        return exit_usage;
    }
    std::vector<std::filesystem::path> files;
    {
        std::error_code ec;
        std::filesystem::directory_iterator it(opt.input_dir, ec);
        if (ec) {
            err << "error: cannot read directory: " << opt.input_dir.string() << '\n';
            return exit_input;
        }
        for (const auto& entry : it)
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        err << "error: no .csv files in " << opt.input_dir.string() << '\n';
        return exit_input;
    }

    std::ostringstream body;
    body << "name,n,k,knots,r2_adj,bic,error\n";
    std::size_t fitted = 0, loaded = 0, above90 = 0, above70 = 0;
    for (const auto& file : files) {
        const std::string name = file.stem().string();
        try {
            const CrimeSeries series = load_series(file, opt.columns);
            ++loaded;
            if (opt.k > series.size())
                throw fit_error("K exceeds the number of observations");
            const ModelSelectionResult result = fit_kpart(series, opt.k, opt.max_k);
            body << name << ',' << result.winner.n << ',' << result.k_requested << ','
                 << result.winning_knots().size() << ',' << detail::fmt(result.winner.r2_adj)
                 << ',' << detail::fmt(result.winner_bic) << ",\n";
            ++fitted;
            if (result.winner.r2_adj > 0.90) ++above90;
            if (result.winner.r2_adj > 0.70) ++above70;
        } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            body << name << ",,,,,," << msg << '\n';
        }
    }
    if (loaded == 0) {
        err << "error: no series could be loaded from " << opt.input_dir.string() << '\n';
        return exit_input;
    }
    const std::size_t total = files.size();
    body << "# " << above90 << " of " << total << " series with adjusted R^2 > 0.90\n";
    body << "# " << above70 << " of " << total << " series with adjusted R^2 > 0.70\n";
    return detail::with_sink(opt.out, out, err, body.str());
}

}  // namespace kpart::cli

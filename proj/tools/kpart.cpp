#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kpart/commands.hpp"

namespace {

// KPART_MAX_K caps the subset enumeration (2^K fits); default 20.
std::size_t max_k_from_env(std::ostream& err, bool& ok) {
    ok = true;
    const char* raw = std::getenv("KPART_MAX_K");
    if (raw == nullptr || *raw == '\0') return 20;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v < 1 || v > 20) {
        err << "error: KPART_MAX_K must be an integer in [1, 20], got '" << raw << "'\n";
        ok = false;
        return 20;
    }
    return static_cast<std::size_t>(v);
}

void add_column_flags(CLI::App* cmd, kpart::ColumnMap& columns) {
    cmd->add_option("--year-col", columns.year, "Header name of the year column");
    cmd->add_option("--pop-col", columns.population, "Header name of the population column");
    cmd->add_option("--count-col", columns.count, "Header name of the crime-count column");
    cmd->add_option("--rate-col", columns.rate, "Header name of the rate column");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cubic spline regression with min/max K-partition knot selection"};
    app.require_subcommand(1);

    kpart::cli::RateOptions rate_opt;
    auto* rate = app.add_subcommand("rate", "Compute rates from a counts CSV");
    rate->add_option("--input,-i", rate_opt.input, "Input CSV")->required();
    add_column_flags(rate, rate_opt.columns);

    kpart::cli::FitOptions fit_opt;
    auto* fit = app.add_subcommand("fit", "Fit one series and report the selected model");
    fit->add_option("--input,-i", fit_opt.input, "Input CSV")->required();
    fit->add_option("--k", fit_opt.k, "Number of partitions (default 10)");
    fit->add_option("--out,-o", fit_opt.out, "Write the model JSON here");
    add_column_flags(fit, fit_opt.columns);

    kpart::cli::CurveOptions curve_opt;
    auto* curve = app.add_subcommand("curve", "Sample a fitted model as TSV");
    curve->add_option("--input,-i", curve_opt.model, "Model JSON from 'fit'")->required();
    curve->add_option("--points", curve_opt.points, "Grid size (default 200)");
    curve->add_option("--out,-o", curve_opt.out, "Write TSV here instead of stdout");

    kpart::cli::ReportOptions report_opt;
    auto* report = app.add_subcommand("report", "Fit every CSV in a directory");
    report->add_option("--input,-i", report_opt.input_dir, "Directory of CSVs")->required();
    report->add_option("--k", report_opt.k, "Number of partitions (default 10)");
    report->add_option("--out,-o", report_opt.out, "Write the summary CSV here");
    add_column_flags(report, report_opt.columns);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kpart::cli::exit_usage;
    }

    bool env_ok = false;
    const std::size_t max_k = max_k_from_env(std::cerr, env_ok);
    if (!env_ok) return kpart::cli::exit_usage;
    fit_opt.max_k = max_k;
    report_opt.max_k = max_k;

    if (rate->parsed()) return kpart::cli::run_rate(rate_opt, std::cout, std::cerr);
    if (fit->parsed()) return kpart::cli::run_fit(fit_opt, std::cout, std::cerr);
    if (curve->parsed()) return kpart::cli::run_curve(curve_opt, std::cout, std::cerr);
    if (report->parsed()) return kpart::cli::run_report(report_opt, std::cout, std::cerr);
    return kpart::cli::exit_usage;
}
